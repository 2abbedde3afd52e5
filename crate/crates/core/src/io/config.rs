use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{fmt_f64, read_text};
use crate::circuit::{ResonatorDesign, DEFAULT_KINETIC_FRACTION};
use crate::error::{Error, Result};
use crate::fit::FitConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Workflow {
    Design,
    Simulate,
    Fit,
    Sweep,
    AreaFit,
    Report,
}

impl Workflow {
    pub fn name(self) -> &'static str {
        match self {
            Workflow::Design => "design",
            Workflow::Simulate => "simulate",
            Workflow::Fit => "fit",
            Workflow::Sweep => "sweep",
            Workflow::AreaFit => "area-fit",
            Workflow::Report => "report",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Workflow::Design,
            Workflow::Simulate,
            Workflow::Fit,
            Workflow::Sweep,
            Workflow::AreaFit,
            Workflow::Report,
        ]
        .into_iter()
        .find(|w| w.name() == s)
    }
}

/// Physics inputs that a run may override, in lab units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsConfig {
    pub l_nh: f64,
    pub kinetic_fraction: f64,
    pub c_ff_um2: f64,
    pub cg_ff: f64,
    /// Superconducting gap, µeV.
    pub gap_uev: f64,
    pub temperature_k: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            l_nh: 0.3,
            kinetic_fraction: DEFAULT_KINETIC_FRACTION,
            c_ff_um2: 13.86,
            cg_ff: 33.65,
            gap_uev: 180.0,
            temperature_k: 0.010,
        }
    }
}

impl PhysicsConfig {
    /// Design with zero area for the current constants.
    pub fn design(&self) -> ResonatorDesign {
        ResonatorDesign::from_lab_units(self.l_nh, 0.0, self.c_ff_um2, self.cg_ff)
            .with_kinetic_fraction(self.kinetic_fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub workflow: Option<Workflow>,
    pub inputs: Vec<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub physics: PhysicsConfig,
    pub tolerances: FitConfig,
}

const CONSTANT_KEYS: [&str; 6] = [
    "hbar",
    "k_b",
    "boltzmann",
    "elementary_charge",
    "flux_quantum",
    "epsilon_0",
];

/// `key = value` lines with `#` comments, one key per line.
fn parse_kv(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected 'key = value', got {line:?}",
                i + 1
            ))
        })?;
        let key = k.trim().to_string();
        if let Some(prev) = seen.insert(key.clone(), i + 1) {
            return Err(Error::Config(format!(
                "line {}: {key} already set on line {prev}",
                i + 1
            )));
        }
        out.push((i + 1, key, v.trim().to_string()));
    }
    Ok(out)
}

fn number(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Config(format!("{key} must be a finite number, got {v:?}")))
}

fn within(key: &str, v: f64, lo: f64, hi: f64, lo_open: bool) -> Result<f64> {
    let ok = if lo_open { v > lo } else { v >= lo } && v <= hi;
    if ok {
        Ok(v)
    } else {
        let open = if lo_open { "(" } else { "[" };
        Err(Error::Config(format!(
            "{key} = {v} outside {open}{lo}, {hi}]"
        )))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (line, key, v) in parse_kv(text)? {
            cfg.set(&key, &v).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {line}: {m}")),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    /// Applies one `key = value` entry, checking it against its sanity window.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let num = || number(key, v);
        let p = &mut self.physics;
        let t = &mut self.tolerances;
        match key {
            "workflow" => {
                self.workflow = Some(
                    Workflow::parse(v)
                        .ok_or_else(|| Error::Config(format!("unknown workflow {v:?}")))?,
                )
            }
            "inputs" => {
                self.inputs = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(PathBuf::from)
                    .collect()
            }
            "out" => self.output_dir = Some(PathBuf::from(v)),
            "seed" => {
                self.seed = Some(
                    v.parse()
                        .map_err(|_| Error::Config("seed must be an unsigned integer".into()))?,
                )
            }
            "l_nh" => p.l_nh = within(key, num()?, 0.0, 1e3, true)?,
            "kinetic_fraction" => {
                let k = within(key, num()?, 0.0, 1.0, false)?;
                if k >= 1.0 {
                    return Err(Error::Config("kinetic_fraction must be below 1".into()));
                }
                p.kinetic_fraction = k;
            }
            "c_ff_um2" => p.c_ff_um2 = within(key, num()?, 0.0, 1e3, true)?,
            "cg_ff" => p.cg_ff = within(key, num()?, 0.0, 1e6, true)?,
            "gap_uev" => {
                let g = within(key, num()?, 0.0, 1e4, true)?;
                if g >= 1e4 {
                    return Err(Error::Config("gap_uev must be below 1e4".into()));
                }
                p.gap_uev = g;
            }
            "temperature_k" => p.temperature_k = within(key, num()?, 0.0, 300.0, false)?,
            "max_iterations" => {
                t.max_iterations = v
                    .parse::<usize>()
                    .ok()
                    .filter(|n| (1..=1_000_000).contains(n))
                    .ok_or_else(|| Error::Config("max_iterations must be in 1..=1000000".into()))?
            }
            "step_tolerance" => t.step_tolerance = within(key, num()?, 0.0, 1.0, true)?,
            "cost_tolerance" => t.cost_tolerance = within(key, num()?, 0.0, 1.0, true)?,
            "initial_damping" => t.initial_damping = within(key, num()?, 0.0, 1e6, true)?,
            "damping_increase" => t.damping_increase = within(key, num()?, 1.0, 1e3, true)?,
            "damping_decrease" => t.damping_decrease = within(key, num()?, 1.0, 1e3, true)?,
            "jacobian_step" => t.jacobian_step = within(key, num()?, 0.0, 1e-2, true)?,
            k if CONSTANT_KEYS.contains(&k) => {
                return Err(Error::Config(format!(
                    "physical constants are fixed and cannot be overridden ({k})"
                )))
            }
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Errors when a listed input does not exist.
    pub fn check_inputs(&self) -> Result<()> {
        for p in &self.inputs {
            if !p.exists() {
                return Err(Error::Config(format!(
                    "input {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    /// Physics and tolerance entries as sorted `key = value` lines.
    fn canonical_entries(&self) -> BTreeMap<&'static str, String> {
        let p = &self.physics;
        let t = &self.tolerances;
        BTreeMap::from([
            ("l_nh", fmt_f64(p.l_nh)),
            ("kinetic_fraction", fmt_f64(p.kinetic_fraction)),
            ("c_ff_um2", fmt_f64(p.c_ff_um2)),
            ("cg_ff", fmt_f64(p.cg_ff)),
            ("gap_uev", fmt_f64(p.gap_uev)),
            ("temperature_k", fmt_f64(p.temperature_k)),
            ("max_iterations", t.max_iterations.to_string()),
            ("step_tolerance", fmt_f64(t.step_tolerance)),
            ("cost_tolerance", fmt_f64(t.cost_tolerance)),
            ("initial_damping", fmt_f64(t.initial_damping)),
            ("damping_increase", fmt_f64(t.damping_increase)),
            ("damping_decrease", fmt_f64(t.damping_decrease)),
            ("jacobian_step", fmt_f64(t.jacobian_step)),
        ])
    }

    /// The configuration as a file that [`RunConfig::parse`] reads back.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        if let Some(w) = self.workflow {
            out.push_str(&format!("workflow = {}\n", w.name()));
        }
        if !self.inputs.is_empty() {
            let list: Vec<String> = self
                .inputs
                .iter()
                .map(|p| p.display().to_string())
                .collect();
            out.push_str(&format!("inputs = {}\n", list.join(", ")));
        }
        if let Some(o) = &self.output_dir {
            out.push_str(&format!("out = {}\n", o.display()));
        }
        if let Some(s) = self.seed {
            out.push_str(&format!("seed = {s}\n"));
        }
        for (k, v) in self.canonical_entries() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

/// SHA-256 over the physics and tolerance entries. Paths, seed and workflow
/// do not enter the hash.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut h = Sha256::new();
    for (k, v) in cfg.canonical_entries() {
        h.update(format!("{k}={v}\n").as_bytes());
    }
    hex::encode(h.finalize())
}

const DESIGN_KEYS: [&str; 5] = [
    "inductance_h",
    "kinetic_fraction",
    "cap_area_m2",
    "cap_per_area_f_m2",
    "cap_to_ground_f",
];

/// A design record in SI units, one `key = value` per line.
pub fn write_design_kv(d: &ResonatorDesign) -> String {
    let values = [
        d.inductance_geometric,
        d.kinetic_fraction,
        d.cap_area,
        d.cap_per_area,
        d.cap_to_ground,
    ];
    DESIGN_KEYS
        .iter()
        .zip(values)
        .map(|(k, v)| format!("{k} = {}\n", fmt_f64(v)))
        .collect()
}

pub fn parse_design_kv(text: &str) -> Result<ResonatorDesign> {
    let mut values: BTreeMap<String, f64> = BTreeMap::new();
    for (line, key, v) in parse_kv(text)? {
        if !DESIGN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "line {line}: unknown design key {key:?}"
            )));
        }
        let x = number(&key, &v).map_err(|e| Error::Config(format!("line {line}: {e}")))?;
        values.insert(key, x);
    }
    let get = |k: &str| {
        values
            .get(k)
            .copied()
            .ok_or_else(|| Error::Config(format!("design record is missing {k}")))
    };
    let design = ResonatorDesign {
        inductance_geometric: get("inductance_h")?,
        kinetic_fraction: values
            .get("kinetic_fraction")
            .copied()
            .unwrap_or(DEFAULT_KINETIC_FRACTION),
        cap_area: get("cap_area_m2")?,
        cap_per_area: get("cap_per_area_f_m2")?,
        cap_to_ground: get("cap_to_ground_f")?,
    };
    design.validate()?;
    Ok(design)
}
