//! Command-line workflows over the resokit library. All results go to files
//! or standard output; diagnostics go to standard error.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use resokit::circuit::{
    area_for_frequency, junction_shunt_inductance, resonance_frequency, JunctionLeakageSpec,
};
use resokit::constants::{units, ELEMENTARY_CHARGE};
use resokit::extraction::{
    fit_frequency_vs_area_with, fit_notch_with, frequency_area_curve, monte_carlo_uncertainties,
    AreaFrequencyDataset,
};
use resokit::io::{
    compare_sessions, config_hash, emit_report, fits_csv_string, parse_area_csv,
    parse_fits_csv_str, parse_resonators_csv, parse_sweep_csv_str, parse_touchstone,
    parse_trace_csv, sweeps_from_fits, tls_csv_string, write_atomic, write_design_kv,
    write_trace_csv, AreaPlot, FitRow, PortPair, ReportBundle, ResonatorRow, RunConfig, SweepPlot,
    TlsRow, Workflow,
};
use resokit::loss::{
    fit_power_sweep_with, tan_delta_from_q, tls_tan_delta, BetaMode, PowerSweep, SweepFitOptions,
    SweepFitResult, TlsFitParams,
};
use resokit::notch::{linewidth_grid, photons_from_power, synthesize_trace, NotchParams, Trace};
use resokit::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

const DEFAULT_OUT: &str = "resokit-out";

#[derive(Parser, Debug)]
#[command(
    name = "resokit",
    version,
    about = "Design, simulate and analyse lumped-element superconducting resonators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Capacitor area for a target frequency, or frequency for a given area.
    Design(DesignArgs),
    /// Synthesize notch-type S21 traces, optionally over a power sweep.
    Simulate(SimulateArgs),
    /// Circle-fit S21 traces and write fits.csv.
    Fit(FitArgs),
    /// Fit the TLS loss model to Q_in against photon number.
    Sweep(SweepArgs),
    /// Fit capacitance per area and capacitance to ground from f(S).
    AreaFit(AreaFitArgs),
    /// Assemble the resonator table, comparison and plots.
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Flat `key = value` run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Geometric inductance, nH.
    #[arg(long)]
    l_nh: Option<f64>,
    #[arg(long)]
    kinetic_fraction: Option<f64>,
    /// Capacitance per area, fF/µm².
    #[arg(long)]
    c_ff_um2: Option<f64>,
    /// Capacitance to ground, fF.
    #[arg(long)]
    cg_ff: Option<f64>,
    /// Superconducting gap, µeV.
    #[arg(long)]
    gap_uev: Option<f64>,
    #[arg(long)]
    temperature_k: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    step_tolerance: Option<f64>,
    #[arg(long)]
    cost_tolerance: Option<f64>,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("goal").required(true).args(["target_ghz", "area_um2"])))]
struct DesignArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    target_ghz: Option<f64>,
    #[arg(long)]
    area_um2: Option<f64>,
    /// Resistance-area product of a leaky dielectric, Ω·µm²; reports the
    /// resulting Josephson shunt inductance.
    #[arg(long)]
    leak_ohm_um2: Option<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 7.3)]
    f_ghz: f64,
    /// Internal Q, used when no TLS parameters are given.
    #[arg(long, default_value_t = 3.0e4)]
    q_in: f64,
    /// Coupling |Q_e|.
    #[arg(long, default_value_t = 7.0e3)]
    q_ext: f64,
    /// Impedance-mismatch angle, rad.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phi: f64,
    #[arg(long, default_value_t = 1.0)]
    gain: f64,
    /// Environment phase, rad.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phase: f64,
    /// Cable delay, ns.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delay_ns: f64,
    #[arg(long, default_value_t = 1001)]
    points: usize,
    /// Half-width of the frequency window in linewidths.
    #[arg(long, default_value_t = 10.0)]
    span: f64,
    /// Gaussian noise per quadrature, relative to the gain.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value = "R1")]
    label: String,
    /// On-chip powers, dBm; one trace per power.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    powers_dbm: Vec<f64>,
    /// TLS loss tangent at zero power; makes Q_in power dependent.
    #[arg(long)]
    tls0: Option<f64>,
    #[arg(long, default_value_t = 1.0e3)]
    n_c: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    tan_other: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum InputFormat {
    Csv,
    S2p,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Trace files; taken from the config `inputs` when omitted.
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Csv)]
    format: InputFormat,
    /// Replace covariance errors by the scatter of this many Monte-Carlo refits.
    #[arg(long, default_value_t = 0)]
    mc_draws: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// fits.csv from `fit`, or a power-sweep CSV.
    inputs: Vec<PathBuf>,
    /// Fit β instead of holding it fixed.
    #[arg(long)]
    beta_free: bool,
    /// Fixed β, or the starting value with --beta-free.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Drop points above this photon number.
    #[arg(long)]
    n_max: Option<f64>,
}

#[derive(Args, Debug)]
struct AreaFitArgs {
    #[command(flatten)]
    common: Common,
    /// CSV with columns label,area_um2,freq_hz.
    inputs: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    /// fits.csv from `fit`.
    #[arg(long)]
    fits: Option<PathBuf>,
    /// Area series CSV (label,area_um2,freq_hz).
    #[arg(long)]
    areas: Option<PathBuf>,
    /// Traces to plot.
    #[arg(long, num_args = 1..)]
    traces: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Csv)]
    format: InputFormat,
    /// resonators.csv of an earlier session to compare against.
    #[arg(long)]
    compare_to: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the workflow and returns the
/// process exit status.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_INPUT
                }
            };
        }
    };
    let outcome = match &cli.command {
        Command::Design(a) => design(a, stdout, stderr),
        Command::Simulate(a) => simulate(a, stdout, stderr),
        Command::Fit(a) => fit(a, stdout, stderr),
        Command::Sweep(a) => sweep(a, stdout, stderr),
        Command::AreaFit(a) => area_fit(a, stdout, stderr),
        Command::Report(a) => report(a, stdout, stderr),
    };
    match outcome {
        Ok(Status::Done) => EXIT_OK,
        Ok(Status::NotConverged) => EXIT_NOT_CONVERGED,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_convergence_failure() {
                EXIT_NOT_CONVERGED
            } else {
                EXIT_INPUT
            }
        }
    }
}

enum Status {
    Done,
    NotConverged,
}

fn io_err(e: std::io::Error) -> Error {
    Error::io(Path::new("<stdout>"), e)
}

/// Defaults, then the config file, then command-line flags.
fn load_config(common: &Common, workflow: Workflow) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(w) = cfg.workflow {
        if w != workflow {
            return Err(Error::Config(format!(
                "config is for workflow {}, not {}",
                w.name(),
                workflow.name()
            )));
        }
    }
    cfg.workflow = Some(workflow);
    let flags: [(&str, Option<String>); 11] = [
        ("out", common.out.as_ref().map(|p| p.display().to_string())),
        ("seed", common.seed.map(|s| s.to_string())),
        ("l_nh", common.l_nh.map(|v| v.to_string())),
        (
            "kinetic_fraction",
            common.kinetic_fraction.map(|v| v.to_string()),
        ),
        ("c_ff_um2", common.c_ff_um2.map(|v| v.to_string())),
        ("cg_ff", common.cg_ff.map(|v| v.to_string())),
        ("gap_uev", common.gap_uev.map(|v| v.to_string())),
        ("temperature_k", common.temperature_k.map(|v| v.to_string())),
        (
            "max_iterations",
            common.max_iterations.map(|v| v.to_string()),
        ),
        (
            "step_tolerance",
            common.step_tolerance.map(|v| v.to_string()),
        ),
        (
            "cost_tolerance",
            common.cost_tolerance.map(|v| v.to_string()),
        ),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v)
                .map_err(|e| Error::Config(format!("--{}: {e}", key.replace('_', "-"))))?;
        }
    }
    Ok(cfg)
}

/// Positional inputs, or the config `inputs` when none were given. Every
/// path must exist.
fn resolve_inputs(cfg: &mut RunConfig, given: &[PathBuf]) -> Result<Vec<PathBuf>> {
    if !given.is_empty() {
        cfg.inputs = given.to_vec();
    }
    if cfg.inputs.is_empty() {
        return Err(Error::Config("no input files given".into()));
    }
    cfg.check_inputs()?;
    Ok(cfg.inputs.clone())
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn design(a: &DesignArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<Status> {
    let cfg = load_config(&a.common, Workflow::Design)?;
    let base = cfg.physics.design();
    let area = match (a.target_ghz, a.area_um2) {
        (Some(t), _) => area_for_frequency(t * units::GHZ, &base)?,
        (None, Some(s)) => s * units::SQUARE_MICROMETER,
        (None, None) => unreachable!("clap requires one goal"),
    };
    let d = base.with_area(area);
    let f = resonance_frequency(&d)?;
    let mut lines = vec![
        format!("area_um2 = {:.3}", area / units::SQUARE_MICROMETER),
        format!("freq_ghz = {:.6}", f / units::GHZ),
        format!(
            "ceiling_ghz = {:.6}",
            base.ceiling_frequency()? / units::GHZ
        ),
        format!(
            "total_capacitance_ff = {:.3}",
            d.total_capacitance() / units::FEMTOFARAD
        ),
        format!(
            "effective_inductance_nh = {:.6}",
            d.effective_inductance() / units::NANOHENRY
        ),
    ];
    if let Some(rs) = a.leak_ohm_um2 {
        let spec = JunctionLeakageSpec {
            specific_resistance: rs * units::SQUARE_MICROMETER,
            area,
            gap_energy: cfg.physics.gap_uev * units::MICROELECTRONVOLT * ELEMENTARY_CHARGE,
            temperature: cfg.physics.temperature_k,
        };
        let shunt = junction_shunt_inductance(&spec)?.henry();
        lines.push(format!(
            "shunt_inductance_nh = {:.6e}",
            shunt / units::NANOHENRY
        ));
    }
    for l in &lines {
        writeln!(out, "{l}").map_err(io_err)?;
    }
    if cfg.output_dir.is_some() {
        let path = out_dir(&cfg)?.join("design.txt");
        write_atomic(&path, write_design_kv(&d).as_bytes())?;
        writeln!(err, "wrote {}", path.display()).map_err(io_err)?;
    }
    Ok(Status::Done)
}

/// Photon number and Q_in at `power` when Q_in itself depends on the photon
/// number. Solves n = N(Q_l(n)) by bisection in log n; N is increasing in n,
/// so the root is bracketed by the zero- and infinite-power photon numbers.
fn self_consistent_photons(
    power: f64,
    f_r: f64,
    q_ext: f64,
    phi: f64,
    q_of_n: &dyn Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    let n_of = |n: f64| {
        let p = NotchParams::from_internal(f_r, q_of_n(n), q_ext, phi);
        photons_from_power(&p, power)
    };
    let lo0 = n_of(0.0)?;
    let hi0 = n_of(f64::INFINITY)?;
    if !(lo0.is_finite() && hi0.is_finite()) {
        return Err(Error::Domain(
            "photon number diverges; check the loss parameters".into(),
        ));
    }
    if lo0 <= 0.0 || hi0 <= lo0 * (1.0 + 1e-15) {
        return Ok((lo0, q_of_n(lo0)));
    }
    let (mut lo, mut hi) = (lo0.ln(), hi0.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if n_of(mid.exp())? > mid.exp() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let n = (0.5 * (lo + hi)).exp();
    Ok((n, q_of_n(n)))
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<Status> {
    let cfg = load_config(&a.common, Workflow::Simulate)?;
    let dir = out_dir(&cfg)?;
    let seed = cfg.seed.unwrap_or(0);
    let f_r = a.f_ghz * units::GHZ;
    let tls = a
        .tls0
        .map(|tls0| TlsFitParams {
            tan_delta_tls0: tls0,
            n_critical: a.n_c,
            beta: a.beta,
            tan_delta_other: a.tan_other,
        })
        .map(|p| p.validate().map(|_| p))
        .transpose()?;
    let temperature = cfg.physics.temperature_k;
    let q_of_n = |n: f64| match &tls {
        Some(p) => 1.0 / tls_tan_delta(n, p, f_r, temperature),
        None => a.q_in,
    };

    let powers: Vec<Option<f64>> = if a.powers_dbm.is_empty() {
        vec![None]
    } else {
        a.powers_dbm
            .iter()
            .map(|&dbm| Some(units::dbm_to_watt(dbm)))
            .collect()
    };
    writeln!(out, "file,applied_power_w,photon_number,q_internal").map_err(io_err)?;
    for (i, power) in powers.iter().enumerate() {
        let (photons, q_in) = match power {
            Some(p) => {
                let (n, q) = self_consistent_photons(*p, f_r, a.q_ext, a.phi, &q_of_n)?;
                (Some(n), q)
            }
            None => (None, q_of_n(0.0)),
        };
        let params = NotchParams::from_internal(f_r, q_in, a.q_ext, a.phi).with_environment(
            a.gain,
            a.phase,
            a.delay_ns * units::NANOSECOND,
        );
        let grid = linewidth_grid(&params, a.points, a.span);
        let mut trace = synthesize_trace(&params, &grid, a.noise * a.gain, seed + i as u64)?
            .with_label(&a.label);
        if let Some(p) = power {
            trace = trace.with_power(*p);
        }
        let name = if power.is_some() {
            format!("trace_{i:03}.csv")
        } else {
            "trace.csv".to_string()
        };
        let path = dir.join(&name);
        write_trace_csv(&path, &trace)?;
        writeln!(
            out,
            "{},{},{},{:e}",
            path.display(),
            power.map(|p| format!("{p:e}")).unwrap_or_default(),
            photons.map(|n| format!("{n:e}")).unwrap_or_default(),
            q_in
        )
        .map_err(io_err)?;
    }
    writeln!(err, "wrote {} trace(s) to {}", powers.len(), dir.display()).map_err(io_err)?;
    Ok(Status::Done)
}

fn read_trace(path: &Path, format: InputFormat) -> Result<Trace> {
    let mut trace = match format {
        InputFormat::Csv => parse_trace_csv(path)?,
        InputFormat::S2p => parse_touchstone(path, PortPair::S21)?,
    };
    if trace.label().is_none() {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "trace".into());
        trace = trace.with_label(&stem);
    }
    Ok(trace)
}

fn fit(a: &FitArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<Status> {
    let mut cfg = load_config(&a.common, Workflow::Fit)?;
    let inputs = resolve_inputs(&mut cfg, &a.inputs)?;
    let traces = inputs
        .iter()
        .map(|p| read_trace(p, a.format))
        .collect::<Result<Vec<_>>>()?;
    let dir = out_dir(&cfg)?;
    let seed = cfg.seed.unwrap_or(0);

    let mut rows = Vec::new();
    let mut all_converged = true;
    for (path, trace) in inputs.iter().zip(&traces) {
        let label = trace.label().unwrap_or("trace").to_string();
        match fit_notch_with(trace, &cfg.tolerances) {
            Ok(mut r) => {
                if a.mc_draws > 0 {
                    r.uncertainties = monte_carlo_uncertainties(trace, &r, a.mc_draws, seed)?;
                }
                if !r.converged {
                    all_converged = false;
                    writeln!(err, "{}: fit did not converge", path.display()).map_err(io_err)?;
                }
                rows.push(FitRow::from_result(&label, trace.applied_power, &r));
            }
            Err(e) if e.is_convergence_failure() => {
                all_converged = false;
                writeln!(err, "{}: {e}", path.display()).map_err(io_err)?;
            }
            Err(e) => return Err(e),
        }
    }
    let path = dir.join("fits.csv");
    write_atomic(&path, fits_csv_string(&rows).as_bytes())?;
    writeln!(out, "label,f_r_hz,q_loaded,q_internal,q_ext_mag,phi").map_err(io_err)?;
    for r in &rows {
        writeln!(
            out,
            "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
            r.label, r.f_r_hz, r.q_loaded, r.q_internal, r.q_ext_mag, r.phi
        )
        .map_err(io_err)?;
    }
    writeln!(err, "wrote {}", path.display()).map_err(io_err)?;
    Ok(if all_converged {
        Status::Done
    } else {
        Status::NotConverged
    })
}

/// Power sweeps from a fits table, or a single sweep from a sweep CSV.
fn load_sweeps(path: &Path, temperature: f64) -> Result<BTreeMap<String, PowerSweep>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match parse_fits_csv_str(&text) {
        Ok(rows) => Ok(sweeps_from_fits(&rows, temperature)),
        Err(Error::Schema { .. }) => {
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "sweep".into());
            Ok(BTreeMap::from([(label, parse_sweep_csv_str(&text)?)]))
        }
        Err(e) => Err(e),
    }
}

fn sweep_options(a: &SweepArgs, cfg: &RunConfig) -> SweepFitOptions {
    SweepFitOptions {
        beta: if a.beta_free {
            BetaMode::Free(a.beta)
        } else {
            BetaMode::Fixed(a.beta)
        },
        n_max: a.n_max,
        config: cfg.tolerances,
    }
}

fn sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<Status> {
    let mut cfg = load_config(&a.common, Workflow::Sweep)?;
    let inputs = resolve_inputs(&mut cfg, &a.inputs)?;
    let options = sweep_options(a, &cfg);
    let mut sweeps = BTreeMap::new();
    for p in &inputs {
        sweeps.extend(load_sweeps(p, cfg.physics.temperature_k)?);
    }
    if sweeps.is_empty() {
        return Err(Error::Structure(
            "no power-tagged, converged fits to build a sweep from".into(),
        ));
    }
    let dir = out_dir(&cfg)?;

    let mut rows = Vec::new();
    let mut all_converged = true;
    for (label, s) in &sweeps {
        match fit_power_sweep_with(s, &options) {
            Ok(r) => {
                warn_sweep(err, label, &r)?;
                all_converged &= r.converged;
                rows.push(TlsRow::from_result(label, s, &r));
            }
            Err(e) if e.is_convergence_failure() || matches!(e, Error::InsufficientData { .. }) => {
                all_converged = false;
                writeln!(err, "{label}: {e}").map_err(io_err)?;
            }
            Err(e) => return Err(e),
        }
    }
    let path = dir.join("tls.csv");
    write_atomic(&path, tls_csv_string(&rows).as_bytes())?;
    writeln!(
        out,
        "label,tan_delta_tls0,n_critical,beta,tan_delta_other,reduced_chi_square"
    )
    .map_err(io_err)?;
    for r in &rows {
        writeln!(
            out,
            "{},{:.6e},{:.6e},{:.4},{:.6e},{:.4}",
            r.label, r.values[0], r.values[1], r.values[2], r.values[3], r.reduced_chi_square
        )
        .map_err(io_err)?;
    }
    writeln!(err, "wrote {}", path.display()).map_err(io_err)?;
    Ok(if all_converged {
        Status::Done
    } else {
        Status::NotConverged
    })
}

fn warn_sweep(err: &mut dyn Write, label: &str, r: &SweepFitResult) -> Result<()> {
    if !r.converged {
        writeln!(err, "{label}: TLS fit did not converge").map_err(io_err)?;
    }
    if r.narrow_range {
        writeln!(
            err,
            "{label}: photon range spans too few decades; n_c and β are poorly constrained"
        )
        .map_err(io_err)?;
    }
    if r.tail_excess {
        writeln!(
            err,
            "{label}: high-power points sit above the model; loss rises at high power"
        )
        .map_err(io_err)?;
    }
    Ok(())
}

fn area_fit(a: &AreaFitArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<Status> {
    let mut cfg = load_config(&a.common, Workflow::AreaFit)?;
    let inputs = resolve_inputs(&mut cfg, &a.inputs)?;
    let mut rows = Vec::new();
    for p in &inputs {
        rows.extend(parse_area_csv(p)?);
    }
    let ds = AreaFrequencyDataset {
        rows: rows.iter().map(|r| (r.area_um2, r.freq_hz)).collect(),
        inductance: cfg.physics.design().effective_inductance(),
    };
    let fit = fit_frequency_vs_area_with(&ds, &cfg.tolerances)?;
    let ff = units::FEMTOFARAD;
    let text = format!(
        "c_ff_um2 = {:e}\nc_ff_um2_err = {:e}\ncg_ff = {:e}\ncg_ff_err = {:e}\nresidual_rms_hz = {:e}\nconverged = {}\n",
        fit.cap_per_area / ff,
        fit.cap_per_area_err / ff,
        fit.cap_to_ground / ff,
        fit.cap_to_ground_err / ff,
        fit.residual_rms,
        fit.converged
    );
    let dir = out_dir(&cfg)?;
    let path = dir.join("area_fit.txt");
    write_atomic(&path, text.as_bytes())?;
    writeln!(
        out,
        "c_ff_um2 = {:.4} +- {:.4}\ncg_ff = {:.3} +- {:.3}\nresidual_rms_mhz = {:.3}",
        fit.cap_per_area / ff,
        fit.cap_per_area_err / ff,
        fit.cap_to_ground / ff,
        fit.cap_to_ground_err / ff,
        fit.residual_rms / units::MHZ
    )
    .map_err(io_err)?;
    writeln!(err, "wrote {}", path.display()).map_err(io_err)?;
    Ok(if fit.converged {
        Status::Done
    } else {
        Status::NotConverged
    })
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn report(a: &ReportArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<Status> {
    let mut cfg = load_config(&a.common, Workflow::Report)?;
    let given: Vec<PathBuf> = a
        .fits
        .iter()
        .chain(&a.areas)
        .chain(&a.traces)
        .chain(&a.compare_to)
        .cloned()
        .collect();
    cfg.inputs = given.clone();
    cfg.check_inputs()?;

    let mut rows: Vec<ResonatorRow> = Vec::new();
    let mut sweeps = Vec::new();
    if let Some(path) = &a.fits {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let fits: Vec<FitRow> = parse_fits_csv_str(&text)?
            .into_iter()
            .filter(|r| r.converged)
            .collect();
        let mut order: Vec<String> = Vec::new();
        for f in &fits {
            if !order.contains(&f.label) {
                order.push(f.label.clone());
            }
        }
        for label in &order {
            let group: Vec<&FitRow> = fits.iter().filter(|f| &f.label == label).collect();
            let n = group.len() as f64;
            let by_power = |hi: bool| {
                group
                    .iter()
                    .copied()
                    .filter(|f| f.photon_number.is_some())
                    .reduce(|x, y| {
                        let take_y = if hi {
                            y.photon_number > x.photon_number
                        } else {
                            y.photon_number < x.photon_number
                        };
                        if take_y {
                            y
                        } else {
                            x
                        }
                    })
                    .unwrap_or(group[0])
            };
            let low = by_power(false);
            let high = by_power(true);
            rows.push(ResonatorRow {
                q_ext_mean: Some(group.iter().map(|f| f.q_ext_mag).sum::<f64>() / n),
                q_in_low_power: Some(low.q_internal),
                q_in_high_power: Some(high.q_internal),
                tan_delta: Some(tan_delta_from_q(low.q_internal)),
                ..ResonatorRow::new(label, group.iter().map(|f| f.f_r_hz).sum::<f64>() / n)
            });
        }
        let options = SweepFitOptions::default();
        for (label, s) in sweeps_from_fits(&fits, cfg.physics.temperature_k) {
            let points: Vec<(f64, f64)> = s
                .points
                .iter()
                .map(|p| (p.photon_number, p.q_internal))
                .collect();
            let fit_curve = match fit_power_sweep_with(&s, &options) {
                Ok(r) => {
                    warn_sweep(err, &label, &r)?;
                    let (lo, hi) = (points[0].0, points[points.len() - 1].0);
                    log_space(lo, hi, 60)
                        .into_iter()
                        .map(|n| {
                            (
                                n,
                                1.0 / tls_tan_delta(n, &r.params, s.resonator_freq, s.temperature),
                            )
                        })
                        .collect()
                }
                Err(e) => {
                    writeln!(err, "{label}: no TLS curve ({e})").map_err(io_err)?;
                    Vec::new()
                }
            };
            sweeps.push(SweepPlot {
                label,
                points,
                fit_curve,
            });
        }
    }

    let mut area = None;
    if let Some(path) = &a.areas {
        let series = parse_area_csv(path)?;
        let l_eff = cfg.physics.design().effective_inductance();
        let ds = AreaFrequencyDataset {
            rows: series.iter().map(|r| (r.area_um2, r.freq_hz)).collect(),
            inductance: l_eff,
        };
        let fit = match fit_frequency_vs_area_with(&ds, &cfg.tolerances) {
            Ok(f) => Some(f),
            Err(e) => {
                writeln!(err, "area fit failed: {e}").map_err(io_err)?;
                None
            }
        };
        for r in &series {
            let cap = fit.as_ref().map(|f| f.cap_per_area * r.area_um2);
            match rows.iter_mut().find(|row| row.label == r.label) {
                Some(row) => {
                    row.area_um2 = Some(r.area_um2);
                    row.capacitance_f = cap;
                }
                None => rows.push(ResonatorRow {
                    area_um2: Some(r.area_um2),
                    capacitance_f: cap,
                    ..ResonatorRow::new(&r.label, r.freq_hz)
                }),
            }
        }
        let points: Vec<(f64, f64)> = series
            .iter()
            .map(|r| (r.area_um2, r.freq_hz / units::GHZ))
            .collect();
        let fit_curve = match &fit {
            Some(f) if !series.is_empty() => {
                let lo = series
                    .iter()
                    .map(|r| r.area_um2)
                    .fold(f64::INFINITY, f64::min);
                let hi = series.iter().map(|r| r.area_um2).fold(0.0, f64::max);
                let areas: Vec<f64> = (0..60)
                    .map(|i| 0.8 * lo + (1.1 * hi - 0.8 * lo) * i as f64 / 59.0)
                    .collect();
                let params = [
                    f.cap_per_area / units::FEMTOFARAD,
                    f.cap_to_ground / units::FEMTOFARAD,
                ];
                areas
                    .iter()
                    .copied()
                    .zip(frequency_area_curve(&params, &areas, l_eff))
                    .collect()
            }
            _ => Vec::new(),
        };
        area = Some(AreaPlot { points, fit_curve });
    }

    let traces = a
        .traces
        .iter()
        .map(|p| read_trace(p, a.format))
        .collect::<Result<Vec<_>>>()?;

    let comparison = match &a.compare_to {
        Some(p) => compare_sessions(&parse_resonators_csv(p)?, &rows),
        None => Vec::new(),
    };

    let bundle = ReportBundle {
        rows,
        comparison,
        traces,
        sweeps,
        area,
        inputs: given.iter().map(|p| p.display().to_string()).collect(),
        config_hash: config_hash(&cfg),
    };
    let dir = out_dir(&cfg)?;
    let files = emit_report(&bundle, &dir)?;
    for c in &bundle.comparison {
        writeln!(
            out,
            "{}: {:.6} GHz -> {:.6} GHz, delta {:.3} MHz",
            c.label,
            c.freq_hz_a / units::GHZ,
            c.freq_hz_b / units::GHZ,
            c.delta_hz / units::MHZ
        )
        .map_err(io_err)?;
    }
    for f in &files {
        writeln!(err, "wrote {}", dir.join(f).display()).map_err(io_err)?;
    }
    Ok(Status::Done)
}
