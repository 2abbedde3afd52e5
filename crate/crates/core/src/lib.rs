// Validation uses `!(x > 0.0)` deliberately so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod constants;
pub mod error;
pub mod extraction;
pub mod fit;
pub mod io;
pub mod loss;
pub mod notch;

pub use error::{Error, Result};
