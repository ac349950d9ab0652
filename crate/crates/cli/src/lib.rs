//! Batch front end for `fsoq-core`: scenario evaluation, parameter sweeps
//! and figure-data presets.

pub mod error;
pub mod eval;
pub mod figures;
pub mod scenario;
pub mod sweep;

pub use error::CliError;
pub use eval::{evaluate, EvalContext, EvalReport};
pub use scenario::{Axis, Scenario};
