use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Adaptive quadrature gave up; `estimate` is the best value reached.
    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error_estimate:e} after {subdivisions} subdivisions")]
    Convergence {
        estimate: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    /// An input lies outside the validity domain of a formula.
    #[error("{quantity}: {reason}")]
    Domain {
        quantity: &'static str,
        reason: String,
    },

    /// A quantity diverges at the requested point (e.g. η = 1 for Eve's noise).
    #[error("{quantity} diverges: {reason}")]
    Divergence {
        quantity: &'static str,
        reason: String,
    },

    /// A configuration value violates its invariant.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// The refraction ray trace could not continue.
    #[error("ray trace failed in layer {layer}: {reason}")]
    Trace { layer: usize, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(quantity: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            quantity,
            reason: reason.into(),
        }
    }
}
