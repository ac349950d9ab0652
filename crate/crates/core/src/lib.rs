//! Link budgets, capacity bounds and CV-QKD key rates for free-space optical
//! quantum channels in moderate-to-strong turbulence.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: adaptive Gauss-Kronrod quadrature and special functions.
//! - [`atmosphere`]: Cn² profiles, Rytov variance, coherence scales,
//!   scintillation index and sky background.
//! - [`beam`]: Gaussian-beam geometry, long-term spreading and centroid wander.
//! - [`channel`]: transmissivity factors, receiver noise and [`LinkBudget`].
//! - [`capacity`]: repeaterless bounds for pure-loss and thermal-loss channels.
//! - [`cvqkd`]: GG02 asymptotic and composable finite-size key rates.
//! - [`satellite`]: slant geometry, refraction ray tracing and downlinks.
//!
//! All lengths are in metres, angles in radians, and rates in bits per
//! channel use unless a name says otherwise.

pub mod atmosphere;
pub mod beam;
pub mod capacity;
pub mod channel;
pub mod cvqkd;
mod error;
pub mod numerics;
pub mod satellite;

pub use error::{Error, Result};

pub use atmosphere::{Cn2Model, SkyRadiance, TurbulenceProfile, WaveModel};
pub use beam::{BeamAtReceiver, BeamGeometry, BeamParameters, Regime, RegimePolicy};
pub use capacity::ChannelPoint;
pub use channel::{
    BudgetOptions, DetectorElectronics, ExtraNoise, LinkBudget, LoMode, LongTermModel,
    ReceiverConfig,
};
pub use cvqkd::{ChannelEstimate, ComposableRate, CovarianceTriplet, ProtocolParams};
pub use numerics::QuadratureSpec;
pub use satellite::{
    DownlinkBudget, DownlinkOptions, ElongationMode, LayeredAtmosphere, SatelliteGeometry,
};

/// Physical constants (SI, exact 2019 definitions).
pub mod constants {
    /// Planck constant, J·s.
    pub const PLANCK: f64 = 6.626_070_15e-34;
    /// Reduced Planck constant, J·s.
    pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
    /// Speed of light in vacuum, m/s.
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
}

/// Converts a transmissivity to a loss in dB (`-10 log10 η`).
pub fn loss_db(eta: f64) -> f64 {
    -10.0 * eta.log10()
}
