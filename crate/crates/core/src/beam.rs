//! Gaussian-beam geometry, long-term turbulent spreading and centroid wander.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::numerics::{integrate_finite, QuadratureSpec};
use crate::{Error, Result};

/// Default pointing jitter variance, rad² (a 1 μrad tracking error).
pub const DEFAULT_JITTER: f64 = 1e-12;

/// A transmitted Gaussian beam.
///
/// Curvature is stored as `1/R0` so that a collimated beam is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    #[serde(rename = "spot_radius_m")]
    pub spot_radius: f64,
    #[serde(rename = "inverse_curvature_per_m", default)]
    pub inverse_curvature: f64,
    #[serde(rename = "wavelength_m")]
    pub wavelength: f64,
}

impl BeamGeometry {
    pub fn collimated(spot_radius: f64, wavelength: f64) -> Self {
        Self {
            spot_radius,
            inverse_curvature: 0.0,
            wavelength,
        }
    }

    /// A beam whose phase front has radius `curvature_radius` at the transmitter.
    pub fn focused(spot_radius: f64, curvature_radius: f64, wavelength: f64) -> Self {
        Self {
            spot_radius,
            inverse_curvature: 1.0 / curvature_radius,
            wavelength,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot_radius > 0.0 && self.spot_radius.is_finite()) {
            return Err(Error::param("spot_radius", format!("must be > 0, got {}", self.spot_radius)));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::param("wavelength", format!("must be > 0, got {}", self.wavelength)));
        }
        if !self.inverse_curvature.is_finite() {
            return Err(Error::param("inverse_curvature", "must be finite (R0 != 0)"));
        }
        Ok(())
    }

    pub fn wave_number(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// `z_R = π w0² / λ`.
    pub fn rayleigh_length(&self) -> f64 {
        PI * self.spot_radius * self.spot_radius / self.wavelength
    }
}

/// Diffraction-limited spot radius after a vacuum path of length `z`.
pub fn diffraction_waist(beam: &BeamGeometry, z: f64) -> f64 {
    let focus = 1.0 - z * beam.inverse_curvature;
    let spread = z / beam.rayleigh_length();
    beam.spot_radius * (focus * focus + spread * spread).sqrt()
}

/// Dimensionless Gaussian-beam parameters in the transmitter (`omega0`,
/// `lambda0`) and receiver (`omega`, `lambda`) planes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParameters {
    pub omega0: f64,
    pub lambda0: f64,
    pub omega: f64,
    pub lambda: f64,
}

impl BeamParameters {
    pub fn new(beam: &BeamGeometry, z: f64) -> Self {
        let omega0 = 1.0 - z * beam.inverse_curvature;
        let lambda0 = 2.0 * z / (beam.wave_number() * beam.spot_radius * beam.spot_radius);
        let norm = omega0 * omega0 + lambda0 * lambda0;
        Self {
            omega0,
            lambda0,
            omega: omega0 / norm,
            lambda: lambda0 / norm,
        }
    }

    /// Plane-wave limit, Ω0 = 1 and Λ0 = 0.
    pub fn plane_wave() -> Self {
        Self {
            omega0: 1.0,
            lambda0: 0.0,
            omega: 1.0,
            lambda: 0.0,
        }
    }

    /// Spherical-wave (point source) limit, Ω0 = Λ0 = 0. The receiver-plane
    /// values are taken as their limit, also zero.
    pub fn spherical_wave() -> Self {
        Self {
            omega0: 0.0,
            lambda0: 0.0,
            omega: 0.0,
            lambda: 0.0,
        }
    }
}

/// Which long-term waist formula applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Beyond the coherence distance z_i: inner-scale corrected spread.
    BeyondZi,
    /// Within z_i (and weak turbulence).
    WithinZi,
}

/// How to choose a [`Regime`] for a given distance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimePolicy {
    /// Within-z_i formula below z_i, beyond-z_i formula at and above it.
    #[default]
    Auto,
    AlwaysWithinZi,
}

impl RegimePolicy {
    pub fn select(self, z: f64, zi: f64) -> Regime {
        match self {
            RegimePolicy::Auto if z >= zi => Regime::BeyondZi,
            _ => Regime::WithinZi,
        }
    }
}

/// Long-term (wander-averaged) spot radius.
pub fn long_term_waist(beam: &BeamGeometry, z: f64, sigma_ry2: f64, inner_scale: f64, regime: Regime) -> f64 {
    let w_z = diffraction_waist(beam, z);
    let lambda = BeamParameters::new(beam, z).lambda;
    let spread = match regime {
        Regime::BeyondZi => {
            let q_m = 35.05 * z / (beam.wave_number() * inner_scale * inner_scale);
            let q = 0.74 * sigma_ry2 * q_m.powf(1.0 / 6.0);
            4.0 / 3.0 * q * lambda
        }
        Regime::WithinZi => 1.63 * sigma_ry2.powf(1.2) * lambda,
    };
    w_z * (1.0 + spread).sqrt()
}

/// Both long-term waist branches, `(beyond_zi, within_zi)`, for comparing
/// them near the junction.
pub fn long_term_waist_branches(beam: &BeamGeometry, z: f64, sigma_ry2: f64, inner_scale: f64) -> (f64, f64) {
    (
        long_term_waist(beam, z, sigma_ry2, inner_scale, Regime::BeyondZi),
        long_term_waist(beam, z, sigma_ry2, inner_scale, Regime::WithinZi),
    )
}

/// Beam state at the receiver plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamAtReceiver {
    pub parameters: BeamParameters,
    #[serde(rename = "diffraction_waist_m")]
    pub diffraction_waist: f64,
    #[serde(rename = "long_term_waist_m")]
    pub long_term_waist: f64,
    pub regime: Regime,
}

impl BeamAtReceiver {
    pub fn evaluate(beam: &BeamGeometry, z: f64, sigma_ry2: f64, inner_scale: f64, regime: Regime) -> Self {
        Self {
            parameters: BeamParameters::new(beam, z),
            diffraction_waist: diffraction_waist(beam, z),
            long_term_waist: long_term_waist(beam, z, sigma_ry2, inner_scale, regime),
            regime,
        }
    }
}

/// Pointing-error wander variance `jitter · z²` (m²).
pub fn wander_pointing(z: f64, jitter: f64) -> f64 {
    jitter * z * z
}

/// Turbulence-induced centroid wander variance (m²).
pub fn wander_turbulence(
    beam: &BeamGeometry,
    z: f64,
    cn2: f64,
    outer_scale: f64,
    sigma_ry2: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if cn2 == 0.0 {
        return Ok(0.0);
    }
    let p = BeamParameters::new(beam, z);
    let w0 = beam.spot_radius;
    let kappa_w = 2.0 * PI / outer_scale * w0;
    let strength = 1.63 * sigma_ry2.powf(1.2) * p.lambda0;
    let integrand = |xi: f64| {
        let focus = p.omega0 + (1.0 - p.omega0) * xi;
        let f = focus * focus + strength * (1.0 - xi).powf(3.2);
        xi * xi * (f.powf(-1.0 / 6.0) - kappa_w.powf(1.0 / 3.0) / (1.0 + kappa_w * kappa_w * f).powf(1.0 / 6.0))
    };
    let integral = integrate_finite(integrand, 0.0, 1.0, spec)?;
    Ok(7.25 * cn2 * w0.powf(-1.0 / 3.0) * z.powi(3) * integral)
}
