//! Turbulence strength: Cn² profiles, Rytov variance, coherence scales,
//! slant-path scintillation and sky background.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::constants::{PLANCK, SPEED_OF_LIGHT};
use crate::numerics::{integrate_panels, QuadratureSpec};
use crate::{Error, Result};

/// Night-time ground-level Cn² used for horizontal links, m^{-2/3}.
pub const NIGHT_CN2: f64 = 1.28e-14;
/// Day-time ground-level Cn² used for horizontal links, m^{-2/3}.
pub const DAY_CN2: f64 = 2.06e-14;
/// Default turbulence inner scale ℓ0, m.
pub const DEFAULT_INNER_SCALE: f64 = 1e-3;
/// Default turbulence outer scale L0, m.
pub const DEFAULT_OUTER_SCALE: f64 = 1.0;

/// Refractive-index structure model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cn2Model {
    Constant {
        #[serde(rename = "cn2_m_23")]
        cn2: f64,
    },
    /// Hufnagel-Valley altitude profile.
    HufnagelValley {
        #[serde(rename = "wind_speed_m_s")]
        wind_speed: f64,
        #[serde(rename = "ground_cn2_m_23")]
        ground_cn2: f64,
    },
}

/// A Cn² model plus the inner and outer turbulence scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbulenceProfile {
    #[serde(flatten)]
    pub model: Cn2Model,
    #[serde(rename = "inner_scale_m", default = "default_inner")]
    pub inner_scale: f64,
    #[serde(rename = "outer_scale_m", default = "default_outer")]
    pub outer_scale: f64,
}

fn default_inner() -> f64 {
    DEFAULT_INNER_SCALE
}

fn default_outer() -> f64 {
    DEFAULT_OUTER_SCALE
}

impl TurbulenceProfile {
    pub fn constant(cn2: f64) -> Self {
        Self {
            model: Cn2Model::Constant { cn2 },
            inner_scale: DEFAULT_INNER_SCALE,
            outer_scale: DEFAULT_OUTER_SCALE,
        }
    }

    pub fn hufnagel_valley(wind_speed: f64, ground_cn2: f64) -> Self {
        Self {
            model: Cn2Model::HufnagelValley {
                wind_speed,
                ground_cn2,
            },
            inner_scale: DEFAULT_INNER_SCALE,
            outer_scale: DEFAULT_OUTER_SCALE,
        }
    }

    /// Constant night-time profile, Cn² = 1.28e-14.
    pub fn night() -> Self {
        Self::constant(NIGHT_CN2)
    }

    /// Constant day-time profile, Cn² = 2.06e-14.
    pub fn day() -> Self {
        Self::constant(DAY_CN2)
    }

    /// Low-wind clear night: v = 21 m/s, A = 1.7e-14.
    pub fn hv_night() -> Self {
        Self::hufnagel_valley(21.0, 1.7e-14)
    }

    /// High-wind day: v = 57 m/s, A = 2.75e-14.
    pub fn hv_day() -> Self {
        Self::hufnagel_valley(57.0, 2.75e-14)
    }

    pub fn with_scales(mut self, inner_scale: f64, outer_scale: f64) -> Self {
        self.inner_scale = inner_scale;
        self.outer_scale = outer_scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.model {
            Cn2Model::Constant { cn2 } if !(cn2 > 0.0 && cn2.is_finite()) => {
                return Err(Error::param("cn2", format!("must be > 0, got {cn2}")))
            }
            Cn2Model::HufnagelValley {
                wind_speed,
                ground_cn2,
            } => {
                if !(wind_speed >= 0.0) {
                    return Err(Error::param("wind_speed", format!("must be >= 0, got {wind_speed}")));
                }
                if !(ground_cn2 > 0.0) {
                    return Err(Error::param("ground_cn2", format!("must be > 0, got {ground_cn2}")));
                }
            }
            _ => {}
        }
        if !(self.inner_scale > 0.0 && self.inner_scale < self.outer_scale) {
            return Err(Error::param(
                "inner_scale",
                format!(
                    "need 0 < inner ({}) < outer ({})",
                    self.inner_scale, self.outer_scale
                ),
            ));
        }
        Ok(())
    }

    /// Cn² at altitude `h` (m). Constant profiles ignore `h`.
    pub fn cn2_at(&self, h: f64) -> f64 {
        match self.model {
            Cn2Model::Constant { cn2 } => cn2,
            Cn2Model::HufnagelValley {
                wind_speed,
                ground_cn2,
            } => cn2_hv(h, wind_speed, ground_cn2),
        }
    }
}

/// Hufnagel-Valley Cn²(h) for wind speed `v` (m/s) and ground value `a`.
pub fn cn2_hv(h: f64, v: f64, a: f64) -> f64 {
    let h = h.max(0.0);
    5.94e-53 * (v / 27.0).powi(2) * h.powi(10) * (-h / 1000.0).exp()
        + 2.7e-16 * (-h / 1500.0).exp()
        + a * (-h / 100.0).exp()
}

/// Wave number k = 2π/λ.
pub fn wave_number(wavelength: f64) -> f64 {
    2.0 * PI / wavelength
}

/// Plane-wave Rytov variance `1.23 Cn² k^{7/6} z^{11/6}`.
pub fn rytov_plane(cn2: f64, k: f64, z: f64) -> f64 {
    1.23 * cn2 * k.powf(7.0 / 6.0) * z.powf(11.0 / 6.0)
}

/// Spherical-wave Rytov variance, 0.4 of the plane-wave value.
pub fn rytov_spherical(cn2: f64, k: f64, z: f64) -> f64 {
    0.4 * rytov_plane(cn2, k, z)
}

/// Distance `z_i = (Cn² k² ℓ0^{5/3})^{-1}` at which the transverse coherence
/// radius reaches the inner scale.
pub fn coherence_length_zi(cn2: f64, k: f64, inner_scale: f64) -> f64 {
    1.0 / (cn2 * k * k * inner_scale.powf(5.0 / 3.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveModel {
    Plane,
    Spherical,
}

impl WaveModel {
    fn coefficient(self) -> f64 {
        match self {
            WaveModel::Plane => 0.55,
            WaveModel::Spherical => 1.46,
        }
    }
}

/// Spatial coherence radius `ρ0 = (c Cn² k² z)^{-3/5}`; +∞ at z = 0.
pub fn spatial_coherence_radius(cn2: f64, k: f64, z: f64, wave: WaveModel) -> f64 {
    let base = wave.coefficient() * cn2 * k * k * z;
    if base <= 0.0 {
        f64::INFINITY
    } else {
        base.powf(-0.6)
    }
}

fn check_slant(theta: f64, h0: f64, h: f64) -> Result<()> {
    if !(0.0..FRAC_PI_2).contains(&theta) {
        return Err(Error::domain("zenith angle", format!("need 0 <= θ < π/2, got {theta}")));
    }
    if !(h > h0) {
        return Err(Error::domain("altitude", format!("need h ({h}) > h0 ({h0})")));
    }
    Ok(())
}

/// Slant-path Rytov variance for an arbitrary Cn²(h).
///
/// `2.25 k^{7/6} sec^{11/6}θ ∫_{h0}^{h} (h' − h0)^{5/6} Cn²(h') dh'`
pub fn rytov_slant_with<C: Fn(f64) -> f64>(
    cn2: C,
    k: f64,
    theta: f64,
    h0: f64,
    h: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_slant(theta, h0, h)?;
    // Panels follow the H-V length scales (100 m, 1.5 km, ~10 km peak).
    let mut edges = vec![h0];
    for dh in [100.0, 400.0, 1500.0, 5000.0, 10_000.0, 20_000.0, 40_000.0, 100_000.0] {
        if h0 + dh < h {
            edges.push(h0 + dh);
        }
    }
    edges.push(h);
    let integral = integrate_panels(
        |x: f64| (x - h0).max(0.0).powf(5.0 / 6.0) * cn2(x),
        &edges,
        &spec.with_absolute(1e-30),
    )?;
    let sec = 1.0 / theta.cos();
    Ok(2.25 * k.powf(7.0 / 6.0) * sec.powf(11.0 / 6.0) * integral)
}

/// Slant-path Rytov variance from station altitude `h0` to `h` at zenith `theta`.
pub fn rytov_slant(
    profile: &TurbulenceProfile,
    k: f64,
    theta: f64,
    h0: f64,
    h: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    rytov_slant_with(|x| profile.cn2_at(x), k, theta, h0, h, spec)
}

/// Saturated scintillation index for a given (slant) Rytov variance.
pub fn scintillation_from_rytov(sigma2: f64) -> f64 {
    if sigma2 <= 0.0 {
        return 0.0;
    }
    let s125 = sigma2.powf(1.2);
    let lhs = 0.49 * sigma2 / (1.0 + 1.11 * s125).powf(7.0 / 6.0);
    let rhs = 0.51 * sigma2 / (1.0 + 0.69 * s125).powf(5.0 / 6.0);
    (lhs + rhs).exp_m1()
}

/// Limit of [`scintillation_from_rytov`] as the Rytov variance grows without bound.
pub fn scintillation_saturation() -> f64 {
    (0.51 / 0.69_f64.powf(5.0 / 6.0)).exp_m1()
}

/// Slant-path scintillation index σ_I²(h, θ).
pub fn scintillation_index(
    profile: &TurbulenceProfile,
    k: f64,
    theta: f64,
    h0: f64,
    h: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    Ok(scintillation_from_rytov(rytov_slant(profile, k, theta, h0, h, spec)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurbulenceStrength {
    Weak,
    ModerateToStrong,
}

impl TurbulenceStrength {
    /// Horizontal links are classified by the plane-wave Rytov variance,
    /// slant links by the scintillation index; both use a threshold of 1.
    pub fn classify(measure: f64) -> Self {
        if measure >= 1.0 {
            TurbulenceStrength::ModerateToStrong
        } else {
            TurbulenceStrength::Weak
        }
    }
}

/// Spectral sky radiance B_sky in W m⁻² nm⁻¹ sr⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkyRadiance {
    #[serde(rename = "brightness_w_m2_nm_sr")]
    pub brightness: f64,
}

impl SkyRadiance {
    /// Calibrated so a 5 cm aperture sees 4.75e-12 photons/mode.
    pub const NIGHT: SkyRadiance = SkyRadiance { brightness: 1.5e-6 };
    /// Calibrated so a 5 cm aperture sees 4.75e-7 photons/mode.
    pub const DAY: SkyRadiance = SkyRadiance { brightness: 1.5e-1 };

    pub fn new(brightness: f64) -> Result<Self> {
        if !(brightness >= 0.0) {
            return Err(Error::param("brightness", format!("must be >= 0, got {brightness}")));
        }
        Ok(Self { brightness })
    }
}

/// Mean background photons per mode, `π Δλ Δt Ω a_R² B_sky / ħω`.
///
/// `filter_nm` is in nanometres to match the radiance units; everything else
/// is SI.
pub fn background_photons(
    sky: SkyRadiance,
    filter_nm: f64,
    window_s: f64,
    fov_sr: f64,
    aperture_radius: f64,
    wavelength: f64,
) -> f64 {
    let photon_energy = PLANCK * SPEED_OF_LIGHT / wavelength;
    PI * filter_nm * window_s * fov_sr * aperture_radius * aperture_radius * sky.brightness
        / photon_energy
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const LAMBDA: f64 = 800e-9;

    fn k() -> f64 {
        wave_number(LAMBDA)
    }

    #[test]
    fn hv_ground_value_and_decay() {
        assert_relative_eq!(cn2_hv(0.0, 21.0, 1.7e-14), 1.727e-14, max_relative = 1e-12);
        assert_eq!(cn2_hv(0.0, 57.0, 1.7e-14), cn2_hv(0.0, 0.0, 1.7e-14));
        assert!(cn2_hv(1e6, 21.0, 1.7e-14) < 1e-300);
    }

    #[test]
    fn hv_at_10km_term_by_term() {
        let h: f64 = 10_000.0;
        let t1 = 5.94e-53 * (21.0f64 / 27.0).powi(2) * h.powi(10) * (-10.0f64).exp();
        let t2 = 2.7e-16 * (-h / 1500.0).exp();
        let t3 = 1.7e-14 * (-100.0f64).exp();
        assert_relative_eq!(cn2_hv(h, 21.0, 1.7e-14), t1 + t2 + t3, max_relative = 1e-14);
        assert_relative_eq!(t1 + t2 + t3, 1.6275e-17, max_relative = 1e-3);
    }

    #[test]
    fn rytov_values() {
        assert_relative_eq!(rytov_plane(NIGHT_CN2, k(), 1384.0), 1.0, max_relative = 2e-3);
        assert_relative_eq!(rytov_plane(NIGHT_CN2, k(), 1e4), 37.56, max_relative = 1e-3);
        assert_relative_eq!(rytov_plane(DAY_CN2, k(), 1e4), 60.45, max_relative = 1e-3);
        assert_eq!(rytov_plane(NIGHT_CN2, k(), 0.0), 0.0);
        assert_relative_eq!(
            rytov_spherical(NIGHT_CN2, k(), 1e4),
            0.4 * rytov_plane(NIGHT_CN2, k(), 1e4)
        );
    }

    #[test]
    fn zi_values() {
        assert_relative_eq!(coherence_length_zi(NIGHT_CN2, k(), 1e-3), 126.7e3, max_relative = 5e-4);
        let day = coherence_length_zi(DAY_CN2, k(), 1e-3);
        assert_relative_eq!(day, 1.0 / (DAY_CN2 * k() * k() * 1e-5), max_relative = 1e-12);
        assert_relative_eq!(day, 78.7e3, max_relative = 1e-3);
        assert_relative_eq!(
            coherence_length_zi(2.0 * NIGHT_CN2, k(), 1e-3),
            0.5 * coherence_length_zi(NIGHT_CN2, k(), 1e-3),
            max_relative = 1e-14
        );
    }

    #[test]
    fn coherence_radius() {
        for z in [10.0, 1e3, 1e5] {
            let ratio = spatial_coherence_radius(NIGHT_CN2, k(), z, WaveModel::Plane)
                / spatial_coherence_radius(NIGHT_CN2, k(), z, WaveModel::Spherical);
            assert_relative_eq!(ratio, (1.46f64 / 0.55).powf(0.6), max_relative = 1e-12);
        }
        assert_eq!(
            spatial_coherence_radius(NIGHT_CN2, k(), 0.0, WaveModel::Plane),
            f64::INFINITY
        );
        let oracle = (0.55 * NIGHT_CN2 * k() * k() * 1e4).powf(-0.6);
        assert_relative_eq!(
            spatial_coherence_radius(NIGHT_CN2, k(), 1e4, WaveModel::Plane),
            oracle,
            max_relative = 1e-14
        );
        assert_relative_eq!(oracle, 6.567e-3, max_relative = 1e-3);
    }

    #[test]
    fn slant_rytov_zero_and_constant_profile() {
        let spec = QuadratureSpec::default();
        assert_eq!(rytov_slant_with(|_| 0.0, k(), 1.0, 30.0, 4e5, &spec).unwrap(), 0.0);
        // Constant Cn² integrates in closed form: (6/11)(h-h0)^{11/6}.
        let p = TurbulenceProfile::constant(1e-15);
        let v = rytov_slant(&p, k(), 0.5, 0.0, 2e4, &spec).unwrap();
        let sec: f64 = 1.0 / 0.5f64.cos();
        let oracle = 2.25 * k().powf(7.0 / 6.0) * sec.powf(11.0 / 6.0) * 1e-15 * 6.0 / 11.0 * 2e4f64.powf(11.0 / 6.0);
        assert_relative_eq!(v, oracle, max_relative = 1e-9);
    }

    #[test]
    fn slant_rytov_against_simpson() {
        let spec = QuadratureSpec::default();
        let p = TurbulenceProfile::hv_night();
        let v = rytov_slant(&p, k(), 1.0, 0.0, 4e5, &spec).unwrap();
        // Simpson on a graded grid: fine near the ground, coarse above 60 km.
        let f = |x: f64| x.powf(5.0 / 6.0) * p.cn2_at(x);
        let integral = crate::numerics::simpson(f, 0.0, 2000.0, 400_000)
            + crate::numerics::simpson(f, 2000.0, 60_000.0, 400_000)
            + crate::numerics::simpson(f, 60_000.0, 4e5, 100_000);
        let oracle = 2.25 * k().powf(7.0 / 6.0) * (1.0 / 1.0f64.cos()).powf(11.0 / 6.0) * integral;
        assert_relative_eq!(v, oracle, max_relative = 1e-6);
        assert!(scintillation_from_rytov(v) < 1.0);
    }

    #[test]
    fn slant_rytov_rejects_bad_geometry() {
        let spec = QuadratureSpec::default();
        let p = TurbulenceProfile::hv_night();
        assert!(rytov_slant(&p, k(), FRAC_PI_2, 0.0, 4e5, &spec).is_err());
        assert!(rytov_slant(&p, k(), 0.3, 100.0, 50.0, &spec).is_err());
    }

    #[test]
    fn slant_rytov_increases_with_zenith() {
        let spec = QuadratureSpec::default();
        let p = TurbulenceProfile::hv_day();
        let mut last = 0.0;
        for i in 0..30 {
            let theta = 1.5 * i as f64 / 30.0;
            let v = rytov_slant(&p, k(), theta, 30.0, 5e5, &spec).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn scintillation_limits() {
        assert_eq!(scintillation_from_rytov(0.0), 0.0);
        assert_relative_eq!(scintillation_saturation(), 1.0033, max_relative = 1e-4);
        assert_relative_eq!(scintillation_from_rytov(1e14), scintillation_saturation(), max_relative = 1e-5);
        assert!(scintillation_from_rytov(1e-3) > 0.0);
    }

    #[test]
    fn background_photon_calibration() {
        let night = background_photons(SkyRadiance::NIGHT, 1e-4, 1e-8, 1e-10, 0.05, LAMBDA);
        assert_relative_eq!(night, 4.75e-12, max_relative = 2e-3);
        let day = background_photons(SkyRadiance::DAY, 1e-4, 1e-8, 1e-10, 0.05, LAMBDA);
        assert_relative_eq!(day, 4.75e-7, max_relative = 2e-3);
        let big = background_photons(SkyRadiance::NIGHT, 1e-4, 1e-8, 1e-10, 0.30, LAMBDA);
        assert_relative_eq!(big / night, 36.0, max_relative = 1e-12);
        assert_eq!(background_photons(SkyRadiance { brightness: 0.0 }, 1e-4, 1e-8, 1e-10, 0.3, LAMBDA), 0.0);
        assert!(SkyRadiance::new(-1.0).is_err());
    }

    #[test]
    fn profile_validation() {
        assert!(TurbulenceProfile::night().validate().is_ok());
        assert!(TurbulenceProfile::constant(0.0).validate().is_err());
        assert!(TurbulenceProfile::hufnagel_valley(-1.0, 1e-14).validate().is_err());
        assert!(TurbulenceProfile::night().with_scales(2.0, 1.0).validate().is_err());
    }

    #[test]
    fn profile_json_shape() {
        let json = serde_json::to_value(TurbulenceProfile::hv_night()).unwrap();
        assert_eq!(json["kind"], "hufnagel_valley");
        assert_eq!(json["wind_speed_m_s"], 21.0);
        let back: TurbulenceProfile =
            serde_json::from_str(r#"{"kind":"constant","cn2_m_23":1.28e-14}"#).unwrap();
        assert_eq!(back, TurbulenceProfile::night());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rytov_scaling(cn2 in 1e-17..1e-12f64, z in 1.0..1e6f64) {
                let r = rytov_plane(cn2, k(), 2.0 * z) / rytov_plane(cn2, k(), z);
                prop_assert!((r - 2f64.powf(11.0 / 6.0)).abs() < 1e-12);
                let r = rytov_plane(cn2, 2.0 * k(), z) / rytov_plane(cn2, k(), z);
                prop_assert!((r - 2f64.powf(7.0 / 6.0)).abs() < 1e-12);
            }

            #[test]
            fn scintillation_nonnegative(s in 0.0..1e8f64) {
                let v = scintillation_from_rytov(s);
                prop_assert!(v >= 0.0);
                prop_assert_eq!(v == 0.0, s == 0.0);
            }

            #[test]
            fn background_linear(a in 0.01..2.0f64, scale in 0.1..10.0f64) {
                let base = background_photons(SkyRadiance::NIGHT, 1e-4, 1e-8, 1e-10, a, LAMBDA);
                let a2 = background_photons(SkyRadiance::NIGHT, 1e-4, 1e-8, 1e-10, scale * a, LAMBDA);
                prop_assert!((a2 / base - scale * scale).abs() < 1e-10 * scale * scale);
                let f2 = background_photons(SkyRadiance::NIGHT, scale * 1e-4, 1e-8, 1e-10, a, LAMBDA);
                let t2 = background_photons(SkyRadiance::NIGHT, 1e-4, scale * 1e-8, 1e-10, a, LAMBDA);
                let o2 = background_photons(SkyRadiance::NIGHT, 1e-4, 1e-8, scale * 1e-10, a, LAMBDA);
                let b2 = background_photons(SkyRadiance { brightness: scale * 1.5e-6 }, 1e-4, 1e-8, 1e-10, a, LAMBDA);
                for v in [f2, t2, o2, b2] {
                    prop_assert!((v / base - scale).abs() < 1e-10 * scale);
                }
            }

            #[test]
            fn hv_positive(h in 0.0..1e5f64, v in 0.0..80.0f64) {
                prop_assert!(cn2_hv(h, v, 1.7e-14) > 0.0);
                let dh = 1e-3;
                prop_assert!((cn2_hv(h + dh, v, 1.7e-14) - cn2_hv(h, v, 1.7e-14)).abs() < 1e-15);
            }
        }
    }
}
