//! Transmissivity factors, receiver noise and the assembled [`LinkBudget`].

use std::cell::RefCell;
use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::atmosphere::{background_photons, coherence_length_zi, rytov_plane, SkyRadiance, TurbulenceProfile};
use crate::beam::{diffraction_waist, long_term_waist, BeamGeometry, BeamParameters, Regime, RegimePolicy};
use crate::constants::{PLANCK, SPEED_OF_LIGHT};
use crate::numerics::{bessel_j0, integrate_finite, integrate_panels, integrate_semi_infinite_bounded, QuadratureSpec};
use crate::{Error, Result};

/// Working coherent-detection efficiency for a locally generated LO whose
/// spot matches the aperture, `1 − e^{-1}`.
pub const ETA_CD_WORKING: f64 = 0.63;
/// Default sea-level extinction coefficient at 800 nm, 1/m.
pub const DEFAULT_EXTINCTION: f64 = 5e-6;
/// Default ground-station altitude, m.
pub const DEFAULT_STATION_ALTITUDE: f64 = 30.0;
/// Default normalization radius for the Huygens-Fresnel transmissivity, m.
pub const DEFAULT_NORMALIZATION_RADIUS: f64 = 100.0;
/// Scale height of the extinction coefficient, m.
const EXTINCTION_SCALE_HEIGHT: f64 = 6600.0;

/// Vacuum-diffraction transmissivity through a circular aperture.
pub fn eta_diffraction(w_z: f64, aperture_radius: f64) -> f64 {
    -(-2.0 * aperture_radius * aperture_radius / (w_z * w_z)).exp_m1()
}

/// Long-term transmissivity from the long-term waist.
pub fn eta_longterm_analytic(w_lt: f64, aperture_radius: f64) -> f64 {
    eta_diffraction(w_lt, aperture_radius)
}

/// Parameters shared by the irradiance functions.
struct Irradiance {
    w0: f64,
    w_z: f64,
    w_lt: f64,
    /// Stretched-exponential weight `y = 1.41 σ² Λ^{5/6}`.
    y: f64,
    regime: Regime,
}

impl Irradiance {
    fn new(beam: &BeamGeometry, z: f64, sigma_ry2: f64, inner_scale: f64, regime: Regime) -> Self {
        let lambda = BeamParameters::new(beam, z).lambda;
        Self {
            w0: beam.spot_radius,
            w_z: diffraction_waist(beam, z),
            w_lt: long_term_waist(beam, z, sigma_ry2, inner_scale, regime),
            y: 1.41 * sigma_ry2 * lambda.powf(5.0 / 6.0),
            regime,
        }
    }

    fn scale(&self) -> f64 {
        2.0 * SQRT_2 / self.w_z
    }

    fn at(&self, r: f64, spec: &QuadratureSpec) -> Result<f64> {
        match self.regime {
            Regime::BeyondZi => {
                let w2 = self.w_lt * self.w_lt;
                Ok(self.w0 * self.w0 / w2 * (-2.0 * r * r / w2).exp())
            }
            Regime::WithinZi => {
                let c = self.scale() * r;
                let y = self.y;
                let t_integral = integrate_semi_infinite_bounded(
                    |t: f64| t * bessel_j0(c * t) * (-t * t - y * t.powf(5.0 / 3.0)).exp(),
                    |t: f64| 0.5 * (-t * t).exp(),
                    spec,
                )?;
                Ok(2.0 * self.w0 * self.w0 / (self.w_z * self.w_z) * t_integral)
            }
        }
    }

    /// Fraction of the total power inside radius `a`.
    ///
    /// For the Bessel form the radial integral is done first in closed form
    /// and the remaining t-integral integrated by parts, which leaves
    /// `1 + ∫ J0(c a t) g'(t) dt` with `g = e^{-t² - y t^{5/3}}`.
    fn encircled_fraction(&self, a: f64, spec: &QuadratureSpec) -> Result<f64> {
        match self.regime {
            Regime::BeyondZi => Ok(eta_diffraction(self.w_lt, a)),
            Regime::WithinZi => {
                let ca = self.scale() * a;
                let y = self.y;
                let outside = integrate_semi_infinite_bounded(
                    |t: f64| {
                        let g = (-t * t - y * t.powf(5.0 / 3.0)).exp();
                        bessel_j0(ca * t) * (2.0 * t + 5.0 / 3.0 * y * t.powf(2.0 / 3.0)) * g
                    },
                    |t: f64| (1.0 + 5.0 / 6.0 * y) * (-t * t).exp(),
                    spec,
                )?;
                Ok(1.0 - outside)
            }
        }
    }
}

/// Mean received irradiance at radius `r`, relative to the transmitted peak.
///
/// `BeyondZi` is a Gaussian of radius `w_lt`; `WithinZi` is the Hankel
/// transform of a Gaussian times a stretched exponential.
pub fn mean_irradiance(
    r: f64,
    z: f64,
    beam: &BeamGeometry,
    sigma_ry2: f64,
    inner_scale: f64,
    regime: Regime,
    spec: &QuadratureSpec,
) -> Result<f64> {
    Irradiance::new(beam, z, sigma_ry2, inner_scale, regime).at(r, spec)
}

/// Power inside radius `a` by direct radial quadrature of
/// [`mean_irradiance`], `2π ∫_0^a r I(r) dr`. Slow; useful as a reference.
#[allow(clippy::too_many_arguments)]
pub fn encircled_power_radial(
    a: f64,
    z: f64,
    beam: &BeamGeometry,
    sigma_ry2: f64,
    inner_scale: f64,
    regime: Regime,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let irr = Irradiance::new(beam, z, sigma_ry2, inner_scale, regime);
    let failure = RefCell::new(None);
    let value = integrate_finite(
        |r| match irr.at(r, spec) {
            Ok(v) => 2.0 * PI * r * v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        0.0,
        a,
        spec,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Long-term transmissivity from the mean irradiance, normalized by the
/// power inside a large radius `normalization_radius`.
#[allow(clippy::too_many_arguments)]
pub fn eta_longterm_numerical(
    beam: &BeamGeometry,
    z: f64,
    sigma_ry2: f64,
    inner_scale: f64,
    regime: Regime,
    aperture_radius: f64,
    normalization_radius: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(aperture_radius > 0.0 && normalization_radius >= aperture_radius) {
        return Err(Error::param(
            "normalization_radius",
            format!("need 0 < a_R ({aperture_radius}) <= a_R_inf ({normalization_radius})"),
        ));
    }
    if normalization_radius == aperture_radius {
        return Ok(1.0);
    }
    let irr = Irradiance::new(beam, z, sigma_ry2, inner_scale, regime);
    let inside = irr.encircled_fraction(aperture_radius, spec)?;
    let total = irr.encircled_fraction(normalization_radius, spec)?;
    Ok((inside / total).clamp(0.0, 1.0))
}

/// How the long-term transmissivity is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LongTermModel {
    /// `1 − exp(−2a²/w_lt²)`.
    Analytic,
    /// Aperture integral of the mean irradiance.
    HuygensFresnel {
        #[serde(rename = "normalization_radius_m", default = "default_normalization")]
        normalization_radius: f64,
    },
}

fn default_normalization() -> f64 {
    DEFAULT_NORMALIZATION_RADIUS
}

impl Default for LongTermModel {
    fn default() -> Self {
        LongTermModel::Analytic
    }
}

impl LongTermModel {
    #[allow(clippy::too_many_arguments)]
    pub fn transmissivity(
        &self,
        beam: &BeamGeometry,
        z: f64,
        sigma_ry2: f64,
        inner_scale: f64,
        regime: Regime,
        aperture_radius: f64,
        spec: &QuadratureSpec,
    ) -> Result<f64> {
        match *self {
            LongTermModel::Analytic => Ok(eta_longterm_analytic(
                long_term_waist(beam, z, sigma_ry2, inner_scale, regime),
                aperture_radius,
            )),
            LongTermModel::HuygensFresnel { normalization_radius } => eta_longterm_numerical(
                beam,
                z,
                sigma_ry2,
                inner_scale,
                regime,
                aperture_radius,
                normalization_radius,
                spec,
            ),
        }
    }
}

/// Beer-Lambert extinction over a horizontal path at altitude `h0`.
pub fn eta_atmospheric(alpha0: f64, h0: f64, z: f64) -> f64 {
    (-alpha0 * (-h0 / EXTINCTION_SCALE_HEIGHT).exp() * z).exp()
}

/// Altitude as a function of arc length along a path.
pub trait AltitudePath {
    fn length(&self) -> f64;
    fn altitude(&self, s: f64) -> f64;
    /// Arc lengths where the quadrature should place panel edges.
    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0, self.length()]
    }
}

/// A horizontal path at fixed altitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantAltitude {
    pub altitude: f64,
    pub length: f64,
}

impl AltitudePath for ConstantAltitude {
    fn length(&self) -> f64 {
        self.length
    }

    fn altitude(&self, _s: f64) -> f64 {
        self.altitude
    }
}

/// A straight line leaving a station at `h0` with zenith angle `theta`
/// above a spherical Earth of radius `earth_radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StraightSlant {
    pub h0: f64,
    pub theta: f64,
    pub length: f64,
    pub earth_radius: f64,
}

impl AltitudePath for StraightSlant {
    fn length(&self) -> f64 {
        self.length
    }

    fn altitude(&self, s: f64) -> f64 {
        let r0 = self.earth_radius + self.h0;
        (r0 * r0 + s * s + 2.0 * s * r0 * self.theta.cos()).sqrt() - self.earth_radius
    }

    fn breakpoints(&self) -> Vec<f64> {
        geometric_breaks(self.length)
    }
}

fn geometric_breaks(length: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let mut s = 1000.0;
    while s < length {
        edges.push(s);
        s *= 4.0;
    }
    edges.push(length);
    edges
}

/// A path given as samples `(s_i, h_i)`, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    pub arc_length: Vec<f64>,
    pub altitude: Vec<f64>,
}

impl SampledPath {
    pub fn new(arc_length: Vec<f64>, altitude: Vec<f64>) -> Result<Self> {
        if arc_length.len() != altitude.len() || arc_length.len() < 2 {
            return Err(Error::param("arc_length", "need at least two (s, h) samples of equal length"));
        }
        if arc_length[0] != 0.0 || arc_length.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("arc_length", "must start at 0 and increase strictly"));
        }
        Ok(Self { arc_length, altitude })
    }
}

impl AltitudePath for SampledPath {
    fn length(&self) -> f64 {
        *self.arc_length.last().unwrap()
    }

    fn altitude(&self, s: f64) -> f64 {
        let i = self.arc_length.partition_point(|&x| x <= s).clamp(1, self.arc_length.len() - 1);
        let (s0, s1) = (self.arc_length[i - 1], self.arc_length[i]);
        let (h0, h1) = (self.altitude[i - 1], self.altitude[i]);
        h0 + (h1 - h0) * (s - s0) / (s1 - s0)
    }

    fn breakpoints(&self) -> Vec<f64> {
        geometric_breaks(self.length())
    }
}

/// Beer-Lambert extinction integrated along an altitude path.
pub fn eta_atmospheric_slant<P: AltitudePath + ?Sized>(alpha0: f64, path: &P, spec: &QuadratureSpec) -> Result<f64> {
    let optical_depth = integrate_panels(
        |s| (-path.altitude(s) / EXTINCTION_SCALE_HEIGHT).exp(),
        &path.breakpoints(),
        spec,
    )?;
    Ok((-alpha0 * optical_depth).exp())
}

/// Mode-matching efficiency of a locally generated LO of spot radius `lo_spot_radius`.
pub fn eta_llo(aperture_radius: f64, lo_spot_radius: f64) -> f64 {
    -(-aperture_radius * aperture_radius / (lo_spot_radius * lo_spot_radius)).exp_m1()
}

/// Local-oscillator arrangement of the coherent receiver.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoMode {
    /// Transmitted LO.
    #[default]
    Tlo,
    /// Local LO.
    Llo,
}

/// Coherent-detector electronics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorElectronics {
    /// Detection noise variance: 1 homodyne, 2 heterodyne (SNU).
    pub nu_det: f64,
    #[serde(rename = "nep_w_per_sqrt_hz")]
    pub nep: f64,
    #[serde(rename = "bandwidth_hz")]
    pub bandwidth: f64,
    #[serde(rename = "lo_pulse_s")]
    pub lo_pulse: f64,
    #[serde(rename = "lo_power_w")]
    pub lo_power: f64,
    #[serde(rename = "modulation_variance_snu")]
    pub modulation_variance: f64,
    #[serde(rename = "linewidth_hz")]
    pub linewidth: f64,
    #[serde(rename = "clock_hz")]
    pub clock: f64,
}

impl Default for DetectorElectronics {
    fn default() -> Self {
        Self {
            nu_det: 1.0,
            nep: 6e-12,
            bandwidth: 100e6,
            lo_pulse: 10e-9,
            lo_power: 100e-3,
            modulation_variance: 8.0,
            linewidth: 1.6e3,
            clock: 5e6,
        }
    }
}

impl DetectorElectronics {
    pub fn validate(&self) -> Result<()> {
        if self.nu_det != 1.0 && self.nu_det != 2.0 {
            return Err(Error::param("nu_det", format!("must be 1 or 2, got {}", self.nu_det)));
        }
        let fields = [
            ("nep", self.nep),
            ("bandwidth", self.bandwidth),
            ("lo_pulse", self.lo_pulse),
            ("lo_power", self.lo_power),
            ("modulation_variance", self.modulation_variance),
            ("linewidth", self.linewidth),
            ("clock", self.clock),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Electronic noise `Θ = ν NEP² W Δt_LO / (2 ħω P_LO)`.
    pub fn theta(&self, wavelength: f64) -> f64 {
        let photon_energy = PLANCK * SPEED_OF_LIGHT / wavelength;
        self.nu_det * self.nep * self.nep * self.bandwidth * self.lo_pulse / (2.0 * photon_energy * self.lo_power)
    }
}

/// Extra noise photons added by the coherent receiver.
pub fn extra_photons(det: &DetectorElectronics, eta: f64, wavelength: f64, mode: LoMode) -> Result<f64> {
    let theta = det.theta(wavelength);
    match mode {
        LoMode::Llo => Ok(theta + PI * eta * det.modulation_variance * det.linewidth / det.clock),
        LoMode::Tlo if eta > 0.0 => Ok(theta / eta),
        LoMode::Tlo => Err(Error::Divergence {
            quantity: "TLO extra photons",
            reason: "channel transmissivity is zero".into(),
        }),
    }
}

/// Receiver aperture, filtering and detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    #[serde(rename = "aperture_radius_m")]
    pub aperture_radius: f64,
    /// Detector quantum efficiency η_eff.
    pub efficiency: f64,
    #[serde(rename = "field_of_view_sr", default = "default_fov")]
    pub field_of_view: f64,
    #[serde(rename = "filter_nm", default = "default_filter")]
    pub filter: f64,
    #[serde(rename = "time_window_s", default = "default_window")]
    pub time_window: f64,
    #[serde(default)]
    pub lo_mode: LoMode,
    /// LO spot radius for [`LoMode::Llo`]; the aperture radius if absent.
    #[serde(rename = "lo_spot_radius_m", default)]
    pub lo_spot_radius: Option<f64>,
    /// Fixed coherent-detection efficiency, overriding the LO-mode value.
    #[serde(default)]
    pub coherent_efficiency: Option<f64>,
    #[serde(default)]
    pub detector: DetectorElectronics,
}

fn default_fov() -> f64 {
    1e-10
}

fn default_filter() -> f64 {
    1e-4
}

fn default_window() -> f64 {
    1e-8
}

impl ReceiverConfig {
    /// An ideal detector (η_eff = 1) behind a transmitted LO, with the
    /// default 1e-10 sr field of view, 0.1 pm filter and 10 ns window.
    pub fn ideal(aperture_radius: f64) -> Self {
        Self {
            aperture_radius,
            efficiency: 1.0,
            field_of_view: default_fov(),
            filter: default_filter(),
            time_window: default_window(),
            lo_mode: LoMode::Tlo,
            lo_spot_radius: None,
            coherent_efficiency: None,
            detector: DetectorElectronics::default(),
        }
    }

    pub fn with_efficiency(mut self, efficiency: f64) -> Self {
        self.efficiency = efficiency;
        self
    }

    pub fn with_coherent_efficiency(mut self, eta_cd: f64) -> Self {
        self.coherent_efficiency = Some(eta_cd);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aperture_radius > 0.0 && self.aperture_radius.is_finite()) {
            return Err(Error::param("aperture_radius", format!("must be > 0, got {}", self.aperture_radius)));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::param("efficiency", format!("must lie in [0, 1], got {}", self.efficiency)));
        }
        if let Some(e) = self.coherent_efficiency {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::param("coherent_efficiency", format!("must lie in [0, 1], got {e}")));
            }
        }
        if let Some(w) = self.lo_spot_radius {
            if !(w > 0.0) {
                return Err(Error::param("lo_spot_radius", format!("must be > 0, got {w}")));
            }
        }
        for (name, v) in [
            ("field_of_view", self.field_of_view),
            ("filter", self.filter),
            ("time_window", self.time_window),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be >= 0, got {v}")));
            }
        }
        self.detector.validate()
    }

    /// Coherent-detection efficiency η_cd.
    pub fn eta_cd(&self) -> f64 {
        match (self.coherent_efficiency, self.lo_mode) {
            (Some(e), _) => e,
            (None, LoMode::Tlo) => 1.0,
            (None, LoMode::Llo) => eta_llo(self.aperture_radius, self.lo_spot_radius.unwrap_or(self.aperture_radius)),
        }
    }

    pub fn background_photons(&self, sky: SkyRadiance, wavelength: f64) -> f64 {
        background_photons(sky, self.filter, self.time_window, self.field_of_view, self.aperture_radius, wavelength)
    }
}

/// Source of the receiver's extra noise photons n̄_ex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExtraNoise {
    Fixed { photons: f64 },
    /// From the receiver's detector electronics and LO mode.
    Detector,
}

impl Default for ExtraNoise {
    fn default() -> Self {
        ExtraNoise::Fixed { photons: 0.0 }
    }
}

/// Model choices for [`assemble_budget`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetOptions {
    pub regime_policy: RegimePolicy,
    pub long_term_model: LongTermModel,
    #[serde(rename = "extinction_per_m")]
    pub extinction: f64,
    #[serde(rename = "station_altitude_m")]
    pub station_altitude: f64,
    pub sky: SkyRadiance,
    /// Overrides the background photon number computed from `sky`.
    pub background_photons: Option<f64>,
    pub extra_noise: ExtraNoise,
    #[serde(skip)]
    pub quadrature: QuadratureSpec,
}

impl Default for BudgetOptions {
    fn default() -> Self {
        Self {
            regime_policy: RegimePolicy::Auto,
            long_term_model: LongTermModel::Analytic,
            extinction: DEFAULT_EXTINCTION,
            station_altitude: DEFAULT_STATION_ALTITUDE,
            sky: SkyRadiance::NIGHT,
            background_photons: None,
            extra_noise: ExtraNoise::default(),
            quadrature: QuadratureSpec::default(),
        }
    }
}

impl BudgetOptions {
    pub fn with_extra_photons(mut self, photons: f64) -> Self {
        self.extra_noise = ExtraNoise::Fixed { photons };
        self
    }

    pub fn with_sky(mut self, sky: SkyRadiance) -> Self {
        self.sky = sky;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.extinction >= 0.0) {
            return Err(Error::param("extinction", format!("must be >= 0, got {}", self.extinction)));
        }
        if !(self.station_altitude >= 0.0) {
            return Err(Error::param("station_altitude", format!("must be >= 0, got {}", self.station_altitude)));
        }
        if let Some(n) = self.background_photons {
            if !(n >= 0.0) {
                return Err(Error::param("background_photons", format!("must be >= 0, got {n}")));
            }
        }
        if let ExtraNoise::Fixed { photons } = self.extra_noise {
            if !(photons >= 0.0) {
                return Err(Error::param("extra_photons", format!("must be >= 0, got {photons}")));
            }
        }
        if let LongTermModel::HuygensFresnel { normalization_radius } = self.long_term_model {
            if !(normalization_radius > 0.0) {
                return Err(Error::param("normalization_radius", "must be > 0"));
            }
        }
        self.quadrature.validate()
    }
}

/// Factored transmissivity and noise of a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    #[serde(rename = "distance_m")]
    pub distance: f64,
    pub rytov_variance: f64,
    pub regime: Regime,
    #[serde(rename = "long_term_waist_m")]
    pub long_term_waist: f64,
    pub eta_lt: f64,
    pub eta_atm: f64,
    pub eta_eff: f64,
    pub eta_cd: f64,
    pub eta: f64,
    pub nbar_background: f64,
    pub nbar_extra: f64,
    pub nbar: f64,
    /// Eve's input noise `n̄/(1 − η)`.
    pub nbar_eve: f64,
}

impl LinkBudget {
    pub fn loss_db(&self) -> f64 {
        crate::loss_db(self.eta)
    }

    pub fn channel_point(&self) -> Result<crate::capacity::ChannelPoint> {
        crate::capacity::ChannelPoint::new(self.eta, self.nbar)
    }
}

/// Channel-side inputs to [`compose_budget`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ChannelFactors {
    pub distance: f64,
    pub rytov_variance: f64,
    pub regime: Regime,
    pub long_term_waist: f64,
    pub eta_lt: f64,
    pub eta_atm: f64,
}

/// Multiplies the factors, adds receiver noise and checks η < 1.
pub(crate) fn compose_budget(
    channel: ChannelFactors,
    receiver: &ReceiverConfig,
    wavelength: f64,
    options: &BudgetOptions,
) -> Result<LinkBudget> {
    let eta_eff = receiver.efficiency;
    let eta_cd = receiver.eta_cd();
    let eta = channel.eta_lt * eta_eff * eta_cd * channel.eta_atm;
    let nbar_background = options
        .background_photons
        .unwrap_or_else(|| receiver.background_photons(options.sky, wavelength));
    let nbar_extra = match options.extra_noise {
        ExtraNoise::Fixed { photons } => photons,
        ExtraNoise::Detector => extra_photons(&receiver.detector, eta, wavelength, receiver.lo_mode)?,
    };
    let nbar = eta_eff * nbar_background + nbar_extra;
    if eta >= 1.0 {
        return Err(Error::Divergence {
            quantity: "Eve's input noise",
            reason: format!("n̄/(1 − η) is unbounded at η = {eta}"),
        });
    }
    Ok(LinkBudget {
        distance: channel.distance,
        rytov_variance: channel.rytov_variance,
        regime: channel.regime,
        long_term_waist: channel.long_term_waist,
        eta_lt: channel.eta_lt,
        eta_atm: channel.eta_atm,
        eta_eff,
        eta_cd,
        eta,
        nbar_background,
        nbar_extra,
        nbar,
        nbar_eve: nbar / (1.0 - eta),
    })
}

/// Link budget of a horizontal path of length `z` at the station altitude.
pub fn assemble_budget(
    beam: &BeamGeometry,
    receiver: &ReceiverConfig,
    profile: &TurbulenceProfile,
    z: f64,
    options: &BudgetOptions,
) -> Result<LinkBudget> {
    beam.validate()?;
    receiver.validate()?;
    profile.validate()?;
    options.validate()?;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::param("distance", format!("must be > 0, got {z}")));
    }
    let k = beam.wave_number();
    let cn2 = profile.cn2_at(options.station_altitude);
    let sigma2 = rytov_plane(cn2, k, z);
    let zi = coherence_length_zi(cn2, k, profile.inner_scale);
    let regime = options.regime_policy.select(z, zi);
    let w_lt = long_term_waist(beam, z, sigma2, profile.inner_scale, regime);
    let eta_lt = options.long_term_model.transmissivity(
        beam,
        z,
        sigma2,
        profile.inner_scale,
        regime,
        receiver.aperture_radius,
        &options.quadrature,
    )?;
    let channel = ChannelFactors {
        distance: z,
        rytov_variance: sigma2,
        regime,
        long_term_waist: w_lt,
        eta_lt,
        eta_atm: eta_atmospheric(options.extinction, options.station_altitude, z),
    };
    compose_budget(channel, receiver, beam.wavelength, options)
}
