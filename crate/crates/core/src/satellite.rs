//! Satellite downlinks: slant geometry, refraction ray tracing through a
//! layered atmosphere and end-to-end budgets and key rates.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::atmosphere::{rytov_slant, scintillation_from_rytov, TurbulenceProfile, TurbulenceStrength};
use crate::beam::{long_term_waist, BeamGeometry, Regime};
use crate::channel::{
    compose_budget, eta_atmospheric_slant, BudgetOptions, ChannelFactors, LinkBudget, ReceiverConfig, SampledPath,
    StraightSlant,
};
use crate::cvqkd::{composable_rate, ComposableRate, ProtocolParams};
use crate::numerics::{integrate_finite, QuadratureSpec};
use crate::{Error, Result};

/// Mean Earth radius, m.
pub const EARTH_RADIUS: f64 = 6.37e6;

const DEFAULT_TABLE: &str = include_str!("../data/standard_atmosphere_800nm.json");

/// Sub-intervals per layer when sampling the altitude curve.
const SAMPLES_PER_LAYER: usize = 128;

/// Satellite at altitude `altitude` seen from a station at
/// `station_altitude` under zenith angle `zenith`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteGeometry {
    #[serde(rename = "altitude_m")]
    pub altitude: f64,
    #[serde(rename = "station_altitude_m", default = "default_station")]
    pub station_altitude: f64,
    #[serde(rename = "zenith_rad")]
    pub zenith: f64,
    #[serde(rename = "earth_radius_m", default = "default_earth")]
    pub earth_radius: f64,
}

fn default_station() -> f64 {
    crate::channel::DEFAULT_STATION_ALTITUDE
}

fn default_earth() -> f64 {
    EARTH_RADIUS
}

impl SatelliteGeometry {
    pub fn new(altitude: f64, zenith: f64) -> Self {
        Self {
            altitude,
            station_altitude: default_station(),
            zenith,
            earth_radius: EARTH_RADIUS,
        }
    }

    pub fn with_station_altitude(mut self, h0: f64) -> Self {
        self.station_altitude = h0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.station_altitude >= 0.0 && self.altitude > self.station_altitude) {
            return Err(Error::param(
                "altitude",
                format!("need h ({}) > h0 ({}) >= 0", self.altitude, self.station_altitude),
            ));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.zenith) {
            return Err(Error::param("zenith", format!("need 0 <= θ <= π/2, got {}", self.zenith)));
        }
        if !(self.earth_radius > 0.0) {
            return Err(Error::param("earth_radius", "must be > 0"));
        }
        Ok(())
    }

    /// Straight-line distance from the station to the satellite.
    pub fn slant_range(&self) -> f64 {
        let rs = self.earth_radius + self.altitude;
        let r0 = self.earth_radius + self.station_altitude;
        let c = self.zenith.cos();
        (rs * rs + r0 * r0 * (c * c - 1.0)).sqrt() - r0 * c
    }
}

/// One spherical shell with a linear refractive-index profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtmosphereLayer {
    #[serde(rename = "top_altitude_m")]
    pub top_altitude: f64,
    #[serde(rename = "refractive_index_base")]
    pub index_base: f64,
    #[serde(rename = "refractive_index_top")]
    pub index_top: f64,
}

/// Spherically stratified refractive-index table. The first layer starts at
/// sea level; above the last layer the index is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredAtmosphere {
    pub layers: Vec<AtmosphereLayer>,
}

#[derive(Deserialize)]
struct TableFile {
    layers: Vec<AtmosphereLayer>,
}

impl Default for LayeredAtmosphere {
    /// Ten layers up to 50 km for 800 nm light, from the standard-atmosphere
    /// density profile.
    fn default() -> Self {
        let file: TableFile = serde_json::from_str(DEFAULT_TABLE).expect("bundled layer table parses");
        Self { layers: file.layers }
    }
}

impl LayeredAtmosphere {
    pub fn new(layers: Vec<AtmosphereLayer>) -> Result<Self> {
        let atm = Self { layers };
        atm.validate()?;
        Ok(atm)
    }

    /// A table in which every index is 1.
    pub fn vacuum() -> Self {
        Self { layers: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        let mut base = 0.0;
        for (i, layer) in self.layers.iter().enumerate() {
            if !(layer.top_altitude > base) {
                return Err(Error::param(
                    "layers",
                    format!("layer {i}: top altitude {} is not above {base}", layer.top_altitude),
                ));
            }
            if !(layer.index_base >= 1.0 && layer.index_top >= 1.0) {
                return Err(Error::param("layers", format!("layer {i}: refractive indices must be >= 1")));
            }
            base = layer.top_altitude;
        }
        Ok(())
    }

    fn base_of(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.layers[i - 1].top_altitude
        }
    }

    /// Refractive index at altitude `h`.
    pub fn index_at(&self, h: f64) -> f64 {
        let i = self.layers.partition_point(|l| l.top_altitude <= h);
        match self.layers.get(i) {
            None => 1.0,
            Some(l) => {
                let base = self.base_of(i);
                l.index_base + (l.index_top - l.index_base) * (h - base) / (l.top_altitude - base)
            }
        }
    }
}

/// Result of tracing a ray from the station to the satellite altitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ElongatedPath {
    /// Arc length of the bent ray.
    pub optical_length: f64,
    pub slant_range: f64,
    /// `optical_length / slant_range`.
    pub elongation: f64,
    /// Altitude against arc length along the ray.
    pub altitude_curve: SampledPath,
}

/// Traces a ray launched at the apparent zenith angle through the layers.
///
/// In a spherically stratified medium `n(r)·r·sin ζ` is constant along the
/// ray, so the arc length through a shell is `∫ dr / √(1 − (K/(n r))²)`.
/// The substitution `r = r_a + u²` removes the square-root singularity of a
/// horizontal launch.
pub fn elongated_path(g: &SatelliteGeometry, atm: &LayeredAtmosphere, spec: &QuadratureSpec) -> Result<ElongatedPath> {
    g.validate()?;
    atm.validate()?;
    let re = g.earth_radius;
    let h0 = g.station_altitude;
    let n_station = atm.index_at(h0);
    let sin_z = g.zenith.sin();
    let invariant = n_station * (re + h0) * sin_z;
    // `gap` tracks n·r − K at the current radius. It vanishes at a grazing
    // launch, so it is carried forward analytically instead of recomputed.
    let mut gap = n_station * (re + h0) * g.zenith.cos().powi(2) / (1.0 + sin_z);

    // Altitude breakpoints: station, layer tops in between, satellite.
    let mut edges = vec![h0];
    edges.extend(atm.layers.iter().map(|l| l.top_altitude).filter(|&t| t > h0 && t < g.altitude));
    edges.push(g.altitude);

    let mut s_samples = vec![0.0];
    let mut h_samples = vec![h0];
    let mut s_total = 0.0;
    let mut n_prev = n_station;
    for (seg, w) in edges.windows(2).enumerate() {
        let (ha, hb) = (w[0], w[1]);
        let layer = atm.layers.partition_point(|l| l.top_altitude <= ha);
        let (n_a, n_b) = match atm.layers.get(layer) {
            Some(l) => {
                // Evaluate at the ends of this layer without crossing into the next.
                let base = atm.base_of(layer);
                let lerp = |h: f64| l.index_base + (l.index_top - l.index_base) * (h - base) / (l.top_altitude - base);
                (lerp(ha), lerp(hb))
            }
            None => (1.0, 1.0),
        };
        let r_a = re + ha;
        gap += (n_a - n_prev) * r_a;
        let slope = (n_b - n_a) / (hb - ha);
        // n·r − K at r = r_a + u².
        let q = |u2: f64| gap + u2 * (n_a + slope * (r_a + u2));
        let span = (hb - ha).sqrt();
        if gap < 0.0 || q(span * span) < 0.0 {
            return Err(Error::Trace {
                layer: seg,
                reason: format!("ray turns back between {ha:.1} m and {hb:.1} m"),
            });
        }
        let arc = |u_lo: f64, u_hi: f64| -> Result<f64> {
            if slope == 0.0 {
                // Straight in a homogeneous shell: s = √(r² − (K/n)²).
                let s_of = |u: f64| (q(u * u) / n_a * (r_a + u * u + invariant / n_a)).max(0.0).sqrt();
                Ok(s_of(u_hi) - s_of(u_lo))
            } else {
                integrate_finite(
                    |u: f64| {
                        let u2 = u * u;
                        let qu = q(u2).max(0.0);
                        let nr = (n_a + slope * u2) * (r_a + u2);
                        2.0 * u * nr / (qu * (qu + 2.0 * invariant)).sqrt().max(f64::MIN_POSITIVE)
                    },
                    u_lo,
                    u_hi,
                    spec,
                )
            }
        };
        // Sample uniformly in u = √(r − r_a) so a grazing start is resolved.
        let mut u_prev = 0.0;
        for j in 1..=SAMPLES_PER_LAYER {
            let u = span * j as f64 / SAMPLES_PER_LAYER as f64;
            s_total += arc(u_prev, u)?;
            s_samples.push(s_total);
            h_samples.push(if j == SAMPLES_PER_LAYER { hb } else { ha + u * u });
            u_prev = u;
        }
        gap = q(span * span);
        n_prev = n_b;
    }
    let slant_range = g.slant_range();
    Ok(ElongatedPath {
        optical_length: s_total,
        slant_range,
        elongation: s_total / slant_range,
        altitude_curve: SampledPath::new(s_samples, h_samples)?,
    })
}

/// How refraction enters the extinction integral.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElongationMode {
    /// Extinction along the ray traced through the layer table.
    #[default]
    Traced,
    /// Straight geometric path.
    None,
    /// Straight path with the optical depth scaled by a fixed factor.
    Factor { factor: f64 },
}

/// Options for [`downlink_budget`]. The station altitude of
/// `budget` is ignored in favour of the geometry's.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DownlinkOptions {
    pub budget: BudgetOptions,
    pub elongation: ElongationMode,
}

/// Downlink budget plus slant-path diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DownlinkBudget {
    pub link: LinkBudget,
    #[serde(rename = "slant_range_m")]
    pub slant_range: f64,
    #[serde(rename = "optical_length_m")]
    pub optical_length: f64,
    pub elongation: f64,
    pub scintillation_index: f64,
    pub strength: TurbulenceStrength,
}

/// End-to-end budget of a satellite-to-ground link.
///
/// Turbulent spreading uses the slant Rytov variance in the within-z_i waist
/// formula, with the beam parameters evaluated at the geometric slant range.
pub fn downlink_budget(
    g: &SatelliteGeometry,
    atm: &LayeredAtmosphere,
    beam: &BeamGeometry,
    receiver: &ReceiverConfig,
    profile: &TurbulenceProfile,
    options: &DownlinkOptions,
) -> Result<DownlinkBudget> {
    g.validate()?;
    beam.validate()?;
    receiver.validate()?;
    profile.validate()?;
    options.budget.validate()?;
    if g.zenith >= FRAC_PI_2 {
        return Err(Error::domain("zenith angle", "a downlink needs θ < π/2"));
    }
    let spec = &options.budget.quadrature;
    let z = g.slant_range();
    let k = beam.wave_number();
    let sigma2 = rytov_slant(profile, k, g.zenith, g.station_altitude, g.altitude, spec)?;
    let scint = scintillation_from_rytov(sigma2);
    let regime = Regime::WithinZi;
    let w_lt = long_term_waist(beam, z, sigma2, profile.inner_scale, regime);
    let eta_lt = options.budget.long_term_model.transmissivity(
        beam,
        z,
        sigma2,
        profile.inner_scale,
        regime,
        receiver.aperture_radius,
        spec,
    )?;
    let alpha0 = options.budget.extinction;
    let straight = StraightSlant {
        h0: g.station_altitude,
        theta: g.zenith,
        length: z,
        earth_radius: g.earth_radius,
    };
    let (eta_atm, optical_length) = match options.elongation {
        ElongationMode::None => (eta_atmospheric_slant(alpha0, &straight, spec)?, z),
        ElongationMode::Factor { factor } => {
            if !(factor >= 1.0) {
                return Err(Error::param("elongation factor", format!("must be >= 1, got {factor}")));
            }
            (eta_atmospheric_slant(alpha0, &straight, spec)?.powf(factor), factor * z)
        }
        ElongationMode::Traced => {
            let path = elongated_path(g, atm, spec)?;
            (eta_atmospheric_slant(alpha0, &path.altitude_curve, spec)?, path.optical_length)
        }
    };
    let channel = ChannelFactors {
        distance: z,
        rytov_variance: sigma2,
        regime,
        long_term_waist: w_lt,
        eta_lt,
        eta_atm,
    };
    let link = compose_budget(channel, receiver, beam.wavelength, &options.budget)?;
    Ok(DownlinkBudget {
        link,
        slant_range: z,
        optical_length,
        elongation: optical_length / z,
        scintillation_index: scint,
        strength: TurbulenceStrength::classify(scint),
    })
}

/// Key rate of a downlink, per use and per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DownlinkKeyRate {
    pub budget: DownlinkBudget,
    pub rate: ComposableRate,
    pub bits_per_second: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn downlink_key_rate(
    g: &SatelliteGeometry,
    atm: &LayeredAtmosphere,
    beam: &BeamGeometry,
    receiver: &ReceiverConfig,
    profile: &TurbulenceProfile,
    options: &DownlinkOptions,
    protocol: &ProtocolParams,
    clock_hz: f64,
) -> Result<DownlinkKeyRate> {
    let budget = downlink_budget(g, atm, beam, receiver, profile, options)?;
    let rate = composable_rate(protocol, budget.link.eta, budget.link.nbar)?;
    Ok(DownlinkKeyRate {
        budget,
        rate,
        bits_per_second: rate.bits_per_second(clock_hz),
    })
}
