//! Scenario files: one link, its transmitter, receiver and turbulence, plus
//! optional protocol parameters and sweep grids.

use std::path::Path;

use fsoq_core::{
    BeamGeometry, BudgetOptions, DownlinkOptions, ElongationMode, LayeredAtmosphere, ProtocolParams,
    QuadratureSpec, ReceiverConfig, SatelliteGeometry, TurbulenceProfile,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub beam: BeamSpec,
    pub receiver: ReceiverConfig,
    pub profile: ProfileSpec,
    pub link: LinkSpec,
    #[serde(default)]
    pub options: BudgetOptions,
    #[serde(default)]
    pub protocol: Option<ProtocolParams>,
    /// Symbol rate used to convert bits/use into bits/s.
    #[serde(default)]
    pub clock_hz: Option<f64>,
    #[serde(default)]
    pub estimation: Option<EstimationSpec>,
    #[serde(default)]
    pub sweep: SweepGrids,
}

/// Transmitter beam. Omit `curvature_radius_m` for a collimated beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    pub spot_radius_m: f64,
    pub wavelength_nm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature_radius_m: Option<f64>,
}

impl BeamSpec {
    pub fn geometry(&self) -> BeamGeometry {
        let wavelength = self.wavelength_nm * 1e-9;
        match self.curvature_radius_m {
            Some(r) => BeamGeometry::focused(self.spot_radius_m, r, wavelength),
            None => BeamGeometry::collimated(self.spot_radius_m, wavelength),
        }
    }
}

/// Turbulence description: a named preset or an explicit Cn² model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// Constant Cn² = 1.28e-14 m^-2/3.
    Night,
    /// Constant Cn² = 2.06e-14 m^-2/3.
    Day,
    /// Hufnagel-Valley, v = 21 m/s, A = 1.7e-14 m^-2/3.
    HvNight,
    /// Hufnagel-Valley, v = 57 m/s, A = 2.75e-14 m^-2/3.
    HvDay,
    Constant {
        cn2_m_23: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner_scale_m: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        outer_scale_m: Option<f64>,
    },
    HufnagelValley {
        wind_speed_m_s: f64,
        ground_cn2_m_23: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner_scale_m: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        outer_scale_m: Option<f64>,
    },
}

impl ProfileSpec {
    pub fn profile(&self) -> TurbulenceProfile {
        let with = |p: TurbulenceProfile, inner: Option<f64>, outer: Option<f64>| {
            p.with_scales(inner.unwrap_or(p.inner_scale), outer.unwrap_or(p.outer_scale))
        };
        match *self {
            ProfileSpec::Night => TurbulenceProfile::night(),
            ProfileSpec::Day => TurbulenceProfile::day(),
            ProfileSpec::HvNight => TurbulenceProfile::hv_night(),
            ProfileSpec::HvDay => TurbulenceProfile::hv_day(),
            ProfileSpec::Constant { cn2_m_23, inner_scale_m, outer_scale_m } => {
                with(TurbulenceProfile::constant(cn2_m_23), inner_scale_m, outer_scale_m)
            }
            ProfileSpec::HufnagelValley { wind_speed_m_s, ground_cn2_m_23, inner_scale_m, outer_scale_m } => with(
                TurbulenceProfile::hufnagel_valley(wind_speed_m_s, ground_cn2_m_23),
                inner_scale_m,
                outer_scale_m,
            ),
        }
    }
}

/// Exactly one link kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LinkSpec {
    /// Ground-level link of fixed length at the station altitude in `options`.
    Horizontal { distance_m: f64 },
    /// Satellite-to-ground downlink.
    Satellite {
        altitude_m: f64,
        zenith_rad: f64,
        #[serde(default = "default_station_altitude")]
        station_altitude_m: f64,
        #[serde(default)]
        elongation: ElongationMode,
        /// Refractive-index layers; the bundled standard atmosphere if absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        atmosphere: Option<LayeredAtmosphere>,
    },
}

fn default_station_altitude() -> f64 {
    fsoq_core::channel::DEFAULT_STATION_ALTITUDE
}

impl LinkSpec {
    /// Satellite geometry, if this is a downlink.
    pub fn geometry(&self) -> Option<SatelliteGeometry> {
        match *self {
            LinkSpec::Satellite { altitude_m, zenith_rad, station_altitude_m, .. } => {
                Some(SatelliteGeometry::new(altitude_m, zenith_rad).with_station_altitude(station_altitude_m))
            }
            LinkSpec::Horizontal { .. } => None,
        }
    }
}

/// Monte-Carlo check of the channel estimators, driven by `--seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSpec {
    pub trials: u64,
    pub samples: u64,
}

/// Optional grids, one per sweepable quantity. Each must be nonempty and
/// strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrids {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altitude_m: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zenith_rad: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture_radius_m: Option<Vec<f64>>,
}

fn json_error(path: String, e: serde_json::Error) -> CliError {
    CliError::Schema {
        path,
        line: Some(e.line()),
        column: Some(e.column()),
        message: e.to_string(),
    }
}

/// A sweepable scenario field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    #[value(name = "distance_m", alias = "z")]
    Distance,
    #[value(name = "altitude_m", alias = "h")]
    Altitude,
    #[value(name = "zenith_rad", alias = "theta")]
    Zenith,
    #[value(name = "block_size", alias = "n")]
    BlockSize,
    #[value(name = "aperture_radius_m", alias = "a_r")]
    Aperture,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Distance => "distance_m",
            Axis::Altitude => "altitude_m",
            Axis::Zenith => "zenith_rad",
            Axis::BlockSize => "block_size",
            Axis::Aperture => "aperture_radius_m",
        }
    }
}

impl Scenario {
    /// Reads, parses and validates a scenario file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(&mut *de).map_err(|e| {
            let path = match e.path().to_string() {
                p if p == "?" => "(document)".to_string(),
                p => p,
            };
            json_error(path, e.into_inner())
        })?;
        de.end().map_err(|e| json_error(".".into(), e))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::schema(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let field = |path: &'static str| move |e: fsoq_core::Error| CliError::schema(path, e.to_string());
        self.beam.geometry().validate().map_err(field("beam"))?;
        self.receiver.validate().map_err(field("receiver"))?;
        self.profile.profile().validate().map_err(field("profile"))?;
        self.options.validate().map_err(field("options"))?;
        if let Some(p) = &self.protocol {
            p.validate().map_err(field("protocol"))?;
        }
        match &self.link {
            LinkSpec::Horizontal { distance_m } => {
                if !(*distance_m > 0.0 && distance_m.is_finite()) {
                    return Err(CliError::schema("link.distance_m", format!("must be > 0, got {distance_m}")));
                }
            }
            LinkSpec::Satellite { elongation, atmosphere, .. } => {
                let geometry = self.link.geometry().expect("satellite link");
                if geometry.zenith >= std::f64::consts::FRAC_PI_2 {
                    return Err(CliError::schema("link.zenith_rad", "a downlink needs θ < π/2"));
                }
                geometry.validate().map_err(field("link"))?;
                if let ElongationMode::Factor { factor } = elongation {
                    if !(*factor >= 1.0) {
                        return Err(CliError::schema("link.elongation.factor", format!("must be >= 1, got {factor}")));
                    }
                }
                if let Some(atm) = atmosphere {
                    atm.validate().map_err(field("link.atmosphere"))?;
                }
            }
        }
        if let Some(c) = self.clock_hz {
            if !(c > 0.0 && c.is_finite()) {
                return Err(CliError::schema("clock_hz", format!("must be > 0, got {c}")));
            }
        }
        if let Some(e) = self.estimation {
            if e.trials < 2 || e.samples < 2 {
                return Err(CliError::schema("estimation", "need at least 2 trials of at least 2 samples"));
            }
        }
        self.validate_sweep()
    }

    fn validate_sweep(&self) -> Result<(), CliError> {
        let grids: [(Axis, Option<Vec<f64>>); 5] = [
            (Axis::Distance, self.sweep.distance_m.clone()),
            (Axis::Altitude, self.sweep.altitude_m.clone()),
            (Axis::Zenith, self.sweep.zenith_rad.clone()),
            (Axis::BlockSize, self.sweep.block_size.as_ref().map(|g| g.iter().map(|&n| n as f64).collect())),
            (Axis::Aperture, self.sweep.aperture_radius_m.clone()),
        ];
        for (axis, grid) in grids {
            let Some(grid) = grid else { continue };
            let path = format!("sweep.{}", axis.name());
            if grid.is_empty() {
                return Err(CliError::schema(path, "grid is empty"));
            }
            if !grid.windows(2).all(|w| w[0] < w[1]) {
                return Err(CliError::schema(path, "grid must be strictly increasing"));
            }
            if !grid.iter().all(|v| v.is_finite()) {
                return Err(CliError::schema(path, "grid values must be finite"));
            }
            let satellite = matches!(self.link, LinkSpec::Satellite { .. });
            let fits = match axis {
                Axis::Distance => !satellite,
                Axis::Altitude | Axis::Zenith => satellite,
                Axis::BlockSize => self.protocol.is_some(),
                Axis::Aperture => true,
            };
            if !fits {
                let reason = match axis {
                    Axis::Distance => "only applies to horizontal links",
                    Axis::BlockSize => "requires a `protocol` section",
                    _ => "only applies to satellite links",
                };
                return Err(CliError::schema(path, reason));
            }
        }
        Ok(())
    }

    /// The grid declared for `axis`, as floats.
    pub fn grid(&self, axis: Axis) -> Option<Vec<f64>> {
        match axis {
            Axis::Distance => self.sweep.distance_m.clone(),
            Axis::Altitude => self.sweep.altitude_m.clone(),
            Axis::Zenith => self.sweep.zenith_rad.clone(),
            Axis::BlockSize => self.sweep.block_size.as_ref().map(|g| g.iter().map(|&n| n as f64).collect()),
            Axis::Aperture => self.sweep.aperture_radius_m.clone(),
        }
    }

    /// A copy with `axis` set to `value`.
    pub fn with_axis(&self, axis: Axis, value: f64) -> Scenario {
        let mut s = self.clone();
        match (axis, &mut s.link) {
            (Axis::Distance, LinkSpec::Horizontal { distance_m }) => *distance_m = value,
            (Axis::Altitude, LinkSpec::Satellite { altitude_m, .. }) => *altitude_m = value,
            (Axis::Zenith, LinkSpec::Satellite { zenith_rad, .. }) => *zenith_rad = value,
            (Axis::BlockSize, _) => {
                if let Some(p) = s.protocol.as_mut() {
                    p.block_size = value as u64;
                }
            }
            (Axis::Aperture, _) => s.receiver.aperture_radius = value,
            _ => {}
        }
        s
    }

    /// Budget options with the quadrature tolerance applied.
    pub fn budget_options(&self, quadrature: QuadratureSpec) -> BudgetOptions {
        BudgetOptions {
            quadrature,
            ..self.options
        }
    }

    pub fn downlink_options(&self, quadrature: QuadratureSpec, elongation: ElongationMode) -> DownlinkOptions {
        DownlinkOptions {
            budget: self.budget_options(quadrature),
            elongation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"schema_version":1,
        "beam":{"spot_radius_m":0.05,"wavelength_nm":800},
        "receiver":{"aperture_radius_m":0.05,"efficiency":1},
        "profile":{"kind":"night"},
        "link":{"kind":"horizontal","distance_m":1e4}"#;

    fn scenario(extra: &str) -> Result<Scenario, CliError> {
        Scenario::parse(&format!("{BASE}{extra}}}"))
    }

    fn schema_path(r: Result<Scenario, CliError>) -> String {
        match r {
            Err(CliError::Schema { path, .. }) => path,
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_scenario_parses() {
        let s = scenario("").unwrap();
        assert!(s.protocol.is_none());
        assert_eq!(s.grid(Axis::Distance), None);
        assert!((s.beam.geometry().wave_number() - 2.0 * std::f64::consts::PI / 800e-9).abs() < 1e-3);
    }

    #[test]
    fn presets_match_named_profiles() {
        assert_eq!(ProfileSpec::Night.profile(), TurbulenceProfile::night());
        assert_eq!(ProfileSpec::HvNight.profile(), TurbulenceProfile::hv_night());
        let p = ProfileSpec::Constant { cn2_m_23: 1e-15, inner_scale_m: Some(2e-3), outer_scale_m: None }.profile();
        assert_eq!(p.inner_scale, 2e-3);
        assert_eq!(p.outer_scale, TurbulenceProfile::constant(1e-15).outer_scale);
        assert_eq!(p.cn2_at(500.0), 1e-15);
    }

    #[test]
    fn invariants_are_schema_errors() {
        assert_eq!(schema_path(scenario(r#","sweep":{"distance_m":[]}"#)), "sweep.distance_m");
        assert_eq!(schema_path(scenario(r#","sweep":{"distance_m":[1,1]}"#)), "sweep.distance_m");
        assert_eq!(schema_path(scenario(r#","sweep":{"block_size":[10]}"#)), "sweep.block_size");
        assert_eq!(schema_path(scenario(r#","estimation":{"trials":1,"samples":10}"#)), "estimation");
        assert_eq!(schema_path(scenario(r#","colour":"red""#)), "colour");
    }

    #[test]
    fn satellite_links_reject_horizon_and_distance_axis() {
        let sat = r#"{"schema_version":1,
            "beam":{"spot_radius_m":0.2,"wavelength_nm":800},
            "receiver":{"aperture_radius_m":0.7,"efficiency":1},
            "profile":{"kind":"hv_night"},
            "link":{"kind":"satellite","altitude_m":5e5,"zenith_rad":ZEN}SWEEP}"#;
        let ok = Scenario::parse(&sat.replace("ZEN", "0.5").replace("SWEEP", "")).unwrap();
        assert_eq!(ok.link.geometry().unwrap().station_altitude, 30.0);
        let horizon = sat.replace("ZEN", "1.5707963267948966").replace("SWEEP", "");
        assert!(schema_path(Scenario::parse(&horizon)).starts_with("link"));
        let axis = sat.replace("ZEN", "0.5").replace("SWEEP", r#","sweep":{"distance_m":[1e4]}"#);
        assert_eq!(schema_path(Scenario::parse(&axis)), "sweep.distance_m");
    }

    #[test]
    fn with_axis_edits_only_the_swept_field() {
        let s = scenario(r#","protocol":{}"#).unwrap();
        let t = s.with_axis(Axis::Distance, 2e3);
        assert_eq!(t.link, LinkSpec::Horizontal { distance_m: 2e3 });
        assert_eq!(t.receiver, s.receiver);
        assert_eq!(s.with_axis(Axis::BlockSize, 1e7).protocol.unwrap().block_size, 10_000_000);
        assert_eq!(s.with_axis(Axis::Aperture, 0.3).receiver.aperture_radius, 0.3);
        // Axes that do not apply to the link kind are ignored.
        assert_eq!(s.with_axis(Axis::Altitude, 1e5).link, s.link);
    }
}
