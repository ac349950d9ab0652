//! Built-in presets that regenerate the data series behind the reference
//! figures.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use fsoq_core::atmosphere::{coherence_length_zi, rytov_plane, rytov_slant, scintillation_from_rytov};
use fsoq_core::beam::{long_term_waist, wander_pointing, wander_turbulence, DEFAULT_JITTER};
use fsoq_core::capacity::{plob_pure_loss, rci_lower_bound, thermal_upper_bound};
use fsoq_core::channel::{assemble_budget, eta_longterm_analytic, eta_longterm_numerical, ETA_CD_WORKING};
use fsoq_core::cvqkd::composable_rate;
use fsoq_core::satellite::{downlink_budget, downlink_key_rate};
use fsoq_core::{
    BeamGeometry, BudgetOptions, ChannelPoint, DownlinkOptions, ElongationMode, LayeredAtmosphere, LinkBudget,
    ProtocolParams, QuadratureSpec, ReceiverConfig, Regime, RegimePolicy, SatelliteGeometry, SkyRadiance,
    TurbulenceProfile,
};
use rayon::prelude::*;

use crate::error::CliError;
use crate::sweep::regime_name;

const LAMBDA: f64 = 800e-9;
const MASK_ANGLE: f64 = 4.0 * PI / 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

/// A named CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&'static str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn block_grid(lo_exp: i32, hi_exp: i32, per_decade: i32) -> Vec<u64> {
    (lo_exp * per_decade..=hi_exp * per_decade)
        .map(|i| 10f64.powf(i as f64 / per_decade as f64).round() as u64)
        .collect()
}

/// Builds the tables of a figure. Grid points run in parallel on the
/// current rayon pool; rows keep grid order.
pub fn build(fig: Figure, spec: &QuadratureSpec) -> Result<Vec<Table>, CliError> {
    match fig {
        Figure::Fig1 => fig1(spec),
        Figure::Fig2 => fig2(spec),
        Figure::Fig3 => fig3(spec),
        Figure::Fig4 => fig4(spec),
        Figure::Fig5 => fig5(spec),
        Figure::Fig6 => fig6(spec),
    }
}

fn ground_beam() -> BeamGeometry {
    BeamGeometry::collimated(0.05, LAMBDA)
}

/// Long-term waist against centroid wander, night, w0 = 5 cm.
fn fig1(spec: &QuadratureSpec) -> Result<Vec<Table>, CliError> {
    let beam = ground_beam();
    let profile = TurbulenceProfile::night();
    let cn2 = profile.cn2_at(0.0);
    let k = beam.wave_number();
    let zi = coherence_length_zi(cn2, k, profile.inner_scale);
    let rows = log_grid(1.4e3, 200e3, 50)
        .into_par_iter()
        .map(|z| {
            let sigma2 = rytov_plane(cn2, k, z);
            let regime = RegimePolicy::Auto.select(z, zi);
            let w_lt = long_term_waist(&beam, z, sigma2, profile.inner_scale, regime);
            let tb = wander_turbulence(&beam, z, cn2, profile.outer_scale, sigma2, spec)?;
            Ok(vec![
                num(z),
                num(sigma2),
                regime_name(regime).to_string(),
                num(wander_pointing(z, DEFAULT_JITTER)),
                num(tb),
                num(w_lt * w_lt),
            ])
        })
        .collect::<Result<Vec<_>, fsoq_core::Error>>()?;
    let mut t = Table::new(
        "fig1",
        &["z_m", "rytov_variance", "regime", "sigma_pe2_m2", "sigma_tb2_m2", "w_lt2_m2"],
    );
    t.rows = rows;
    Ok(vec![t])
}

/// Analytic against Huygens-Fresnel long-term transmissivity, a_R = 5 cm.
fn fig2(spec: &QuadratureSpec) -> Result<Vec<Table>, CliError> {
    let beam = ground_beam();
    let profile = TurbulenceProfile::night();
    let cn2 = profile.cn2_at(0.0);
    let k = beam.wave_number();
    let aperture = 0.05;
    let rows = log_grid(1e3, 120e3, 30)
        .into_par_iter()
        .map(|z| {
            let sigma2 = rytov_plane(cn2, k, z);
            let w_lt = long_term_waist(&beam, z, sigma2, profile.inner_scale, Regime::WithinZi);
            let mut row = vec![num(z), num(eta_longterm_analytic(w_lt, aperture))];
            for a_inf in [10.0, 20.0, 50.0, 100.0] {
                row.push(num(eta_longterm_numerical(
                    &beam,
                    z,
                    sigma2,
                    profile.inner_scale,
                    Regime::WithinZi,
                    aperture,
                    a_inf,
                    spec,
                )?));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, fsoq_core::Error>>()?;
    let mut t = Table::new(
        "fig2",
        &["z_m", "analytic", "numerical_10m", "numerical_20m", "numerical_50m", "numerical_100m"],
    );
    t.rows = rows;
    Ok(vec![t])
}

fn bounds_cells(b: &LinkBudget) -> [String; 3] {
    let point = ChannelPoint::new(b.eta, b.nbar);
    [
        num(plob_pure_loss(b.eta)),
        opt(point.clone().ok().and_then(|p| thermal_upper_bound(&p).ok())),
        opt(point.ok().map(|p| rci_lower_bound(&p))),
    ]
}

fn condition(day: bool) -> (&'static str, TurbulenceProfile, SkyRadiance) {
    if day {
        ("day", TurbulenceProfile::day(), SkyRadiance::DAY)
    } else {
        ("night", TurbulenceProfile::night(), SkyRadiance::NIGHT)
    }
}

/// Capacity bounds against distance for three receivers, night and day.
/// Each curve switches waist formula at z_i; the junction is emitted with
/// both branches and flagged.
fn fig3(spec: &QuadratureSpec) -> Result<Vec<Table>, CliError> {
    let beam = ground_beam();
    let panels = [("a", 1.0, 0.0), ("b", 0.5, 0.01), ("c", 0.5, 0.05)];
    let grid = log_grid(1e3, 200e3, 60);
    let mut t = Table::new(
        "fig3",
        &[
            "panel", "condition", "z_m", "branch", "junction", "eta", "nbar", "plob", "thermal_upper", "rci_lower",
        ],
    );
    for (panel, efficiency, extra) in panels {
        for day in [false, true] {
            let (cond, profile, sky) = condition(day);
            let receiver = ReceiverConfig::ideal(0.05).with_efficiency(efficiency);
            let options = BudgetOptions {
                quadrature: *spec,
                ..BudgetOptions::default().with_sky(sky).with_extra_photons(extra)
            };
            let zi = coherence_length_zi(profile.cn2_at(options.station_altitude), beam.wave_number(), profile.inner_scale);
            let mut points: Vec<(f64, RegimePolicy, bool)> =
                grid.iter().map(|&z| (z, RegimePolicy::Auto, false)).collect();
            let at = points.partition_point(|p| p.0 < zi);
            points.insert(at, (zi, RegimePolicy::Auto, true));
            points.insert(at, (zi, RegimePolicy::AlwaysWithinZi, true));
            let rows = points
                .into_par_iter()
                .map(|(z, policy, junction)| {
                    let o = BudgetOptions { regime_policy: policy, ..options };
                    let b = assemble_budget(&beam, &receiver, &profile, z, &o)?;
                    let [plob, ub, lb] = bounds_cells(&b);
                    Ok(vec![
                        panel.to_string(),
                        cond.to_string(),
                        num(z),
                        regime_name(b.regime).to_string(),
                        u8::from(junction).to_string(),
                        num(b.eta),
                        num(b.nbar),
                        plob,
                        ub,
                        lb,
                    ])
                })
                .collect::<Result<Vec<_>, fsoq_core::Error>>()?;
            t.rows.extend(rows);
        }
    }
    Ok(vec![t])
}

fn noisy_receiver(aperture: f64) -> ReceiverConfig {
    ReceiverConfig::ideal(aperture)
        .with_efficiency(0.5)
        .with_coherent_efficiency(ETA_CD_WORKING)
}

/// Composable key rate at 10 km against block size (a_R = 30 cm, night and
/// day) and against aperture (night, several block sizes).
fn fig4(spec: &QuadratureSpec) -> Result<Vec<Table>, CliError> {
    let beam = ground_beam();
    let mut t = Table::new(
        "fig4",
        &["panel", "condition", "block_size", "aperture_radius_m", "eta", "nbar", "key_rate"],
    );
    let budget = |day: bool, aperture: f64| {
        let (_, profile, sky) = condition(day);
        let options = BudgetOptions {
            quadrature: *spec,
            ..BudgetOptions::default().with_sky(sky).with_extra_photons(0.001)
        };
        assemble_budget(&beam, &noisy_receiver(aperture), &profile, 1e4, &options)
    };
    let row = |panel: &str, day: bool, n: u64, aperture: f64, b: &LinkBudget| -> fsoq_core::Result<Vec<String>> {
        let r = composable_rate(&ProtocolParams::default().with_block_size(n), b.eta, b.nbar)?;
        Ok(vec![
            panel.to_string(),
            condition(day).0.to_string(),
            n.to_string(),
            num(aperture),
            num(b.eta),
            num(b.nbar),
            num(r.rate),
        ])
    };
    for day in [false, true] {
        let b = budget(day, 0.3)?;
        for n in block_grid(5, 12, 4) {
            t.rows.push(row("a", day, n, 0.3, &b)?);
        }
    }
    let apertures = lin_grid(0.05, 0.6, 12);
    let budgets = apertures
        .par_iter()
        .map(|&a| budget(false, a))
        .collect::<Result<Vec<_>, fsoq_core::Error>>()?;
    for n in [10_000_000, 100_000_000, 1_000_000_000, 10_000_000_000] {
        for (a, b) in apertures.iter().zip(&budgets) {
            t.rows.push(row("b", false, n, *a, b)?);
        }
    }
    Ok(vec![t])
}

fn satellite_profile(day: bool) -> (&'static str, TurbulenceProfile) {
    if day {
        ("day", TurbulenceProfile::hv_day())
    } else {
        ("night", TurbulenceProfile::hv_night())
    }
}

/// Scintillation index against zenith angle and altitude, and elongated
/// against straight-path loss at the mask angle.
fn fig5(spec: &QuadratureSpec) -> Result<Vec<Table>, CliError> {
    let k = 2.0 * PI / LAMBDA;
    let h0 = fsoq_core::channel::DEFAULT_STATION_ALTITUDE;
    let scint_row = |day: bool, h: f64, theta: f64| -> fsoq_core::Result<Vec<String>> {
        let (cond, profile) = satellite_profile(day);
        let sigma2 = rytov_slant(&profile, k, theta, h0, h, spec)?;
        Ok(vec![cond.to_string(), num(h), num(theta), num(sigma2), num(scintillation_from_rytov(sigma2))])
    };
    let header = ["condition", "altitude_m", "zenith_rad", "rytov_variance", "scintillation_index"];

    let mut angles = lin_grid(0.0, 1.55, 63);
    angles.extend([1.56, 1.565, 1.569, 89.9f64.to_radians()]);
    let mut a = Table::new("fig5a", &header);
    for day in [false, true] {
        let rows = angles
            .par_iter()
            .map(|&theta| scint_row(day, 4e5, theta))
            .collect::<Result<Vec<_>, _>>()?;
        a.rows.extend(rows);
    }

    let altitudes = lin_grid(1e5, 2e6, 39);
    let mut b = Table::new("fig5b", &header);
    for theta in [1.0, MASK_ANGLE] {
        for day in [false, true] {
            let rows = altitudes
                .par_iter()
                .map(|&h| scint_row(day, h, theta))
                .collect::<Result<Vec<_>, _>>()?;
            b.rows.extend(rows);
        }
    }

    let beam = BeamGeometry::collimated(0.2, LAMBDA);
    let receiver = ReceiverConfig::ideal(0.4).with_efficiency(0.5);
    let profile = TurbulenceProfile::hv_night();
    let atm = LayeredAtmosphere::default();
    let traced = DownlinkOptions {
        budget: BudgetOptions { quadrature: *spec, ..BudgetOptions::default() },
        elongation: ElongationMode::Traced,
    };
    let straight = DownlinkOptions { elongation: ElongationMode::None, ..traced };
    let rows = lin_grid(2e5, 2e6, 37)
        .into_par_iter()
        .map(|h| {
            let g = SatelliteGeometry::new(h, MASK_ANGLE);
            let e = downlink_budget(&g, &atm, &beam, &receiver, &profile, &traced)?;
            let s = downlink_budget(&g, &atm, &beam, &receiver, &profile, &straight)?;
            Ok(vec![
                num(h),
                num(e.slant_range),
                num(e.elongation),
                num(s.link.loss_db()),
                num(e.link.loss_db()),
            ])
        })
        .collect::<Result<Vec<_>, fsoq_core::Error>>()?;
    let mut c = Table::new(
        "fig5c",
        &["altitude_m", "slant_range_m", "elongation", "loss_geometric_db", "loss_elongated_db"],
    );
    c.rows = rows;
    Ok(vec![a, b, c])
}

/// Downlink key rates at the mask angle against altitude and block size.
fn fig6(spec: &QuadratureSpec) -> Result<Vec<Table>, CliError> {
    let beam = BeamGeometry::collimated(0.2, LAMBDA);
    let receiver = noisy_receiver(0.7);
    let profile = TurbulenceProfile::hv_night();
    let atm = LayeredAtmosphere::default();
    let mut options = DownlinkOptions {
        budget: BudgetOptions { quadrature: *spec, ..BudgetOptions::default().with_extra_photons(0.001) },
        elongation: ElongationMode::Traced,
    };
    options.budget.background_photons = Some(4.75e-10);
    let clock = 1e8;
    let row = |panel: &str, n: u64, h: f64| -> fsoq_core::Result<Vec<String>> {
        let g = SatelliteGeometry::new(h, MASK_ANGLE);
        let protocol = ProtocolParams::default().with_block_size(n);
        let r = downlink_key_rate(&g, &atm, &beam, &receiver, &profile, &options, &protocol, clock)?;
        Ok(vec![
            panel.to_string(),
            n.to_string(),
            num(h),
            num(r.budget.link.eta),
            num(r.budget.link.loss_db()),
            num(r.budget.link.nbar),
            num(r.rate.rate),
            num(r.bits_per_second),
        ])
    };
    let mut t = Table::new(
        "fig6",
        &["panel", "block_size", "altitude_m", "eta", "loss_db", "nbar", "key_rate", "bits_per_second"],
    );
    let altitudes = lin_grid(2e5, 2e6, 37);
    for n in [1_000_000_000u64, 10_000_000_000, 100_000_000_000, 1_000_000_000_000] {
        let rows = altitudes
            .par_iter()
            .map(|&h| row("a", n, h))
            .collect::<Result<Vec<_>, _>>()?;
        t.rows.extend(rows);
    }
    for h in [3e5, 5e5, 1e6, 1.5e6] {
        let rows = block_grid(6, 13, 4)
            .into_par_iter()
            .map(|n| row("b", n, h))
            .collect::<Result<Vec<_>, _>>()?;
        t.rows.extend(rows);
    }
    Ok(vec![t])
}

/// Builds a figure and writes its tables into `dir`.
pub fn write_figure(fig: Figure, dir: &Path, spec: &QuadratureSpec) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    build(fig, spec)?.iter().map(|t| t.write(dir)).collect()
}
