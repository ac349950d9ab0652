//! One-dimensional parameter sweeps written as CSV.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{exit, CliError};
use crate::eval::{evaluate, EvalContext, EvalReport, Outcome};
use crate::scenario::{Axis, Scenario};

/// One CSV row. The column set is the same for every axis and link kind;
/// quantities that do not apply or failed are left empty and failures are
/// described in `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub distance_m: Option<f64>,
    pub rytov_variance: Option<f64>,
    pub regime: Option<String>,
    pub long_term_waist_m: Option<f64>,
    pub eta_lt: Option<f64>,
    pub eta_atm: Option<f64>,
    pub eta_eff: Option<f64>,
    pub eta_cd: Option<f64>,
    pub eta: Option<f64>,
    pub loss_db: Option<f64>,
    pub nbar_background: Option<f64>,
    pub nbar_extra: Option<f64>,
    pub nbar: Option<f64>,
    pub slant_range_m: Option<f64>,
    pub elongation: Option<f64>,
    pub scintillation_index: Option<f64>,
    pub plob: Option<f64>,
    pub thermal_upper: Option<f64>,
    pub rci_lower: Option<f64>,
    pub asymptotic_rate: Option<f64>,
    pub key_rate: Option<f64>,
    pub bits_per_second: Option<f64>,
    pub error: Option<String>,
}

/// Column names, in order.
pub const HEADER: [&str; 25] = [
    "axis",
    "value",
    "distance_m",
    "rytov_variance",
    "regime",
    "long_term_waist_m",
    "eta_lt",
    "eta_atm",
    "eta_eff",
    "eta_cd",
    "eta",
    "loss_db",
    "nbar_background",
    "nbar_extra",
    "nbar",
    "slant_range_m",
    "elongation",
    "scintillation_index",
    "plob",
    "thermal_upper",
    "rci_lower",
    "asymptotic_rate",
    "key_rate",
    "bits_per_second",
    "error",
];

impl SweepRow {
    fn from_report(axis: Axis, value: f64, r: &EvalReport) -> Self {
        let b = r.budget.value();
        let bounds = r.bounds.as_ref();
        let opt = |o: Option<&Outcome<f64>>| o.and_then(|o| o.value().copied());
        let errors = r.errors();
        let error = (!errors.is_empty()).then(|| {
            errors
                .iter()
                .map(|(q, e)| format!("{q}: {}", e.message))
                .collect::<Vec<_>>()
                .join("; ")
        });
        SweepRow {
            axis: axis.name().to_string(),
            value,
            distance_m: b.map(|b| b.distance),
            rytov_variance: b.map(|b| b.rytov_variance),
            regime: b.map(|b| regime_name(b.regime).to_string()),
            long_term_waist_m: b.map(|b| b.long_term_waist),
            eta_lt: b.map(|b| b.eta_lt),
            eta_atm: b.map(|b| b.eta_atm),
            eta_eff: b.map(|b| b.eta_eff),
            eta_cd: b.map(|b| b.eta_cd),
            eta: b.map(|b| b.eta),
            loss_db: b.map(|b| b.loss_db()),
            nbar_background: b.map(|b| b.nbar_background),
            nbar_extra: b.map(|b| b.nbar_extra),
            nbar: b.map(|b| b.nbar),
            slant_range_m: r.slant_path.map(|p| p.slant_range_m),
            elongation: r.slant_path.map(|p| p.elongation),
            scintillation_index: r.slant_path.map(|p| p.scintillation_index),
            plob: opt(bounds.map(|b| &b.plob)),
            thermal_upper: opt(bounds.map(|b| &b.thermal_upper)),
            rci_lower: opt(bounds.map(|b| &b.rci_lower)),
            asymptotic_rate: opt(r.asymptotic_rate.as_ref()),
            key_rate: r.composable_rate.as_ref().and_then(|o| o.value()).map(|c| c.rate),
            bits_per_second: r.bits_per_second,
            error,
        }
    }
}

pub fn regime_name(r: fsoq_core::Regime) -> &'static str {
    match r {
        fsoq_core::Regime::BeyondZi => "beyond_zi",
        fsoq_core::Regime::WithinZi => "within_zi",
    }
}

/// Result of a sweep: rows in grid order and the exit code they imply.
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub exit_code: i32,
}

/// Evaluates the scenario at every point of the grid declared for `axis`.
/// Points run in parallel on the current rayon pool; rows keep grid order.
pub fn run_sweep(s: &Scenario, axis: Axis, ctx: &EvalContext) -> Result<SweepOutput, CliError> {
    let grid = s.grid(axis).ok_or_else(|| {
        CliError::schema(format!("sweep.{}", axis.name()), "no grid declared for this axis")
    })?;
    let reports: Vec<(f64, EvalReport)> = grid
        .par_iter()
        .map(|&v| (v, evaluate(&s.with_axis(axis, v), ctx)))
        .collect();
    let exit_code = reports.iter().map(|(_, r)| r.exit_code()).max().unwrap_or(exit::OK);
    let rows = reports.iter().map(|(v, r)| SweepRow::from_report(axis, *v, r)).collect();
    Ok(SweepOutput { rows, exit_code })
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| CliError::io("<csv output>", e))?;
    Ok(())
}
