//! Single-point evaluation of a scenario.

use fsoq_core::atmosphere::TurbulenceStrength;
use fsoq_core::capacity::{plob_pure_loss, rci_lower_bound, thermal_upper_bound};
use fsoq_core::channel::assemble_budget;
use fsoq_core::cvqkd::{asymptotic_rate, composable_rate, eta_estimator_variance, simulate_trials};
use fsoq_core::satellite::downlink_budget;
use fsoq_core::{ChannelPoint, ComposableRate, LayeredAtmosphere, LinkBudget, QuadratureSpec};
use serde::{Deserialize, Serialize};

use crate::error::{exit, ErrorReport};
use crate::scenario::{LinkSpec, Scenario, SCHEMA_VERSION};

/// Settings shared by every evaluation of a run.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext {
    pub quadrature: QuadratureSpec,
    pub seed: u64,
}

impl Default for EvalContext {
    fn default() -> Self {
        Self {
            quadrature: QuadratureSpec::default(),
            seed: 0,
        }
    }
}

/// A computed quantity, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome<T> {
    Value(T),
    Failed { error: ErrorReport },
}

impl<T> Outcome<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            Outcome::Value(v) => Some(v),
            Outcome::Failed { .. } => None,
        }
    }

    pub fn error(&self) -> Option<&ErrorReport> {
        match self {
            Outcome::Value(_) => None,
            Outcome::Failed { error } => Some(error),
        }
    }
}

impl<T> From<fsoq_core::Result<T>> for Outcome<T> {
    fn from(r: fsoq_core::Result<T>) -> Self {
        match r {
            Ok(v) => Outcome::Value(v),
            Err(e) => Outcome::Failed { error: (&e).into() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Horizontal,
    Satellite,
}

/// Slant-path quantities of a downlink.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlantPath {
    pub slant_range_m: f64,
    pub optical_length_m: f64,
    pub elongation: f64,
    pub scintillation_index: f64,
    pub strength: TurbulenceStrength,
}

/// Capacity bounds of the thermal-loss channel `(η, n̄)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    /// Pure-loss capacity −log2(1 − η).
    pub plob: Outcome<f64>,
    pub thermal_upper: Outcome<f64>,
    pub rci_lower: Outcome<f64>,
}

/// Monte-Carlo spread of the channel estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSummary {
    pub seed: u64,
    pub trials: u64,
    pub samples: u64,
    pub eta_hat_mean: f64,
    pub eta_hat_std: f64,
    pub eta_hat_std_predicted: f64,
    pub nbar_hat_mean: f64,
    pub nbar_hat_std: f64,
}

/// Result document of `fsoq eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub schema_version: u32,
    pub link: LinkKind,
    pub budget: Outcome<LinkBudget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slant_path: Option<SlantPath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asymptotic_rate: Option<Outcome<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composable_rate: Option<Outcome<ComposableRate>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits_per_second: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimation: Option<Outcome<EstimationSummary>>,
}

impl EvalReport {
    /// Every per-quantity failure, labelled by quantity.
    pub fn errors(&self) -> Vec<(&'static str, &ErrorReport)> {
        let mut out = Vec::new();
        if let Some(e) = self.budget.error() {
            out.push(("budget", e));
        }
        if let Some(b) = &self.bounds {
            for (name, o) in [("plob", &b.plob), ("thermal_upper", &b.thermal_upper), ("rci_lower", &b.rci_lower)] {
                if let Some(e) = o.error() {
                    out.push((name, e));
                }
            }
        }
        if let Some(e) = self.asymptotic_rate.as_ref().and_then(Outcome::error) {
            out.push(("asymptotic_rate", e));
        }
        if let Some(e) = self.composable_rate.as_ref().and_then(Outcome::error) {
            out.push(("composable_rate", e));
        }
        if let Some(e) = self.estimation.as_ref().and_then(Outcome::error) {
            out.push(("estimation", e));
        }
        out
    }

    /// 0 if every quantity was computed, otherwise the most severe error code.
    pub fn exit_code(&self) -> i32 {
        self.errors().iter().map(|(_, e)| e.exit_code()).max().unwrap_or(exit::OK)
    }
}

/// Evaluates one scenario point. Failures are recorded per quantity;
/// quantities that depend on a failed one are omitted.
pub fn evaluate(s: &Scenario, ctx: &EvalContext) -> EvalReport {
    let beam = s.beam.geometry();
    let profile = s.profile.profile();
    let (kind, budget, slant_path) = match &s.link {
        LinkSpec::Horizontal { distance_m } => {
            let options = s.budget_options(ctx.quadrature);
            let budget = assemble_budget(&beam, &s.receiver, &profile, *distance_m, &options);
            (LinkKind::Horizontal, Outcome::from(budget), None)
        }
        LinkSpec::Satellite { elongation, atmosphere, .. } => {
            let g = s.link.geometry().expect("satellite link has a geometry");
            let options = s.downlink_options(ctx.quadrature, *elongation);
            let default_atm;
            let atm = match atmosphere {
                Some(a) => a,
                None => {
                    default_atm = LayeredAtmosphere::default();
                    &default_atm
                }
            };
            match downlink_budget(&g, atm, &beam, &s.receiver, &profile, &options) {
                Ok(d) => {
                    let path = SlantPath {
                        slant_range_m: d.slant_range,
                        optical_length_m: d.optical_length,
                        elongation: d.elongation,
                        scintillation_index: d.scintillation_index,
                        strength: d.strength,
                    };
                    (LinkKind::Satellite, Outcome::Value(d.link), Some(path))
                }
                Err(e) => (LinkKind::Satellite, Outcome::from(Err(e)), None),
            }
        }
    };

    let mut report = EvalReport {
        schema_version: SCHEMA_VERSION,
        link: kind,
        budget,
        slant_path,
        bounds: None,
        asymptotic_rate: None,
        composable_rate: None,
        bits_per_second: None,
        estimation: None,
    };
    let Some(link) = report.budget.value().copied() else {
        return report;
    };
    let (eta, nbar) = (link.eta, link.nbar);

    let point = ChannelPoint::new(eta, nbar);
    report.bounds = Some(Bounds {
        plob: Outcome::Value(plob_pure_loss(eta)),
        thermal_upper: point.clone().and_then(|p| thermal_upper_bound(&p)).into(),
        rci_lower: point.map(|p| rci_lower_bound(&p)).into(),
    });

    if let Some(protocol) = &s.protocol {
        report.asymptotic_rate = Some(asymptotic_rate(protocol.mu, eta, nbar, protocol.beta).into());
        let rate = composable_rate(protocol, eta, nbar);
        if let (Ok(r), Some(clock)) = (&rate, s.clock_hz) {
            report.bits_per_second = Some(r.bits_per_second(clock));
        }
        report.composable_rate = Some(rate.into());
    }

    if let Some(est) = s.estimation {
        let mu = s.protocol.map_or(10.0, |p| p.mu);
        let runs = simulate_trials(eta, nbar, mu, est.samples, est.trials, ctx.seed);
        let (mean_eta, std_eta) = mean_std(runs.iter().map(|r| r.0));
        let (mean_nbar, std_nbar) = mean_std(runs.iter().map(|r| r.1));
        report.estimation = Some(Outcome::Value(EstimationSummary {
            seed: ctx.seed,
            trials: est.trials,
            samples: est.samples,
            eta_hat_mean: mean_eta,
            eta_hat_std: std_eta,
            eta_hat_std_predicted: eta_estimator_variance(eta, nbar, est.samples, mu - 1.0).sqrt(),
            nbar_hat_mean: mean_nbar,
            nbar_hat_std: std_nbar,
        }));
    }
    report
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
