//! GG02 coherent-state CV-QKD with homodyne detection and reverse
//! reconciliation: asymptotic rate, parameter estimation and the composable
//! finite-size key rate.

use std::f64::consts::SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::entropy_h;
use crate::numerics::erfc;
use crate::{Error, Result};

/// Tolerance on the uncertainty relation `ab − c² ≥ 1`.
const PHYSICALITY_SLACK: f64 = 1e-12;

/// Entries of the symmetric two-mode covariance matrix
/// `[[a·I, c·Z], [c·Z, b·I]]`, in shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceTriplet {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CovarianceTriplet {
    pub fn is_physical(&self) -> bool {
        self.a >= 1.0 - PHYSICALITY_SLACK
            && self.b >= 1.0 - PHYSICALITY_SLACK
            && self.c >= 0.0
            && self.a * self.b - self.c * self.c >= 1.0 - PHYSICALITY_SLACK * self.a * self.b
    }

    /// Symplectic eigenvalues `(ν₊, ν₋)` of the joint state.
    pub fn symplectic_eigenvalues(&self) -> (f64, f64) {
        let CovarianceTriplet { a, b, c } = *self;
        let root = ((a + b) * (a + b) - 4.0 * c * c).max(0.0).sqrt();
        ((root + (b - a)) / 2.0, (root - (b - a)) / 2.0)
    }

    /// Symplectic eigenvalue of Alice's mode conditioned on Bob's homodyne.
    pub fn conditional_eigenvalue(&self) -> f64 {
        let CovarianceTriplet { a, b, c } = *self;
        (a * (a * b - c * c) / b).max(0.0).sqrt()
    }
}

/// Covariance of the TMSV state of variance `mu` after a thermal-loss channel.
pub fn covariance(mu: f64, eta: f64, nbar: f64) -> CovarianceTriplet {
    CovarianceTriplet {
        a: mu,
        b: eta * (mu - 1.0) + 2.0 * nbar + 1.0,
        c: (eta * (mu * mu - 1.0)).sqrt(),
    }
}

/// Alice-Bob mutual information for homodyne detection, bits/use.
pub fn mutual_information(mu: f64, eta: f64, nbar: f64) -> f64 {
    0.5 * (eta * (mu - 1.0) / (2.0 * nbar + 1.0)).ln_1p() / std::f64::consts::LN_2
}

fn h_of_nu(nu: f64) -> f64 {
    entropy_h((nu - 1.0) / 2.0)
}

/// Eve's Holevo information on Bob's homodyne outcome.
pub fn holevo_bound(t: &CovarianceTriplet) -> Result<f64> {
    if !t.is_physical() {
        return Err(Error::domain(
            "Holevo bound",
            format!("unphysical covariance a={}, b={}, c={}", t.a, t.b, t.c),
        ));
    }
    let (plus, minus) = t.symplectic_eigenvalues();
    Ok(h_of_nu(plus) + h_of_nu(minus) - h_of_nu(t.conditional_eigenvalue()))
}

/// Asymptotic reverse-reconciliation rate `β I_AB − χ`, unfloored.
pub fn asymptotic_rate(mu: f64, eta: f64, nbar: f64, beta: f64) -> Result<f64> {
    if !(mu >= 1.0) {
        return Err(Error::param("mu", format!("must be >= 1, got {mu}")));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::param("eta", format!("must lie in [0, 1], got {eta}")));
    }
    if !(nbar >= 0.0) {
        return Err(Error::param("nbar", format!("must be >= 0, got {nbar}")));
    }
    let chi = holevo_bound(&covariance(mu, eta, nbar))?;
    Ok(beta * mutual_information(mu, eta, nbar) - chi)
}

/// Probability that a Gaussian estimate falls outside `w` standard deviations
/// on one side, `[1 − erf(w/√2)]/2`.
pub fn pe_error(w: f64) -> f64 {
    0.5 * erfc(w / SQRT_2)
}

/// Point and worst-case channel estimates from `m` parameter-estimation samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelEstimate {
    pub eta_hat: f64,
    pub nbar_hat: f64,
    pub eta_wc: f64,
    pub nbar_wc: f64,
    pub samples: u64,
    pub eps_pe: f64,
}

/// Worst-case estimators `w` standard deviations from `(eta, nbar)`.
/// `sigma_x2` is Alice's modulation variance `μ − 1`.
pub fn worst_case(eta: f64, nbar: f64, m: u64, w: f64, sigma_x2: f64) -> ChannelEstimate {
    let m_f = m as f64;
    let sigma_z2 = 2.0 * nbar + 1.0;
    let eta_wc = eta - 2.0 * w * ((2.0 * eta * eta + eta * sigma_z2 / sigma_x2) / m_f).sqrt();
    ChannelEstimate {
        eta_hat: eta,
        nbar_hat: nbar,
        eta_wc: eta_wc.max(0.0),
        nbar_wc: nbar + w * sigma_z2 / (2.0 * m_f).sqrt(),
        samples: m,
        eps_pe: pe_error(w),
    }
}

/// Predicted variance of the transmissivity estimator,
/// `4η²(2 + σ_z²/(ησ_x²))/m`.
pub fn eta_estimator_variance(eta: f64, nbar: f64, m: u64, sigma_x2: f64) -> f64 {
    let sigma_z2 = 2.0 * nbar + 1.0;
    4.0 * eta * eta * (2.0 + sigma_z2 / (eta * sigma_x2)) / m as f64
}

/// Transmissivity and noise estimates from paired samples.
///
/// `sigma_x2` is the variance used to normalize `T̂`; `None` uses the sample
/// second moment of `x` instead of the nominal modulation variance.
pub fn estimate_from_samples(x: &[f64], y: &[f64], sigma_x2: Option<f64>) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::param("samples", "need at least two (x, y) pairs of equal length"));
    }
    let sums = x.iter().zip(y).fold(Sums::default(), |s, (&xi, &yi)| s.add(xi, yi));
    Ok(sums.estimates(sigma_x2))
}

#[derive(Default, Clone, Copy)]
struct Sums {
    n: u64,
    xx: f64,
    xy: f64,
    yy: f64,
}

impl Sums {
    fn add(self, x: f64, y: f64) -> Self {
        Self {
            n: self.n + 1,
            xx: self.xx + x * x,
            xy: self.xy + x * y,
            yy: self.yy + y * y,
        }
    }

    fn estimates(&self, sigma_x2: Option<f64>) -> (f64, f64) {
        let m = self.n as f64;
        let sx2 = sigma_x2.unwrap_or(self.xx / m);
        let t = self.xy / (m * sx2);
        let residual = (self.yy - 2.0 * t * self.xy + t * t * self.xx) / m;
        (t * t, (residual - 1.0) / 2.0)
    }
}

/// Simulates `m` parameter-estimation pairs `y = √η x + z` with
/// `x ~ N(0, μ−1)`, `z ~ N(0, 2n̄+1)` and returns `(η̂, n̄̂)`.
///
/// The stream is ChaCha8 seeded with `seed` on stream 0; results are
/// reproducible across platforms.
pub fn simulate_estimation(eta: f64, nbar: f64, mu: f64, m: u64, seed: u64) -> (f64, f64) {
    simulate_on_stream(eta, nbar, mu, m, seed, 0)
}

fn simulate_on_stream(eta: f64, nbar: f64, mu: f64, m: u64, seed: u64, stream: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let sigma_x2 = mu - 1.0;
    let sx = sigma_x2.sqrt();
    let sz = (2.0 * nbar + 1.0).sqrt();
    let gain = eta.sqrt();
    let mut sums = Sums::default();
    for _ in 0..m {
        let gx: f64 = StandardNormal.sample(&mut rng);
        let gz: f64 = StandardNormal.sample(&mut rng);
        let x = sx * gx;
        sums = sums.add(x, gain * x + sz * gz);
    }
    sums.estimates(Some(sigma_x2))
}

/// Runs `trials` independent estimations in parallel; trial `i` uses stream
/// `i` of the seeded generator, so output order and values do not depend on
/// scheduling.
pub fn simulate_trials(eta: f64, nbar: f64, mu: f64, m: u64, trials: u64, seed: u64) -> Vec<(f64, f64)> {
    (0..trials)
        .into_par_iter()
        .map(|i| simulate_on_stream(eta, nbar, mu, m, seed, i))
        .collect()
}

/// Protocol and security parameters of the finite-size analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolParams {
    /// TMSV variance μ (SNU).
    #[serde(rename = "mu_snu")]
    pub mu: f64,
    /// Reconciliation efficiency β.
    pub beta: f64,
    /// Block size N.
    pub block_size: u64,
    /// Fraction of the block used for parameter estimation.
    pub pe_fraction: f64,
    /// Digitization alphabet size d.
    pub digitization: f64,
    pub eps_smooth: f64,
    pub eps_hash: f64,
    pub eps_cor: f64,
    /// Confidence parameter w (standard deviations).
    pub confidence: f64,
    /// Error-correction success probability, 1 − FER.
    pub p_ec: f64,
    /// Detection noise variance ν_det (1 homodyne, 2 heterodyne).
    pub nu_det: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            mu: 10.0,
            beta: 0.98,
            block_size: 100_000_000,
            pe_fraction: 0.1,
            digitization: 32.0,
            eps_smooth: 1e-10,
            eps_hash: 1e-10,
            eps_cor: 1e-10,
            confidence: 6.34,
            p_ec: 0.9,
            nu_det: 1.0,
        }
    }
}

impl ProtocolParams {
    pub fn with_block_size(mut self, n: u64) -> Self {
        self.block_size = n;
        self
    }

    /// Parameter-estimation and key sample counts `(m_pe, n)`; `m_pe` rounds
    /// half up.
    pub fn split(&self) -> Result<(u64, u64)> {
        let m_pe = (self.pe_fraction * self.block_size as f64 + 0.5).floor() as u64;
        if m_pe < 2 {
            return Err(Error::param("pe_fraction", format!("gives {m_pe} estimation samples; need >= 2")));
        }
        if m_pe >= self.block_size {
            return Err(Error::param("block_size", "no samples left for the key after estimation"));
        }
        Ok((m_pe, self.block_size - m_pe))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 1.0) {
            return Err(Error::param("mu", format!("must be >= 1, got {}", self.mu)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::param("beta", format!("must lie in [0, 1], got {}", self.beta)));
        }
        if !(self.pe_fraction > 0.0 && self.pe_fraction < 1.0) {
            return Err(Error::param("pe_fraction", format!("must lie in (0, 1), got {}", self.pe_fraction)));
        }
        if !(self.digitization >= 1.0) {
            return Err(Error::param("digitization", format!("must be >= 1, got {}", self.digitization)));
        }
        for (name, e) in [
            ("eps_smooth", self.eps_smooth),
            ("eps_hash", self.eps_hash),
            ("eps_cor", self.eps_cor),
        ] {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::param(name, format!("must lie in (0, 1), got {e}")));
            }
        }
        if !(self.confidence >= 0.0) {
            return Err(Error::param("confidence", format!("must be >= 0, got {}", self.confidence)));
        }
        if !(self.p_ec > 0.0 && self.p_ec <= 1.0) {
            return Err(Error::param("p_ec", format!("must lie in (0, 1], got {}", self.p_ec)));
        }
        if self.nu_det != 1.0 && self.nu_det != 2.0 {
            return Err(Error::param("nu_det", format!("must be 1 or 2, got {}", self.nu_det)));
        }
        self.split().map(|_| ())
    }

    /// `Δ_aep = 4 log2(√d + 2) √(log2(18 p_ec⁻² ε_s⁻⁴))`.
    pub fn delta_aep(&self) -> f64 {
        let inner = (18.0 / (self.p_ec * self.p_ec)).log2() - 4.0 * self.eps_smooth.log2();
        4.0 * (self.digitization.sqrt() + 2.0).log2() * inner.sqrt()
    }

    /// `log2[p_ec(1 − ε_s²/3)] + 2 log2(√2 ε_h)`.
    pub fn omega_term(&self) -> f64 {
        (self.p_ec * (1.0 - self.eps_smooth * self.eps_smooth / 3.0)).log2() + 2.0 * (SQRT_2 * self.eps_hash).log2()
    }

    /// Total security parameter `ε_cor + ε_s + ε_h + 2 p_ec ε_pe`.
    pub fn epsilon_total(&self) -> f64 {
        self.eps_cor + self.eps_smooth + self.eps_hash + 2.0 * self.p_ec * pe_error(self.confidence)
    }
}

/// Result of [`composable_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComposableRate {
    /// Key rate in bits per channel use, floored at zero.
    pub rate: f64,
    /// The same rate before flooring; negative means abort.
    pub rate_unclamped: f64,
    /// Asymptotic rate evaluated at the worst-case parameters.
    pub rate_pe: f64,
    pub estimate: ChannelEstimate,
    pub key_samples: u64,
    pub delta_aep: f64,
    pub omega_term: f64,
    pub epsilon: f64,
}

impl ComposableRate {
    pub fn bits_per_second(&self, clock_hz: f64) -> f64 {
        self.rate * clock_hz
    }
}

/// Composable finite-size key rate, bits per channel use.
pub fn composable_rate(p: &ProtocolParams, eta: f64, nbar: f64) -> Result<ComposableRate> {
    p.validate()?;
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param("eta", format!("must lie in (0, 1), got {eta}")));
    }
    if !(nbar >= 0.0) {
        return Err(Error::param("nbar", format!("must be >= 0, got {nbar}")));
    }
    let (m_pe, n) = p.split()?;
    let estimate = worst_case(eta, nbar, m_pe, p.confidence, p.mu - 1.0);
    let rate_pe = asymptotic_rate(p.mu, estimate.eta_wc, estimate.nbar_wc, p.beta)?;
    let n_f = n as f64;
    let delta_aep = p.delta_aep();
    let omega_term = p.omega_term();
    let rate_unclamped = p.p_ec * (1.0 - p.pe_fraction) * (rate_pe - delta_aep / n_f.sqrt() + omega_term / n_f);
    Ok(ComposableRate {
        rate: rate_unclamped.max(0.0),
        rate_unclamped,
        rate_pe,
        estimate,
        key_samples: n,
        delta_aep,
        omega_term,
        epsilon: p.epsilon_total(),
    })
}
