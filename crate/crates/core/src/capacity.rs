//! Repeaterless secret-key capacity bounds for pure-loss and thermal-loss
//! bosonic channels.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A thermal-loss channel: transmissivity `eta` and thermal photons `nbar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPoint {
    pub eta: f64,
    pub nbar: f64,
}

impl ChannelPoint {
    pub fn new(eta: f64, nbar: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::param("eta", format!("need 0 < η < 1, got {eta}")));
        }
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(Error::param("nbar", format!("need n̄ >= 0, got {nbar}")));
        }
        Ok(Self { eta, nbar })
    }

    /// Eve's effective input noise `n̄/(1 − η)`.
    pub fn eve_noise(&self) -> f64 {
        self.nbar / (1.0 - self.eta)
    }
}

/// Bosonic entropy `h(x) = (1+x)log2(1+x) − x log2 x`, with `h(0) = 0`.
pub fn entropy_h(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (1.0 + x) * x.ln_1p() / std::f64::consts::LN_2 - x * x.log2()
}

/// Pure-loss bound `−log2(1 − η)`; +∞ at η = 1.
pub fn plob_pure_loss(eta: f64) -> f64 {
    if eta >= 1.0 {
        return f64::INFINITY;
    }
    -(-eta).ln_1p() / std::f64::consts::LN_2
}

/// Thermal-loss upper bound without the zero floor. Valid for `n̄ ≤ η`.
pub fn thermal_upper_bound_unfloored(p: &ChannelPoint) -> Result<f64> {
    if p.nbar > p.eta {
        return Err(Error::domain(
            "thermal upper bound",
            format!("requires n̄ <= η, got n̄ = {} > η = {}", p.nbar, p.eta),
        ));
    }
    let ne = p.eve_noise();
    Ok(plob_pure_loss(p.eta) - ne * p.eta.log2() - entropy_h(ne))
}

/// Thermal-loss upper bound, floored at zero.
pub fn thermal_upper_bound(p: &ChannelPoint) -> Result<f64> {
    thermal_upper_bound_unfloored(p).map(|k| k.max(0.0))
}

/// Reverse-coherent-information lower bound without the zero floor.
pub fn rci_lower_bound_unfloored(p: &ChannelPoint) -> f64 {
    plob_pure_loss(p.eta) - entropy_h(p.eve_noise())
}

/// Reverse-coherent-information lower bound, floored at zero.
pub fn rci_lower_bound(p: &ChannelPoint) -> f64 {
    rci_lower_bound_unfloored(p).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn h_oracle(x: f64) -> f64 {
        (1.0 + x) * (1.0 + x).log2() - x * x.log2()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy_h(0.0), 0.0);
        assert_relative_eq!(entropy_h(1.0), 2.0, max_relative = 1e-15);
        assert_relative_eq!(entropy_h(0.5), 1.5 * 1.5f64.log2() + 0.5, max_relative = 1e-14);
        assert_relative_eq!(entropy_h(0.5), 1.3774, max_relative = 1e-4);
        assert!(entropy_h(1e-300) >= 0.0);
        for x in [1e-6, 0.3, 7.0, 1e4] {
            assert_relative_eq!(entropy_h(x), h_oracle(x), max_relative = 1e-12);
        }
    }

    #[test]
    fn plob_examples() {
        assert_eq!(plob_pure_loss(0.0), 0.0);
        assert_relative_eq!(plob_pure_loss(0.5), 1.0, max_relative = 1e-15);
        assert_relative_eq!(plob_pure_loss(0.99), 100f64.log2(), max_relative = 1e-12);
        assert_eq!(plob_pure_loss(1.0), f64::INFINITY);
    }

    #[test]
    fn bound_examples() {
        let p = ChannelPoint::new(0.5, 0.1).unwrap();
        assert_relative_eq!(thermal_upper_bound(&p).unwrap(), 1.2 - h_oracle(0.2), max_relative = 1e-12);
        assert_relative_eq!(thermal_upper_bound(&p).unwrap(), 0.41997, max_relative = 1e-4);
        assert_relative_eq!(rci_lower_bound(&p), 1.0 - h_oracle(0.2), max_relative = 1e-12);
        assert_relative_eq!(rci_lower_bound(&p), 0.21997, max_relative = 1e-4);
        let clean = ChannelPoint::new(0.3, 0.0).unwrap();
        assert_eq!(thermal_upper_bound(&clean).unwrap(), plob_pure_loss(0.3));
        assert_eq!(rci_lower_bound(&clean), plob_pure_loss(0.3));
    }

    #[test]
    fn upper_bound_domain() {
        let p = ChannelPoint::new(0.01, 0.02).unwrap();
        assert!(matches!(thermal_upper_bound(&p), Err(Error::Domain { .. })));
        assert_eq!(rci_lower_bound(&p), 0.0);
        assert!(rci_lower_bound_unfloored(&p) < 0.0);
    }

    #[test]
    fn point_validation() {
        assert!(ChannelPoint::new(0.0, 0.0).is_err());
        assert!(ChannelPoint::new(1.0, 0.0).is_err());
        assert!(ChannelPoint::new(0.5, -1.0).is_err());
    }

    #[test]
    fn plob_increasing_convex() {
        let n = 2000;
        let vals: Vec<f64> = (1..n).map(|i| plob_pure_loss(i as f64 / n as f64)).collect();
        for w in vals.windows(3) {
            assert!(w[1] > w[0]);
            assert!(w[2] - 2.0 * w[1] + w[0] > 0.0);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ordering(eta in 1e-6..0.999f64, frac in 0.0..1.0f64) {
                let p = ChannelPoint::new(eta, frac * eta).unwrap();
                let lb = rci_lower_bound(&p);
                let ub = thermal_upper_bound(&p).unwrap();
                let phi = plob_pure_loss(eta);
                prop_assert!(lb >= 0.0);
                prop_assert!(lb <= ub + 1e-12);
                prop_assert!(ub <= phi + 1e-12);
            }

            #[test]
            fn noiseless_limit(eta in 1e-6..0.999f64) {
                let p = ChannelPoint::new(eta, 1e-15).unwrap();
                let phi = plob_pure_loss(eta);
                prop_assert!((phi - thermal_upper_bound(&p).unwrap()).abs() < 1e-10);
                prop_assert!((phi - rci_lower_bound(&p)).abs() < 1e-10);
            }
        }
    }
}
