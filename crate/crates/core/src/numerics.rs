//! Numerical kernels shared by the physics modules.
//!
//! Integration uses a globally adaptive 7/15-point Gauss-Kronrod rule with the
//! QUADPACK error rescaling. Semi-infinite integrals are truncated at an
//! adaptively chosen cutoff rather than mapped onto a finite interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerances for the adaptive quadrature routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-9,
            absolute_tolerance: 1e-12,
            max_subdivisions: 50_000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(relative_tolerance: f64, absolute_tolerance: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            relative_tolerance,
            absolute_tolerance,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0) {
            return Err(Error::param("relative_tolerance", "must be > 0"));
        }
        if !(self.absolute_tolerance > 0.0) {
            return Err(Error::param("absolute_tolerance", "must be > 0"));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::param("max_subdivisions", "must be >= 1"));
        }
        Ok(())
    }

    /// Same spec with a different absolute tolerance.
    pub fn with_absolute(mut self, absolute_tolerance: f64) -> Self {
        self.absolute_tolerance = absolute_tolerance;
        self
    }

    fn target(&self, result: f64) -> f64 {
        self.absolute_tolerance
            .max(self.relative_tolerance * result.abs())
    }
}

// Kronrod abscissae on [0, 1]; odd indices are the embedded Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::domain("integrand", format!("non-finite value {y} at x = {x}")))
        }
    };

    let fc = eval(center)?;
    let mut res_gauss = fc * WG[3];
    let mut res_kronrod = fc * WGK[7];
    let mut res_abs = res_kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let scale = half.abs();
    let value = res_kronrod * half;
    res_abs *= scale;
    res_asc *= scale;
    let mut error = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Segment { a, b, value, error })
}

/// Integrates `f` over `[a, b]` to `max(abs_tol, rel_tol·|I|)`.
///
/// On failure the [`Error::Convergence`] carries the best estimate reached.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("integrate_finite", "limits must be finite"));
    }
    if a > b {
        return Err(Error::domain("integrate_finite", format!("a = {a} > b = {b}")));
    }
    if a == b {
        return Ok(0.0);
    }

    let first = kronrod15(&f, a, b)?;
    let mut total = first.value;
    let mut total_error = first.error;
    let mut heap = BinaryHeap::with_capacity(64);
    heap.push(first);
    let mut subdivisions = 1;

    while total_error > spec.target(total) {
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Convergence {
                estimate: total,
                error_estimate: total_error,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval collapsed to adjacent floats; nothing left to refine.
            return Err(Error::Convergence {
                estimate: total,
                error_estimate: total_error,
                subdivisions,
            });
        }
        let left = kronrod15(&f, worst.a, mid)?;
        let right = kronrod15(&f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;

        // The running sums drift; resynchronise them occasionally.
        if subdivisions % 512 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_error = heap.iter().map(|s| s.error).sum();
        }
    }

    Ok(heap.iter().map(|s| s.value).sum())
}

/// Integrates over consecutive panels `[p0, p1], [p1, p2], ...`.
///
/// Useful when the integrand has known features (kinks, sharp scales) at the
/// breakpoints. The total tolerance is shared equally among panels.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    if breakpoints.len() < 2 {
        return Ok(0.0);
    }
    let panels = (breakpoints.len() - 1) as f64;
    let panel_spec = spec.with_absolute(spec.absolute_tolerance / panels);
    breakpoints
        .windows(2)
        .map(|w| integrate_finite(&f, w[0], w[1], &panel_spec))
        .sum()
}

const MAX_DOUBLINGS: usize = 60;

/// Integrates `f` over `[0, ∞)`.
///
/// Panels `[0, 1], [1, 2], [2, 4], ...` are added until a panel's contribution
/// and its sampled envelope `max|f|·width` both fall below the absolute
/// tolerance. Suitable for integrands that decay at least exponentially.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let mut total = integrate_finite(&f, 0.0, 1.0, spec)?;
    let mut lo = 1.0;
    for _ in 0..MAX_DOUBLINGS {
        let hi = 2.0 * lo;
        let panel = integrate_finite(&f, lo, hi, spec)?;
        total += panel;
        let envelope = (0..=32)
            .map(|i| f(lo + (hi - lo) * i as f64 / 32.0).abs())
            .fold(0.0, f64::max)
            * (hi - lo);
        let tol = spec.target(total);
        if panel.abs() < tol && envelope < tol {
            return Ok(total);
        }
        lo = hi;
    }
    Err(Error::Convergence {
        estimate: total,
        error_estimate: f64::INFINITY,
        subdivisions: MAX_DOUBLINGS,
    })
}

/// Integrates `f` over `[0, ∞)` using a caller-supplied tail bound.
///
/// `tail_bound(T)` must bound `∫_T^∞ |f|`. The cutoff doubles from 1 until the
/// bound drops below the absolute tolerance, then `[0, T]` is integrated.
pub fn integrate_semi_infinite_bounded<F, B>(f: F, tail_bound: B, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    spec.validate()?;
    let mut cutoff = 1.0;
    for _ in 0..MAX_DOUBLINGS {
        if tail_bound(cutoff) < spec.absolute_tolerance {
            return integrate_finite(f, 0.0, cutoff, spec);
        }
        cutoff *= 2.0;
    }
    Err(Error::Convergence {
        estimate: f64::NAN,
        error_estimate: tail_bound(cutoff),
        subdivisions: MAX_DOUBLINGS,
    })
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function, accurate in the far tail.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Composite Simpson rule on `n` (even) panels. Kept for cross-checks.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n.max(2) };
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}
