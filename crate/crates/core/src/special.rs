//! Gamma and one-parameter Mittag-Leffler functions on the real line, and the
//! Mittag-Leffler weighted (Bielecki) sup-norm.
//!
//! `E_α(t) = Σ_k t^k / Γ(αk + 1)` is evaluated in three regimes:
//!
//! * `t > 0`: the series itself. All terms are positive, so summing them in
//!   log-scaled form is accurate right up to the overflow threshold.
//! * `-1 ≤ t < 0`: the alternating series with compensated summation. On this
//!   range every term is bounded by one and the value is at least `E_α(-1)`,
//!   so cancellation is mild.
//! * `t < -1`: the Laplace-type representation of the completely monotone
//!   function `E_α(-x)`,
//!
//!   ```text
//!   E_α(-x) = sin(απ)/(απ) ∫_0^∞ x·exp(-w^{1/α}) / (w² + 2wx·cos(απ) + x²) dw,
//!   ```
//!
//!   whose integrand is positive, integrated adaptively.
//!
//! For `α = 1` negative arguments use `E_1(t) = 1 / E_1(-t)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::history::GridFunction;
use crate::quadrature;

/// Order of the fractional derivative, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidParameter(format!(
                "fractional order must lie in the open interval (0, 1), got {alpha}"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `Γ(α)`, which is finite and positive on the admissible range.
    pub fn gamma(self) -> f64 {
        gamma_fn(self.0).expect("Γ is finite on (0, 1)")
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FractionalOrder> for f64 {
    fn from(a: FractionalOrder) -> f64 {
        a.0
    }
}

/// Parameters of the weight `t ↦ E_α(γ t^α)` in the Bielecki norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    gamma: f64,
    order: FractionalOrder,
}

impl WeightParams {
    pub fn new(gamma: f64, order: FractionalOrder) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "weight rate must be positive, got {gamma}"
            )));
        }
        Ok(Self { gamma, order })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    /// `E_α(γ t^α)`.
    pub fn weight(&self, t: f64) -> Result<f64> {
        let a = self.order.value();
        mittag_leffler(a, self.gamma * t.powf(a))
    }
}

// Lanczos approximation, g = 7, nine coefficients.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(z: f64) -> f64 {
    // z = x - 1
    let mut a = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    a
}

/// `Γ(x)` for `x > 0`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Γ(x) requires x > 0, got {x}")));
    }
    if x > 171.624_376_956_302_7 {
        return Err(Error::Overflow(format!("Γ({x}) exceeds f64 range")));
    }
    if x < 0.5 {
        return Ok(gamma_fn(x + 1.0)? / x);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    // Split the power to keep t^(z+0.5) finite near the top of the range.
    let p = t.powf(0.5 * (z + 0.5));
    Ok((2.0 * PI).sqrt() * p * (-t).exp() * p * lanczos_sum(z))
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln Γ(x) requires x > 0, got {x}")));
    }
    if x < 0.5 {
        return Ok(ln_gamma(x + 1.0)? - x.ln());
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln())
}

const MAX_SERIES_TERMS: usize = 200_000;

/// One-parameter Mittag-Leffler function `E_α(t)` for `α ∈ (0, 1]`.
///
/// Relative accuracy is about `1e-13` wherever the result is representable.
/// Arguments whose value would exceed `f64::MAX` yield [`Error::Overflow`].
pub fn mittag_leffler(alpha: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!(
            "Mittag-Leffler order must lie in (0, 1], got {alpha}"
        )));
    }
    if !t.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {t}")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 && t < 0.0 {
        return match positive_series(1.0, -t) {
            Ok(v) => Ok(1.0 / v),
            Err(Error::Overflow(_)) => Ok(0.0),
            Err(e) => Err(e),
        };
    }
    if t > 0.0 {
        positive_series(alpha, t)
    } else if t >= -1.0 {
        alternating_series(alpha, t)
    } else {
        negative_integral(alpha, -t)
    }
}

struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn positive_series(alpha: f64, t: f64) -> Result<f64> {
    // Cheap overflow screen: ln E_α(t) ≈ t^{1/α} - ln α for large t.
    if t > 1.0 && t.powf(1.0 / alpha) - alpha.ln() > 710.0 {
        return Err(Error::Overflow(format!("E_{alpha}({t}) exceeds f64 range")));
    }
    let ln_t = t.ln();
    let mut acc = Neumaier::new();
    let mut prev = f64::INFINITY;
    for k in 0..MAX_SERIES_TERMS {
        let kf = k as f64;
        let term = (kf * ln_t - ln_gamma(alpha * kf + 1.0)?).exp();
        if !term.is_finite() {
            return Err(Error::Overflow(format!("E_{alpha}({t}) exceeds f64 range")));
        }
        acc.add(term);
        let s = acc.value();
        if !s.is_finite() {
            return Err(Error::Overflow(format!("E_{alpha}({t}) exceeds f64 range")));
        }
        if term < prev && term <= 1e-17 * s {
            return Ok(s);
        }
        prev = term;
    }
    Err(Error::AccuracyLoss(format!(
        "series for E_{alpha}({t}) did not converge in {MAX_SERIES_TERMS} terms"
    )))
}

fn alternating_series(alpha: f64, t: f64) -> Result<f64> {
    let ln_abs = t.abs().ln();
    let mut acc = Neumaier::new();
    for k in 0..MAX_SERIES_TERMS {
        let kf = k as f64;
        let mag = (kf * ln_abs - ln_gamma(alpha * kf + 1.0)?).exp();
        let term = if k % 2 == 0 { mag } else { -mag };
        acc.add(term);
        // Γ(αk+1) is increasing once αk+1 ≥ 2, so terms decrease from there on.
        if alpha * kf >= 1.0 && mag <= 1e-17 * acc.value().abs() {
            return Ok(acc.value());
        }
    }
    Err(Error::AccuracyLoss(format!(
        "series for E_{alpha}({t}) did not converge in {MAX_SERIES_TERMS} terms"
    )))
}

fn negative_integral(alpha: f64, x: f64) -> Result<f64> {
    // sin(απ) and cos(απ) via the reflected angle keep relative accuracy as α → 1.
    let (sin_a, cos_a) = if alpha > 0.5 {
        let r = PI * (1.0 - alpha);
        (r.sin(), -r.cos())
    } else {
        ((PI * alpha).sin(), (PI * alpha).cos())
    };
    let inv_alpha = 1.0 / alpha;
    let upper = 800f64.powf(alpha);
    let integrand = |w: f64| x * (-w.powf(inv_alpha)).exp() / (w * w + 2.0 * w * x * cos_a + x * x);

    let mut breaks = vec![0.0, upper];
    if upper > 1.0 {
        breaks.push(1.0);
    }
    if cos_a < 0.0 {
        // Near-pole of the denominator at w = -x cos(απ) with half-width x sin(απ).
        let centre = -x * cos_a;
        let width = x * sin_a;
        for p in [centre - width, centre, centre + width] {
            if p > 0.0 && p < upper {
                breaks.push(p);
            }
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * upper);

    let integral = quadrature::integrate(integrand, &breaks, 1e-14)
        .ok_or_else(|| Error::AccuracyLoss(format!("integral representation of E_{alpha}(-{x}) did not resolve")))?;
    Ok(sin_a / (PI * alpha) * integral)
}

/// `max_j ‖x(t_j)‖ / E_α(γ t_j^α)` over the nodes of a sampled function.
pub fn bielecki_norm(x: &GridFunction, w: &WeightParams) -> Result<f64> {
    let mut best = 0.0f64;
    for j in 0..=x.steps() {
        let n = crate::history::euclid(x.node(j));
        if n > 0.0 {
            best = best.max(n / w.weight(x.time(j))?);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_known_values() {
        assert!(rel(gamma_fn(1.0).unwrap(), 1.0) < 1e-14);
        assert!(rel(gamma_fn(0.5).unwrap(), PI.sqrt()) < 1e-14);
        assert!(rel(gamma_fn(2.5).unwrap(), 1.5 * 0.5 * PI.sqrt()) < 1e-14);
        assert!(rel(gamma_fn(6.0).unwrap(), 120.0) < 1e-13);
        assert!(rel(gamma_fn(0.1).unwrap(), 9.513_507_698_668_732) < 1e-13);
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        assert!(matches!(gamma_fn(0.0), Err(Error::Domain(_))));
        assert!(matches!(gamma_fn(-1.5), Err(Error::Domain(_))));
        assert!(matches!(gamma_fn(200.0), Err(Error::Overflow(_))));
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for &x in &[0.01, 0.3, 0.5, 1.0, 1.7, 3.2, 10.5, 100.0, 170.0] {
            let d = (ln_gamma(x).unwrap() - gamma_fn(x).unwrap().ln()).abs();
            assert!(d < 1e-12 * (1.0 + ln_gamma(x).unwrap().abs()), "x = {x}");
        }
    }

    #[test]
    fn ml_at_zero_is_one() {
        for &a in &[0.05, 0.3, 0.5, 0.99, 1.0] {
            assert_eq!(mittag_leffler(a, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn ml_regime_boundary_is_continuous() {
        for &a in &[0.2, 0.5, 0.9] {
            let lo = mittag_leffler(a, -1.0).unwrap();
            let hi = mittag_leffler(a, -1.0 - 1e-12).unwrap();
            assert!(rel(hi, lo) < 1e-11, "α = {a}: {lo} vs {hi}");
        }
    }

    #[test]
    fn ml_overflow_is_reported() {
        assert!(matches!(mittag_leffler(0.5, 50.0), Err(Error::Overflow(_))));
        assert!(matches!(mittag_leffler(1.0, 800.0), Err(Error::Overflow(_))));
        assert_eq!(mittag_leffler(1.0, -800.0).unwrap(), 0.0);
    }

    #[test]
    fn ml_rejects_bad_order() {
        assert!(mittag_leffler(0.0, 1.0).is_err());
        assert!(mittag_leffler(1.5, 1.0).is_err());
    }

    #[test]
    fn order_validation() {
        assert!(FractionalOrder::new(0.5).is_ok());
        assert!(FractionalOrder::new(1.0).is_err());
        assert!(FractionalOrder::new(0.0).is_err());
        assert!(FractionalOrder::new(f64::NAN).is_err());
    }
}
