//! Vector fields `g(x)` or `g(t, x)` on `ℝ^d` with a declared global
//! Lipschitz constant.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type AutonomousMap = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
pub type TimeDependentMap = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;

/// Anything the solvers can integrate: a map `(t, x) ↦ g(t, x)` with a
/// Lipschitz constant in `x` that holds uniformly in `t`.
pub trait Field: Send + Sync {
    fn dim(&self) -> usize;
    fn lipschitz(&self) -> f64;
    fn is_autonomous(&self) -> bool;
    fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]);

    fn eval(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, x, &mut out);
        out
    }
}

#[derive(Clone)]
enum FieldMap {
    Autonomous(Arc<AutonomousMap>),
    TimeDependent(Arc<TimeDependentMap>),
}

#[derive(Clone)]
pub struct VectorField {
    name: String,
    dim: usize,
    lipschitz: f64,
    map: FieldMap,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("autonomous", &self.is_autonomous())
            .finish()
    }
}

fn check_params(dim: usize, lipschitz: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidParameter("field dimension must be at least 1".into()));
    }
    if !(lipschitz.is_finite() && lipschitz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Lipschitz constant must be positive, got {lipschitz}"
        )));
    }
    Ok(())
}

impl VectorField {
    pub fn autonomous<F>(name: impl Into<String>, dim: usize, lipschitz: f64, g: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        check_params(dim, lipschitz)?;
        Ok(Self {
            name: name.into(),
            dim,
            lipschitz,
            map: FieldMap::Autonomous(Arc::new(g)),
        })
    }

    pub fn time_dependent<F>(name: impl Into<String>, dim: usize, lipschitz: f64, g: F) -> Result<Self>
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        check_params(dim, lipschitz)?;
        Ok(Self {
            name: name.into(),
            dim,
            lipschitz,
            map: FieldMap::TimeDependent(Arc::new(g)),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `g ≡ 0`.
    pub fn zero(dim: usize) -> Self {
        Self::autonomous("zero", dim, 1.0, |_, out| out.fill(0.0)).expect("valid")
    }

    /// `g(x) = λx` componentwise.
    pub fn linear(dim: usize, lambda: f64) -> Self {
        let l = if lambda == 0.0 { 1.0 } else { lambda.abs() };
        Self::autonomous("linear", dim, l, move |x, out| {
            for (o, v) in out.iter_mut().zip(x) {
                *o = lambda * v;
            }
        })
        .expect("valid")
    }

    /// `g ≡ c`.
    pub fn constant(c: Vec<f64>) -> Result<Self> {
        let dim = c.len();
        Self::autonomous("constant", dim, 1.0, move |_, out| out.copy_from_slice(&c))
    }

    /// `g(x) = y(1-y)` with `y = clamp(x, lower, upper)` componentwise, which
    /// makes the logistic map globally Lipschitz with
    /// `L = max(|1-2·lower|, |1-2·upper|)`.
    pub fn logistic(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) {
            return Err(Error::InvalidParameter(format!(
                "logistic clamp needs lower < upper, got [{lower}, {upper}]"
            )));
        }
        let l = (1.0 - 2.0 * lower).abs().max((1.0 - 2.0 * upper).abs());
        Self::autonomous("logistic", dim, l, move |x, out| {
            for (o, v) in out.iter_mut().zip(x) {
                let y = v.clamp(lower, upper);
                *o = y * (1.0 - y);
            }
        })
    }

    /// `g(t, x) = -x + A sin(ωt)` componentwise.
    pub fn linear_forced(dim: usize, amplitude: f64, omega: f64) -> Self {
        Self::time_dependent("linear_forced", dim, 1.0, move |t, x, out| {
            let f = amplitude * (omega * t).sin();
            for (o, v) in out.iter_mut().zip(x) {
                *o = -v + f;
            }
        })
        .expect("valid")
    }

    /// Same map with a different declared Lipschitz constant.
    pub fn with_lipschitz(mut self, lipschitz: f64) -> Result<Self> {
        check_params(self.dim, lipschitz)?;
        self.lipschitz = lipschitz;
        Ok(self)
    }
}

impl Field for VectorField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn is_autonomous(&self) -> bool {
        matches!(self.map, FieldMap::Autonomous(_))
    }

    #[inline]
    fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        match &self.map {
            FieldMap::Autonomous(g) => g(x, out),
            FieldMap::TimeDependent(g) => g(t, x, out),
        }
    }
}

/// One pair that violated the declared Lipschitz bound.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzViolation {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    pub declared: f64,
    pub checked: usize,
    pub worst_ratio: f64,
    pub violations: Vec<LipschitzViolation>,
}

impl LipschitzReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Spot-checks `‖g(t,x) - g(t,y)‖ ≤ L‖x - y‖` on `samples` random pairs drawn
/// from the box `[lo, hi]^d × [0, t_max]`.
pub fn check_lipschitz<F: Field + ?Sized>(
    field: &F,
    samples: usize,
    lo: f64,
    hi: f64,
    t_max: f64,
    seed: u64,
) -> LipschitzReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = field.dim();
    let l = field.lipschitz();
    let mut report = LipschitzReport {
        declared: l,
        checked: 0,
        worst_ratio: 0.0,
        violations: Vec::new(),
    };
    let mut gx = vec![0.0; d];
    let mut gy = vec![0.0; d];
    for _ in 0..samples {
        let t = rng.gen_range(0.0..=t_max.max(0.0));
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(lo..hi)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.gen_range(lo..hi)).collect();
        let dx = crate::history::euclid_diff(&x, &y);
        if dx == 0.0 {
            continue;
        }
        field.eval_into(t, &x, &mut gx);
        field.eval_into(t, &y, &mut gy);
        let ratio = crate::history::euclid_diff(&gx, &gy) / dx;
        report.checked += 1;
        report.worst_ratio = report.worst_ratio.max(ratio);
        if ratio > l * (1.0 + 1e-12) {
            report.violations.push(LipschitzViolation { t, x, y, ratio });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_respect_declared_constants() {
        let fields = [
            VectorField::linear(2, -1.5),
            VectorField::logistic(1, -0.5, 1.5).unwrap(),
            VectorField::linear_forced(3, 2.0, 3.0),
            VectorField::zero(2),
            VectorField::constant(vec![1.0, 2.0]).unwrap(),
        ];
        for f in &fields {
            let r = check_lipschitz(f, 2000, -3.0, 3.0, 10.0, 7);
            assert!(r.passed(), "{} worst {}", f.name(), r.worst_ratio);
            assert!(r.checked > 1900);
        }
    }

    #[test]
    fn understated_constant_is_reported() {
        let f = VectorField::linear(1, 3.0).with_lipschitz(1.0).unwrap();
        let r = check_lipschitz(&f, 100, -1.0, 1.0, 0.0, 1);
        assert!(!r.passed());
        assert!((r.worst_ratio - 3.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters() {
        assert!(VectorField::autonomous("x", 0, 1.0, |_, _| {}).is_err());
        assert!(VectorField::autonomous("x", 1, 0.0, |_, _| {}).is_err());
        assert!(VectorField::logistic(1, 1.0, 0.0).is_err());
    }

    #[test]
    fn logistic_values() {
        let f = VectorField::logistic(1, -0.5, 1.5).unwrap();
        assert_eq!(f.lipschitz(), 2.0);
        assert_eq!(f.eval(0.0, &[0.5]), vec![0.25]);
        assert_eq!(f.eval(0.0, &[1.0]), vec![0.0]);
        assert_eq!(f.eval(0.0, &[0.0]), vec![0.0]);
    }
}
