//! Nonautonomous histories: the driving shift `g ↦ g(τ + ·, ·)` on vector
//! fields and the skew-product map `Π(τ, f, g) = (T_τ(f, g), g_τ)`.

use crate::error::{Error, Result};
use crate::field::{Field, VectorField};
use crate::history::{euclid_diff, sup_dist_on, GridFunction};
use crate::report::DefectReport;
use crate::semigroup::{semigroup_defect_with, Discretization};

/// `(t, x) ↦ base(offset + t, x)`.
#[derive(Debug, Clone)]
pub struct TimedField {
    base: VectorField,
    offset: f64,
}

impl TimedField {
    pub fn new(base: VectorField) -> Self {
        Self { base, offset: 0.0 }
    }

    pub fn with_offset(base: VectorField, offset: f64) -> Result<Self> {
        if !(offset.is_finite() && offset >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time offset must be ≥ 0, got {offset}"
            )));
        }
        Ok(Self { base, offset })
    }

    pub fn base(&self) -> &VectorField {
        &self.base
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

impl Field for TimedField {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn lipschitz(&self) -> f64 {
        self.base.lipschitz()
    }

    fn is_autonomous(&self) -> bool {
        self.base.is_autonomous()
    }

    #[inline]
    fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.base.eval_into(self.offset + t, x, out)
    }
}

/// `g_τ = g(τ + ·, ·)`.
pub fn shift_field(g: &TimedField, tau: f64) -> Result<TimedField> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("shift must be ≥ 0, got {tau}")));
    }
    TimedField::with_offset(g.base.clone(), g.offset + tau)
}

/// Largest `‖a(t, x) - b(t, x)‖` over a fixed probe set of times in
/// `[0, t_max]` and states along the diagonal of `[-2, 2]^d`.
pub fn field_distance(a: &TimedField, b: &TimedField, t_max: f64) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::GridMismatch(format!(
            "field dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let d = a.dim();
    let mut worst = 0.0f64;
    let mut ga = vec![0.0; d];
    let mut gb = vec![0.0; d];
    for i in 0..=16 {
        let t = t_max * i as f64 / 16.0;
        for c in [-2.0, -0.7, 0.0, 0.3, 1.0, 2.0] {
            let x: Vec<f64> = (0..d).map(|k| c + 0.1 * k as f64).collect();
            a.eval_into(t, &x, &mut ga);
            b.eval_into(t, &x, &mut gb);
            worst = worst.max(euclid_diff(&ga, &gb));
        }
    }
    Ok(worst)
}

/// A history together with the field that drives it.
#[derive(Debug, Clone)]
pub struct SkewState {
    pub f: GridFunction,
    pub g: TimedField,
}

impl SkewState {
    pub fn new(f: GridFunction, g: TimedField) -> Result<Self> {
        if f.dim() != g.dim() {
            return Err(Error::GridMismatch(format!(
                "history has dimension {} but the field has {}",
                f.dim(),
                g.dim()
            )));
        }
        Ok(Self { f, g })
    }
}

#[derive(Debug, Clone)]
pub struct SkewProductEngine {
    disc: Discretization,
}

impl SkewProductEngine {
    pub fn new(disc: Discretization) -> Self {
        Self { disc }
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    /// `T_τ(f, g)(θ) = f(τ + θ) + ∫_0^τ a(τ+θ, s) g(s, x(s)) ds`, where `x`
    /// solves the equation driven by `g` on `[0, τ]`.
    pub fn apply_t_skew(&self, tau: f64, s: &SkewState) -> Result<GridFunction> {
        self.disc.transport(&s.g, tau, &s.f)
    }

    /// `Π(τ, f, g) = (T_τ(f, g), g_τ)`.
    pub fn apply_pi(&self, tau: f64, s: &SkewState) -> Result<SkewState> {
        Ok(SkewState {
            f: self.apply_t_skew(tau, s)?,
            g: shift_field(&s.g, tau)?,
        })
    }

    /// Compares `Π(σ + τ, s)` with `Π(σ, Π(τ, s))`: `ρ` between the
    /// histories, and evaluation distance between the fields. The reported
    /// defect is the larger of the two.
    pub fn cocycle_defect(&self, sigma: f64, tau: f64, s: &SkewState) -> Result<DefectReport> {
        let disc = &self.disc;
        if s.g.is_autonomous() {
            // Same computation as the autonomous semigroup check.
            let r = semigroup_defect_with(disc, &s.g, sigma, tau, &s.f)?;
            let mut out = DefectReport::new("cocycle", r.defect, r.tolerance, r.h, r.alpha)
                .with_horizon(r.horizon_consumed)
                .with_detail("field_distance", 0.0)
                .with_detail("history_defect", r.defect);
            out.details.extend(r.details);
            return Ok(out);
        }
        if sigma + tau >= s.f.horizon() {
            return Err(Error::HorizonExhausted {
                required: sigma + tau,
                available: s.f.horizon(),
            });
        }
        let one = self.apply_pi(sigma + tau, s)?;
        let two = self.apply_pi(sigma, &self.apply_pi(tau, s)?)?;
        let value = disc.metric_on(&one.f, &two.f)?;
        let sup = sup_dist_on(&one.f, &two.f, one.f.horizon())?;
        let fd = field_distance(&one.g, &two.g, s.f.horizon())?;
        Ok(DefectReport::new(
            "cocycle",
            value.value.max(fd),
            disc.tolerance(),
            disc.step(),
            disc.kernel().alpha(),
        )
        .with_horizon(sigma + tau)
        .with_detail("history_defect", value.value)
        .with_detail("field_distance", fd)
        .with_detail("sup_distance", sup)
        .with_detail("levels", value.levels as f64)
        .with_detail("tail_bound", value.tail_bound))
    }
}
