//! The weakly singular kernel `a(t,s) = (t-s)^{α-1}/Γ(α)`, its tempered
//! variant `ã(t,s) = a(t,s)·e^{-β(t-s)}`, and product-integration weights for
//! `∫_0^{t_j} a(t_j,s) φ(s) ds` on uniform grids.
//!
//! Weights are assembled panel by panel. On the panel `[t_p, t_{p+1}]` seen
//! from node `t_j` (distance index `m = j - p - 1`) the kernel is integrated
//! exactly against the two hat functions of the piecewise-linear interpolant:
//!
//! ```text
//! far(m)  = ∫_0^1 (m+y)^{α-1} y dy        (weight on φ(t_p))
//! near(m) = ∫_0^1 (m+y)^{α-1} (1-y) dy    (weight on φ(t_{p+1}))
//! rect(m) = ∫_0^1 (m+y)^{α-1} dy          (left-point rule, predictor)
//! ```
//!
//! all scaled by `h^α/Γ(α)`. Since the moments depend on `m` only, the
//! tables are Toeplitz and take `O(N)` memory.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::special::FractionalOrder;

/// Uniform time grid `t_j = j·h`, `j = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    step: f64,
    steps: usize,
}

impl UniformGrid {
    pub fn new(step: f64, steps: usize) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid step must be positive, got {step}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("grid needs at least one step".into()));
        }
        Ok(Self { step, steps })
    }

    /// Grid of step `h` covering `[0, horizon]`; `horizon` must be a multiple of `h`.
    pub fn with_horizon(step: f64, horizon: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid step must be positive, got {step}"
            )));
        }
        let steps = align(horizon, step)?;
        Self::new(step, steps)
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.step
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.steps)
    }
}

/// Number of steps of size `step` in `t`, rejecting values off the grid.
pub fn align(t: f64, step: f64) -> Result<usize> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    let r = t / step;
    let n = r.round();
    if (r - n).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::NotGridAligned { value: t, step });
    }
    Ok(n as usize)
}

/// Convolution kernel, optionally tempered by `e^{-β(t-s)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    order: FractionalOrder,
    beta: f64,
}

impl Kernel {
    pub fn new(order: FractionalOrder, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidParameter(format!("tempering must be ≥ 0, got {beta}")));
        }
        Ok(Self { order, beta })
    }

    /// Untempered kernel.
    pub fn caputo(order: FractionalOrder) -> Self {
        Self { order, beta: 0.0 }
    }

    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.order.value()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_tempered(&self) -> bool {
        self.beta > 0.0
    }

    /// `(t-s)^{α-1} e^{-β(t-s)} / Γ(α)` for `0 ≤ s < t`.
    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        if !(s >= 0.0 && s < t) {
            return Err(Error::Domain(format!("kernel needs 0 ≤ s < t, got s = {s}, t = {t}")));
        }
        let u = t - s;
        Ok(u.powf(self.alpha() - 1.0) * (-self.beta * u).exp() / self.order.gamma())
    }
}

/// Free-function form of [`Kernel::eval`].
pub fn kernel_eval(k: &Kernel, t: f64, s: f64) -> Result<f64> {
    k.eval(t, s)
}

/// `∫_0^τ a(τ+θ, s) ds = ((τ+θ)^α - θ^α) / (αΓ(α))` for the untempered kernel.
pub fn kernel_mass(order: FractionalOrder, tau: f64, theta: f64) -> f64 {
    let a = order.value();
    let denom = a * order.gamma();
    if tau <= 0.0 {
        return 0.0;
    }
    if theta <= 0.0 {
        return tau.powf(a) / denom;
    }
    // θ^α((1+τ/θ)^α - 1) avoids cancellation when θ ≫ τ.
    theta.powf(a) * (a * (tau / theta).ln_1p()).exp_m1() / denom
}

/// Unscaled panel moments `(far, near, rect)` at distance index `m`.
fn panel_moments(alpha: f64, m: usize) -> (f64, f64, f64) {
    if m == 0 {
        return (1.0 / (alpha + 1.0), 1.0 / (alpha * (alpha + 1.0)), 1.0 / alpha);
    }
    let mf = m as f64;
    if m < 8 {
        let inv = 1.0 / mf;
        let a = mf.powf(alpha) * (alpha * inv.ln_1p()).exp_m1() / alpha;
        let b = mf.powf(alpha + 1.0) * ((alpha + 1.0) * inv.ln_1p()).exp_m1() / (alpha + 1.0);
        return (b - mf * a, (mf + 1.0) * a - b, a);
    }
    // Binomial series of (1 + y/m)^{α-1} integrated term by term.
    let x = 1.0 / mf;
    let (mut far, mut near, mut rect) = (0.0, 0.0, 0.0);
    let mut c = 1.0;
    let mut xp = 1.0;
    for j in 0..60 {
        let jf = j as f64;
        let t = c * xp;
        far += t / (jf + 2.0);
        near += t / ((jf + 1.0) * (jf + 2.0));
        rect += t / (jf + 1.0);
        if t.abs() < 1e-18 {
            break;
        }
        c *= (alpha - 1.0 - jf) / (jf + 1.0);
        xp *= x;
    }
    let p = mf.powf(alpha - 1.0);
    (far * p, near * p, rect * p)
}

/// Product-integration weight tables for one kernel on one grid.
#[derive(Debug, Clone)]
pub struct ConvolutionWeights {
    kernel: Kernel,
    grid: UniformGrid,
    scale: f64,
    far: Vec<f64>,
    near: Vec<f64>,
    rect: Vec<f64>,
}

impl ConvolutionWeights {
    /// Builds the product-trapezoidal (corrector) and product-rectangle
    /// (predictor) tables. With tempering the exponential factor is frozen at
    /// each panel's midpoint.
    pub fn new(kernel: Kernel, grid: UniformGrid) -> Self {
        let alpha = kernel.alpha();
        let h = grid.step();
        let n = grid.steps();
        let mut far = Vec::with_capacity(n);
        let mut near = Vec::with_capacity(n);
        let mut rect = Vec::with_capacity(n);
        for m in 0..n {
            let (f, nr, r) = panel_moments(alpha, m);
            let damp = if kernel.is_tempered() {
                (-kernel.beta() * h * (m as f64 + 0.5)).exp()
            } else {
                1.0
            };
            far.push(f * damp);
            near.push(nr * damp);
            rect.push(r * damp);
        }
        Self {
            kernel,
            grid,
            scale: h.powf(alpha) / kernel.order().gamma(),
            far,
            near,
            rect,
        }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn grid(&self) -> UniformGrid {
        self.grid
    }

    /// Common factor `h^α/Γ(α)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Scaled `(far, near)` contributions of the panel at distance index `m`.
    #[inline]
    pub fn panel(&self, m: usize) -> (f64, f64) {
        (self.scale * self.far[m], self.scale * self.near[m])
    }

    /// Corrector weight `w_{j,k}` (zero outside `0 ≤ k ≤ j`, and for `j = 0`).
    pub fn weight(&self, j: usize, k: usize) -> f64 {
        if j == 0 || k > j || j > self.grid.steps() {
            return 0.0;
        }
        let d = j - k;
        let w = if k == j {
            self.near[0]
        } else if k == 0 {
            self.far[j - 1]
        } else {
            self.far[d - 1] + self.near[d]
        };
        self.scale * w
    }

    /// Predictor weight `b_{j,k}` (product rectangle rule, `k < j`).
    pub fn predictor_weight(&self, j: usize, k: usize) -> f64 {
        if k >= j || j > self.grid.steps() {
            return 0.0;
        }
        self.scale * self.rect[j - k - 1]
    }

    /// `Σ_k w_{j,k}`, equal to `t_j^α/(αΓ(α))` for the untempered kernel.
    pub fn row_sum(&self, j: usize) -> f64 {
        (0..=j).map(|k| self.weight(j, k)).sum()
    }

    /// `out += Σ_{k<j} w_{j,k} φ_k` for one row, excluding the diagonal term.
    pub(crate) fn accumulate_history(&self, j: usize, samples: &[f64], dim: usize, out: &mut [f64]) {
        for k in 0..j {
            let w = self.weight(j, k);
            let s = &samples[k * dim..(k + 1) * dim];
            for (o, v) in out.iter_mut().zip(s) {
                *o += w * v;
            }
        }
    }

    /// `out += Σ_{k<j} b_{j,k} φ_k`.
    pub(crate) fn accumulate_predictor(&self, j: usize, samples: &[f64], dim: usize, out: &mut [f64]) {
        for k in 0..j {
            let w = self.predictor_weight(j, k);
            let s = &samples[k * dim..(k + 1) * dim];
            for (o, v) in out.iter_mut().zip(s) {
                *o += w * v;
            }
        }
    }

    /// `out += ∫_0^{t_p} a(t_row, s) φ̂(s) ds` where `φ̂` interpolates the
    /// first `panels + 1` samples and `row ≥ panels`. For `row == panels`
    /// this is the full corrector row.
    pub(crate) fn accumulate_memory(&self, row: usize, panels: usize, samples: &[f64], dim: usize, out: &mut [f64]) {
        for p in 0..panels {
            let (wf, wn) = self.panel(row - p - 1);
            let a = &samples[p * dim..(p + 1) * dim];
            let b = &samples[(p + 1) * dim..(p + 2) * dim];
            for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                *o += wf * x + wn * y;
            }
        }
    }

    /// Discrete convolution `Σ_k w_{j,k} φ_k` at every node. `samples` is
    /// row-major with `dim` components per node.
    pub fn convolve(&self, samples: &[f64], dim: usize) -> Result<Vec<f64>> {
        let nodes = self.grid.steps() + 1;
        if dim == 0 || !samples.len().is_multiple_of(dim) || samples.len() < nodes * dim {
            return Err(Error::LengthMismatch {
                expected: nodes * dim.max(1),
                actual: samples.len(),
            });
        }
        let mut out = vec![0.0; nodes * dim];
        let mut row = vec![0.0; dim];
        for j in 1..nodes {
            row.fill(0.0);
            self.accumulate_history(j, samples, dim, &mut row);
            let w = self.weight(j, j);
            for (o, v) in row.iter_mut().zip(&samples[j * dim..(j + 1) * dim]) {
                *o += w * v;
            }
            out[j * dim..(j + 1) * dim].copy_from_slice(&row);
        }
        Ok(out)
    }
}

/// Free-function form of [`ConvolutionWeights::new`] for the untempered kernel.
pub fn conv_weights(order: FractionalOrder, grid: UniformGrid) -> ConvolutionWeights {
    ConvolutionWeights::new(Kernel::caputo(order), grid)
}

/// Free-function form of [`ConvolutionWeights::convolve`].
pub fn convolve(w: &ConvolutionWeights, samples: &[f64], dim: usize) -> Result<Vec<f64>> {
    w.convolve(samples, dim)
}

type CacheKey = (u64, u64, u64, usize);

/// Shared cache of weight tables keyed by the exact bits of `(α, β, h)` and
/// the step count.
#[derive(Debug, Default, Clone)]
pub struct WeightCache {
    inner: Arc<Mutex<HashMap<CacheKey, Arc<ConvolutionWeights>>>>,
}

impl WeightCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, kernel: Kernel, grid: UniformGrid) -> Arc<ConvolutionWeights> {
        let key = (
            kernel.alpha().to_bits(),
            kernel.beta().to_bits(),
            grid.step().to_bits(),
            grid.steps(),
        );
        if let Some(w) = self.inner.lock().unwrap().get(&key) {
            return Arc::clone(w);
        }
        let w = Arc::new(ConvolutionWeights::new(kernel, grid));
        self.inner
            .lock()
            .unwrap()
            .entry(key)
            .or_insert_with(|| Arc::clone(&w))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
