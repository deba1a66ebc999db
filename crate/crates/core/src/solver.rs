//! Solvers for `x(t) = f(t) + ∫_0^t a(t,s) g(s, x(s)) ds` on a uniform grid.
//!
//! Both solvers discretize the integral with the same product-integration
//! weights. Picard iteration computes the fixed point of the discrete map
//! globally; the predictor-corrector marches node by node. With the
//! converged corrector the two produce the same discrete solution.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::correction::StartingWeights;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::history::{euclid, euclid_diff, sup_dist_on, GridFunction};
use crate::kernel::{ConvolutionWeights, Kernel, UniformGrid, WeightCache};
use crate::report::DefectReport;
use crate::special::{mittag_leffler, WeightParams};
use nalgebra::{DMatrix, DVector};

/// Weight family used for the memory integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Product-trapezoidal weights only.
    #[default]
    ProductTrapezoidal,
    /// Product-trapezoidal weights plus starting corrections for the
    /// `t^{kα}` terms of the solution. Untempered kernels only.
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    /// Rate of the weight `E_α(γt^α)`; `None` means `2L`.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_picard_tol")]
    pub tolerance: f64,
    #[serde(default = "default_picard_iters")]
    pub max_iterations: usize,
    #[serde(default)]
    pub quadrature: Quadrature,
}

fn default_picard_tol() -> f64 {
    1e-10
}

fn default_picard_iters() -> usize {
    200
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            gamma: None,
            tolerance: default_picard_tol(),
            max_iterations: default_picard_iters(),
            quadrature: Quadrature::default(),
        }
    }
}

/// How the implicit trapezoidal equation at each node is treated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", deny_unknown_fields)]
pub enum Corrector {
    /// One corrector evaluation (PECE).
    #[default]
    Single,
    /// Corrector iterated to a fixed point. The node equation has a unique
    /// solution when `h^α L / Γ(α+2) < 1`; coarser grids may fail to converge.
    Converged { tolerance: f64, max_iterations: usize },
}

impl Corrector {
    pub fn converged() -> Self {
        Corrector::Converged {
            tolerance: 1e-14,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeceConfig {
    #[serde(default)]
    pub corrector: Corrector,
    #[serde(default)]
    pub quadrature: Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum SolverChoice {
    Picard(PicardConfig),
    Pece(PeceConfig),
}

impl Default for SolverChoice {
    fn default() -> Self {
        SolverChoice::Pece(PeceConfig::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Picard,
    Pece,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualNorm {
    /// `max_j ‖·‖ / E_α(γ t_j^α)`.
    Weighted,
    /// `max_j ‖·‖`.
    Sup,
}

/// Discrete solution together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: GridFunction,
    pub input: GridFunction,
    pub kernel: Kernel,
    pub solver: SolverKind,
    pub quadrature: Quadrature,
    /// Picard sweeps, or the largest number of corrector evaluations at a node.
    pub iterations: usize,
    pub residual: f64,
    pub residual_norm: ResidualNorm,
    /// Weighted-norm ratios of successive Picard corrections.
    #[serde(default)]
    pub contraction_ratios: Vec<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn grid(&self) -> UniformGrid {
        self.states.grid()
    }

    pub fn value(&self, j: usize) -> &[f64] {
        self.states.node(j)
    }

    pub fn last(&self) -> &[f64] {
        self.states.node(self.states.steps())
    }

    /// CSV with columns `t, x_1..x_d`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.states.write_csv(w, "x")
    }

    /// Everything except the sampled values.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "solver": self.solver,
            "quadrature": self.quadrature,
            "iterations": self.iterations,
            "residual": self.residual,
            "residual_norm": self.residual_norm,
            "alpha": self.kernel.alpha(),
            "beta": self.kernel.beta(),
            "h": self.grid().step(),
            "steps": self.grid().steps(),
            "dim": self.states.dim(),
            "contraction_ratios": self.contraction_ratios,
            "warnings": self.warnings,
        })
    }
}

/// The first `grid.steps() + 1` nodes of `f`, after checking step and dimension.
fn input_samples(f: &GridFunction, grid: UniformGrid, dim: usize) -> Result<&[f64]> {
    if f.dim() != dim {
        return Err(Error::GridMismatch(format!(
            "input has dimension {} but the field has {dim}",
            f.dim()
        )));
    }
    if (f.step() - grid.step()).abs() > 1e-12 * grid.step() {
        return Err(Error::GridMismatch(format!(
            "input step {} differs from solver step {}",
            f.step(),
            grid.step()
        )));
    }
    if f.steps() < grid.steps() {
        return Err(Error::HorizonExhausted {
            required: grid.horizon(),
            available: f.horizon(),
        });
    }
    Ok(&f.values()[..(grid.steps() + 1) * dim])
}

fn starting_weights(kernel: Kernel, grid: UniformGrid, q: Quadrature) -> Result<StartingWeights> {
    match q {
        Quadrature::ProductTrapezoidal => Ok(StartingWeights::none()),
        Quadrature::Corrected => StartingWeights::new(kernel, grid),
    }
}

fn eval_all<F: Field + ?Sized>(field: &F, grid: UniformGrid, x: &[f64], out: &mut [f64]) {
    let d = field.dim();
    for (j, (xs, gs)) in x.chunks(d).zip(out.chunks_mut(d)).enumerate() {
        field.eval_into(grid.time(j), xs, gs);
    }
}

fn check_finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Overflow(format!("{what} produced non-finite values")))
    }
}

/// `f_j + Σ_k w_{j,k} G_k + Σ_l c_{j,l} G_l` at every node.
fn apply_map(w: &ConvolutionWeights, sw: &StartingWeights, fvals: &[f64], g: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut out = w.convolve(g, d)?;
    for (j, (o, fv)) in out.chunks_mut(d).zip(fvals.chunks(d)).enumerate() {
        if j > 0 {
            sw.accumulate_corrector(j, g, d, o);
        }
        for (a, b) in o.iter_mut().zip(fv) {
            *a += b;
        }
    }
    Ok(out)
}

fn node_weights(gamma: f64, alpha: f64, grid: UniformGrid) -> Result<Vec<f64>> {
    (0..=grid.steps())
        .map(|j| mittag_leffler(alpha, gamma * grid.time(j).powf(alpha)))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| match e {
            Error::Overflow(_) => Error::Overflow(format!(
                "weight E_α(γ T^α) overflows for γ = {gamma}, T = {}; shorten the horizon",
                grid.horizon()
            )),
            e => e,
        })
}

fn weighted_and_sup(a: &[f64], b: &[f64], weights: &[f64], d: usize) -> (f64, f64) {
    let mut wmax = 0.0f64;
    let mut smax = 0.0f64;
    for ((p, q), e) in a.chunks(d).zip(b.chunks(d)).zip(weights) {
        let n = euclid_diff(p, q);
        smax = smax.max(n);
        wmax = wmax.max(n / e);
    }
    (wmax, smax)
}

struct PicardOutcome {
    x: Vec<f64>,
    iterations: usize,
    residual: f64,
    ratios: Vec<f64>,
    warnings: Vec<String>,
}

/// Distances below this are treated as converged to roundoff when forming ratios.
const RATIO_FLOOR: f64 = 1e-14;
const RATIO_SLACK: f64 = 0.05;

#[allow(clippy::too_many_arguments)]
fn picard_core<F: Field + ?Sized>(
    field: &F,
    w: &ConvolutionWeights,
    sw: &StartingWeights,
    fvals: &[f64],
    x0: Vec<f64>,
    gamma: f64,
    tolerance: f64,
    max_iterations: usize,
) -> Result<PicardOutcome> {
    let grid = w.grid();
    let d = field.dim();
    let ew = node_weights(gamma, w.kernel().alpha(), grid)?;
    let bound = field.lipschitz() / gamma;
    let mut x = x0;
    let mut g = vec![0.0; x.len()];
    let mut prev: Option<f64> = None;
    let mut ratios = Vec::new();
    let mut warnings = Vec::new();
    for it in 1..=max_iterations {
        eval_all(field, grid, &x, &mut g);
        let next = apply_map(w, sw, fvals, &g, d)?;
        check_finite(&next, "Picard iteration")?;
        let (dw, ds) = weighted_and_sup(&next, &x, &ew, d);
        if let Some(p) = prev {
            if p > RATIO_FLOOR && dw > RATIO_FLOOR {
                let r = dw / p;
                if r > bound + RATIO_SLACK {
                    warnings.push(format!(
                        "iteration {it}: contraction ratio {r:.4} exceeds L/γ + {RATIO_SLACK} = {:.4}; the declared Lipschitz constant may be too small",
                        bound + RATIO_SLACK
                    ));
                }
                ratios.push(r);
            }
        }
        prev = Some(dw);
        x = next;
        // The weighted criterion alone allows errors of size tol·E_α(γT^α)
        // at the end of the horizon, so the plain sup distance is also bounded.
        if dw <= tolerance && ds <= tolerance {
            return Ok(PicardOutcome {
                x,
                iterations: it,
                residual: dw,
                ratios,
                warnings,
            });
        }
    }
    let residual = prev.unwrap_or(f64::INFINITY);
    Err(Error::NonConvergence {
        iterations: max_iterations,
        residual,
    })
}

fn resolve_gamma<F: Field + ?Sized>(field: &F, cfg: &PicardConfig) -> Result<f64> {
    let l = field.lipschitz();
    let gamma = cfg.gamma.unwrap_or(2.0 * l);
    if !(gamma.is_finite() && gamma > l) {
        return Err(Error::InvalidParameter(format!(
            "Picard weight rate γ = {gamma} must exceed the Lipschitz constant L = {l}"
        )));
    }
    if !(cfg.tolerance > 0.0) || cfg.max_iterations == 0 {
        return Err(Error::InvalidParameter(
            "Picard tolerance and iteration limit must be positive".into(),
        ));
    }
    Ok(gamma)
}

/// Picard iteration from `x⁰ = f`.
pub fn solve_picard<F: Field + ?Sized>(
    field: &F,
    kernel: Kernel,
    f: &GridFunction,
    grid: UniformGrid,
    cfg: &PicardConfig,
) -> Result<Trajectory> {
    let w = ConvolutionWeights::new(kernel, grid);
    picard_with(field, &w, f, None, cfg)
}

/// Picard iteration from an arbitrary initial iterate sampled on the same grid.
pub fn solve_picard_from<F: Field + ?Sized>(
    field: &F,
    kernel: Kernel,
    f: &GridFunction,
    x0: &GridFunction,
    grid: UniformGrid,
    cfg: &PicardConfig,
) -> Result<Trajectory> {
    let w = ConvolutionWeights::new(kernel, grid);
    picard_with(field, &w, f, Some(x0), cfg)
}

fn picard_with<F: Field + ?Sized>(
    field: &F,
    w: &ConvolutionWeights,
    f: &GridFunction,
    x0: Option<&GridFunction>,
    cfg: &PicardConfig,
) -> Result<Trajectory> {
    let grid = w.grid();
    let d = field.dim();
    let gamma = resolve_gamma(field, cfg)?;
    let fvals = input_samples(f, grid, d)?;
    let start = match x0 {
        Some(x0) => input_samples(x0, grid, d)?.to_vec(),
        None => fvals.to_vec(),
    };
    let sw = starting_weights(*w.kernel(), grid, cfg.quadrature)?;
    let out = picard_core(field, w, &sw, fvals, start, gamma, cfg.tolerance, cfg.max_iterations)?;
    Ok(Trajectory {
        states: GridFunction::from_values(grid, d, out.x)?,
        input: GridFunction::from_values(grid, d, fvals.to_vec())?,
        kernel: *w.kernel(),
        solver: SolverKind::Picard,
        quadrature: cfg.quadrature,
        iterations: out.iterations,
        residual: out.residual,
        residual_norm: ResidualNorm::Weighted,
        contraction_ratios: out.ratios,
        warnings: out.warnings,
    })
}

/// Adams-type predictor (product rectangle) and trapezoidal corrector.
pub fn solve_pece<F: Field + ?Sized>(
    field: &F,
    kernel: Kernel,
    f: &GridFunction,
    grid: UniformGrid,
    cfg: &PeceConfig,
) -> Result<Trajectory> {
    let w = ConvolutionWeights::new(kernel, grid);
    pece_with(field, &w, f, cfg)
}

/// Solves `x = base + c·g(t, x)`. Plain iteration is used while `c·L < 1`;
/// otherwise, or if it stalls, damped Newton with a difference Jacobian.
#[allow(clippy::too_many_arguments)]
fn converge_node<F: Field + ?Sized>(
    field: &F,
    t: f64,
    base: &[f64],
    c: f64,
    x: &mut [f64],
    gbuf: &mut [f64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<usize> {
    let start = x.to_vec();
    if c * field.lipschitz() < 1.0 {
        for it in 1..=max_iterations {
            field.eval_into(t, x, gbuf);
            let mut change = 0.0f64;
            let mut size = 0.0f64;
            for ((xi, b), gi) in x.iter_mut().zip(base).zip(gbuf.iter()) {
                let v = b + c * gi;
                change = change.max((v - *xi).abs());
                size = size.max(v.abs());
                *xi = v;
            }
            if !change.is_finite() {
                return Err(Error::Overflow(format!("corrector diverged at t = {t}")));
            }
            if change <= tolerance * size.max(1.0) {
                return Ok(it);
            }
        }
        x.copy_from_slice(&start);
    }
    newton_node(field, t, base, c, x, tolerance, max_iterations)
}

fn node_residual<F: Field + ?Sized>(field: &F, t: f64, base: &[f64], c: f64, x: &[f64], out: &mut [f64]) {
    field.eval_into(t, x, out);
    for ((o, xi), b) in out.iter_mut().zip(x).zip(base) {
        *o = xi - b - c * *o;
    }
}

fn newton_node<F: Field + ?Sized>(
    field: &F,
    t: f64,
    base: &[f64],
    c: f64,
    x: &mut [f64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<usize> {
    let d = x.len();
    let mut r = vec![0.0; d];
    let mut rp = vec![0.0; d];
    let mut trial = vec![0.0; d];
    node_residual(field, t, base, c, x, &mut r);
    let mut rnorm = euclid(&r);
    for it in 1..=max_iterations {
        let mut jac = DMatrix::<f64>::zeros(d, d);
        for k in 0..d {
            let dx = f64::EPSILON.sqrt() * x[k].abs().max(1.0);
            trial.copy_from_slice(x);
            trial[k] += dx;
            node_residual(field, t, base, c, &trial, &mut rp);
            for i in 0..d {
                jac[(i, k)] = (rp[i] - r[i]) / dx;
            }
        }
        let rhs = DVector::from_iterator(d, r.iter().map(|v| -v));
        let step = jac.lu().solve(&rhs).ok_or(Error::NonConvergence {
            iterations: it,
            residual: rnorm,
        })?;
        let mut lambda = 1.0;
        loop {
            for k in 0..d {
                trial[k] = x[k] + lambda * step[k];
            }
            node_residual(field, t, base, c, &trial, &mut rp);
            let tn = euclid(&rp);
            if tn < rnorm || lambda < 1e-4 {
                break;
            }
            lambda *= 0.5;
        }
        let change = lambda * step.amax();
        x.copy_from_slice(&trial);
        r.copy_from_slice(&rp);
        rnorm = euclid(&r);
        if !rnorm.is_finite() {
            return Err(Error::Overflow(format!("corrector diverged at t = {t}")));
        }
        let size = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if change <= tolerance * size || rnorm <= 0.5 * tolerance * size {
            return Ok(it);
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iterations,
        residual: rnorm,
    })
}

fn pece_with<F: Field + ?Sized>(
    field: &F,
    w: &ConvolutionWeights,
    f: &GridFunction,
    cfg: &PeceConfig,
) -> Result<Trajectory> {
    let grid = w.grid();
    let n = grid.steps();
    let d = field.dim();
    let fvals = input_samples(f, grid, d)?;
    let sw = starting_weights(*w.kernel(), grid, cfg.quadrature)?;

    let mut x = fvals.to_vec();
    let mut g = vec![0.0; x.len()];
    field.eval_into(0.0, &x[..d], &mut g[..d]);
    let mut max_evals = 1usize;

    // With starting corrections every row refers to the first `p` nodes, so
    // those are solved together before marching.
    let p = sw.nodes().min(n + 1);
    let mut first = 1;
    if p > 1 {
        let block = 1..p;
        let mut row = vec![0.0; d];
        let mut converged = false;
        for it in 1..=1000 {
            eval_all(field, grid, &x[..p * d], &mut g[..p * d]);
            let mut change = 0.0f64;
            let mut size = 0.0f64;
            let mut next = x[..p * d].to_vec();
            for j in block.clone() {
                row.copy_from_slice(&fvals[j * d..(j + 1) * d]);
                w.accumulate_history(j, &g, d, &mut row);
                let wjj = w.weight(j, j);
                for (r, gv) in row.iter_mut().zip(&g[j * d..(j + 1) * d]) {
                    *r += wjj * gv;
                }
                sw.accumulate_corrector(j, &g, d, &mut row);
                for (a, b) in next[j * d..(j + 1) * d].iter_mut().zip(&row) {
                    change = change.max((b - *a).abs());
                    size = size.max(b.abs());
                    *a = *b;
                }
            }
            check_finite(&next, "starting block")?;
            x[..p * d].copy_from_slice(&next);
            if change <= 1e-15 * size.max(1.0) {
                max_evals = max_evals.max(it);
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                iterations: 1000,
                residual: f64::NAN,
            });
        }
        eval_all(field, grid, &x[..p * d], &mut g[..p * d]);
        first = p;
    }

    let mut hist = vec![0.0; d];
    let mut pred = vec![0.0; d];
    let mut gbuf = vec![0.0; d];
    for j in first..=n {
        let t = grid.time(j);
        let fj = &fvals[j * d..(j + 1) * d];
        hist.copy_from_slice(fj);
        w.accumulate_history(j, &g, d, &mut hist);
        sw.accumulate_corrector(j, &g, d, &mut hist);
        pred.copy_from_slice(fj);
        w.accumulate_predictor(j, &g, d, &mut pred);
        sw.accumulate_predictor(j, &g, d, &mut pred);

        let wjj = w.weight(j, j);
        field.eval_into(t, &pred, &mut gbuf);
        let xj = &mut x[j * d..(j + 1) * d];
        for ((xi, hi), gi) in xj.iter_mut().zip(&hist).zip(&gbuf) {
            *xi = hi + wjj * gi;
        }
        if let Corrector::Converged {
            tolerance,
            max_iterations,
        } = cfg.corrector
        {
            let evals = converge_node(field, t, &hist, wjj, xj, &mut gbuf, tolerance, max_iterations)?;
            max_evals = max_evals.max(evals + 1);
        }
        if !xj.iter().all(|v| v.is_finite()) {
            return Err(Error::Overflow(format!("solution left f64 range at t = {t}")));
        }
        let (xj, gj) = (&x[j * d..(j + 1) * d], &mut g[j * d..(j + 1) * d]);
        field.eval_into(t, xj, gj);
    }

    // Residual of the discrete trapezoidal equation, in the sup norm.
    let mapped = apply_map(w, &sw, fvals, &g, d)?;
    let residual = x
        .chunks(d)
        .zip(mapped.chunks(d))
        .map(|(a, b)| euclid_diff(a, b))
        .fold(0.0, f64::max);

    Ok(Trajectory {
        states: GridFunction::from_values(grid, d, x)?,
        input: GridFunction::from_values(grid, d, fvals.to_vec())?,
        kernel: *w.kernel(),
        solver: SolverKind::Pece,
        quadrature: cfg.quadrature,
        iterations: max_evals,
        residual,
        residual_norm: ResidualNorm::Sup,
        contraction_ratios: Vec::new(),
        warnings: Vec::new(),
    })
}

impl SolverChoice {
    pub fn quadrature(&self) -> Quadrature {
        match self {
            SolverChoice::Picard(c) => c.quadrature,
            SolverChoice::Pece(c) => c.quadrature,
        }
    }

    pub fn solve<F: Field + ?Sized>(
        &self,
        field: &F,
        kernel: Kernel,
        f: &GridFunction,
        grid: UniformGrid,
    ) -> Result<Trajectory> {
        let w = ConvolutionWeights::new(kernel, grid);
        self.solve_with(field, &w, f)
    }

    /// Solve with weight tables taken from (or added to) `cache`.
    pub fn solve_cached<F: Field + ?Sized>(
        &self,
        field: &F,
        kernel: Kernel,
        f: &GridFunction,
        grid: UniformGrid,
        cache: &WeightCache,
    ) -> Result<Trajectory> {
        let w = cache.get(kernel, grid);
        self.solve_with(field, &w, f)
    }

    fn solve_with<F: Field + ?Sized>(&self, field: &F, w: &ConvolutionWeights, f: &GridFunction) -> Result<Trajectory> {
        match self {
            SolverChoice::Picard(cfg) => picard_with(field, w, f, None, cfg),
            SolverChoice::Pece(cfg) => pece_with(field, w, f, cfg),
        }
    }
}

/// `sup_{[0,T]} ‖f - h‖ · E_α(L T^α)`, for `α ∈ (0, 1]`.
pub fn continuity_bound(f: &GridFunction, h: &GridFunction, lipschitz: f64, alpha: f64, horizon: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "order must lie in (0, 1], got {alpha}"
        )));
    }
    if !(lipschitz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Lipschitz constant must be positive, got {lipschitz}"
        )));
    }
    let s = sup_dist_on(f, h, horizon)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(s * mittag_leffler(alpha, lipschitz * horizon.powf(alpha))?)
}

/// Solves with inputs `f` and `h` and compares their distance with
/// [`continuity_bound`]. Passes when the measured distance is at most the
/// bound plus `slack`.
pub fn verify_continuity<F: Field + ?Sized>(
    field: &F,
    kernel: Kernel,
    f: &GridFunction,
    h: &GridFunction,
    grid: UniformGrid,
    solver: &SolverChoice,
    slack: f64,
) -> Result<DefectReport> {
    let w = ConvolutionWeights::new(kernel, grid);
    let xf = solver.solve_with(field, &w, f)?;
    let xh = solver.solve_with(field, &w, h)?;
    let measured = sup_dist_on(&xf.states, &xh.states, grid.horizon())?;
    let input_gap = sup_dist_on(&xf.input, &xh.input, grid.horizon())?;
    let bound = continuity_bound(&xf.input, &xh.input, field.lipschitz(), kernel.alpha(), grid.horizon())?;
    Ok(
        DefectReport::new("continuity", measured, bound + slack, grid.step(), kernel.alpha())
            .with_detail("bound", bound)
            .with_detail("input_distance", input_gap)
            .with_detail("slack", slack),
    )
}

/// Bielecki norm of `x` with rate `γ`.
pub fn weighted_norm(x: &GridFunction, gamma: f64, kernel: Kernel) -> Result<f64> {
    crate::special::bielecki_norm(x, &WeightParams::new(gamma, kernel.order())?)
}

/// `max_j ‖x_j‖`.
pub fn sup_norm(x: &GridFunction) -> f64 {
    (0..=x.steps()).map(|j| euclid(x.node(j))).fold(0.0, f64::max)
}
