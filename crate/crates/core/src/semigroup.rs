//! The history semigroup
//!
//! ```text
//! (T_τ f)(θ) = f(τ + θ) + ∫_0^τ a(τ+θ, s) g(x_f(s)) ds,
//! ```
//!
//! which carries an input history `f` forward by `τ` together with the memory
//! the solution has accumulated on `[0, τ]`.
//!
//! The memory integral at every `θ` is a product integral of the kernel
//! against the piecewise-linear interpolant of `g(x_f)`, computed with the
//! same panel moments as the solver. With this choice the discrete
//! operators compose exactly: `T_σ T_τ f` and `T_{σ+τ} f` differ only by how
//! accurately each node equation was solved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, VectorField};
use crate::history::{euclid, rho, rho_n, sup_dist_on, GridFunction, MetricParams, MetricValue};
use crate::kernel::{align, kernel_mass, Kernel, UniformGrid, WeightCache};
use crate::report::DefectReport;
use crate::solver::{Corrector, PeceConfig, PicardConfig, Quadrature, SolverChoice, Trajectory};

/// Grid, kernel, metric and solver shared by every history operation.
#[derive(Debug, Clone)]
pub struct Discretization {
    kernel: Kernel,
    step: f64,
    metric: MetricParams,
    solver: SolverChoice,
    tolerance: f64,
    cache: WeightCache,
}

impl Discretization {
    /// Defaults: four metric levels, converged corrector (relative node
    /// tolerance `1e-12`), defect tolerance `1e-10`.
    pub fn new(kernel: Kernel, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid step must be positive, got {step}"
            )));
        }
        Ok(Self {
            kernel,
            step,
            metric: MetricParams::default(),
            solver: SolverChoice::Pece(PeceConfig {
                corrector: Corrector::Converged {
                    tolerance: 1e-12,
                    max_iterations: 100,
                },
                quadrature: Quadrature::ProductTrapezoidal,
            }),
            tolerance: 1e-10,
            cache: WeightCache::new(),
        })
    }

    pub fn with_metric(mut self, metric: MetricParams) -> Self {
        self.metric = metric;
        self
    }

    /// History operators need the plain product-trapezoidal weights, whose
    /// Toeplitz structure makes the discrete identities exact.
    pub fn with_solver(mut self, solver: SolverChoice) -> Result<Self> {
        if solver.quadrature() != Quadrature::ProductTrapezoidal {
            return Err(Error::InvalidParameter(
                "history operators require product-trapezoidal quadrature without starting corrections".into(),
            ));
        }
        self.solver = solver;
        Ok(self)
    }

    /// Tolerance used for the pass flag of defect reports.
    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be ≥ 0, got {tolerance}"
            )));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn metric(&self) -> MetricParams {
        self.metric
    }

    pub fn solver(&self) -> SolverChoice {
        self.solver
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn cache(&self) -> &WeightCache {
        &self.cache
    }

    /// Accuracy to which the solver resolves each discrete equation; the
    /// defect tolerance when the corrector is applied only once.
    pub fn solver_tolerance(&self) -> f64 {
        match self.solver {
            SolverChoice::Picard(PicardConfig { tolerance, .. }) => tolerance,
            SolverChoice::Pece(PeceConfig {
                corrector: Corrector::Converged { tolerance, .. },
                ..
            }) => tolerance,
            SolverChoice::Pece(_) => self.tolerance,
        }
    }

    pub fn grid(&self, steps: usize) -> Result<UniformGrid> {
        UniformGrid::new(self.step, steps)
    }

    pub(crate) fn check_input(&self, f: &GridFunction) -> Result<()> {
        if (f.step() - self.step).abs() > 1e-12 * self.step {
            return Err(Error::GridMismatch(format!(
                "history step {} differs from engine step {}",
                f.step(),
                self.step
            )));
        }
        Ok(())
    }

    pub(crate) fn solve<F: Field + ?Sized>(&self, field: &F, f: &GridFunction, steps: usize) -> Result<Trajectory> {
        self.solver
            .solve_cached(field, self.kernel, f, self.grid(steps)?, &self.cache)
    }

    /// `ρ` on the common horizon, with as many levels as fit (at most the
    /// configured number).
    pub(crate) fn metric_on(&self, a: &GridFunction, b: &GridFunction) -> Result<MetricValue> {
        let available = a.horizon().min(b.horizon());
        let fit = (available * (1.0 + 1e-12)).floor() as usize;
        if fit == 0 {
            return Err(Error::HorizonExhausted {
                required: 1.0,
                available,
            });
        }
        rho(a, b, &MetricParams::new(fit.min(self.metric.levels()))?)
    }

    /// `T_τ f` for the field `g(t, x)`; the time argument of `g` is the
    /// solver time on `[0, τ]`.
    pub(crate) fn transport<F: Field + ?Sized>(&self, field: &F, tau: f64, f: &GridFunction) -> Result<GridFunction> {
        self.check_input(f)?;
        let m = align(tau, self.step)?;
        if m == 0 {
            return Ok(f.clone());
        }
        let n = f.steps();
        if m >= n {
            return Err(Error::HorizonExhausted {
                required: tau,
                available: f.horizon(),
            });
        }
        let d = f.dim();
        let x = self.solve(field, f, m)?;
        let mut g = vec![0.0; (m + 1) * d];
        for (k, gk) in g.chunks_mut(d).enumerate() {
            field.eval_into(x.grid().time(k), x.value(k), gk);
        }
        let weights = self.cache.get(self.kernel, self.grid(n)?);
        let mut out = Vec::with_capacity((n - m + 1) * d);
        let mut row = vec![0.0; d];
        for i in 0..=(n - m) {
            row.copy_from_slice(f.node(m + i));
            weights.accumulate_memory(m + i, m, &g, d, &mut row);
            out.extend_from_slice(&row);
        }
        GridFunction::from_values(self.grid(n - m)?, d, out)
    }
}

/// Per-coordinate monotonicity of a sampled window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Constant,
    Increasing,
    Decreasing,
    Mixed,
}

/// Statistics of the trailing window of a long solve from a constant history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaReport {
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub window: f64,
    pub h: f64,
    pub alpha: f64,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub mean: Vec<f64>,
    /// Largest per-coordinate `max - min` over the window.
    pub oscillation: f64,
    pub trend: Vec<Trend>,
    pub last: Vec<f64>,
    pub tolerance: f64,
    /// Oscillation at most `tolerance`.
    pub converged: bool,
}

/// `T_τ` for an autonomous or time-dependent field.
#[derive(Debug, Clone)]
pub struct SemigroupEngine {
    disc: Discretization,
    field: VectorField,
}

impl SemigroupEngine {
    pub fn new(disc: Discretization, field: VectorField) -> Self {
        Self { disc, field }
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    fn alpha(&self) -> f64 {
        self.disc.kernel.alpha()
    }

    /// `T_τ f` on the horizon `H - τ`.
    pub fn apply_t(&self, tau: f64, f: &GridFunction) -> Result<GridFunction> {
        self.disc.transport(&self.field, tau, f)
    }

    /// Solution with input `f` on `[0, horizon]`.
    pub fn solve(&self, f: &GridFunction, horizon: f64) -> Result<Trajectory> {
        self.disc.check_input(f)?;
        self.disc.solve(&self.field, f, align(horizon, self.disc.step)?)
    }

    /// `ρ(T_{σ+τ} f, T_σ T_τ f)` on the remaining horizon `H - σ - τ`.
    pub fn semigroup_defect(&self, sigma: f64, tau: f64, f: &GridFunction) -> Result<DefectReport> {
        semigroup_defect_with(&self.disc, &self.field, sigma, tau, f)
    }

    /// `max_i ‖x_f(τ + t_i) - ψ(t_i)‖ / max(1, max_j ‖x_f(t_j)‖)` where `ψ`
    /// solves the equation with input `T_τ f` on `[0, H - τ]`.
    pub fn shift_identity_residual(&self, tau: f64, f: &GridFunction) -> Result<DefectReport> {
        let disc = &self.disc;
        disc.check_input(f)?;
        let m = align(tau, disc.step)?;
        let n = f.steps();
        if m >= n {
            return Err(Error::HorizonExhausted {
                required: tau,
                available: f.horizon(),
            });
        }
        let x = disc.solve(&self.field, f, n)?;
        let shifted_input = self.apply_t(tau, f)?;
        let psi = disc.solve(&self.field, &shifted_input, n - m)?;
        let tail = x.states.shifted(tau)?;
        let residual = sup_dist_on(&tail, &psi.states, tail.horizon())?;
        // Node equations are solved to a relative tolerance, so the residual
        // is measured relative to the size of the solution.
        let scale = crate::solver::sup_norm(&x.states).max(1.0);
        Ok(DefectReport::new(
            "shift",
            residual / scale,
            2.0 * disc.solver_tolerance(),
            disc.step,
            self.alpha(),
        )
        .with_horizon(tau)
        .with_detail("absolute_residual", residual)
        .with_detail("solution_scale", scale)
        .with_detail("solver_tolerance", disc.solver_tolerance()))
    }

    /// `ρ(T_τ f*, f*)` for the constant history `f* ≡ x*`, on a history long
    /// enough for the full metric. Reports `‖g(x*)‖` alongside.
    pub fn steady_state_residual(&self, x_star: &[f64], tau: f64) -> Result<DefectReport> {
        let disc = &self.disc;
        if x_star.len() != self.field.dim() {
            return Err(Error::LengthMismatch {
                expected: self.field.dim(),
                actual: x_star.len(),
            });
        }
        let m = align(tau, disc.step)?;
        let levels = disc.metric.levels();
        let tail_steps = align(levels as f64, disc.step)?;
        let f_star = GridFunction::constant(disc.grid(m + tail_steps)?, x_star)?;
        let moved = self.apply_t(tau, &f_star)?;
        let reference = GridFunction::constant(moved.grid(), x_star)?;
        let value = disc.metric_on(&moved, &reference)?;
        let sup = sup_dist_on(&moved, &reference, moved.horizon())?;
        let g_norm = euclid(&self.field.eval(0.0, x_star));
        Ok(
            DefectReport::new("steady", value.value, disc.tolerance, disc.step, self.alpha())
                .with_horizon(tau)
                .with_detail("g_norm", g_norm)
                .with_detail("sup_distance", sup)
                .with_detail("tail_bound", value.tail_bound),
        )
    }

    /// Solves from `f₀ ≡ x₀` on `[0, horizon]` and summarizes the values on
    /// `[horizon - window, horizon]`.
    pub fn omega_probe(&self, x0: &[f64], horizon: f64, window: f64, tolerance: f64) -> Result<OmegaReport> {
        let disc = &self.disc;
        if !(window > 0.0 && window < horizon) {
            return Err(Error::InvalidParameter(format!(
                "window must lie in (0, horizon), got {window} with horizon {horizon}"
            )));
        }
        if x0.len() != self.field.dim() {
            return Err(Error::LengthMismatch {
                expected: self.field.dim(),
                actual: x0.len(),
            });
        }
        let n = align(horizon, disc.step)?;
        let w = align(window, disc.step)?;
        let f0 = GridFunction::constant(disc.grid(n)?, x0)?;
        let traj = disc.solve(&self.field, &f0, n)?;
        let d = x0.len();
        let nodes = (n - w)..=n;
        let count = (w + 1) as f64;
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        let mut mean = vec![0.0; d];
        let mut up = vec![false; d];
        let mut down = vec![false; d];
        for j in nodes.clone() {
            let v = traj.value(j);
            for i in 0..d {
                min[i] = min[i].min(v[i]);
                max[i] = max[i].max(v[i]);
                mean[i] += v[i] / count;
                if j > n - w {
                    let prev = traj.value(j - 1)[i];
                    up[i] |= v[i] > prev;
                    down[i] |= v[i] < prev;
                }
            }
        }
        let trend = up
            .iter()
            .zip(&down)
            .map(|(&u, &dn)| match (u, dn) {
                (false, false) => Trend::Constant,
                (true, false) => Trend::Increasing,
                (false, true) => Trend::Decreasing,
                (true, true) => Trend::Mixed,
            })
            .collect();
        let oscillation = min.iter().zip(&max).map(|(a, b)| b - a).fold(0.0, f64::max);
        Ok(OmegaReport {
            x0: x0.to_vec(),
            horizon,
            window,
            h: disc.step,
            alpha: self.alpha(),
            min,
            max,
            mean,
            oscillation,
            trend,
            last: traj.last().to_vec(),
            tolerance,
            converged: oscillation <= tolerance,
        })
    }

    /// Checks `ρ(T_τ f, T_τ h) ≤ Σ_n 2^{-n}[ρ_{n+k}(f, h) + L(k+n)^α S/(αΓ(α))]`
    /// with `k = ⌈τ⌉` and `S = sup_{[0,τ]} ‖x_f - x_h‖`, and the coarser
    /// `2^k ρ(f, h) + L c S/(αΓ(α))` with `c = Σ_n (k+n)^α 2^{-n}` plus its
    /// tail bound. The inputs need horizon at least `k + N`.
    pub fn continuity_estimate(&self, tau: f64, f: &GridFunction, h: &GridFunction) -> Result<DefectReport> {
        let disc = &self.disc;
        disc.check_input(f)?;
        disc.check_input(h)?;
        let m = align(tau, disc.step)?;
        let k = tau.ceil() as usize;
        let levels = disc.metric.levels();
        let available = f.horizon().min(h.horizon());
        if ((k + levels) as f64) > available * (1.0 + 1e-12) {
            return Err(Error::HorizonExhausted {
                required: (k + levels) as f64,
                available,
            });
        }
        let tf = self.apply_t(tau, f)?;
        let th = self.apply_t(tau, h)?;
        let lhs = rho(&tf, &th, &disc.metric)?.value;

        let s = if m == 0 {
            0.0
        } else {
            let xf = disc.solve(&self.field, f, m)?;
            let xh = disc.solve(&self.field, h, m)?;
            sup_dist_on(&xf.states, &xh.states, xf.grid().horizon())?
        };
        let a = self.alpha();
        let scale = self.field.lipschitz() * s / (a * disc.kernel.order().gamma());
        let mut termwise = 0.0;
        let mut c = 0.0;
        for n in 1..=levels {
            let wn = 0.5f64.powi(n as i32);
            termwise += wn * (rho_n(f, h, n + k)? + scale * ((k + n) as f64).powf(a));
            c += wn * ((k + n) as f64).powf(a);
        }
        let c_tail = 0.5f64.powi(levels as i32) * (k + levels + 2) as f64;
        let rho_fh = rho(f, h, &MetricParams::new(levels + k)?)?.value;
        let coarse = 2f64.powi(k as i32) * rho_fh + scale * (c + c_tail);
        // A violation shows up as a positive excess over the termwise bound.
        let excess = (lhs - termwise).max(0.0);
        Ok(DefectReport::new("continuity_estimate", excess, 1e-12, disc.step, a)
            .with_horizon(tau)
            .with_detail("lhs", lhs)
            .with_detail("termwise_bound", termwise)
            .with_detail("bound", coarse)
            .with_detail("c", c)
            .with_detail("c_tail", c_tail)
            .with_detail("solution_distance", s)
            .with_detail("mass_at_zero", kernel_mass(disc.kernel.order(), tau, 0.0)))
    }
}

pub(crate) fn semigroup_defect_with<F: Field + ?Sized>(
    disc: &Discretization,
    field: &F,
    sigma: f64,
    tau: f64,
    f: &GridFunction,
) -> Result<DefectReport> {
    disc.check_input(f)?;
    let ms = align(sigma, disc.step)?;
    let mt = align(tau, disc.step)?;
    if ms + mt >= f.steps() {
        return Err(Error::HorizonExhausted {
            required: sigma + tau,
            available: f.horizon(),
        });
    }
    let one_step = disc.transport(field, sigma + tau, f)?;
    let two_step = disc.transport(field, sigma, &disc.transport(field, tau, f)?)?;
    let value = disc.metric_on(&one_step, &two_step)?;
    let sup = sup_dist_on(&one_step, &two_step, one_step.horizon())?;
    Ok(
        DefectReport::new("semigroup", value.value, disc.tolerance, disc.step, disc.kernel.alpha())
            .with_horizon(sigma + tau)
            .with_detail("sup_distance", sup)
            .with_detail("levels", value.levels as f64)
            .with_detail("tail_bound", value.tail_bound),
    )
}
