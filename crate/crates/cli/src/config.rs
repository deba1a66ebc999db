//! Run configuration, read from TOML. Unknown keys are rejected everywhere.

use caputo_core::{
    align, Corrector, Discretization, FractionalOrder, GridFunction, Kernel, MetricParams, PeceConfig, PicardConfig,
    Quadrature, SolverChoice, UniformGrid, VectorField,
};
use serde::{Deserialize, Serialize};

/// Invalid configuration; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    pub field: FieldPreset,
    pub input: InputPreset,
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub params: Params,
}

fn one() -> usize {
    1
}

fn default_lower() -> f64 {
    -0.5
}

fn default_upper() -> f64 {
    1.5
}

/// Right-hand side `g`. `lipschitz` overrides the declared constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldPreset {
    Zero {
        #[serde(default = "one")]
        dim: usize,
    },
    Constant {
        c: Vec<f64>,
    },
    Linear {
        lambda: f64,
        #[serde(default = "one")]
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<f64>,
    },
    /// `x(1-x)` with the state clamped to `[lower, upper]`.
    Logistic {
        #[serde(default = "default_lower")]
        lower: f64,
        #[serde(default = "default_upper")]
        upper: f64,
        #[serde(default = "one")]
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<f64>,
    },
    /// `-x + A sin(ωt)`.
    LinearForced {
        amplitude: f64,
        omega: f64,
        #[serde(default = "one")]
        dim: usize,
    },
}

impl FieldPreset {
    pub fn dim(&self) -> usize {
        match self {
            FieldPreset::Zero { dim }
            | FieldPreset::Linear { dim, .. }
            | FieldPreset::Logistic { dim, .. }
            | FieldPreset::LinearForced { dim, .. } => *dim,
            FieldPreset::Constant { c } => c.len(),
        }
    }

    pub fn build(&self) -> Result<VectorField, ConfigError> {
        let dim = self.dim();
        if dim == 0 {
            return bad("field.dim must be at least 1");
        }
        let wrap = |r: caputo_core::Result<VectorField>| r.map_err(|e| ConfigError(format!("field: {e}")));
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                bad(format!("field.{name} must be finite, got {v}"))
            }
        };
        let with_l = |f: VectorField, l: Option<f64>| match l {
            Some(l) => wrap(f.with_lipschitz(l)),
            None => Ok(f),
        };
        match self {
            FieldPreset::Zero { .. } => Ok(VectorField::zero(dim)),
            FieldPreset::Constant { c } => {
                for v in c {
                    finite("c", *v)?;
                }
                wrap(VectorField::constant(c.clone()))
            }
            FieldPreset::Linear { lambda, lipschitz, .. } => {
                finite("lambda", *lambda)?;
                with_l(VectorField::linear(dim, *lambda), *lipschitz)
            }
            FieldPreset::Logistic {
                lower,
                upper,
                lipschitz,
                ..
            } => {
                finite("lower", *lower)?;
                finite("upper", *upper)?;
                with_l(wrap(VectorField::logistic(dim, *lower, *upper))?, *lipschitz)
            }
            FieldPreset::LinearForced { amplitude, omega, .. } => {
                finite("amplitude", *amplitude)?;
                finite("omega", *omega)?;
                Ok(VectorField::linear_forced(dim, *amplitude, *omega))
            }
        }
    }
}

/// History `f`. Scalar presets apply the same function to every component;
/// `constant.value` may list one value or one per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputPreset {
    Constant {
        value: Vec<f64>,
    },
    /// `Σ_k c_k t^k`.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// `offset + amplitude·sin(ωt + phase)`.
    Sinusoid {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl InputPreset {
    pub fn build(&self, grid: UniformGrid, dim: usize) -> Result<GridFunction, ConfigError> {
        let all_finite = |vs: &[f64], name: &str| {
            if vs.iter().all(|v| v.is_finite()) {
                Ok(())
            } else {
                bad(format!("input.{name} must be finite"))
            }
        };
        let r = match self {
            InputPreset::Constant { value } => {
                all_finite(value, "value")?;
                let c = match value.len() {
                    1 => vec![value[0]; dim],
                    n if n == dim => value.clone(),
                    n => return bad(format!("input.value has {n} entries but the field has dimension {dim}")),
                };
                GridFunction::constant(grid, &c)
            }
            InputPreset::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return bad("input.coefficients must not be empty");
                }
                all_finite(coefficients, "coefficients")?;
                let c = coefficients.clone();
                GridFunction::from_fn(grid, dim, move |t, o| {
                    let v = c.iter().rev().fold(0.0, |acc, ck| acc * t + ck);
                    o.fill(v);
                })
            }
            InputPreset::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => {
                all_finite(&[*offset, *amplitude, *omega, *phase], "sinusoid parameters")?;
                let (a, b, w, p) = (*offset, *amplitude, *omega, *phase);
                GridFunction::from_fn(grid, dim, move |t, o| o.fill(a + b * (w * t + p).sin()))
            }
        };
        r.map_err(|e| ConfigError(format!("input: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub h: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Picard,
    #[default]
    Pece,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectorMode {
    #[default]
    Single,
    Converged,
}

/// `tolerance` and `max_iterations` belong to Picard, or to the converged
/// corrector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub corrector: CorrectorMode,
    #[serde(default)]
    pub starting_correction: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
}

impl SolverConfig {
    pub fn choice(&self) -> Result<SolverChoice, ConfigError> {
        if let Some(t) = self.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("solver.tolerance must be positive, got {t}"));
            }
        }
        if self.max_iterations == Some(0) {
            return bad("solver.max_iterations must be at least 1");
        }
        let quadrature = if self.starting_correction {
            Quadrature::Corrected
        } else {
            Quadrature::ProductTrapezoidal
        };
        match self.method {
            Method::Picard => {
                if self.corrector != CorrectorMode::Single {
                    return bad("solver.corrector applies to method = \"pece\" only");
                }
                if let Some(g) = self.gamma {
                    if !(g.is_finite() && g > 0.0) {
                        return bad(format!("solver.gamma must be positive, got {g}"));
                    }
                }
                let d = PicardConfig::default();
                Ok(SolverChoice::Picard(PicardConfig {
                    gamma: self.gamma,
                    tolerance: self.tolerance.unwrap_or(d.tolerance),
                    max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
                    quadrature,
                }))
            }
            Method::Pece => {
                if self.gamma.is_some() {
                    return bad("solver.gamma applies to method = \"picard\" only");
                }
                let corrector = match self.corrector {
                    CorrectorMode::Single => {
                        if self.tolerance.is_some() || self.max_iterations.is_some() {
                            return bad("solver.tolerance and solver.max_iterations need corrector = \"converged\"");
                        }
                        Corrector::Single
                    }
                    CorrectorMode::Converged => {
                        let Corrector::Converged {
                            tolerance,
                            max_iterations,
                        } = Corrector::converged()
                        else {
                            unreachable!()
                        };
                        Corrector::Converged {
                            tolerance: self.tolerance.unwrap_or(tolerance),
                            max_iterations: self.max_iterations.unwrap_or(max_iterations),
                        }
                    }
                };
                Ok(SolverChoice::Pece(PeceConfig { corrector, quadrature }))
            }
        }
    }
}

/// Command-specific parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Number of metric levels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Constant offset between the two histories of the continuity check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Defect tolerance for checks, or oscillation tolerance for `omega`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError(format!("config: {}", e.message().trim())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn order(&self) -> Result<FractionalOrder, ConfigError> {
        FractionalOrder::new(self.alpha)
            .map_err(|_| ConfigError(format!("alpha must lie in (0, 1), got {}", self.alpha)))
    }

    pub fn kernel(&self) -> Result<Kernel, ConfigError> {
        Kernel::new(self.order()?, self.beta)
            .map_err(|_| ConfigError(format!("beta must be finite and ≥ 0, got {}", self.beta)))
    }

    /// Checks every invariant that does not depend on the command.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.kernel()?;
        self.field.build()?;
        self.solver_choice()?;
        let h = self.grid.h;
        self.history(self.grid_with_step(h)?)?;
        let p = &self.params;
        for (name, v) in [("tau", p.tau), ("sigma", p.sigma)] {
            if let Some(v) = v {
                self.aligned(name, v, h)?;
                if v >= self.grid.horizon {
                    return bad(format!(
                        "params.{name} = {v} must be smaller than grid.horizon = {}",
                        self.grid.horizon
                    ));
                }
            }
        }
        if let (Some(s), Some(t)) = (p.sigma, p.tau) {
            if s + t >= self.grid.horizon {
                return bad(format!(
                    "params.sigma + params.tau = {} must be smaller than grid.horizon = {}",
                    s + t,
                    self.grid.horizon
                ));
            }
        }
        if p.n_max == Some(0) {
            return bad("params.n_max must be at least 1");
        }
        if let Some(w) = p.window {
            if !(w.is_finite() && w > 0.0 && w <= self.grid.horizon) {
                return bad(format!("params.window must lie in (0, grid.horizon], got {w}"));
            }
        }
        for (name, v) in [("x_star", &p.x_star), ("x0", &p.x0)] {
            if let Some(v) = v {
                if v.len() != self.dim() {
                    return bad(format!(
                        "params.{name} has {} entries but the field has dimension {}",
                        v.len(),
                        self.dim()
                    ));
                }
                if !v.iter().all(|x| x.is_finite()) {
                    return bad(format!("params.{name} must be finite"));
                }
            }
        }
        if let Some(d) = p.delta {
            if !d.is_finite() {
                return bad(format!("params.delta must be finite, got {d}"));
            }
        }
        if let Some(t) = p.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("params.tolerance must be positive, got {t}"));
            }
        }
        Ok(())
    }

    fn aligned(&self, name: &str, v: f64, h: f64) -> Result<usize, ConfigError> {
        if !(v.is_finite() && v >= 0.0) {
            return bad(format!("{name} must be finite and ≥ 0, got {v}"));
        }
        align(v, h).map_err(|_| ConfigError(format!("grid step h = {h} must divide {name} = {v}")))
    }

    pub fn grid_with_step(&self, h: f64) -> Result<UniformGrid, ConfigError> {
        if !(h.is_finite() && h > 0.0) {
            return bad(format!("grid.h must be positive, got {h}"));
        }
        let horizon = self.grid.horizon;
        if !(horizon.is_finite() && horizon > 0.0) {
            return bad(format!("grid.horizon must be positive, got {horizon}"));
        }
        let n = self.aligned("grid.horizon", horizon, h)?;
        if n == 0 {
            return bad("grid.horizon must be at least one step");
        }
        for (name, v) in [("params.tau", self.params.tau), ("params.sigma", self.params.sigma)] {
            if let Some(v) = v {
                self.aligned(name, v, h)?;
            }
        }
        UniformGrid::new(h, n).map_err(|e| ConfigError(format!("grid: {e}")))
    }

    pub fn solver_choice(&self) -> Result<SolverChoice, ConfigError> {
        self.solver.unwrap_or_default().choice()
    }

    pub fn history(&self, grid: UniformGrid) -> Result<GridFunction, ConfigError> {
        self.input.build(grid, self.dim())
    }

    /// Engine settings for the identity checks. Without a `[solver]` table
    /// the engine keeps its converged-corrector default.
    pub fn discretization(&self, h: f64) -> Result<Discretization, ConfigError> {
        let mut d = Discretization::new(self.kernel()?, h).map_err(|e| ConfigError(e.to_string()))?;
        if self.solver.is_some() {
            d = d
                .with_solver(self.solver_choice()?)
                .map_err(|e| ConfigError(format!("solver: {e}")))?;
        }
        if let Some(n) = self.params.n_max {
            d = d.with_metric(MetricParams::new(n).map_err(|e| ConfigError(e.to_string()))?);
        }
        if let Some(t) = self.params.tolerance {
            d = d.with_tolerance(t).map_err(|e| ConfigError(e.to_string()))?;
        }
        Ok(d)
    }

    pub fn require_tau(&self) -> Result<f64, ConfigError> {
        self.params
            .tau
            .ok_or_else(|| ConfigError("params.tau is required for this command".into()))
    }

    pub fn require_sigma(&self) -> Result<f64, ConfigError> {
        self.params
            .sigma
            .ok_or_else(|| ConfigError("params.sigma is required for this command".into()))
    }
}
