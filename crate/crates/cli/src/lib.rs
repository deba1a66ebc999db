//! Command implementations behind the `caputo` binary.
//!
//! Every command reads a [`RunConfig`], writes its artifacts to an output
//! directory and returns an [`Outcome`] or a [`Failure`] that fixes the exit
//! code.

pub mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use caputo_core::{
    mittag_leffler, DefectReport, Error, Field, GridFunction, SemigroupEngine, SkewProductEngine, SkewState, TimedField,
};
use serde::Serialize;
use serde_json::json;

pub use config::{ConfigError, RunConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Config(String),
    Solver(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Solver(_) => EXIT_SOLVER,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Solver(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

/// Parameter and range errors are configuration problems; everything that
/// goes wrong while computing is a solver failure.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_)
            | Error::InvalidParameter(_)
            | Error::LengthMismatch { .. }
            | Error::GridMismatch(_)
            | Error::NotGridAligned { .. }
            | Error::HorizonExhausted { .. } => Failure::Config(e.to_string()),
            Error::Overflow(_) | Error::AccuracyLoss(_) | Error::NonConvergence { .. } | Error::Io(_) => {
                Failure::Solver(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Solver(format!("io: {e}"))
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub summary: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_PASS
        } else {
            EXIT_VIOLATION
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identity {
    Semigroup,
    Shift,
    Cocycle,
    Continuity,
    Steady,
}

impl Identity {
    pub fn name(self) -> &'static str {
        match self {
            Identity::Semigroup => "semigroup",
            Identity::Shift => "shift",
            Identity::Cocycle => "cocycle",
            Identity::Continuity => "continuity",
            Identity::Steady => "steady",
        }
    }
}

/// Shared options of the config-driven commands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Overrides `grid.h`.
    pub h: Option<f64>,
    /// Number of grids `h, h/2, …, h/2^{K-1}`.
    pub refine: u32,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { h: None, refine: 1 }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(RunConfig::from_toml(&text)?)
}

/// Applies `--h`, revalidating the grid against the new step.
fn effective(cfg: &RunConfig, opts: &RunOptions) -> Result<RunConfig, Failure> {
    let mut c = cfg.clone();
    if let Some(h) = opts.h {
        c.grid.h = h;
    }
    c.validate()?;
    if opts.refine == 0 {
        return Err(Failure::Config("--refine must be at least 1".into()));
    }
    Ok(c)
}

fn no_refine(opts: &RunOptions, command: &str) -> Result<(), Failure> {
    if opts.refine != 1 {
        return Err(Failure::Config(format!("--refine applies to check, not {command}")));
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Solver(format!("io: {e}")))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn write_trajectory(path: &Path, states: &GridFunction) -> Result<(), Failure> {
    let w = BufWriter::new(File::create(path)?);
    states.write_csv(w, "x")?;
    Ok(())
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// `solve`: writes `trajectory.csv` and `report.json`.
pub fn cmd_solve(cfg: &RunConfig, opts: &RunOptions, out: &Path) -> Result<Outcome, Failure> {
    no_refine(opts, "solve")?;
    let cfg = effective(cfg, opts)?;
    let grid = cfg.grid_with_step(cfg.grid.h)?;
    let field = cfg.field.build()?;
    let f = cfg.history(grid)?;
    let traj = cfg.solver_choice()?.solve(&field, cfg.kernel()?, &f, grid)?;
    std::fs::create_dir_all(out)?;
    write_trajectory(&out.join("trajectory.csv"), &traj.states)?;
    let report = json!({
        "command": "solve",
        "config": cfg,
        "result": traj.metadata(),
        "final_state": traj.last(),
    });
    write_json(&out.join("report.json"), &report)?;
    let mut summary = vec![format!(
        "solve: {} steps, {} iterations, residual {:.3e}, x(T) = {}",
        grid.steps(),
        traj.iterations,
        traj.residual,
        fmt_vec(traj.last())
    )];
    summary.extend(traj.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(Outcome { pass: true, summary })
}

fn autonomous_only(field: &impl Field, what: &str) -> Result<(), Failure> {
    if !field.is_autonomous() {
        return Err(Failure::Config(format!(
            "{what} needs an autonomous field; use `check cocycle` for time-dependent fields"
        )));
    }
    Ok(())
}

/// One run of an identity check on grid step `h`.
pub fn check_once(cfg: &RunConfig, identity: Identity, h: f64) -> Result<DefectReport, Failure> {
    let grid = cfg.grid_with_step(h)?;
    let field = cfg.field.build()?;
    let disc = cfg.discretization(h)?;
    let f = cfg.history(grid)?;
    if identity != Identity::Cocycle {
        autonomous_only(&field, &format!("check {}", identity.name()))?;
    }
    let report = match identity {
        Identity::Semigroup => {
            SemigroupEngine::new(disc, field).semigroup_defect(cfg.require_sigma()?, cfg.require_tau()?, &f)?
        }
        Identity::Shift => SemigroupEngine::new(disc, field).shift_identity_residual(cfg.require_tau()?, &f)?,
        Identity::Cocycle => {
            let s = SkewState::new(f, TimedField::new(field))?;
            SkewProductEngine::new(disc).cocycle_defect(cfg.require_sigma()?, cfg.require_tau()?, &s)?
        }
        Identity::Continuity => {
            let delta = cfg
                .params
                .delta
                .ok_or_else(|| Failure::Config("params.delta is required for check continuity".into()))?;
            let moved: Vec<f64> = f.values().iter().map(|v| v + delta).collect();
            let g = GridFunction::from_values(grid, f.dim(), moved)?;
            SemigroupEngine::new(disc, field).continuity_estimate(cfg.require_tau()?, &f, &g)?
        }
        Identity::Steady => {
            let x_star = cfg
                .params
                .x_star
                .as_ref()
                .ok_or_else(|| Failure::Config("params.x_star is required for check steady".into()))?;
            SemigroupEngine::new(disc, field).steady_state_residual(x_star, cfg.require_tau()?)?
        }
    };
    Ok(report)
}

/// Observed convergence rates `log2(d_k / d_{k+1})`; `None` where a defect
/// vanishes.
pub fn refinement_rates(defects: &[f64]) -> Vec<Option<f64>> {
    defects
        .windows(2)
        .map(|w| {
            if w[0] > 0.0 && w[1] > 0.0 {
                Some((w[0] / w[1]).log2())
            } else {
                None
            }
        })
        .collect()
}

/// `check <identity>`: writes `report.json`. With `--refine K > 1` the report
/// lists every grid and the observed rates, and the verdict is the finest
/// grid's.
pub fn cmd_check(cfg: &RunConfig, identity: Identity, opts: &RunOptions, out: &Path) -> Result<Outcome, Failure> {
    let cfg = effective(cfg, opts)?;
    let mut runs = Vec::new();
    for k in 0..opts.refine {
        let h = cfg.grid.h / 2f64.powi(k as i32);
        runs.push(check_once(&cfg, identity, h)?);
    }
    let last = runs.last().expect("at least one run").clone();
    let mut summary: Vec<String> = runs
        .iter()
        .map(|r| {
            format!(
                "{}: h = {} defect {:.3e} tolerance {:.3e} {}",
                r.identity,
                r.h,
                r.defect,
                r.tolerance,
                if r.pass { "PASS" } else { "FAIL" }
            )
        })
        .collect();
    if let Some(g) = last.detail("g_norm") {
        summary.push(format!("steady: |g(x*)| = {g}"));
    }
    std::fs::create_dir_all(out)?;
    if runs.len() == 1 {
        write_json(&out.join("report.json"), &last)?;
    } else {
        let defects: Vec<f64> = runs.iter().map(|r| r.defect).collect();
        let rates = refinement_rates(&defects);
        summary.push(format!(
            "rates: {}",
            rates
                .iter()
                .map(|r| r.map_or("-".to_string(), |v| format!("{v:.3}")))
                .collect::<Vec<_>>()
                .join(" ")
        ));
        let report = json!({
            "identity": identity.name(),
            "pass": last.pass,
            "runs": runs,
            "rates": rates,
        });
        write_json(&out.join("report.json"), &report)?;
    }
    Ok(Outcome {
        pass: last.pass,
        summary,
    })
}

/// `omega`: window statistics of the solve from `f ≡ x0`, plus its trajectory.
pub fn cmd_omega(cfg: &RunConfig, opts: &RunOptions, out: &Path) -> Result<Outcome, Failure> {
    no_refine(opts, "omega")?;
    let cfg = effective(cfg, opts)?;
    let h = cfg.grid.h;
    let grid = cfg.grid_with_step(h)?;
    let field = cfg.field.build()?;
    autonomous_only(&field, "omega")?;
    let x0 = cfg
        .params
        .x0
        .clone()
        .ok_or_else(|| Failure::Config("params.x0 is required for omega".into()))?;
    let window = cfg
        .params
        .window
        .ok_or_else(|| Failure::Config("params.window is required for omega".into()))?;
    let tolerance = cfg.params.tolerance.unwrap_or(1e-6);
    let engine = SemigroupEngine::new(cfg.discretization(h)?, field);
    let report = engine.omega_probe(&x0, grid.horizon(), window, tolerance)?;
    let f0 = GridFunction::constant(grid, &x0)?;
    let traj = engine.solve(&f0, grid.horizon())?;
    std::fs::create_dir_all(out)?;
    write_trajectory(&out.join("trajectory.csv"), &traj.states)?;
    write_json(&out.join("report.json"), &report)?;
    let summary = vec![format!(
        "omega: window [{}, {}] oscillation {:.3e} mean {} {}",
        report.horizon - report.window,
        report.horizon,
        report.oscillation,
        fmt_vec(&report.mean),
        if report.converged {
            "converged to a point"
        } else {
            "not settled"
        }
    )];
    Ok(Outcome { pass: true, summary })
}

/// `E_α(t)` rounded to `digits` significant digits, trailing zeros removed.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..15).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        // Format from the rounded mantissa so no extra digits appear.
        let rounded: f64 = sci.parse().expect("valid float");
        trim(&format!("{rounded:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

pub fn cmd_ml(alpha: f64, t: f64) -> Result<String, Failure> {
    let v = mittag_leffler(alpha, t).map_err(|e| Failure::Config(e.to_string()))?;
    Ok(format_significant(v, 12))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(1.0, 12), "1");
        assert_eq!(format_significant(std::f64::consts::E, 12), "2.71828182846");
        assert_eq!(format_significant(0.125, 12), "0.125");
        assert_eq!(format_significant(-3.5e-7, 12), "-3.5e-7");
        assert_eq!(format_significant(5.376234283632271e43, 12), "5.37623428363e43");
        assert_eq!(format_significant(123456.0, 12), "123456");
        assert_eq!(format_significant(0.0, 12), "0");
    }

    #[test]
    fn rates_skip_zero_defects() {
        assert_eq!(refinement_rates(&[4.0, 2.0, 0.0]), vec![Some(1.0), None]);
    }

    #[test]
    fn error_classes() {
        assert_eq!(Failure::from(Error::Domain("x".into())).exit_code(), EXIT_CONFIG);
        let e = Error::NonConvergence {
            iterations: 3,
            residual: 1.0,
        };
        assert_eq!(Failure::from(e).exit_code(), EXIT_SOLVER);
    }
}
