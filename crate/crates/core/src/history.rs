//! Finite-horizon samples of continuous histories `f: [0, H] → ℝ^d` and the
//! compact-open metric `ρ = Σ_n 2^{-n} ρ_n` between them.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::kernel::{align, UniformGrid};

/// Euclidean norm.
#[inline]
pub fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖x - y‖`.
#[inline]
pub fn euclid_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[derive(Deserialize)]
struct RawGridFunction {
    grid: UniformGrid,
    dim: usize,
    values: Vec<f64>,
}

/// Node values on a uniform grid, interpolated piecewise linearly.
///
/// Values are stored row-major: node `j` occupies `values[j*d .. (j+1)*d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridFunction")]
pub struct GridFunction {
    grid: UniformGrid,
    dim: usize,
    values: Vec<f64>,
}

impl TryFrom<RawGridFunction> for GridFunction {
    type Error = Error;
    fn try_from(r: RawGridFunction) -> Result<Self> {
        Self::from_values(r.grid, r.dim, r.values)
    }
}

impl GridFunction {
    pub fn from_values(grid: UniformGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        let expected = (grid.steps() + 1) * dim;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value at node {}", i / dim)));
        }
        Ok(Self { grid, dim, values })
    }

    /// Samples `f(t)` at every node; `f` writes `d` components into its buffer.
    pub fn from_fn<F: FnMut(f64, &mut [f64])>(grid: UniformGrid, dim: usize, mut f: F) -> Result<Self> {
        let mut values = vec![0.0; (grid.steps() + 1) * dim];
        for (j, chunk) in values.chunks_mut(dim.max(1)).enumerate() {
            f(grid.time(j), chunk);
        }
        Self::from_values(grid, dim, values)
    }

    pub fn constant(grid: UniformGrid, c: &[f64]) -> Result<Self> {
        Self::from_fn(grid, c.len(), |_, out| out.copy_from_slice(c))
    }

    pub fn grid(&self) -> UniformGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        self.grid.step()
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.grid.time(j)
    }

    #[inline]
    pub fn node(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Piecewise-linear value at `t ∈ [0, H]`.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let h = self.grid.step();
        let horizon = self.horizon();
        if !(t >= 0.0 && t <= horizon * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("t = {t} outside [0, {horizon}]")));
        }
        let r = t / h;
        let n = r.round();
        if (r - n).abs() <= 1e-12 * r.max(1.0) {
            return Ok(self.node((n as usize).min(self.steps())).to_vec());
        }
        let j = (r.floor() as usize).min(self.steps() - 1);
        let y = r - j as f64;
        let a = self.node(j);
        let b = self.node(j + 1);
        Ok(a.iter().zip(b).map(|(p, q)| (1.0 - y) * p + y * q).collect())
    }

    /// Nodes `first..=last` as a function on `[0, (last-first)·h]`.
    pub fn window(&self, first: usize, last: usize) -> Result<Self> {
        if first >= last || last > self.steps() {
            return Err(Error::InvalidParameter(format!(
                "window {first}..={last} not inside 0..={}",
                self.steps()
            )));
        }
        let grid = UniformGrid::new(self.step(), last - first)?;
        Self::from_values(
            grid,
            self.dim,
            self.values[first * self.dim..(last + 1) * self.dim].to_vec(),
        )
    }

    /// `f(τ + ·)` on `[0, H - τ]`.
    pub fn shifted(&self, tau: f64) -> Result<Self> {
        let m = align(tau, self.step())?;
        if m >= self.steps() {
            return Err(Error::HorizonExhausted {
                required: tau,
                available: self.horizon(),
            });
        }
        self.window(m, self.steps())
    }

    /// Restriction to `[0, horizon]`.
    pub fn truncated(&self, horizon: f64) -> Result<Self> {
        let n = align(horizon, self.step())?;
        if n > self.steps() {
            return Err(Error::HorizonExhausted {
                required: horizon,
                available: self.horizon(),
            });
        }
        self.window(0, n)
    }

    /// CSV with header `t,<prefix>_1,..,<prefix>_d` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W, prefix: &str) -> Result<()> {
        write_csv_rows(w, self, prefix)
    }
}

pub(crate) fn write_csv_rows<W: Write>(w: W, f: &GridFunction, prefix: &str) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=f.dim()).map(|i| format!("{prefix}_{i}")));
    wr.write_record(&header)?;
    let mut row = Vec::with_capacity(f.dim() + 1);
    for j in 0..=f.steps() {
        row.clear();
        row.push(format!("{:.16e}", f.time(j)));
        row.extend(f.node(j).iter().map(|v| format!("{v:.16e}")));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Number of terms kept in the series `Σ_n 2^{-n} ρ_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricParams {
    levels: usize,
}

impl MetricParams {
    pub fn new(levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidParameter("metric needs at least one level".into()));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Upper bound `2^{-N}` on the omitted tail.
    pub fn tail_bound(&self) -> f64 {
        0.5f64.powi(self.levels as i32)
    }
}

impl Default for MetricParams {
    fn default() -> Self {
        Self { levels: 4 }
    }
}

/// Truncated metric value together with the bound on what was cut off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub tail_bound: f64,
    pub levels: usize,
}

fn check_common(f: &GridFunction, h: &GridFunction) -> Result<()> {
    if f.dim() != h.dim() {
        return Err(Error::GridMismatch(format!(
            "dimensions differ: {} vs {}",
            f.dim(),
            h.dim()
        )));
    }
    if f.step().to_bits() != h.step().to_bits() {
        return Err(Error::GridMismatch(format!(
            "steps differ: {} vs {}",
            f.step(),
            h.step()
        )));
    }
    Ok(())
}

/// `max ‖f(t_j) - h(t_j)‖` over the nodes in `[0, n]`. Both functions must
/// share step and dimension, and both must cover `[0, n]`.
pub fn sup_dist_on(f: &GridFunction, h: &GridFunction, n: f64) -> Result<f64> {
    check_common(f, h)?;
    let available = f.horizon().min(h.horizon());
    if !(n >= 0.0) || n > available * (1.0 + 1e-12) {
        return Err(Error::HorizonExhausted { required: n, available });
    }
    let last = ((n / f.step()) * (1.0 + 1e-12)).floor() as usize;
    let last = last.min(f.steps()).min(h.steps());
    Ok((0..=last)
        .map(|j| euclid_diff(f.node(j), h.node(j)))
        .fold(0.0, f64::max))
}

/// `s/(1+s)` with `s` the sup-distance on `[0, n]`.
pub fn rho_n(f: &GridFunction, h: &GridFunction, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("ρ_n is indexed from n = 1".into()));
    }
    let s = sup_dist_on(f, h, n as f64)?;
    Ok(s / (1.0 + s))
}

/// `Σ_{n=1}^{N} 2^{-n} ρ_n(f, h)`; `N` may not exceed the common horizon.
pub fn rho(f: &GridFunction, h: &GridFunction, p: &MetricParams) -> Result<MetricValue> {
    check_common(f, h)?;
    let available = f.horizon().min(h.horizon());
    let levels = p.levels();
    if levels as f64 > available * (1.0 + 1e-12) {
        return Err(Error::HorizonExhausted {
            required: levels as f64,
            available,
        });
    }
    // One pass: running sup over nodes, read off at each integer level.
    let step = f.step();
    let mut value = 0.0;
    let mut sup = 0.0f64;
    let mut j = 0usize;
    for n in 1..=levels {
        let last = ((n as f64 / step) * (1.0 + 1e-12)).floor() as usize;
        while j <= last {
            sup = sup.max(euclid_diff(f.node(j), h.node(j)));
            j += 1;
        }
        value += 0.5f64.powi(n as i32) * sup / (1.0 + sup);
    }
    Ok(MetricValue {
        value,
        tail_bound: p.tail_bound(),
        levels,
    })
}
