//! Starting-weight corrections for product integration of non-smooth
//! integrands.
//!
//! Solutions of Caputo equations behave like `c_0 + c_1 t^α + c_2 t^{2α} + …`
//! near `t = 0`, and so does `g(x(t))`. Plain product-trapezoidal weights
//! integrate `s^ν` with an error that is `O(h^{α+ν})` at the first nodes, which
//! caps the sup-norm accuracy at `O(h^{2α})`. Adding a few weights on the
//! first nodes, chosen so that every row integrates `s^ν` exactly for the
//! singular exponents `ν = iα + j < 1 + α`, removes that barrier. Exactness on
//! constants and linear functions (already held by the trapezoidal rule) is
//! kept as two extra constraints.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{ConvolutionWeights, Kernel, UniformGrid};
use crate::special::gamma_fn;

const MAX_EXPONENTS: usize = 6;
const MIN_SEPARATION: f64 = 0.05;

/// Non-integer exponents `iα + j < 1 + α`, at most six, pairwise and from
/// the integers at least `0.05` apart.
pub fn singular_exponents(alpha: f64) -> Vec<f64> {
    let mut cands: Vec<f64> = Vec::new();
    for j in 0..2 {
        for i in 1.. {
            let nu = i as f64 * alpha + j as f64;
            if nu >= 1.0 + alpha - 1e-9 {
                break;
            }
            cands.push(nu);
        }
    }
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::new();
    for nu in cands {
        if (nu - nu.round()).abs() < MIN_SEPARATION {
            continue;
        }
        if out.iter().any(|&e| (e - nu).abs() < MIN_SEPARATION) {
            continue;
        }
        out.push(nu);
        if out.len() == MAX_EXPONENTS {
            break;
        }
    }
    out
}

#[inline]
fn node_power(l: usize, nu: f64) -> f64 {
    if l == 0 {
        if nu == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (l as f64).powf(nu)
    }
}

/// Correction weights on the first nodes of every row, already scaled by `h^α`.
#[derive(Debug, Clone)]
pub struct StartingWeights {
    corrector_nodes: usize,
    corrector: Vec<f64>,
    predictor_nodes: usize,
    predictor: Vec<f64>,
    exponents: Vec<f64>,
}

impl StartingWeights {
    /// No correction.
    pub fn none() -> Self {
        Self {
            corrector_nodes: 0,
            corrector: Vec::new(),
            predictor_nodes: 0,
            predictor: Vec::new(),
            exponents: Vec::new(),
        }
    }

    pub fn new(kernel: Kernel, grid: UniformGrid) -> Result<Self> {
        if kernel.is_tempered() {
            return Err(Error::InvalidParameter(
                "starting corrections are only available for the untempered kernel".into(),
            ));
        }
        let alpha = kernel.alpha();
        let steps = grid.steps();
        let all = singular_exponents(alpha);
        // Corrector constraints {0, 1} ∪ A on nodes 0..p, shrunk to fit the grid.
        let p = (all.len() + 2).min(steps + 1);
        if p <= 2 {
            return Ok(Self::none());
        }
        let used: Vec<f64> = all[..p - 2].to_vec();
        let mut cexp = vec![0.0, 1.0];
        cexp.extend_from_slice(&used);
        let q = p - 1;
        let mut pexp = vec![0.0];
        pexp.extend_from_slice(&used);

        let unit = ConvolutionWeights::new(kernel, UniformGrid::new(1.0, steps)?);
        let cmat = DMatrix::from_fn(p, p, |i, l| node_power(l, cexp[i]));
        let pmat = DMatrix::from_fn(q, q, |i, l| node_power(l, pexp[i]));
        let clu = cmat.lu();
        let plu = pmat.lu();

        let exact_coef: Vec<f64> = cexp
            .iter()
            .map(|&nu| Ok(gamma_fn(nu + 1.0)? / gamma_fn(nu + alpha + 1.0)?))
            .collect::<Result<_>>()?;
        let exact_of = |nu_idx: usize, n: f64| exact_coef[nu_idx] * n.powf(cexp[nu_idx] + alpha);

        let h_alpha = grid.step().powf(alpha);
        let mut corrector = vec![0.0; (steps + 1) * p];
        let mut predictor = vec![0.0; (steps + 1) * q];
        let mut kpow = vec![0.0; steps + 1];

        for n in 1..=steps {
            let nf = n as f64;
            let mut crhs = DVector::zeros(p);
            let mut prhs = DVector::zeros(q);
            for (i, &nu) in cexp.iter().enumerate() {
                for (k, v) in kpow.iter_mut().enumerate().take(n + 1) {
                    *v = node_power(k, nu);
                }
                let quad: f64 = (0..=n).map(|k| unit.weight(n, k) * kpow[k]).sum();
                crhs[i] = exact_of(i, nf) - quad;
                // Predictor exponents are cexp without the linear entry.
                let pi = match i {
                    0 => Some(0),
                    1 => None,
                    _ => Some(i - 1),
                };
                if let Some(pi) = pi {
                    let pquad: f64 = (0..n).map(|k| unit.predictor_weight(n, k) * kpow[k]).sum();
                    prhs[pi] = exact_of(i, nf) - pquad;
                }
            }
            let cs = clu
                .solve(&crhs)
                .ok_or_else(|| Error::AccuracyLoss("singular starting-weight system".into()))?;
            let ps = plu
                .solve(&prhs)
                .ok_or_else(|| Error::AccuracyLoss("singular starting-weight system".into()))?;
            for l in 0..p {
                corrector[n * p + l] = h_alpha * cs[l];
            }
            for l in 0..q {
                predictor[n * q + l] = h_alpha * ps[l];
            }
        }
        if corrector.iter().chain(&predictor).any(|w| !w.is_finite()) {
            return Err(Error::AccuracyLoss("non-finite starting weights".into()));
        }
        Ok(Self {
            corrector_nodes: p,
            corrector,
            predictor_nodes: q,
            predictor,
            exponents: used,
        })
    }

    /// Number of leading nodes carrying corrector corrections.
    pub fn nodes(&self) -> usize {
        self.corrector_nodes
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn is_empty(&self) -> bool {
        self.corrector_nodes == 0
    }

    pub fn corrector_weight(&self, row: usize, node: usize) -> f64 {
        if node >= self.corrector_nodes {
            0.0
        } else {
            self.corrector[row * self.corrector_nodes + node]
        }
    }

    pub fn predictor_weight(&self, row: usize, node: usize) -> f64 {
        if node >= self.predictor_nodes {
            0.0
        } else {
            self.predictor[row * self.predictor_nodes + node]
        }
    }

    pub(crate) fn accumulate_corrector(&self, row: usize, samples: &[f64], dim: usize, out: &mut [f64]) {
        for l in 0..self.corrector_nodes {
            let w = self.corrector[row * self.corrector_nodes + l];
            for (o, v) in out.iter_mut().zip(&samples[l * dim..(l + 1) * dim]) {
                *o += w * v;
            }
        }
    }

    pub(crate) fn accumulate_predictor(&self, row: usize, samples: &[f64], dim: usize, out: &mut [f64]) {
        for l in 0..self.predictor_nodes {
            let w = self.predictor[row * self.predictor_nodes + l];
            for (o, v) in out.iter_mut().zip(&samples[l * dim..(l + 1) * dim]) {
                *o += w * v;
            }
        }
    }
}
