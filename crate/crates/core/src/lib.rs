//! Caputo fractional differential equations `D^α x = g(x)`, `α ∈ (0, 1)`,
//! treated through the equivalent singular Volterra equation
//!
//! ```text
//! x(t) = f(t) + ∫_0^t (t-s)^{α-1}/Γ(α) · g(x(s)) ds
//! ```
//!
//! together with the dynamics it induces on the space of histories `f`.

// Negated comparisons are how NaN gets rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correction;
pub mod error;
pub mod field;
pub mod history;
pub mod kernel;
mod quadrature;
pub mod report;
pub mod semigroup;
pub mod skew;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use field::{check_lipschitz, Field, LipschitzReport, VectorField};
pub use history::{euclid, rho, rho_n, sup_dist_on, GridFunction, MetricParams, MetricValue};
pub use kernel::{align, kernel_eval, kernel_mass, ConvolutionWeights, Kernel, UniformGrid, WeightCache};
pub use report::DefectReport;
pub use semigroup::{Discretization, OmegaReport, SemigroupEngine, Trend};
pub use skew::{field_distance, shift_field, SkewProductEngine, SkewState, TimedField};
pub use solver::{
    continuity_bound, solve_pece, solve_picard, verify_continuity, Corrector, PeceConfig, PicardConfig, Quadrature,
    SolverChoice, Trajectory,
};
pub use special::{bielecki_norm, gamma_fn, ln_gamma, mittag_leffler, FractionalOrder, WeightParams};
