//! Solvers and diagnostics for variational inequalities posed over the
//! fixed-point set of a quasi-nonexpansive operator.
//!
//! The problem solved here is: given a monotone field `F` and an operator `T`
//! whose fixed-point set `Fix(T)` is closed and convex, find a point
//! `x*` in `Fix(T)` with `<F(x*), x - x*> >= 0` for every `x` in `Fix(T)`.
//! The iteration never needs a projection onto `Fix(T)` itself; each step
//! shifts the iterate against the field and then projects onto a half-space
//! cut separating the iterate from `Fix(T)`.
//!
//! Module map:
//! - [`geometry`]: half-space cuts and their (relaxed) projections.
//! - [`operators`]: projections, subgradient projectors, cut operators built
//!   from a constraint oracle, resolvents, and affine monotone fields.
//! - [`solver`]: the cut-based iteration plus two classical baselines.
//! - [`diagnostics`]: sampled checks of the operator and field assumptions.
//! - [`bilevel`]: minimal-`p`-norm selection over the solutions of an inner
//!   convex program, reduced to the variational inequality above.

pub mod bilevel;
pub mod diagnostics;
pub mod geometry;
pub mod operators;
pub mod solver;

use geometry::Point;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid step sequence: rho0 must be positive and gamma must lie in (0, 1]")]
    InvalidStepSequence,
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("oracle contract violated: {0}")]
    OracleContract(String),
    #[error(
        "selected cut point too close to the query: clearance {actual} below required {required}"
    )]
    SelectionClearance { required: f64, actual: f64 },
    #[error("inner solve stalled at residual {residual} after {iterations} iterations")]
    InnerNoConvergence { residual: f64, iterations: usize },
    #[error("no fixed-point samples available for {0}")]
    MissingFixSamples(&'static str),
    #[error("operator does not expose a fixed-set projection oracle")]
    MissingFixProjection,
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects vectors with NaN or infinite entries. `label` names the producer
/// so the error points at the offending oracle rather than the call site.
pub(crate) fn ensure_finite(label: &'static str, p: &Point) -> Result<()> {
    if p.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(label))
    }
}

pub(crate) fn ensure_same_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
