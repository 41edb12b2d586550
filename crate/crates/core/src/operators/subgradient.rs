//! Subgradient projector for a sublevel-set constraint `{ f <= 0 }`.

use super::convex::{sample_sublevel, ConvexFunction};
use super::FixedPointOperator;
use crate::geometry::Point;
use crate::{Error, Result};

/// The operator `x -> x - f(x) / |g|^2 * g` when `f(x) > 0` (with `g` the
/// oracle's subgradient at `x`), identity otherwise. Its fixed set is the
/// sublevel set `{ f <= 0 }`, and each move is the exact projection onto the
/// linearization half-space `{ u : f(x) + <g, u - x> <= 0 }`.
pub struct SubgradientProjector<F> {
    f: F,
    witness: Option<Point>,
    sample_spread: f64,
}

pub fn subgradient_projector<F: ConvexFunction>(f: F) -> SubgradientProjector<F> {
    SubgradientProjector {
        f,
        witness: None,
        sample_spread: 2.0,
    }
}

impl<F: ConvexFunction> SubgradientProjector<F> {
    /// Supplies a feasible point, enabling the fixed-set sampler.
    pub fn with_witness(mut self, witness: Point) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn with_sample_spread(mut self, spread: f64) -> Self {
        self.sample_spread = spread;
        self
    }

    pub fn function(&self) -> &F {
        &self.f
    }
}

impl<F: ConvexFunction> FixedPointOperator for SubgradientProjector<F> {
    fn apply(&self, x: &Point) -> Result<Point> {
        let v = self.f.value(x);
        if v <= 0.0 {
            return Ok(x.clone());
        }
        let g = self.f.subgradient(x);
        let n2 = g.norm_squared();
        if !n2.is_finite() || n2 <= 0.0 {
            return Err(Error::OracleContract(format!(
                "positive value {v} with zero subgradient; the zero sublevel set cannot separate"
            )));
        }
        Ok(x - g * (v / n2))
    }

    fn fix_membership(&self, x: &Point) -> Option<bool> {
        Some(self.f.value(x) <= 0.0)
    }

    fn fix_samples(&self, count: usize, seed: u64) -> Option<Vec<Point>> {
        let witness = self.witness.as_ref()?;
        sample_sublevel(&self.f, witness, self.sample_spread, count, seed)
    }
}
