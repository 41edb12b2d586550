//! Operators with a common fixed-point evaluation interface.
//!
//! Everything the solver needs from `T` is `apply`; the optional fixed-set
//! oracles (membership, projection, sampling, bounds) only feed diagnostics
//! and reference computations, and absence degrades those features rather
//! than the iteration itself.

pub mod cdelta;
pub mod convex;
pub mod fields;
pub mod projections;
pub mod resolvent;
pub mod subgradient;

pub use cdelta::{c_delta_apply, validate_a_delta, CDeltaOperator, CDeltaSpec};
pub use convex::{
    sample_sublevel, Affine, AffineSquared, ConvexFunction, FnConvex, HalfSquaredDistance,
    NormSquaredMinus, SphereDistance, ZeroFunction,
};
pub use fields::{matrix_field, MatrixField, VectorField};
pub use projections::{BallProjection, BoxProjection, HalfSpaceProjection, Identity};
pub use resolvent::{resolvent_apply, InnerSolveParams, Resolvent};
pub use subgradient::{subgradient_projector, SubgradientProjector};

use crate::geometry::Point;
use crate::{Error, Result};

pub trait FixedPointOperator: Send + Sync {
    /// Evaluates `T(x)`. Fallible because some operators (resolvents, cut
    /// operators) run inner computations that can legitimately fail.
    fn apply(&self, x: &Point) -> Result<Point>;

    /// Exact membership test for `Fix(T)` when one is known.
    fn fix_membership(&self, _x: &Point) -> Option<bool> {
        None
    }

    /// Metric projection onto `Fix(T)` when one is known in closed form.
    fn fix_projection(&self, _x: &Point) -> Option<Point> {
        None
    }

    /// Deterministic, seeded draws from `Fix(T)`.
    fn fix_samples(&self, _count: usize, _seed: u64) -> Option<Vec<Point>> {
        None
    }

    /// Axis-aligned bounds enclosing `Fix(T)` when the set is bounded and
    /// the bounds are known; used by grid-based reference oracles.
    fn bounding_box(&self) -> Option<(Point, Point)> {
        None
    }
}

impl<T: FixedPointOperator + ?Sized> FixedPointOperator for &T {
    fn apply(&self, x: &Point) -> Result<Point> {
        (**self).apply(x)
    }
    fn fix_membership(&self, x: &Point) -> Option<bool> {
        (**self).fix_membership(x)
    }
    fn fix_projection(&self, x: &Point) -> Option<Point> {
        (**self).fix_projection(x)
    }
    fn fix_samples(&self, count: usize, seed: u64) -> Option<Vec<Point>> {
        (**self).fix_samples(count, seed)
    }
    fn bounding_box(&self) -> Option<(Point, Point)> {
        (**self).bounding_box()
    }
}

impl<T: FixedPointOperator + ?Sized> FixedPointOperator for Box<T> {
    fn apply(&self, x: &Point) -> Result<Point> {
        (**self).apply(x)
    }
    fn fix_membership(&self, x: &Point) -> Option<bool> {
        (**self).fix_membership(x)
    }
    fn fix_projection(&self, x: &Point) -> Option<Point> {
        (**self).fix_projection(x)
    }
    fn fix_samples(&self, count: usize, seed: u64) -> Option<Vec<Point>> {
        (**self).fix_samples(count, seed)
    }
    fn bounding_box(&self) -> Option<(Point, Point)> {
        (**self).bounding_box()
    }
}

/// Operator defined by a plain function; no fixed-set oracles.
pub struct FnOperator<F> {
    f: F,
}

impl<F> FnOperator<F>
where
    F: Fn(&Point) -> Point + Send + Sync,
{
    pub fn new(f: F) -> Self {
        FnOperator { f }
    }
}

impl<F> FixedPointOperator for FnOperator<F>
where
    F: Fn(&Point) -> Point + Send + Sync,
{
    fn apply(&self, x: &Point) -> Result<Point> {
        Ok((self.f)(x))
    }
}

/// The relaxation `T_alpha = I + alpha (T - I)` of an operator, `alpha` in
/// `[0, 2]`. For `alpha > 0` the fixed set is unchanged, so all fixed-set
/// oracles pass through; `alpha = 0` is the identity on all inputs.
pub struct Relaxed<T> {
    inner: T,
    alpha: f64,
}

impl<T: FixedPointOperator> Relaxed<T> {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }
}

pub fn relax_operator<T: FixedPointOperator>(inner: T, alpha: f64) -> Result<Relaxed<T>> {
    if !(0.0..=2.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!(
            "relaxation parameter must lie in [0, 2], got {alpha}"
        )));
    }
    Ok(Relaxed { inner, alpha })
}

impl<T: FixedPointOperator> FixedPointOperator for Relaxed<T> {
    fn apply(&self, x: &Point) -> Result<Point> {
        if self.alpha == 0.0 {
            return Ok(x.clone());
        }
        let tx = self.inner.apply(x)?;
        Ok(x + (tx - x) * self.alpha)
    }

    fn fix_membership(&self, x: &Point) -> Option<bool> {
        if self.alpha == 0.0 {
            Some(true)
        } else {
            self.inner.fix_membership(x)
        }
    }

    fn fix_projection(&self, x: &Point) -> Option<Point> {
        if self.alpha == 0.0 {
            Some(x.clone())
        } else {
            self.inner.fix_projection(x)
        }
    }

    fn fix_samples(&self, count: usize, seed: u64) -> Option<Vec<Point>> {
        if self.alpha == 0.0 {
            None
        } else {
            self.inner.fix_samples(count, seed)
        }
    }

    fn bounding_box(&self) -> Option<(Point, Point)> {
        if self.alpha == 0.0 {
            None
        } else {
            self.inner.bounding_box()
        }
    }
}
