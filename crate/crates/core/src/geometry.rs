//! Half-space cuts and their projections.
//!
//! A cut built from an operator evaluation `tx = T(x)` is the half-space
//! `H(x, tx) = { u : <u - tx, x - tx> <= 0 }`: anchored at `tx`, with outward
//! normal `x - tx`. Every fixed point of a cutter operator lies in this set,
//! which is what makes projecting onto it a valid Fejer step.

use crate::{ensure_same_dim, Error, Result};

pub type Point = nalgebra::DVector<f64>;

/// Relative threshold below which `x - tx` is treated as zero and the cut
/// collapses to the whole space.
pub const CUT_DEGENERACY_EPS: f64 = 1e-14;

/// A closed half-space `{ u : <u - anchor, normal> <= 0 }`, or the whole
/// space when degenerate.
#[derive(Clone, Debug)]
pub struct HalfSpace {
    anchor: Point,
    normal: Point,
    degenerate: bool,
}

impl HalfSpace {
    pub fn new(anchor: Point, normal: Point) -> Result<Self> {
        ensure_same_dim(anchor.len(), normal.len())?;
        let degenerate = normal.norm() == 0.0;
        Ok(HalfSpace {
            anchor,
            normal,
            degenerate,
        })
    }

    /// The degenerate half-space that contains everything.
    pub fn whole_space(dim: usize) -> Self {
        HalfSpace {
            anchor: Point::zeros(dim),
            normal: Point::zeros(dim),
            degenerate: true,
        }
    }

    pub fn dimension(&self) -> usize {
        self.anchor.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn anchor(&self) -> &Point {
        &self.anchor
    }

    pub fn normal(&self) -> &Point {
        &self.normal
    }

    /// Signed constraint value `<u - anchor, normal>`; nonpositive means
    /// membership. Zero for the degenerate half-space.
    pub fn violation(&self, u: &Point) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        (u - &self.anchor).dot(&self.normal)
    }

    pub fn contains(&self, u: &Point) -> bool {
        self.violation(u) <= 0.0
    }

    /// Euclidean distance from `u` to the half-space (zero for members).
    pub fn distance(&self, u: &Point) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        self.violation(u).max(0.0) / self.normal.norm()
    }
}

/// Builds the cut `H(x, tx)` anchored at the operator image `tx` with normal
/// `x - tx`. Collapses to the whole space when `|x - tx|` is below
/// `CUT_DEGENERACY_EPS * max(1, |x|)`, so evaluation noise at a fixed point
/// never produces a junk cut direction.
pub fn halfspace_from_cut(x: &Point, tx: &Point) -> Result<HalfSpace> {
    ensure_same_dim(x.len(), tx.len())?;
    let normal = x - tx;
    if normal.norm() <= CUT_DEGENERACY_EPS * x.norm().max(1.0) {
        return Ok(HalfSpace::whole_space(x.len()));
    }
    Ok(HalfSpace {
        anchor: tx.clone(),
        normal,
        degenerate: false,
    })
}

/// Metric projection onto a half-space. Members (and every point, for the
/// degenerate half-space) are returned unchanged.
pub fn project_halfspace(u: &Point, h: &HalfSpace) -> Result<Point> {
    ensure_same_dim(h.dimension(), u.len())?;
    if h.degenerate {
        return Ok(u.clone());
    }
    let violation = h.violation(u);
    if violation <= 0.0 {
        return Ok(u.clone());
    }
    Ok(u - &h.normal * (violation / h.normal.norm_squared()))
}

/// Relaxed projection `u + alpha * (P_H(u) - u)` for `alpha` in `[0, 2]`.
/// `alpha = 1` is the metric projection and `alpha = 2` the reflection.
pub fn relaxed_project(u: &Point, h: &HalfSpace, alpha: f64) -> Result<Point> {
    if !(0.0..=2.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!(
            "relaxation parameter must lie in [0, 2], got {alpha}"
        )));
    }
    let projected = project_halfspace(u, h)?;
    Ok(u + (projected - u) * alpha)
}
