//! Cut operators for a constraint set `C = { c <= 0 }` with a separation
//! margin.
//!
//! For an infeasible `z`, the operator picks a point `y` whose half-space
//! `H(z, y)` (anchor `y`, normal `z - y`) contains `C` while keeping the open
//! ball of radius `delta * c(z)` around `z` out of it. Projecting `z` onto
//! that half-space lands on `y`, so the clearance `|z - y| >= delta * c(z)`
//! is what keeps steps from collapsing near the boundary.

use super::convex::{sample_sublevel, ConvexFunction};
use super::FixedPointOperator;
use crate::geometry::{halfspace_from_cut, project_halfspace, Point};
use crate::{Error, Result};

/// Relative tolerance on the clearance assertion.
const CLEARANCE_RTOL: f64 = 1e-12;

/// Constraint oracle plus separation margin. The witness must satisfy
/// `c(witness) <= 0`; it anchors the fixed-set sampler and asserts the
/// sublevel set is nonempty.
pub struct CDeltaSpec<F> {
    c: F,
    delta: f64,
    witness: Point,
}

impl<F: ConvexFunction> CDeltaSpec<F> {
    pub fn new(c: F, delta: f64, witness: Point) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "separation margin delta must lie in (0, 1], got {delta}"
            )));
        }
        if c.value(&witness) > 0.0 {
            return Err(Error::InvalidInput(
                "witness point violates the constraint".into(),
            ));
        }
        Ok(CDeltaSpec { c, delta, witness })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn constraint(&self) -> &F {
        &self.c
    }

    /// Default cut point: the subgradient half-space point
    /// `y = z - c(z) / |g|^2 * g`. Only meaningful for infeasible `z`.
    fn default_selection(&self, z: &Point, value: f64) -> Result<Point> {
        let g = self.c.subgradient(z);
        let n2 = g.norm_squared();
        if !n2.is_finite() || n2 <= 0.0 {
            return Err(Error::OracleContract(format!(
                "positive constraint value {value} with zero or non-finite subgradient"
            )));
        }
        Ok(z - g * (value / n2))
    }

    fn check_clearance(&self, z: &Point, y: &Point, value: f64) -> Result<()> {
        let required = self.delta * value;
        let actual = (z - y).norm();
        if actual >= required * (1.0 - CLEARANCE_RTOL) {
            Ok(())
        } else {
            Err(Error::SelectionClearance { required, actual })
        }
    }
}

/// One application of the cut operator with the default selection.
pub fn c_delta_apply<F: ConvexFunction>(spec: &CDeltaSpec<F>, z: &Point) -> Result<Point> {
    apply_with(spec, z, None)
}

fn apply_with<F: ConvexFunction>(
    spec: &CDeltaSpec<F>,
    z: &Point,
    selection: Option<&Selection>,
) -> Result<Point> {
    let value = spec.c.value(z);
    if value <= 0.0 {
        return Ok(z.clone());
    }
    let y = match selection {
        Some(select) => select(z),
        None => spec.default_selection(z, value)?,
    };
    spec.check_clearance(z, &y, value)?;
    let h = halfspace_from_cut(z, &y)?;
    project_halfspace(z, &h)
}

/// Checks a proposed cut point analytically and against samples of `C`:
/// every sample must lie in `H(z, y)`, and the distance from `z` to the
/// half-space must be at least `delta * c(z)` (which excludes the open ball
/// around `z`). Feasible `z` never needs a cut, so the answer is then
/// vacuously true.
pub fn validate_a_delta<F: ConvexFunction>(
    spec: &CDeltaSpec<F>,
    z: &Point,
    y: &Point,
    c_samples: &[Point],
) -> bool {
    let value = spec.c.value(z);
    if value <= 0.0 {
        return true;
    }
    let Ok(h) = halfspace_from_cut(z, y) else {
        return false;
    };
    if h.is_degenerate() {
        return false;
    }
    if h.distance(z) < spec.delta * value * (1.0 - CLEARANCE_RTOL) {
        return false;
    }
    c_samples
        .iter()
        .all(|s| h.violation(s) <= 1e-12 * s.norm_squared().max(1.0))
}

type Selection = Box<dyn Fn(&Point) -> Point + Send + Sync>;

/// The cut operator as a reusable fixed-point operator. A custom selection
/// rule may replace the default subgradient half-space point; either way the
/// clearance assertion runs on every application.
pub struct CDeltaOperator<F> {
    spec: CDeltaSpec<F>,
    selection: Option<Selection>,
    sample_spread: f64,
}

impl<F: ConvexFunction> CDeltaOperator<F> {
    pub fn new(spec: CDeltaSpec<F>) -> Self {
        CDeltaOperator {
            spec,
            selection: None,
            sample_spread: 2.0,
        }
    }

    pub fn with_selection(mut self, selection: Selection) -> Self {
        self.selection = Some(selection);
        self
    }

    pub fn spec(&self) -> &CDeltaSpec<F> {
        &self.spec
    }
}

impl<F: ConvexFunction> FixedPointOperator for CDeltaOperator<F> {
    fn apply(&self, z: &Point) -> Result<Point> {
        apply_with(&self.spec, z, self.selection.as_ref())
    }

    fn fix_membership(&self, x: &Point) -> Option<bool> {
        Some(self.spec.c.value(x) <= 0.0)
    }

    fn fix_samples(&self, count: usize, seed: u64) -> Option<Vec<Point>> {
        sample_sublevel(
            &self.spec.c,
            &self.spec.witness,
            self.sample_spread,
            count,
            seed,
        )
    }
}
