//! Minimal-norm selection over the solutions of an inner convex program.
//!
//! The inner program minimizes a convex `g` over the fixed set of a
//! constraint operator; its solution set is exactly the fixed set of the
//! proximity operator of `g` restricted to the constraint. Running the cut
//! solver with the outer gradient `|x|^(p-2) x + alpha_reg * x` as the
//! field then selects, among all inner solutions, the one of minimal
//! (ridge-regularized) p-th power norm.

use crate::geometry::Point;
use crate::operators::{ConvexFunction, FixedPointOperator, InnerSolveParams, Resolvent};
use crate::solver::{vip_solve, SolverConfig, SolverTrace, VipProblem};
use crate::{ensure_finite, ensure_same_dim, Error, Result};

/// Gradient of `(1/p) sum_i |x_i|^p`, componentwise `x_i |x_i|^(p-2)`.
/// At `p = 2` this is the identity map.
pub fn grad_pnorm(x: &Point, p: f64) -> Point {
    x.map(|v| v * v.abs().powf(p - 2.0))
}

/// Gradient of the outer objective
/// `(1/p) sum_i |x_i|^p + (alpha_reg / 2) |x|^2`.
pub fn grad_outer(x: &Point, p: f64, alpha_reg: f64) -> Point {
    grad_pnorm(x, p) + x * alpha_reg
}

/// The outer objective itself, used by the grid search and for reporting.
pub fn outer_value(x: &Point, p: f64, alpha_reg: f64) -> f64 {
    let power: f64 = x.iter().map(|v| v.abs().powf(p)).sum();
    power / p + 0.5 * alpha_reg * x.norm_squared()
}

/// An instance: inner objective, constraint operator, and the outer
/// selection parameters.
pub struct BilevelProblem<'a> {
    inner_objective: Box<dyn ConvexFunction + 'a>,
    constraint: Box<dyn FixedPointOperator + 'a>,
    dimension: usize,
    p: f64,
    alpha_reg: f64,
    lambda: f64,
    inner: InnerSolveParams,
    known_solution: Option<Point>,
}

impl<'a> BilevelProblem<'a> {
    /// Requires `p >= 2`, `alpha_reg >= 0` (strictly positive when
    /// `p > 2`, since the bare p-norm gradient loses strong monotonicity
    /// near the origin), and `lambda > 0` for the proximity step.
    pub fn new(
        dimension: usize,
        inner_objective: impl ConvexFunction + 'a,
        constraint: impl FixedPointOperator + 'a,
        p: f64,
        alpha_reg: f64,
        lambda: f64,
    ) -> Result<Self> {
        if !(p.is_finite() && p >= 2.0) {
            return Err(Error::InvalidInput(format!(
                "outer exponent must be at least 2, got {p}"
            )));
        }
        if !(alpha_reg.is_finite() && alpha_reg >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "ridge weight must be nonnegative, got {alpha_reg}"
            )));
        }
        if p > 2.0 && alpha_reg == 0.0 {
            return Err(Error::InvalidInput(
                "a positive ridge weight is required when the outer exponent exceeds 2".into(),
            ));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidInput(format!(
                "proximity parameter must be positive, got {lambda}"
            )));
        }
        Ok(BilevelProblem {
            inner_objective: Box::new(inner_objective),
            constraint: Box::new(constraint),
            dimension,
            p,
            alpha_reg,
            lambda,
            inner: InnerSolveParams::default(),
            known_solution: None,
        })
    }

    pub fn with_inner_params(mut self, inner: InnerSolveParams) -> Self {
        self.inner = inner;
        self
    }

    pub fn with_known_solution(mut self, solution: Point) -> Result<Self> {
        ensure_same_dim(self.dimension, solution.len())?;
        ensure_finite("known solution", &solution)?;
        self.known_solution = Some(solution);
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha_reg(&self) -> f64 {
        self.alpha_reg
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn inner_objective(&self) -> &dyn ConvexFunction {
        self.inner_objective.as_ref()
    }

    pub fn constraint(&self) -> &dyn FixedPointOperator {
        self.constraint.as_ref()
    }

    pub fn known_solution(&self) -> Option<&Point> {
        self.known_solution.as_ref()
    }

    pub fn outer_gradient(&self, x: &Point) -> Point {
        grad_outer(x, self.p, self.alpha_reg)
    }

    pub fn outer_value(&self, x: &Point) -> f64 {
        outer_value(x, self.p, self.alpha_reg)
    }
}

/// Runs the cut solver on the selection problem: the operator is the
/// proximity step of the inner objective over the constraint, the field is
/// the outer gradient.
pub fn solve_p_min_norm(
    problem: &BilevelProblem,
    config: &SolverConfig,
) -> Result<(Point, SolverTrace)> {
    let resolvent = Resolvent::new(
        problem.inner_objective.as_ref(),
        problem.constraint.as_ref(),
        problem.dimension,
        problem.lambda,
        problem.inner.clone(),
    )?;
    let p = problem.p;
    let alpha_reg = problem.alpha_reg;
    let field = move |x: &Point| grad_outer(x, p, alpha_reg);
    let mut vip = VipProblem::new(problem.dimension, field, resolvent);
    if let Some(sol) = &problem.known_solution {
        vip = vip.with_known_solution(sol.clone())?;
    }
    vip_solve(&vip, config)
}

/// What the exhaustive grid search found.
#[derive(Clone, Debug)]
pub struct GridSearchResult {
    pub argmin: Point,
    pub inner_value: f64,
    pub outer_value: f64,
    pub feasible_points: usize,
}

/// Independent low-dimensional reference: scans a grid over the
/// constraint's bounding box, keeps the points feasible for the constraint
/// with inner objective within a hair of the minimum, and among those picks
/// the smallest outer objective (lexicographic tie-break). Supports
/// dimensions 1 through 3.
pub fn brute_force_bilevel(problem: &BilevelProblem, grid_step: f64) -> Result<GridSearchResult> {
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(Error::InvalidInput(format!(
            "grid step must be positive, got {grid_step}"
        )));
    }
    if problem.dimension == 0 || problem.dimension > 3 {
        return Err(Error::Unsupported(
            "grid search handles dimensions 1 through 3".into(),
        ));
    }
    let (lo, hi) = problem
        .constraint
        .bounding_box()
        .ok_or_else(|| Error::Unsupported("grid search needs a bounding box oracle".into()))?;
    ensure_same_dim(problem.dimension, lo.len())?;

    let axis_counts: Vec<usize> = (0..problem.dimension)
        .map(|i| ((hi[i] - lo[i]) / grid_step + 1e-9).floor() as usize + 1)
        .collect();
    let total: usize = axis_counts.iter().product();
    if total > 50_000_000 {
        return Err(Error::Unsupported(format!(
            "grid of {total} points is too large; coarsen the step"
        )));
    }

    let point_at = |flat: usize| -> Point {
        let mut rest = flat;
        Point::from_fn(problem.dimension, |i, _| {
            let idx = rest % axis_counts[i];
            rest /= axis_counts[i];
            (lo[i] + idx as f64 * grid_step).min(hi[i])
        })
    };

    // First pass: minimal inner objective over feasible grid points.
    let mut min_inner = f64::INFINITY;
    let mut feasible_points = 0usize;
    for flat in 0..total {
        let u = point_at(flat);
        match problem.constraint.fix_membership(&u) {
            Some(true) => {}
            Some(false) => continue,
            None => {
                return Err(Error::Unsupported(
                    "grid search needs a membership oracle on the constraint".into(),
                ))
            }
        }
        feasible_points += 1;
        min_inner = min_inner.min(problem.inner_objective.value(&u));
    }
    if feasible_points == 0 {
        return Err(Error::InvalidInput(
            "no grid point was feasible for the constraint".into(),
        ));
    }

    // Second pass: among near-minimizers of the inner objective, take the
    // smallest outer objective.
    let inner_band = 1e-8 * min_inner.abs().max(1.0);
    let mut best: Option<(Point, f64)> = None;
    for flat in 0..total {
        let u = point_at(flat);
        if problem.constraint.fix_membership(&u) != Some(true) {
            continue;
        }
        if problem.inner_objective.value(&u) > min_inner + inner_band {
            continue;
        }
        let value = problem.outer_value(&u);
        best = Some(match best.take() {
            None => (u, value),
            Some((bu, bv)) => {
                let tie_band = 1e-12 * bv.abs().max(1.0);
                let strictly_better = value < bv - tie_band;
                let tie_break = (value - bv).abs() <= tie_band && lex_less(&u, &bu);
                if strictly_better || tie_break {
                    (u, value)
                } else {
                    (bu, bv)
                }
            }
        });
    }
    let (argmin, outer) = best.expect("feasible point count was positive");
    let inner_value = problem.inner_objective.value(&argmin);
    Ok(GridSearchResult {
        argmin,
        inner_value,
        outer_value: outer,
        feasible_points,
    })
}

fn lex_less(a: &Point, b: &Point) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}
