//! Resolvents of `subdifferential(g) + normal cone of C`, realized by an
//! inner projected subgradient descent.
//!
//! `J(y)` is the unique minimizer of `g(u) + |u - y|^2 / (2 lambda)` over
//! `C`; its fixed points are exactly the minimizers of `g` over `C`. The
//! inner solve is iterative, so applications carry a tolerance and can fail
//! by iteration cap; callers that need tighter fixed-point evaluations
//! tighten `InnerSolveParams::tol`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::convex::ConvexFunction;
use super::FixedPointOperator;
use crate::geometry::Point;
use crate::{ensure_finite, Error, Result};

#[derive(Clone, Debug)]
pub struct InnerSolveParams {
    /// Absolute bound on the fixed-point residual of the inner iteration.
    pub tol: f64,
    pub max_steps: usize,
    /// Smoothness bound (Lipschitz constant of the gradient) for `g` when
    /// known; the inner step is then `1 / (smoothness + 1/lambda)`.
    /// Otherwise the step is found by backtracking.
    pub smoothness: Option<f64>,
}

impl Default for InnerSolveParams {
    fn default() -> Self {
        InnerSolveParams {
            tol: 1e-10,
            max_steps: 100_000,
            smoothness: None,
        }
    }
}

/// Evaluates the resolvent at `y` by minimizing
/// `g(u) + |u - y|^2 / (2 lambda)` over the set projected onto by
/// `constraint`.
pub fn resolvent_apply(
    g: &dyn ConvexFunction,
    constraint: &dyn FixedPointOperator,
    lambda: f64,
    y: &Point,
    params: &InnerSolveParams,
) -> Result<Point> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "resolvent parameter lambda must be positive, got {lambda}"
        )));
    }
    let objective = |u: &Point| g.value(u) + (u - y).norm_squared() / (2.0 * lambda);
    let direction = |u: &Point| g.subgradient(u) + (u - y) / lambda;

    let mut u = constraint.apply(y)?;
    let fixed_step = params.smoothness.map(|l| 1.0 / (l + 1.0 / lambda));
    let mut step = fixed_step.unwrap_or(lambda);
    let mut residual = f64::INFINITY;

    for iteration in 0..params.max_steps {
        let d = direction(&u);
        ensure_finite("inner objective subgradient", &d)?;
        let candidate = match fixed_step {
            Some(s) => constraint.apply(&(&u - &d * s))?,
            None => {
                // Backtracking: shrink until the step satisfies the local
                // upper-model decrease test, then let it grow again slowly.
                let phi_u = objective(&u);
                let mut cand = constraint.apply(&(&u - &d * step))?;
                let mut halvings = 0;
                loop {
                    let diff = &cand - &u;
                    let model = phi_u + d.dot(&diff) + diff.norm_squared() / (2.0 * step);
                    if objective(&cand) <= model + 1e-15 * phi_u.abs().max(1.0) || halvings >= 60 {
                        break;
                    }
                    step *= 0.5;
                    halvings += 1;
                    cand = constraint.apply(&(&u - &d * step))?;
                }
                step = (step * 1.25).min(lambda * 1e3);
                cand
            }
        };
        ensure_finite("inner solve iterate", &candidate)?;
        residual = (&candidate - &u).norm();
        u = candidate;
        if residual <= params.tol {
            return Ok(u);
        }
        let _ = iteration;
    }
    Err(Error::InnerNoConvergence {
        residual,
        iterations: params.max_steps,
    })
}

/// The resolvent as a reusable operator. Fixed-set samples come from Picard
/// iteration of `apply` from random starts; the operator is firmly
/// nonexpansive, so those iterations settle on genuine minimizers.
pub struct Resolvent<G, C> {
    g: G,
    constraint: C,
    dimension: usize,
    lambda: f64,
    inner: InnerSolveParams,
    picard_tol: f64,
    picard_cap: usize,
    sample_spread: f64,
}

impl<G: ConvexFunction, C: FixedPointOperator> Resolvent<G, C> {
    pub fn new(
        g: G,
        constraint: C,
        dimension: usize,
        lambda: f64,
        inner: InnerSolveParams,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidInput(format!(
                "resolvent parameter lambda must be positive, got {lambda}"
            )));
        }
        Ok(Resolvent {
            g,
            constraint,
            dimension,
            lambda,
            inner,
            picard_tol: 1e-9,
            picard_cap: 400,
            sample_spread: 1.0,
        })
    }

    pub fn with_sample_spread(mut self, spread: f64) -> Self {
        self.sample_spread = spread;
        self
    }

    pub fn with_picard_tol(mut self, tol: f64) -> Self {
        self.picard_tol = tol;
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl<G: ConvexFunction, C: FixedPointOperator> FixedPointOperator for Resolvent<G, C> {
    fn apply(&self, y: &Point) -> Result<Point> {
        resolvent_apply(&self.g, &self.constraint, self.lambda, y, &self.inner)
    }

    fn fix_samples(&self, count: usize, seed: u64) -> Option<Vec<Point>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        'outer: for _ in 0..count {
            let start = Point::from_fn(self.dimension, |_, _| rng.sample::<f64, _>(StandardNormal))
                * self.sample_spread;
            let mut u = self.constraint.apply(&start).ok()?;
            for _ in 0..self.picard_cap {
                let next = self.apply(&u).ok()?;
                let residual = (&next - &u).norm();
                u = next;
                if residual <= self.picard_tol {
                    out.push(u);
                    continue 'outer;
                }
            }
            // This start did not settle; skip it rather than emit a point
            // that is not approximately fixed.
        }
        if out.is_empty() {
            None
        } else {
            Some(out)
        }
    }

    fn bounding_box(&self) -> Option<(Point, Point)> {
        // Fixed points minimize g over C, hence lie inside C.
        self.constraint.bounding_box()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::convex::{Affine, AffineSquared, HalfSquaredDistance, ZeroFunction};
    use crate::operators::projections::{BoxProjection, Identity};

    fn pt(coords: &[f64]) -> Point {
        Point::from_column_slice(coords)
    }

    #[test]
    fn zero_objective_reduces_to_the_projection() {
        let c = BoxProjection::unit(2).unwrap();
        let out = resolvent_apply(
            &ZeroFunction,
            &c,
            1.0,
            &pt(&[2.0, -1.0]),
            &InnerSolveParams::default(),
        )
        .unwrap();
        assert!((out - pt(&[1.0, 0.0])).norm() <= 1e-9);
    }

    #[test]
    fn quadratic_objective_has_closed_form() {
        // g = 1/2 |u|^2, unconstrained: J(y) = y / (1 + lambda).
        let out = resolvent_apply(
            &HalfSquaredDistance {
                center: Point::zeros(2),
            },
            &Identity,
            1.0,
            &pt(&[2.0, 4.0]),
            &InnerSolveParams {
                smoothness: Some(1.0),
                ..InnerSolveParams::default()
            },
        )
        .unwrap();
        assert!((out - pt(&[1.0, 2.0])).norm() <= 1e-8);
    }

    #[test]
    fn quadratic_objective_converges_without_a_smoothness_hint() {
        let out = resolvent_apply(
            &HalfSquaredDistance {
                center: Point::zeros(2),
            },
            &Identity,
            1.0,
            &pt(&[2.0, 4.0]),
            &InnerSolveParams::default(),
        )
        .unwrap();
        assert!((out - pt(&[1.0, 2.0])).norm() <= 1e-8);
    }

    #[test]
    fn linear_objective_over_a_box_shifts_then_clamps() {
        // J(y) = clamp(y - lambda * a).
        let c = BoxProjection::unit(2).unwrap();
        let out = resolvent_apply(
            &Affine {
                a: pt(&[1.0, 1.0]),
                b: 0.0,
            },
            &c,
            0.5,
            &pt(&[0.7, 0.2]),
            &InnerSolveParams {
                smoothness: Some(0.0),
                ..InnerSolveParams::default()
            },
        )
        .unwrap();
        assert!((out - pt(&[0.2, 0.0])).norm() <= 1e-9);
    }

    #[test]
    fn iteration_cap_reports_the_last_residual() {
        let err = resolvent_apply(
            &HalfSquaredDistance {
                center: pt(&[100.0, 100.0]),
            },
            &Identity,
            1.0,
            &pt(&[0.0, 0.0]),
            &InnerSolveParams {
                tol: 1e-10,
                max_steps: 3,
                // A large overestimate forces tiny steps, so three of them
                // cannot come close to the minimizer (50, 50).
                smoothness: Some(200.0),
            },
        )
        .unwrap_err();
        match err {
            Error::InnerNoConvergence {
                residual,
                iterations,
            } => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-10);
            }
            other => panic!("expected inner-solve cap, got {other:?}"),
        }
    }

    #[test]
    fn nonpositive_lambda_is_rejected() {
        let err = resolvent_apply(
            &ZeroFunction,
            &Identity,
            0.0,
            &pt(&[1.0]),
            &InnerSolveParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn resolvent_output_is_inner_optimal_among_samples() {
        // Check the variational characterization on sampled competitors.
        let g = AffineSquared {
            a: pt(&[1.0, 1.0]),
            b: 1.0,
        };
        let c = BoxProjection::new(Point::zeros(2), pt(&[2.0, 2.0])).unwrap();
        let lambda = 1.0;
        let y = pt(&[1.5, 0.25]);
        let u = resolvent_apply(
            &g,
            &c,
            lambda,
            &y,
            &InnerSolveParams {
                smoothness: Some(4.0),
                ..InnerSolveParams::default()
            },
        )
        .unwrap();
        let objective = |p: &Point| g.value(p) + (p - &y).norm_squared() / (2.0 * lambda);
        let base = objective(&u);
        for w in c.fix_samples(200, 21).unwrap() {
            assert!(objective(&w) >= base - 1e-7);
        }
    }

    #[test]
    fn picard_samples_are_approximately_fixed_minimizers() {
        let g = AffineSquared {
            a: pt(&[1.0, 1.0]),
            b: 1.0,
        };
        let c = BoxProjection::new(Point::zeros(2), pt(&[2.0, 2.0])).unwrap();
        let t = Resolvent::new(
            g,
            c,
            2,
            1.0,
            InnerSolveParams {
                smoothness: Some(4.0),
                ..InnerSolveParams::default()
            },
        )
        .unwrap();
        let samples = t.fix_samples(8, 13).unwrap();
        assert!(!samples.is_empty());
        for s in &samples {
            let image = t.apply(s).unwrap();
            assert!((image - s).norm() <= 1e-8);
            // Fixed points of the resolvent minimize g over the box; here
            // the minimum value is zero on the segment x1 + x2 = 1.
            assert!((s[0] + s[1] - 1.0).abs() <= 1e-6);
        }
    }
}
