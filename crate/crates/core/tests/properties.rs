//! Randomized invariants for the geometric primitives, the operator
//! constructions, and the solver's step bookkeeping.

use proptest::prelude::*;

use vipcut::bilevel::grad_pnorm;
use vipcut::diagnostics::check_norm_product_inequality;
use vipcut::geometry::{halfspace_from_cut, project_halfspace, relaxed_project, HalfSpace, Point};
use vipcut::operators::{
    relax_operator, subgradient_projector, Affine, BallProjection, BoxProjection,
    FixedPointOperator,
};
use vipcut::solver::{shifted_point, validate_step_sequence, StepSequence};

fn pt(v: &[f64]) -> Point {
    Point::from_column_slice(v)
}

fn coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, dim..=dim)
}

fn dim_and<T: Strategy + 'static>(
    make: impl Fn(usize) -> T + 'static,
) -> impl Strategy<Value = (usize, T::Value)>
where
    T::Value: std::fmt::Debug,
{
    (1usize..6).prop_flat_map(move |d| (Just(d), make(d)))
}

proptest! {
    /// Projection onto a cut half-space lands in the half-space and is
    /// idempotent.
    #[test]
    fn cut_projection_is_idempotent_and_feasible(
        (_, (x, tx, u)) in dim_and(|d| (coords(d), coords(d), coords(d)))
    ) {
        let (x, tx, u) = (pt(&x), pt(&tx), pt(&u));
        prop_assume!((&x - &tx).norm() > 1e-6);
        let h = halfspace_from_cut(&x, &tx).unwrap();
        let p = project_halfspace(&u, &h).unwrap();
        let scale = u.norm().max(1.0);
        prop_assert!(h.violation(&p) <= 1e-9 * scale);
        let again = project_halfspace(&p, &h).unwrap();
        prop_assert!((again - &p).norm() <= 1e-9 * scale);
    }

    /// The relaxed projection obeys the per-step decrease inequality
    /// against every point of the half-space.
    #[test]
    fn relaxed_projection_obeys_the_decrease_inequality(
        (_, (x, tx, u, w0)) in dim_and(|d| (coords(d), coords(d), coords(d), coords(d))),
        alpha in 0.05..1.95f64,
        push in 0.0..5.0f64,
    ) {
        let (x, tx, u, w0) = (pt(&x), pt(&tx), pt(&u), pt(&w0));
        prop_assume!((&x - &tx).norm() > 1e-6);
        let h = halfspace_from_cut(&x, &tx).unwrap();
        // Build a point of the half-space by projecting and pushing inward.
        let normal = h.normal();
        let w = project_halfspace(&w0, &h).unwrap() - normal * (push / normal.norm());
        prop_assert!(h.violation(&w) <= 1e-9);
        let p = relaxed_project(&u, &h, alpha).unwrap();
        let lhs = (&p - &w).norm_squared();
        let rhs = (&u - &w).norm_squared()
            - (2.0 - alpha) / alpha * (&p - &u).norm_squared();
        let scale = u.norm_squared().max(w.norm_squared()).max(1.0);
        prop_assert!(lhs <= rhs + 1e-9 * scale);
    }

    /// Box projections cut: the image separates the input from every fixed
    /// point, with the strength-one decrease.
    #[test]
    fn box_projection_cuts_and_decreases(
        (_, (x, lo_raw, hi_raw, t)) in dim_and(|d| (
            coords(d),
            prop::collection::vec(-5.0..0.0f64, d..=d),
            prop::collection::vec(0.0..5.0f64, d..=d),
            prop::collection::vec(0.0..1.0f64, d..=d),
        ))
    ) {
        let x = pt(&x);
        let lo = pt(&lo_raw);
        let hi = pt(&hi_raw);
        // An interior point by componentwise interpolation.
        let w = Point::from_fn(lo.len(), |i, _| lo[i] + t[i] * (hi[i] - lo[i]));
        let proj = BoxProjection::new(lo, hi).unwrap();
        let tx = proj.apply(&x).unwrap();
        let scale = x.norm_squared().max(w.norm_squared()).max(1.0);
        let cut = (&tx - &x).dot(&(&tx - &w));
        prop_assert!(cut <= 1e-9 * scale);
        let sqne = (&tx - &w).norm_squared()
            - ((&x - &w).norm_squared() - (&x - &tx).norm_squared());
        prop_assert!(sqne <= 1e-9 * scale);
    }

    /// Relaxing a projection trades strength as (2 - alpha) / alpha.
    #[test]
    fn relaxed_projection_operator_keeps_the_traded_strength(
        (_, (x, w_dir)) in dim_and(|d| (coords(d), coords(d))),
        radius in 0.5..3.0f64,
        alpha in 0.05..2.0f64,
        shrink in 0.0..1.0f64,
    ) {
        let dim = x.len();
        let x = pt(&x);
        let ball = BallProjection::new(Point::zeros(dim), radius).unwrap();
        let relaxed = relax_operator(ball, alpha).unwrap();
        // A fixed point: any point of the ball.
        let dir = pt(&w_dir);
        let w = if dir.norm() == 0.0 {
            dir
        } else {
            &dir * (shrink * radius / dir.norm())
        };
        let ux = relaxed.apply(&x).unwrap();
        let strength = (2.0 - alpha) / alpha;
        let lhs = (&ux - &w).norm_squared();
        let rhs = (&x - &w).norm_squared() - strength * (&x - &ux).norm_squared();
        let scale = x.norm_squared().max(w.norm_squared()).max(1.0);
        prop_assert!(lhs <= rhs + 1e-9 * scale);
        prop_assert_eq!(relaxed.fix_membership(&w), Some(true));
    }

    /// The field shift moves by exactly rho, or not at all.
    #[test]
    fn shift_magnitude_is_rho_or_zero(
        (_, (x, f)) in dim_and(|d| (coords(d), coords(d))),
        rho in 1e-6..10.0f64,
    ) {
        let (x, f) = (pt(&x), pt(&f));
        let z = shifted_point(&x, &f, rho, 1e-15);
        let moved = (&z - &x).norm();
        if f.norm() > 1e-15 {
            prop_assert!((moved - rho).abs() <= 1e-12 * rho.max(1.0));
        } else {
            prop_assert_eq!(moved, 0.0);
        }
    }

    /// Validity of the power step family matches its defining constraints,
    /// and valid sequences decay monotonically from rho0.
    #[test]
    fn step_sequence_validity_and_decay(rho0 in -1.0..3.0f64, gamma in -0.5..1.5f64) {
        let s = StepSequence::new(rho0, gamma);
        let valid = validate_step_sequence(&s);
        prop_assert_eq!(valid, rho0 > 0.0 && gamma > 0.0 && gamma <= 1.0);
        if valid {
            prop_assert_eq!(s.rho(0), rho0);
            for k in 0..50 {
                prop_assert!(s.rho(k + 1) <= s.rho(k));
                prop_assert!(s.rho(k) > 0.0);
            }
        }
    }

    /// For affine functions the subgradient projector is exactly the
    /// projection onto the function's zero sublevel half-space.
    #[test]
    fn subgradient_projector_matches_halfspace_projection(
        (_, (a_raw, x)) in dim_and(|d| (coords(d), coords(d))),
        b in -3.0..3.0f64,
    ) {
        let a = pt(&a_raw);
        let x = pt(&x);
        prop_assume!(a.norm() > 0.1);
        let t = subgradient_projector(Affine { a: a.clone(), b });
        let image = t.apply(&x).unwrap();
        // Anchor on the boundary <a, u> = b, inward normal a.
        let anchor = &a * (b / a.norm_squared());
        let h = HalfSpace::new(anchor, a.clone()).unwrap();
        let reference = project_halfspace(&x, &h).unwrap();
        prop_assert!((image - reference).norm() <= 1e-12 * x.norm().max(1.0));
    }

    /// The power-sum ratio always lands in [1/n^2, 1].
    #[test]
    fn power_sum_ratio_stays_in_its_bracket(
        (dim, x) in dim_and(coords),
        a in 0.5..3.0f64,
        b in 0.5..3.0f64,
    ) {
        let x = pt(&x);
        prop_assume!(x.iter().any(|v| *v != 0.0));
        let ratio = check_norm_product_inequality(&x, a, b).unwrap();
        let n = dim as f64;
        prop_assert!(ratio <= 1.0 + 1e-12);
        prop_assert!(ratio >= 1.0 / (n * n) - 1e-12);
    }

    /// Exponent two turns the power gradient into the identity.
    #[test]
    fn power_gradient_at_two_is_identity((_, x) in dim_and(coords)) {
        let x = pt(&x);
        prop_assert_eq!(grad_pnorm(&x, 2.0), x);
    }

    /// A degenerate cut (operator already fixed) accepts every point.
    #[test]
    fn degenerate_cut_is_the_whole_space((_, (x, u)) in dim_and(|d| (coords(d), coords(d)))) {
        let (x, u) = (pt(&x), pt(&u));
        let h = halfspace_from_cut(&x, &x).unwrap();
        prop_assert!(h.is_degenerate());
        prop_assert!(h.contains(&u));
        prop_assert_eq!(project_halfspace(&u, &h).unwrap(), u);
    }
}
