//! Sampled checks for the assumptions the solver relies on.
//!
//! Each check draws a deterministic sample cloud, evaluates a defining
//! inequality on it, and reports the worst normalized violation together
//! with a witness when the check fails. Sampling can only ever certify
//! failure; a passing report is evidence, not proof, and the report types
//! say which of the two they carry.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::geometry::Point;
use crate::operators::{FixedPointOperator, VectorField};
use crate::{ensure_finite, Error, Result};

/// Normalized-violation slack shared by the sampled checks.
pub const CHECK_SLACK: f64 = 1e-9;

/// Where to draw probe points.
#[derive(Clone, Debug)]
pub enum RegionKind {
    /// Uniform over an axis-aligned box.
    Box { lo: Point, hi: Point },
    /// Uniform direction, uniform radius in `[r_min, r_max]` around a
    /// center; set `r_min > 0` to avoid a neighborhood of the center.
    SphereShell {
        center: Point,
        r_min: f64,
        r_max: f64,
    },
}

#[derive(Clone, Debug)]
pub struct SampleRegion {
    pub kind: RegionKind,
    pub count: usize,
    pub seed: u64,
}

impl SampleRegion {
    pub fn cube(dim: usize, half_width: f64, count: usize, seed: u64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidInput(format!(
                "cube half-width must be positive, got {half_width}"
            )));
        }
        let lo = Point::from_element(dim, -half_width);
        let hi = Point::from_element(dim, half_width);
        SampleRegion::boxed(lo, hi, count, seed)
    }

    pub fn boxed(lo: Point, hi: Point, count: usize, seed: u64) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidInput(
                "box region bounds must share a nonzero dimension".into(),
            ));
        }
        ensure_finite("box region bounds", &lo)?;
        ensure_finite("box region bounds", &hi)?;
        if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
            return Err(Error::InvalidInput(
                "box region requires lo <= hi componentwise".into(),
            ));
        }
        Ok(SampleRegion {
            kind: RegionKind::Box { lo, hi },
            count,
            seed,
        })
    }

    pub fn shell(center: Point, r_min: f64, r_max: f64, count: usize, seed: u64) -> Result<Self> {
        if !(r_min.is_finite() && r_max.is_finite() && r_min >= 0.0 && r_max >= r_min) {
            return Err(Error::InvalidInput(format!(
                "shell radii must satisfy 0 <= r_min <= r_max, got [{r_min}, {r_max}]"
            )));
        }
        if center.is_empty() {
            return Err(Error::InvalidInput("shell center must be nonempty".into()));
        }
        Ok(SampleRegion {
            kind: RegionKind::SphereShell {
                center,
                r_min,
                r_max,
            },
            count,
            seed,
        })
    }

    pub fn dimension(&self) -> usize {
        match &self.kind {
            RegionKind::Box { lo, .. } => lo.len(),
            RegionKind::SphereShell { center, .. } => center.len(),
        }
    }

    /// The deterministic probe cloud for this region.
    pub fn samples(&self) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let dim = self.dimension();
        (0..self.count)
            .map(|_| match &self.kind {
                RegionKind::Box { lo, hi } => Point::from_fn(dim, |i, _| {
                    let (l, h) = (lo[i], hi[i]);
                    if l == h {
                        l
                    } else {
                        rng.random_range(l..h)
                    }
                }),
                RegionKind::SphereShell {
                    center,
                    r_min,
                    r_max,
                } => {
                    let mut dir: Point =
                        Point::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let mut norm = dir.norm();
                    while norm <= 1e-12 {
                        dir = Point::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                        norm = dir.norm();
                    }
                    let radius = if r_min == r_max {
                        *r_min
                    } else {
                        rng.random_range(*r_min..*r_max)
                    };
                    center + dir * (radius / norm)
                }
            })
            .collect()
    }
}

/// Outcome of one sampled inequality check. `worst_violation` is already
/// normalized by the local scale; the check passes when it stays within
/// `slack`.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    pub witness: Option<Vec<f64>>,
    pub samples_used: usize,
    pub slack: f64,
}

impl CheckReport {
    fn from_scan(name: &str, scan: ViolationScan) -> CheckReport {
        CheckReport {
            name: name.to_string(),
            passed: scan.worst <= CHECK_SLACK,
            worst_violation: scan.worst,
            witness: if scan.worst > CHECK_SLACK {
                scan.witness.map(|w| w.iter().copied().collect())
            } else {
                None
            },
            samples_used: scan.used,
            slack: CHECK_SLACK,
        }
    }
}

struct ViolationScan {
    worst: f64,
    witness: Option<Point>,
    used: usize,
}

impl ViolationScan {
    fn new() -> Self {
        ViolationScan {
            worst: 0.0,
            witness: None,
            used: 0,
        }
    }

    fn record(&mut self, violation: f64, at: &Point) {
        self.used += 1;
        if violation > self.worst {
            self.worst = violation;
            self.witness = Some(at.clone());
        }
    }
}

fn fix_reference_points(
    operator: &dyn FixedPointOperator,
    provided: Option<&[Point]>,
    seed: u64,
) -> Result<Vec<Point>> {
    if let Some(ws) = provided {
        if ws.is_empty() {
            return Err(Error::MissingFixSamples(
                "an empty fixed-point sample list was supplied",
            ));
        }
        return Ok(ws.to_vec());
    }
    operator
        .fix_samples(32, seed)
        .filter(|ws| !ws.is_empty())
        .ok_or(Error::MissingFixSamples(
            "the operator exposes no fixed-point sampler; pass reference points explicitly",
        ))
}

/// Checks `<T(x) - x, T(x) - w> <= 0` for sampled `x` and fixed points `w`.
/// Violations are normalized by `max(1, |x|^2, |w|^2)`.
pub fn check_cutter(
    operator: &dyn FixedPointOperator,
    region: &SampleRegion,
    fix_points: Option<&[Point]>,
) -> Result<CheckReport> {
    let refs = fix_reference_points(operator, fix_points, region.seed ^ 0x5eed)?;
    let mut scan = ViolationScan::new();
    for x in region.samples() {
        let tx = operator.apply(&x)?;
        let residual = &tx - &x;
        for w in &refs {
            let scale = x.norm_squared().max(w.norm_squared()).max(1.0);
            let value = residual.dot(&(&tx - w));
            scan.record(value / scale, &x);
        }
    }
    Ok(CheckReport::from_scan("cutter", scan))
}

/// Checks `|T(x) - w|^2 <= |x - w|^2 - alpha |x - T(x)|^2` on samples.
pub fn check_sqne(
    operator: &dyn FixedPointOperator,
    alpha: f64,
    region: &SampleRegion,
    fix_points: Option<&[Point]>,
) -> Result<CheckReport> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "strength parameter must be nonnegative, got {alpha}"
        )));
    }
    let refs = fix_reference_points(operator, fix_points, region.seed ^ 0x5eed)?;
    let mut scan = ViolationScan::new();
    for x in region.samples() {
        let tx = operator.apply(&x)?;
        let residual_sq = (&x - &tx).norm_squared();
        for w in &refs {
            let scale = x.norm_squared().max(w.norm_squared()).max(1.0);
            let lhs = (&tx - w).norm_squared();
            let rhs = (&x - w).norm_squared() - alpha * residual_sq;
            scan.record((lhs - rhs) / scale, &x);
        }
    }
    Ok(CheckReport::from_scan("sqne", scan))
}

/// Monte-Carlo lower-envelope estimate of the one-step decrease
/// `dist(x) - dist(T(x))` over sampled points with `dist(x) >= r`, where
/// `dist` is the distance to the fixed set taken from the operator's
/// projection oracle. Returns `+inf` when no sample clears the threshold.
/// An estimate near zero for some `r > 0` is evidence against uniform
/// decrease far from the fixed set; a positive estimate is merely
/// consistent with it.
pub fn estimate_decrease(
    operator: &dyn FixedPointOperator,
    region: &SampleRegion,
    r: f64,
) -> Result<f64> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "threshold must be nonnegative, got {r}"
        )));
    }
    let dist = |p: &Point| -> Result<f64> {
        operator
            .fix_projection(p)
            .map(|q| (p - &q).norm())
            .ok_or(Error::MissingFixProjection)
    };
    let mut best = f64::INFINITY;
    for x in region.samples() {
        let dx = dist(&x)?;
        if dx < r {
            continue;
        }
        let tx = operator.apply(&x)?;
        let dtx = dist(&tx)?;
        best = best.min(dx - dtx);
    }
    Ok(best)
}

/// Decrease estimates over a grid of thresholds. `consistent` is true when
/// every estimate at a strictly positive threshold stays above `threshold`;
/// the field is named `consistent` deliberately — this is sampled evidence
/// for the decrease property, never a verification of it.
#[derive(Clone, Debug, Serialize)]
pub struct QuasiShrinkReport {
    pub estimates: Vec<(f64, f64)>,
    pub consistent: bool,
    pub threshold: f64,
}

pub fn probe_quasi_shrinking(
    operator: &dyn FixedPointOperator,
    region: &SampleRegion,
    r_grid: &[f64],
    threshold: f64,
) -> Result<QuasiShrinkReport> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "evidence threshold must be nonnegative, got {threshold}"
        )));
    }
    let mut estimates = Vec::with_capacity(r_grid.len());
    let mut consistent = true;
    for &r in r_grid {
        let d = estimate_decrease(operator, region, r)?;
        if r > 0.0 && d <= threshold {
            consistent = false;
        }
        estimates.push((r, d));
    }
    Ok(QuasiShrinkReport {
        estimates,
        consistent,
        threshold,
    })
}

/// Checks the coercivity-style bound `<F(x), x - q> >= beta |F(x)| |x - q|`
/// on samples (meaningful on regions far from `q`).
pub fn check_field_coercivity(
    field: &dyn VectorField,
    q: &Point,
    beta: f64,
    region: &SampleRegion,
) -> Result<CheckReport> {
    if !(beta.is_finite() && beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "coercivity constant must lie in (0, 1], got {beta}"
        )));
    }
    let mut scan = ViolationScan::new();
    for x in region.samples() {
        let fx = field.eval(&x);
        let gap = &x - q;
        let lhs = beta * fx.norm() * gap.norm();
        let rhs = fx.dot(&gap);
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        scan.record((lhs - rhs) / scale, &x);
    }
    Ok(CheckReport::from_scan("field_coercivity", scan))
}

/// Checks `<F(x) - F(y), x - y> >= alpha |x - y|^2` on consecutive sample
/// pairs from the region.
pub fn check_strong_monotonicity(
    field: &dyn VectorField,
    alpha: f64,
    region: &SampleRegion,
) -> Result<CheckReport> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "monotonicity modulus must be nonnegative, got {alpha}"
        )));
    }
    let samples = region.samples();
    let mut scan = ViolationScan::new();
    for pair in samples.windows(2) {
        let (x, y) = (&pair[0], &pair[1]);
        let gap = x - y;
        let lhs = alpha * gap.norm_squared();
        let rhs = (field.eval(x) - field.eval(y)).dot(&gap);
        let scale = x.norm_squared().max(y.norm_squared()).max(1.0);
        scan.record((lhs - rhs) / scale, x);
    }
    Ok(CheckReport::from_scan("strong_monotonicity", scan))
}

/// Probes demiclosedness of `T - I` at zero along a concrete sequence: the
/// residuals `|T(x_n) - x_n|` should vanish along it, and if the sequence
/// approaches `target` then `target` should be fixed. `consistent` is false
/// exactly when the sequence gets near the target with vanishing residuals
/// yet the target moves under the operator.
#[derive(Clone, Debug, Serialize)]
pub struct ClosednessReport {
    pub residuals: Vec<f64>,
    pub target_residual: f64,
    pub target_fixed: bool,
    pub consistent: bool,
}

pub fn check_closedness_probe(
    operator: &dyn FixedPointOperator,
    sequence: &[Point],
    target: &Point,
    residual_tol: f64,
) -> Result<ClosednessReport> {
    if sequence.is_empty() {
        return Err(Error::InvalidInput(
            "closedness probe needs a nonempty sequence".into(),
        ));
    }
    if !(residual_tol.is_finite() && residual_tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "residual tolerance must be positive, got {residual_tol}"
        )));
    }
    let mut residuals = Vec::with_capacity(sequence.len());
    for x in sequence {
        residuals.push((operator.apply(x)? - x).norm());
    }
    let tail = *residuals.last().expect("nonempty");
    let near = sequence
        .last()
        .map(|x| (x - target).norm() <= residual_tol)
        .unwrap_or(false);
    let target_residual = (operator.apply(target)? - target).norm();
    let target_fixed = target_residual <= residual_tol;
    let consistent = !(near && tail <= residual_tol) || target_fixed;
    Ok(ClosednessReport {
        residuals,
        target_residual,
        target_fixed,
        consistent,
    })
}

/// Iterates `a_{k+1} = max(0, a_k - f(a_k) + b_k)` and returns the final
/// value; `b` is padded with zeros when shorter than `steps`. With `f`
/// positive away from zero and summable `b`, the sequence dies out.
pub fn sequence_lemma_probe(
    f: impl Fn(f64) -> f64,
    b: &[f64],
    a0: f64,
    steps: usize,
) -> Result<f64> {
    if !(a0.is_finite() && a0 >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "initial value must be nonnegative, got {a0}"
        )));
    }
    if b.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput(
            "perturbations must be nonnegative and finite".into(),
        ));
    }
    let mut a = a0;
    for k in 0..steps {
        let fa = f(a);
        if !fa.is_finite() || fa < 0.0 {
            return Err(Error::InvalidInput(format!(
                "decrease function must be nonnegative and finite, got {fa} at value {a}"
            )));
        }
        let bk = b.get(k).copied().unwrap_or(0.0);
        a = (a - fa + bk).max(0.0);
    }
    Ok(a)
}

/// Ratio `(sum |x_i|^(a+b))^2 / (sum |x_i|^(2a) * sum |x_i|^(2b))` for
/// exponents at least one half. The returned value always lies in
/// `[1/n^2, 1]`; callers can assert the bracket on concrete data.
pub fn check_norm_product_inequality(x: &Point, a_exp: f64, b_exp: f64) -> Result<f64> {
    if !(a_exp.is_finite() && b_exp.is_finite() && a_exp >= 0.5 && b_exp >= 0.5) {
        return Err(Error::InvalidInput(format!(
            "exponents must be at least 1/2, got {a_exp} and {b_exp}"
        )));
    }
    if x.is_empty() || x.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInput(
            "the ratio needs a nonzero vector".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ratio input"));
    }
    let mut cross = 0.0;
    let mut left = 0.0;
    let mut right = 0.0;
    for v in x.iter() {
        let m = v.abs();
        cross += m.powf(a_exp + b_exp);
        left += m.powf(2.0 * a_exp);
        right += m.powf(2.0 * b_exp);
    }
    Ok(cross * cross / (left * right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{matrix_field, BallProjection, BoxProjection, FnOperator};
    use nalgebra::DMatrix;

    fn pt(coords: &[f64]) -> Point {
        Point::from_column_slice(coords)
    }

    fn reflection_in_unit_sphere() -> FnOperator<impl Fn(&Point) -> Point + Send + Sync> {
        // 2 P_ball - I: nonexpansive with the unit ball fixed, but not a
        // cutter (its cuts overshoot the fixed set).
        FnOperator::new(|x: &Point| {
            let n = x.norm();
            if n <= 1.0 {
                x.clone()
            } else {
                x * (2.0 / n - 1.0)
            }
        })
    }

    fn unit_ball_points() -> Vec<Point> {
        vec![
            pt(&[0.0, 0.0]),
            pt(&[0.5, 0.0]),
            pt(&[0.0, -0.9]),
            pt(&[0.4, 0.4]),
        ]
    }

    #[test]
    fn box_samples_are_deterministic_and_inside() {
        let region = SampleRegion::cube(3, 2.0, 64, 7).unwrap();
        let a = region.samples();
        let b = region.samples();
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        assert!(a.iter().all(|p| p.iter().all(|v| v.abs() <= 2.0)));
    }

    #[test]
    fn shell_samples_respect_the_radial_band() {
        let region = SampleRegion::shell(pt(&[1.0, -1.0]), 2.0, 3.0, 50, 11).unwrap();
        for p in region.samples() {
            let r = (p - pt(&[1.0, -1.0])).norm();
            assert!((2.0 - 1e-9..=3.0 + 1e-9).contains(&r), "radius {r}");
        }
    }

    #[test]
    fn projection_passes_the_cutter_check() {
        let op = BallProjection::new(pt(&[0.0, 0.0]), 1.0).unwrap();
        let region = SampleRegion::cube(2, 3.0, 200, 3).unwrap();
        let report = check_cutter(&op, &region, None).unwrap();
        assert!(report.passed, "worst {}", report.worst_violation);
        assert!(report.witness.is_none());
    }

    #[test]
    fn reflection_fails_the_cutter_check_with_a_witness() {
        let op = reflection_in_unit_sphere();
        let region = SampleRegion::cube(2, 3.0, 400, 5).unwrap();
        let fixed = unit_ball_points();
        let report = check_cutter(&op, &region, Some(&fixed)).unwrap();
        assert!(!report.passed);
        assert!(report.worst_violation > CHECK_SLACK);
        assert!(report.witness.is_some());
    }

    #[test]
    fn cutter_check_needs_fixed_points_from_somewhere() {
        let op = FnOperator::new(|x: &Point| x.clone());
        let region = SampleRegion::cube(2, 1.0, 10, 0).unwrap();
        assert!(matches!(
            check_cutter(&op, &region, None),
            Err(Error::MissingFixSamples(_))
        ));
    }

    #[test]
    fn projection_is_sqne_with_strength_one() {
        let op = BoxProjection::unit(2).unwrap();
        let region = SampleRegion::cube(2, 4.0, 200, 9).unwrap();
        let report = check_sqne(&op, 1.0, &region, None).unwrap();
        assert!(report.passed, "worst {}", report.worst_violation);
    }

    #[test]
    fn reflection_fails_sqne_at_positive_strength() {
        let op = reflection_in_unit_sphere();
        let region = SampleRegion::cube(2, 3.0, 400, 5).unwrap();
        let fixed = unit_ball_points();
        let report = check_sqne(&op, 0.5, &region, Some(&fixed)).unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn decrease_estimate_is_positive_for_a_projection_far_out() {
        let op = BallProjection::new(pt(&[0.0, 0.0]), 1.0).unwrap();
        let region = SampleRegion::shell(pt(&[0.0, 0.0]), 1.5, 3.0, 300, 13).unwrap();
        let d = estimate_decrease(&op, &region, 0.5).unwrap();
        // Projection clears the whole distance in one application, so the
        // decrease equals the distance itself, at least 0.5 here.
        assert!(d >= 0.5 - 1e-9, "estimate {d}");
    }

    #[test]
    fn decrease_estimate_is_infinite_when_no_sample_clears_the_bar() {
        let op = BallProjection::new(pt(&[0.0, 0.0]), 1.0).unwrap();
        let region = SampleRegion::shell(pt(&[0.0, 0.0]), 1.1, 1.2, 50, 13).unwrap();
        let d = estimate_decrease(&op, &region, 10.0).unwrap();
        assert!(d.is_infinite() && d > 0.0);
    }

    #[test]
    fn decrease_estimate_requires_a_projection_oracle() {
        let op = FnOperator::new(|x: &Point| x.clone());
        let region = SampleRegion::cube(2, 1.0, 10, 0).unwrap();
        assert!(matches!(
            estimate_decrease(&op, &region, 0.1),
            Err(Error::MissingFixProjection)
        ));
    }

    #[test]
    fn quasi_shrinking_probe_reads_as_evidence() {
        let op = BallProjection::new(pt(&[0.0, 0.0]), 1.0).unwrap();
        let region = SampleRegion::shell(pt(&[0.0, 0.0]), 1.25, 4.0, 300, 17).unwrap();
        let report = probe_quasi_shrinking(&op, &region, &[0.0, 0.25, 0.5, 1.0], 1e-6).unwrap();
        assert!(report.consistent);
        assert_eq!(report.estimates.len(), 4);
        // The identity never decreases the distance, so the same probe
        // must come back inconsistent for it.
        let id = FnOperator::new(|x: &Point| x.clone());
        let id_with_proj = WithProjection { inner: id };
        let bad = probe_quasi_shrinking(&id_with_proj, &region, &[0.5], 1e-6).unwrap();
        assert!(!bad.consistent);
    }

    struct WithProjection<T> {
        inner: T,
    }

    impl<T: FixedPointOperator> FixedPointOperator for WithProjection<T> {
        fn apply(&self, x: &Point) -> crate::Result<Point> {
            self.inner.apply(x)
        }
        fn fix_projection(&self, x: &Point) -> Option<Point> {
            // Treat the unit ball as the fixed set for probing purposes.
            let n = x.norm();
            Some(if n <= 1.0 { x.clone() } else { x / n })
        }
    }

    #[test]
    fn radial_field_is_coercive_toward_its_center() {
        let field = matrix_field(DMatrix::identity(2, 2), pt(&[0.0, 0.0])).unwrap();
        let region = SampleRegion::shell(pt(&[0.0, 0.0]), 2.0, 5.0, 200, 19).unwrap();
        let report = check_field_coercivity(&field, &pt(&[0.0, 0.0]), 1.0, &region).unwrap();
        assert!(report.passed, "worst {}", report.worst_violation);
    }

    #[test]
    fn rotation_field_fails_coercivity() {
        let field = |x: &Point| pt(&[-x[1], x[0]]);
        let region = SampleRegion::shell(pt(&[0.0, 0.0]), 2.0, 5.0, 200, 19).unwrap();
        let report = check_field_coercivity(&field, &pt(&[0.0, 0.0]), 0.5, &region).unwrap();
        assert!(!report.passed);
        assert!(report.witness.is_some());
    }

    #[test]
    fn weighted_field_is_coercive_on_a_far_shell() {
        // Eigenvalues 3 and 1; with margin c = 0.2 the bound kicks in
        // beyond radius |a| (1 + c) lam2 / (lam1 - lam2 c) ~ 25.46.
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let field = matrix_field(g, pt(&[2.0, 2.0])).unwrap();
        let region = SampleRegion::shell(pt(&[0.0, 0.0]), 26.0, 40.0, 400, 23).unwrap();
        let report = check_field_coercivity(&field, &pt(&[2.0, 2.0]), 0.1, &region).unwrap();
        assert!(report.passed, "worst {}", report.worst_violation);
    }

    #[test]
    fn strong_monotonicity_holds_for_the_weighted_field_up_to_its_smallest_eigenvalue() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let field = matrix_field(g, pt(&[0.0, 0.0])).unwrap();
        let region = SampleRegion::cube(2, 5.0, 300, 29).unwrap();
        let ok = check_strong_monotonicity(&field, 1.0, &region).unwrap();
        assert!(ok.passed, "worst {}", ok.worst_violation);
        let too_strong = check_strong_monotonicity(&field, 2.5, &region).unwrap();
        assert!(!too_strong.passed);
    }

    #[test]
    fn closedness_probe_accepts_a_projection() {
        let op = BallProjection::new(pt(&[0.0, 0.0]), 1.0).unwrap();
        let seq: Vec<Point> = (1..40).map(|k| pt(&[1.0 + 1.0 / k as f64, 0.0])).collect();
        let report = check_closedness_probe(&op, &seq, &pt(&[1.0, 0.0]), 1e-1).unwrap();
        assert!(report.consistent);
        assert!(report.target_fixed);
    }

    #[test]
    fn closedness_probe_flags_a_punctured_fixed_set() {
        // Identity except at the target itself, which is pushed away: the
        // residuals vanish along the sequence but the limit is not fixed.
        let target = pt(&[1.0, 0.0]);
        let moved = pt(&[2.0, 0.0]);
        let op = FnOperator::new(move |x: &Point| {
            if (x - pt(&[1.0, 0.0])).norm() == 0.0 {
                moved.clone()
            } else {
                x.clone()
            }
        });
        let seq: Vec<Point> = (1..40).map(|k| pt(&[1.0 + 1.0 / k as f64, 0.0])).collect();
        let report = check_closedness_probe(&op, &seq, &target, 1e-1).unwrap();
        assert!(!report.consistent);
        assert!(!report.target_fixed);
    }

    #[test]
    fn perturbed_decrease_recursion_dies_out() {
        let final_value = sequence_lemma_probe(
            |a| a / 2.0,
            &(0..50).map(|k| 0.5_f64.powi(k)).collect::<Vec<_>>(),
            1.0,
            50,
        )
        .unwrap();
        assert!(final_value <= 1e-9, "final {final_value}");
    }

    #[test]
    fn recursion_without_decrease_keeps_the_perturbation_mass() {
        let final_value = sequence_lemma_probe(|_| 0.0, &[0.25; 8], 1.0, 8).unwrap();
        assert!((final_value - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn norm_product_ratio_sits_in_its_bracket() {
        let x = pt(&[1.0, 2.0, -3.0, 0.5]);
        let n = x.len() as f64;
        for (a, b) in [(0.5, 0.5), (1.0, 2.0), (1.5, 0.75)] {
            let ratio = check_norm_product_inequality(&x, a, b).unwrap();
            assert!(ratio <= 1.0 + 1e-12, "ratio {ratio}");
            assert!(ratio >= 1.0 / (n * n) - 1e-12, "ratio {ratio}");
        }
        // Equal exponents on a constant-magnitude vector hit the upper end.
        let flat = pt(&[1.0, -1.0, 1.0]);
        let top = check_norm_product_inequality(&flat, 1.0, 1.0).unwrap();
        assert!((top - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn norm_product_ratio_rejects_bad_inputs() {
        assert!(check_norm_product_inequality(&pt(&[0.0, 0.0]), 1.0, 1.0).is_err());
        assert!(check_norm_product_inequality(&pt(&[1.0]), 0.4, 1.0).is_err());
    }
}
