//! Convex function oracles: a value together with one subgradient selection.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::Point;

/// A convex function given by value and subgradient oracles. The subgradient
/// may be any selection from the subdifferential; callers must tolerate
/// kinks.
pub trait ConvexFunction: Send + Sync {
    fn value(&self, x: &Point) -> f64;
    fn subgradient(&self, x: &Point) -> Point;
}

impl<F: ConvexFunction + ?Sized> ConvexFunction for &F {
    fn value(&self, x: &Point) -> f64 {
        (**self).value(x)
    }
    fn subgradient(&self, x: &Point) -> Point {
        (**self).subgradient(x)
    }
}

impl<F: ConvexFunction + ?Sized> ConvexFunction for Box<F> {
    fn value(&self, x: &Point) -> f64 {
        (**self).value(x)
    }
    fn subgradient(&self, x: &Point) -> Point {
        (**self).subgradient(x)
    }
}

/// `f(x) = <a, x> - b`.
#[derive(Clone, Debug)]
pub struct Affine {
    pub a: Point,
    pub b: f64,
}

impl ConvexFunction for Affine {
    fn value(&self, x: &Point) -> f64 {
        self.a.dot(x) - self.b
    }
    fn subgradient(&self, _x: &Point) -> Point {
        self.a.clone()
    }
}

/// `f(x) = (<a, x> - b)^2`.
#[derive(Clone, Debug)]
pub struct AffineSquared {
    pub a: Point,
    pub b: f64,
}

impl ConvexFunction for AffineSquared {
    fn value(&self, x: &Point) -> f64 {
        let r = self.a.dot(x) - self.b;
        r * r
    }
    fn subgradient(&self, x: &Point) -> Point {
        &self.a * (2.0 * (self.a.dot(x) - self.b))
    }
}

/// `f(x) = |x - center| - radius`; its zero sublevel set is the closed ball.
/// At the center the selected subgradient is zero, a valid selection there.
#[derive(Clone, Debug)]
pub struct SphereDistance {
    pub center: Point,
    pub radius: f64,
}

impl ConvexFunction for SphereDistance {
    fn value(&self, x: &Point) -> f64 {
        (x - &self.center).norm() - self.radius
    }
    fn subgradient(&self, x: &Point) -> Point {
        let d = x - &self.center;
        let n = d.norm();
        if n == 0.0 {
            Point::zeros(x.len())
        } else {
            d / n
        }
    }
}

/// `f(x) = |x|^2 - level`; the zero sublevel set is the ball of radius
/// `sqrt(level)`.
#[derive(Clone, Debug)]
pub struct NormSquaredMinus {
    pub level: f64,
}

impl ConvexFunction for NormSquaredMinus {
    fn value(&self, x: &Point) -> f64 {
        x.norm_squared() - self.level
    }
    fn subgradient(&self, x: &Point) -> Point {
        x * 2.0
    }
}

/// `f(x) = 1/2 |x - center|^2`.
#[derive(Clone, Debug)]
pub struct HalfSquaredDistance {
    pub center: Point,
}

impl ConvexFunction for HalfSquaredDistance {
    fn value(&self, x: &Point) -> f64 {
        0.5 * (x - &self.center).norm_squared()
    }
    fn subgradient(&self, x: &Point) -> Point {
        x - &self.center
    }
}

/// The zero function.
#[derive(Clone, Copy, Debug)]
pub struct ZeroFunction;

impl ConvexFunction for ZeroFunction {
    fn value(&self, _x: &Point) -> f64 {
        0.0
    }
    fn subgradient(&self, x: &Point) -> Point {
        Point::zeros(x.len())
    }
}

/// Ad-hoc oracle from a pair of closures; mostly for tests and experiments.
/// The caller is responsible for the pair actually describing a convex
/// function.
pub struct FnConvex<V, G> {
    pub value_fn: V,
    pub subgradient_fn: G,
}

impl<V, G> ConvexFunction for FnConvex<V, G>
where
    V: Fn(&Point) -> f64 + Send + Sync,
    G: Fn(&Point) -> Point + Send + Sync,
{
    fn value(&self, x: &Point) -> f64 {
        (self.value_fn)(x)
    }
    fn subgradient(&self, x: &Point) -> Point {
        (self.subgradient_fn)(x)
    }
}

/// Draws points from the sublevel set `{ f <= 0 }`, seeded and deterministic.
///
/// Each draw picks a Gaussian direction from the witness and bisects along
/// the segment for the farthest evaluated point that still satisfies
/// `f <= 0`; convexity makes the feasible part of the segment an interval
/// containing the witness, so every returned point is a genuine member.
/// Returns `None` when the witness itself is infeasible.
pub fn sample_sublevel(
    f: &dyn ConvexFunction,
    witness: &Point,
    spread: f64,
    count: usize,
    seed: u64,
) -> Option<Vec<Point>> {
    if f.value(witness) > 0.0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = witness.len();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let dir = Point::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal)) * spread;
        let candidate = witness + &dir;
        if f.value(&candidate) <= 0.0 {
            out.push(candidate);
            continue;
        }
        // Largest t in [0, 1] with f(witness + t * dir) <= 0, kept from the
        // feasible side of the bisection so membership is exact.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if f.value(&(witness + &dir * mid)) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(witness + &dir * lo);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(coords: &[f64]) -> Point {
        Point::from_column_slice(coords)
    }

    #[test]
    fn affine_value_and_gradient() {
        let f = Affine {
            a: pt(&[2.0, -1.0]),
            b: 3.0,
        };
        assert_eq!(f.value(&pt(&[1.0, 1.0])), -2.0);
        assert_eq!(f.subgradient(&pt(&[9.0, 9.0])), pt(&[2.0, -1.0]));
    }

    #[test]
    fn sphere_distance_subgradient_is_unit_outside_center() {
        let f = SphereDistance {
            center: pt(&[1.0, 0.0]),
            radius: 2.0,
        };
        assert_eq!(f.value(&pt(&[4.0, 0.0])), 1.0);
        let g = f.subgradient(&pt(&[4.0, 0.0]));
        assert!((g.norm() - 1.0).abs() < 1e-15);
        // At the center the zero vector is a valid subgradient of the norm.
        assert_eq!(f.subgradient(&pt(&[1.0, 0.0])), pt(&[0.0, 0.0]));
    }

    #[test]
    fn sublevel_sampler_stays_feasible() {
        let f = NormSquaredMinus { level: 1.0 };
        let samples = sample_sublevel(&f, &Point::zeros(3), 2.0, 64, 7).unwrap();
        assert_eq!(samples.len(), 64);
        for s in &samples {
            assert!(f.value(s) <= 0.0, "sampler escaped the sublevel set");
        }
        // Not all stuck at the witness.
        assert!(samples.iter().any(|s| s.norm() > 0.5));
    }

    #[test]
    fn sublevel_sampler_rejects_bad_witness() {
        let f = NormSquaredMinus { level: 1.0 };
        assert!(sample_sublevel(&f, &pt(&[5.0, 0.0, 0.0]), 1.0, 4, 0).is_none());
    }

    #[test]
    fn sublevel_sampler_is_deterministic() {
        let f = NormSquaredMinus { level: 4.0 };
        let a = sample_sublevel(&f, &Point::zeros(2), 3.0, 16, 99).unwrap();
        let b = sample_sublevel(&f, &Point::zeros(2), 3.0, 16, 99).unwrap();
        assert_eq!(a, b);
    }
}
