//! Metric projections with exact fixed-set oracles.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::FixedPointOperator;
use crate::geometry::{project_halfspace, HalfSpace, Point};
use crate::{ensure_finite, ensure_same_dim, Error, Result};

/// The identity, i.e. the projection onto the whole space. Every point is
/// fixed.
#[derive(Clone, Copy, Debug)]
pub struct Identity;

impl FixedPointOperator for Identity {
    fn apply(&self, x: &Point) -> Result<Point> {
        Ok(x.clone())
    }
    fn fix_membership(&self, _x: &Point) -> Option<bool> {
        Some(true)
    }
    fn fix_projection(&self, x: &Point) -> Option<Point> {
        Some(x.clone())
    }
}

/// Componentwise clamp onto the box `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct BoxProjection {
    lo: Point,
    hi: Point,
}

impl BoxProjection {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        ensure_same_dim(lo.len(), hi.len())?;
        ensure_finite("box bounds", &lo)?;
        ensure_finite("box bounds", &hi)?;
        if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
            return Err(Error::InvalidInput(
                "box lower bound exceeds upper bound".into(),
            ));
        }
        Ok(BoxProjection { lo, hi })
    }

    pub fn unit(dim: usize) -> Result<Self> {
        BoxProjection::new(Point::zeros(dim), Point::from_element(dim, 1.0))
    }

    pub fn bounds(&self) -> (&Point, &Point) {
        (&self.lo, &self.hi)
    }

    fn clamp(&self, x: &Point) -> Point {
        x.zip_zip_map(&self.lo, &self.hi, |v, l, h| v.max(l).min(h))
    }
}

impl FixedPointOperator for BoxProjection {
    fn apply(&self, x: &Point) -> Result<Point> {
        ensure_same_dim(self.lo.len(), x.len())?;
        Ok(self.clamp(x))
    }

    fn fix_membership(&self, x: &Point) -> Option<bool> {
        Some(
            x.len() == self.lo.len()
                && x.iter()
                    .zip(self.lo.iter().zip(self.hi.iter()))
                    .all(|(v, (l, h))| l <= v && v <= h),
        )
    }

    fn fix_projection(&self, x: &Point) -> Option<Point> {
        Some(self.clamp(x))
    }

    fn fix_samples(&self, count: usize, seed: u64) -> Option<Vec<Point>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.lo.len();
        Some(
            (0..count)
                .map(|_| {
                    Point::from_fn(n, |i, _| {
                        let (l, h) = (self.lo[i], self.hi[i]);
                        if l == h {
                            l
                        } else {
                            rng.random_range(l..=h)
                        }
                    })
                })
                .collect(),
        )
    }

    fn bounding_box(&self) -> Option<(Point, Point)> {
        Some((self.lo.clone(), self.hi.clone()))
    }
}

/// Radial projection onto a closed Euclidean ball.
#[derive(Clone, Debug)]
pub struct BallProjection {
    center: Point,
    radius: f64,
}

impl BallProjection {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        ensure_finite("ball center", &center)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(BallProjection { center, radius })
    }

    pub fn unit(dim: usize) -> Result<Self> {
        BallProjection::new(Point::zeros(dim), 1.0)
    }

    fn project(&self, x: &Point) -> Point {
        let d = x - &self.center;
        let n = d.norm();
        if n <= self.radius {
            x.clone()
        } else {
            &self.center + d * (self.radius / n)
        }
    }
}

impl FixedPointOperator for BallProjection {
    fn apply(&self, x: &Point) -> Result<Point> {
        ensure_same_dim(self.center.len(), x.len())?;
        Ok(self.project(x))
    }

    fn fix_membership(&self, x: &Point) -> Option<bool> {
        Some(x.len() == self.center.len() && (x - &self.center).norm() <= self.radius)
    }

    fn fix_projection(&self, x: &Point) -> Option<Point> {
        Some(self.project(x))
    }

    fn fix_samples(&self, count: usize, seed: u64) -> Option<Vec<Point>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.center.len();
        Some(
            (0..count)
                .map(|_| {
                    // Uniform in the ball: random direction, radius r * u^(1/n).
                    let mut dir = Point::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let norm = dir.norm();
                    if norm == 0.0 {
                        return self.center.clone();
                    }
                    dir /= norm;
                    let u: f64 = rng.random_range(0.0..=1.0);
                    let r = self.radius * u.powf(1.0 / n as f64);
                    &self.center + dir * r
                })
                .collect(),
        )
    }

    fn bounding_box(&self) -> Option<(Point, Point)> {
        Some((
            self.center.add_scalar(-self.radius),
            self.center.add_scalar(self.radius),
        ))
    }
}

/// Projection onto a fixed half-space.
#[derive(Clone, Debug)]
pub struct HalfSpaceProjection {
    h: HalfSpace,
}

impl HalfSpaceProjection {
    pub fn new(h: HalfSpace) -> Self {
        HalfSpaceProjection { h }
    }

    pub fn halfspace(&self) -> &HalfSpace {
        &self.h
    }
}

impl FixedPointOperator for HalfSpaceProjection {
    fn apply(&self, x: &Point) -> Result<Point> {
        project_halfspace(x, &self.h)
    }

    fn fix_membership(&self, x: &Point) -> Option<bool> {
        Some(x.len() == self.h.dimension() && self.h.contains(x))
    }

    fn fix_projection(&self, x: &Point) -> Option<Point> {
        project_halfspace(x, &self.h).ok()
    }

    fn fix_samples(&self, count: usize, seed: u64) -> Option<Vec<Point>> {
        // Gaussian cloud around the anchor, projected into the half-space.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.h.dimension();
        (0..count)
            .map(|_| {
                let x = self.h.anchor()
                    + Point::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                project_halfspace(&x, &self.h).ok()
            })
            .collect()
    }
}
