//! Built-in reference problems. Each carries its oracle solution so traces
//! and summaries report `err_to_solution` out of the box, plus the solver
//! defaults the problem is known to converge under.

use nalgebra::DMatrix;

use vipcut::bilevel::BilevelProblem;
use vipcut::geometry::Point;
use vipcut::operators::convex::AffineSquared;
use vipcut::operators::{matrix_field, BoxProjection, InnerSolveParams};
use vipcut::solver::{SolverConfig, VipProblem};

use crate::config::pt;

/// Suite order is fixed; bench output follows it deterministically.
pub const SUITE: [&str; 4] = [
    "p1_box",
    "g_weighted_box",
    "bilevel_symmetric",
    "bilevel_pnorm2",
];

pub enum Builtin {
    Vip {
        problem: VipProblem<'static>,
        config: SolverConfig,
    },
    Bilevel {
        problem: BilevelProblem<'static>,
        config: SolverConfig,
    },
}

/// Ten points of the segment `{ (t, c - s t) : t in [0, 1] }` — the fixed
/// sets of the built-in bilevel resolvents, used as decrease-check anchors.
fn segment_points(c: f64, s: f64) -> Vec<Point> {
    (0..10)
        .map(|i| {
            let t = i as f64 / 9.0;
            pt(&[t, c - s * t])
        })
        .collect()
}

fn bilevel_defaults(x0: Point, fejer: Vec<Point>) -> SolverConfig {
    SolverConfig {
        max_iter: 3000,
        tol: 1e-4,
        consecutive: 5,
        x0: Some(x0),
        record_invariants: true,
        fejer_samples: Some(fejer),
        ..SolverConfig::default()
    }
}

pub fn builtin(name: &str) -> Option<Builtin> {
    match name {
        // Box-constrained pull toward (2, 0.5); solution (1, 0.5).
        "p1_box" => {
            let field = matrix_field(DMatrix::identity(2, 2), pt(&[2.0, 0.5]))
                .expect("identity matrix is positive definite");
            let operator = BoxProjection::unit(2).expect("unit box is well formed");
            let problem = VipProblem::new(2, field, operator)
                .with_known_solution(pt(&[1.0, 0.5]))
                .expect("solution matches the dimension");
            let config = SolverConfig {
                tol: 1e-4,
                x0: Some(pt(&[-1.0, 0.0])),
                record_invariants: true,
                ..SolverConfig::default()
            };
            Some(Builtin::Vip { problem, config })
        }
        // G-weighted pull toward (2, 2) with G = [[2,1],[1,2]] over the unit
        // box; the weighted projection lands at the corner (1, 1).
        "g_weighted_box" => {
            let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
            let field = matrix_field(g, pt(&[2.0, 2.0])).expect("G is positive definite");
            let operator = BoxProjection::unit(2).expect("unit box is well formed");
            let problem = VipProblem::new(2, field, operator)
                .with_known_solution(pt(&[1.0, 1.0]))
                .expect("solution matches the dimension");
            let config = SolverConfig {
                tol: 1e-4,
                x0: Some(pt(&[0.0, 0.0])),
                record_invariants: true,
                ..SolverConfig::default()
            };
            Some(Builtin::Vip { problem, config })
        }
        // Minimal p=4 norm over argmin of (x1 + x2 - 1)^2 on [0,2]^2: the
        // symmetric point (0.5, 0.5).
        "bilevel_symmetric" => {
            let problem = BilevelProblem::new(
                2,
                AffineSquared {
                    a: pt(&[1.0, 1.0]),
                    b: 1.0,
                },
                BoxProjection::new(pt(&[0.0, 0.0]), pt(&[2.0, 2.0]))
                    .expect("box bounds are ordered"),
                4.0,
                0.01,
                1.0,
            )
            .expect("parameters are in range")
            .with_inner_params(InnerSolveParams {
                tol: 1e-12,
                max_steps: 200_000,
                smoothness: Some(4.0),
            })
            .with_known_solution(pt(&[0.5, 0.5]))
            .expect("solution matches the dimension");
            let config = bilevel_defaults(pt(&[1.5, 0.2]), segment_points(1.0, 1.0));
            Some(Builtin::Bilevel { problem, config })
        }
        // Minimal Euclidean norm over argmin of (2 x1 + x2 - 2)^2 on [0,2]^2:
        // the foot of the perpendicular from the origin, (0.8, 0.4).
        "bilevel_pnorm2" => {
            let problem = BilevelProblem::new(
                2,
                AffineSquared {
                    a: pt(&[2.0, 1.0]),
                    b: 2.0,
                },
                BoxProjection::new(pt(&[0.0, 0.0]), pt(&[2.0, 2.0]))
                    .expect("box bounds are ordered"),
                2.0,
                0.0,
                1.0,
            )
            .expect("parameters are in range")
            .with_inner_params(InnerSolveParams {
                tol: 1e-12,
                max_steps: 200_000,
                smoothness: Some(10.0),
            })
            .with_known_solution(pt(&[0.8, 0.4]))
            .expect("solution matches the dimension");
            let config = bilevel_defaults(pt(&[1.8, 1.9]), segment_points(2.0, 2.0));
            Some(Builtin::Bilevel { problem, config })
        }
        _ => None,
    }
}
