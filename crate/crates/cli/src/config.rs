//! JSON run configuration: schema, validation, and builders that turn the
//! declarative specs into live solver objects.
//!
//! Top-level keys are `problem`, `solver`, `diagnostics`, `bilevel`,
//! `output`, and `seed`; unknown keys are rejected everywhere so a typo in a
//! config file fails loudly instead of silently running defaults.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use vipcut::bilevel::{grad_outer, BilevelProblem};
use vipcut::diagnostics::SampleRegion;
use vipcut::geometry::{HalfSpace, Point};
use vipcut::operators::convex::{
    Affine, AffineSquared, ConvexFunction, HalfSquaredDistance, NormSquaredMinus, SphereDistance,
    ZeroFunction,
};
use vipcut::operators::{
    matrix_field, relax_operator, subgradient_projector, BallProjection, BoxProjection,
    CDeltaOperator, CDeltaSpec, FixedPointOperator, HalfSpaceProjection, Identity,
    InnerSolveParams, Resolvent, VectorField,
};
use vipcut::solver::{
    validate_step_sequence, RelaxationSchedule, SolverConfig, StepSequence, VipProblem,
};

use crate::run::Failure;

pub fn pt(values: &[f64]) -> Point {
    DVector::from_column_slice(values)
}

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: Option<ProblemSpec>,
    pub solver: Option<SolverSpec>,
    pub diagnostics: Option<DiagnosticsSpec>,
    pub bilevel: Option<BilevelSpec>,
    pub output: Option<OutputSpec>,
    pub seed: Option<u64>,
}

/// Either a builtin name or an explicit (dimension, operator, field) triple.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSpec {
    pub builtin: Option<String>,
    pub dimension: Option<usize>,
    pub operator: Option<OperatorSpec>,
    pub field: Option<FieldSpec>,
    pub known_solution: Option<Vec<f64>>,
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    Identity(IdentityParams),
    Box(BoxParams),
    Ball(BallParams),
    Halfspace(HalfspaceParams),
    Subgradient(SubgradientParams),
    CDelta(CDeltaParams),
    Resolvent(ResolventParams),
    Relaxed(RelaxedParams),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityParams {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxParams {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallParams {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceParams {
    pub anchor: Vec<f64>,
    pub normal: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubgradientParams {
    pub function: FunctionSpec,
    #[serde(default)]
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CDeltaParams {
    pub function: FunctionSpec,
    pub delta: f64,
    pub witness: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventParams {
    pub objective: FunctionSpec,
    pub constraint: Box<OperatorSpec>,
    pub dimension: usize,
    pub lambda: f64,
    #[serde(default)]
    pub inner_tol: Option<f64>,
    #[serde(default)]
    pub inner_max_steps: Option<usize>,
    #[serde(default)]
    pub smoothness: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxedParams {
    pub inner: Box<OperatorSpec>,
    pub alpha: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    /// `<a, x> - b`.
    Affine(AffineParams),
    /// `(<a, x> - b)^2`.
    AffineSquared(AffineParams),
    /// `|x - center| - radius` (nonpositive inside the ball).
    SphereDistance(SphereParams),
    /// `|x|^2 - level`.
    NormSquaredMinus(LevelParams),
    /// `0.5 |x - center|^2`.
    HalfSquaredDistance(CenterParams),
    /// Constant zero.
    Zero(EmptyParams),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineParams {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereParams {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelParams {
    pub level: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterParams {
    pub center: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmptyParams {}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    /// `F = 0`: pure feasibility, the solver reduces to relaxed cuts.
    Zero(EmptyParams),
    /// `F(x) = G (x - a)` with `G` symmetric positive definite.
    Matrix(MatrixParams),
    /// Gradient of `(1/p) |x|_p^p + (alpha_reg/2) |x|^2`.
    GradPnorm(GradPnormParams),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixParams {
    pub g: Vec<Vec<f64>>,
    pub a: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradPnormParams {
    pub p: f64,
    #[serde(default)]
    pub alpha_reg: f64,
}

/// Overrides applied on top of the base solver configuration (either the
/// builtin's defaults or the library defaults).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub algorithm: Option<String>,
    pub rho0: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub mu: Option<f64>,
    /// Constant projected-field step size (projected-step baseline only).
    pub tau: Option<f64>,
    /// Damping scale: the multiplier at iteration `k` is `lambda0 / (k + 1)`
    /// (damped-field baseline only).
    pub lambda0: Option<f64>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub consecutive: Option<usize>,
    pub eps_field: Option<f64>,
    pub record_invariants: Option<bool>,
    pub fejer_sample_count: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    pub checks: Vec<CheckSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckSpec {
    /// Cut inequality `<T(x) - w, T(x) - x> <= 0` on sampled points.
    Cutter(CutterParams),
    /// Strong quasi-nonexpansivity at the given strength.
    Sqne(SqneParams),
    /// Decrease estimates over a grid of distance thresholds (informational;
    /// reported in the summary, never part of pass/fail).
    DecreaseGrid(DecreaseGridParams),
    /// `<F(x), x - q> >= beta |F(x)| |x - q|` on sampled points.
    Coercivity(CoercivityParams),
    /// `<F(x) - F(y), x - y> >= alpha |x - y|^2` on sampled pairs.
    StrongMonotonicity(StrongMonotonicityParams),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutterParams {
    pub region: RegionSpec,
    #[serde(default)]
    pub fix_points: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqneParams {
    pub alpha: f64,
    pub region: RegionSpec,
    #[serde(default)]
    pub fix_points: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecreaseGridParams {
    pub region: RegionSpec,
    pub r_grid: Vec<f64>,
    #[serde(default)]
    pub threshold: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoercivityParams {
    pub q: Vec<f64>,
    pub beta: f64,
    pub region: RegionSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrongMonotonicityParams {
    pub alpha: f64,
    pub region: RegionSpec,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSpec {
    Cube(CubeParams),
    Box(BoxRegionParams),
    Shell(ShellParams),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeParams {
    pub dimension: usize,
    pub half_width: f64,
    pub count: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRegionParams {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub count: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellParams {
    pub center: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Bilevel p-minimal-norm run: inner objective + constraint operator, outer
/// `(1/p) |x|_p^p + (alpha_reg/2) |x|^2` selection.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilevelSpec {
    pub objective: FunctionSpec,
    pub constraint: OperatorSpec,
    pub dimension: usize,
    pub p: f64,
    #[serde(default)]
    pub alpha_reg: f64,
    pub lambda: f64,
    #[serde(default)]
    pub inner_tol: Option<f64>,
    #[serde(default)]
    pub inner_max_steps: Option<usize>,
    #[serde(default)]
    pub smoothness: Option<f64>,
    #[serde(default)]
    pub known_solution: Option<Vec<f64>>,
    #[serde(default)]
    pub fejer_samples: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// When set, run the brute-force grid oracle at this resolution and
    /// report the gap in the summary (dimensions 1-3 only).
    #[serde(default)]
    pub grid_oracle_step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Loading and builders
// ---------------------------------------------------------------------------

pub fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::config(format!("invalid config {}: {e}", path.display())))
}

fn cfg_err(e: vipcut::Error) -> Failure {
    Failure::config(e.to_string())
}

pub fn build_function(spec: &FunctionSpec) -> Result<Box<dyn ConvexFunction>, Failure> {
    Ok(match spec {
        FunctionSpec::Affine(p) => Box::new(Affine {
            a: pt(&p.a),
            b: p.b,
        }),
        FunctionSpec::AffineSquared(p) => Box::new(AffineSquared {
            a: pt(&p.a),
            b: p.b,
        }),
        FunctionSpec::SphereDistance(p) => Box::new(SphereDistance {
            center: pt(&p.center),
            radius: p.radius,
        }),
        FunctionSpec::NormSquaredMinus(p) => Box::new(NormSquaredMinus { level: p.level }),
        FunctionSpec::HalfSquaredDistance(p) => Box::new(HalfSquaredDistance {
            center: pt(&p.center),
        }),
        FunctionSpec::Zero(_) => Box::new(ZeroFunction),
    })
}

pub fn build_operator(spec: &OperatorSpec) -> Result<Box<dyn FixedPointOperator>, Failure> {
    Ok(match spec {
        OperatorSpec::Identity(_) => Box::new(Identity),
        OperatorSpec::Box(p) => {
            Box::new(BoxProjection::new(pt(&p.lo), pt(&p.hi)).map_err(cfg_err)?)
        }
        OperatorSpec::Ball(p) => {
            Box::new(BallProjection::new(pt(&p.center), p.radius).map_err(cfg_err)?)
        }
        OperatorSpec::Halfspace(p) => {
            let h = HalfSpace::new(pt(&p.anchor), pt(&p.normal)).map_err(cfg_err)?;
            Box::new(HalfSpaceProjection::new(h))
        }
        OperatorSpec::Subgradient(p) => {
            let f = build_function(&p.function)?;
            let mut op = subgradient_projector(f);
            if let Some(w) = &p.witness {
                op = op.with_witness(pt(w));
            }
            Box::new(op)
        }
        OperatorSpec::CDelta(p) => {
            let f = build_function(&p.function)?;
            let spec = CDeltaSpec::new(f, p.delta, pt(&p.witness)).map_err(cfg_err)?;
            Box::new(CDeltaOperator::new(spec))
        }
        OperatorSpec::Resolvent(p) => {
            let g = build_function(&p.objective)?;
            let constraint = build_operator(&p.constraint)?;
            let mut inner = InnerSolveParams::default();
            if let Some(tol) = p.inner_tol {
                inner.tol = tol;
            }
            if let Some(cap) = p.inner_max_steps {
                inner.max_steps = cap;
            }
            inner.smoothness = p.smoothness;
            Box::new(Resolvent::new(g, constraint, p.dimension, p.lambda, inner).map_err(cfg_err)?)
        }
        OperatorSpec::Relaxed(p) => {
            let inner = build_operator(&p.inner)?;
            Box::new(relax_operator(inner, p.alpha).map_err(cfg_err)?)
        }
    })
}

pub fn build_field(spec: &FieldSpec) -> Result<Box<dyn VectorField>, Failure> {
    Ok(match spec {
        FieldSpec::Zero(_) => Box::new(|x: &Point| Point::zeros(x.len())),
        FieldSpec::Matrix(p) => {
            let rows = p.g.len();
            if rows == 0 || p.g.iter().any(|row| row.len() != rows) {
                return Err(Failure::config(
                    "field matrix g must be square and nonempty".into(),
                ));
            }
            let m = DMatrix::from_fn(rows, rows, |i, j| p.g[i][j]);
            Box::new(matrix_field(m, pt(&p.a)).map_err(cfg_err)?)
        }
        FieldSpec::GradPnorm(p) => {
            if !(p.p.is_finite() && p.p >= 2.0) {
                return Err(Failure::config(format!(
                    "grad_pnorm exponent p must be >= 2, got {}",
                    p.p
                )));
            }
            if !(p.alpha_reg.is_finite() && p.alpha_reg >= 0.0) {
                return Err(Failure::config(format!(
                    "grad_pnorm alpha_reg must be nonnegative, got {}",
                    p.alpha_reg
                )));
            }
            let (exponent, alpha_reg) = (p.p, p.alpha_reg);
            Box::new(move |x: &Point| grad_outer(x, exponent, alpha_reg))
        }
    })
}

pub fn build_region(spec: &RegionSpec, default_seed: u64) -> Result<SampleRegion, Failure> {
    match spec {
        RegionSpec::Cube(p) => SampleRegion::cube(
            p.dimension,
            p.half_width,
            p.count,
            p.seed.unwrap_or(default_seed),
        )
        .map_err(cfg_err),
        RegionSpec::Box(p) => SampleRegion::boxed(
            pt(&p.lo),
            pt(&p.hi),
            p.count,
            p.seed.unwrap_or(default_seed),
        )
        .map_err(cfg_err),
        RegionSpec::Shell(p) => SampleRegion::shell(
            pt(&p.center),
            p.r_min,
            p.r_max,
            p.count,
            p.seed.unwrap_or(default_seed),
        )
        .map_err(cfg_err),
    }
}

/// Algorithm family selected by the `solver.algorithm` key.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Algorithm {
    Vip,
    Auslender { tau: f64 },
    YamadaOgura { lambda0: f64 },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Vip => "vip",
            Algorithm::Auslender { .. } => "auslender",
            Algorithm::YamadaOgura { .. } => "yamada_ogura",
        }
    }
}

/// Applies the user's solver overrides on top of `base` and validates the
/// result. An invalid shift-size sequence is its own failure class (exit 4).
pub fn apply_solver_spec(
    base: SolverConfig,
    spec: Option<&SolverSpec>,
    seed: u64,
) -> Result<(SolverConfig, Algorithm), Failure> {
    let mut out = base;
    out.invariant_seed = seed;
    let default_spec = SolverSpec::default();
    let spec = spec.unwrap_or(&default_spec);

    if spec.rho0.is_some() || spec.gamma.is_some() {
        out.steps = StepSequence::new(
            spec.rho0.unwrap_or(out.steps.rho0),
            spec.gamma.unwrap_or(out.steps.gamma),
        );
    }
    if !validate_step_sequence(&out.steps) {
        return Err(Failure::step_sequence(format!(
            "invalid shift-size sequence: rho0 = {}, gamma = {} (need rho0 > 0 and gamma in (0, 1])",
            out.steps.rho0, out.steps.gamma
        )));
    }
    if spec.alpha.is_some() || spec.mu.is_some() {
        let alpha = spec.alpha.unwrap_or_else(|| out.relax.alpha(0));
        let mu = spec.mu.unwrap_or_else(|| out.relax.mu());
        out.relax = RelaxationSchedule::constant(alpha, mu).map_err(cfg_err)?;
    }
    if let Some(v) = spec.max_iter {
        out.max_iter = v;
    }
    if let Some(v) = spec.tol {
        out.tol = v;
    }
    if let Some(v) = spec.consecutive {
        out.consecutive = v;
    }
    if let Some(v) = spec.eps_field {
        out.eps_field = v;
    }
    if let Some(v) = spec.record_invariants {
        out.record_invariants = v;
    }
    if let Some(v) = spec.fejer_sample_count {
        out.fejer_sample_count = v;
    }

    let algorithm = match spec.algorithm.as_deref().unwrap_or("vip") {
        "vip" => Algorithm::Vip,
        "auslender" => Algorithm::Auslender {
            tau: spec.tau.unwrap_or(0.5),
        },
        "yamada_ogura" => Algorithm::YamadaOgura {
            lambda0: spec.lambda0.unwrap_or(1.0),
        },
        other => {
            return Err(Failure::config(format!(
                "unknown algorithm {other:?}; expected \"vip\", \"auslender\", or \"yamada_ogura\""
            )))
        }
    };
    Ok((out, algorithm))
}

/// Builds an explicit (non-builtin) variational-inequality problem.
pub fn build_vip_problem(spec: &ProblemSpec) -> Result<VipProblem<'static>, Failure> {
    let dimension = spec
        .dimension
        .ok_or_else(|| Failure::config("problem.dimension is required".into()))?;
    let operator_spec = spec
        .operator
        .as_ref()
        .ok_or_else(|| Failure::config("problem.operator is required".into()))?;
    let field_spec = spec
        .field
        .as_ref()
        .ok_or_else(|| Failure::config("problem.field is required".into()))?;
    let operator = build_operator(operator_spec)?;
    let field = build_field(field_spec)?;
    let mut problem = VipProblem::new(dimension, field, operator);
    if let Some(sol) = &spec.known_solution {
        problem = problem.with_known_solution(pt(sol)).map_err(cfg_err)?;
    }
    Ok(problem)
}

/// Builds a bilevel p-minimal-norm problem from its config section.
pub fn build_bilevel_problem(spec: &BilevelSpec) -> Result<BilevelProblem<'static>, Failure> {
    let objective = build_function(&spec.objective)?;
    let constraint = build_operator(&spec.constraint)?;
    let mut inner = InnerSolveParams::default();
    if let Some(tol) = spec.inner_tol {
        inner.tol = tol;
    }
    if let Some(cap) = spec.inner_max_steps {
        inner.max_steps = cap;
    }
    inner.smoothness = spec.smoothness;
    let mut problem = BilevelProblem::new(
        spec.dimension,
        objective,
        constraint,
        spec.p,
        spec.alpha_reg,
        spec.lambda,
    )
    .map_err(cfg_err)?
    .with_inner_params(inner);
    if let Some(sol) = &spec.known_solution {
        problem = problem.with_known_solution(pt(sol)).map_err(cfg_err)?;
    }
    Ok(problem)
}
