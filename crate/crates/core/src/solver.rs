//! The cut-based iteration for a variational inequality over `Fix(T)`, plus
//! two classical baselines for comparison.
//!
//! One iteration from `x`: evaluate `tx = T(x)` and build the cut
//! `H(x, tx)`; shift `z = x - rho * F(x) / |F(x)|` (no shift when the field
//! vanishes); then take the relaxed projection of `z` onto the cut. The
//! shift sizes `rho_k` must shrink to zero but sum to infinity, which steers
//! the Fejer-monotone cut iteration toward the solution of the inequality
//! rather than an arbitrary fixed point.

use std::sync::Arc;

use serde::Serialize;

use crate::geometry::{halfspace_from_cut, relaxed_project, Point};
use crate::operators::{FixedPointOperator, VectorField};
use crate::{ensure_finite, ensure_same_dim, Error, Result};

/// Slack scale for the per-step Fejer inequality check.
const FEJER_SLACK: f64 = 1e-9;

/// Power-family shift sizes `rho_k = rho0 / (k + 1)^gamma`. Valid exactly
/// when `rho0 > 0` and `gamma` lies in `(0, 1]`: the sizes then vanish while
/// their sum diverges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSequence {
    pub rho0: f64,
    pub gamma: f64,
}

impl StepSequence {
    pub fn new(rho0: f64, gamma: f64) -> Self {
        StepSequence { rho0, gamma }
    }

    /// `rho0 = 1`, `gamma = 1`: the harmonic sequence `1 / (k + 1)`.
    pub fn harmonic() -> Self {
        StepSequence {
            rho0: 1.0,
            gamma: 1.0,
        }
    }

    pub fn rho(&self, k: usize) -> f64 {
        let base = (k + 1) as f64;
        if self.gamma == 1.0 {
            self.rho0 / base
        } else {
            self.rho0 / base.powf(self.gamma)
        }
    }
}

impl Default for StepSequence {
    fn default() -> Self {
        StepSequence::harmonic()
    }
}

pub fn validate_step_sequence(s: &StepSequence) -> bool {
    s.rho0.is_finite() && s.rho0 > 0.0 && s.gamma.is_finite() && s.gamma > 0.0 && s.gamma <= 1.0
}

/// Relaxation parameters `alpha_k`, kept inside `[mu, 2 - mu]` for a margin
/// `mu` in `(0, 1)`; values from a custom rule are clamped into that band.
#[derive(Clone)]
pub struct RelaxationSchedule {
    mu: f64,
    rule: RelaxRule,
}

#[derive(Clone)]
enum RelaxRule {
    Constant(f64),
    Custom(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl RelaxationSchedule {
    pub fn constant(alpha: f64, mu: f64) -> Result<Self> {
        Self::check_mu(mu)?;
        if !(alpha >= mu && alpha <= 2.0 - mu) {
            return Err(Error::InvalidInput(format!(
                "constant relaxation {alpha} lies outside [{mu}, {}]",
                2.0 - mu
            )));
        }
        Ok(RelaxationSchedule {
            mu,
            rule: RelaxRule::Constant(alpha),
        })
    }

    pub fn from_fn<F>(rule: F, mu: f64) -> Result<Self>
    where
        F: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        Self::check_mu(mu)?;
        Ok(RelaxationSchedule {
            mu,
            rule: RelaxRule::Custom(Arc::new(rule)),
        })
    }

    fn check_mu(mu: f64) -> Result<()> {
        if mu.is_finite() && mu > 0.0 && mu < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "relaxation margin mu must lie in (0, 1), got {mu}"
            )))
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn alpha(&self, k: usize) -> f64 {
        match &self.rule {
            RelaxRule::Constant(a) => *a,
            RelaxRule::Custom(f) => f(k).clamp(self.mu, 2.0 - self.mu),
        }
    }
}

impl Default for RelaxationSchedule {
    fn default() -> Self {
        RelaxationSchedule::constant(1.0, 0.1).expect("default schedule is valid")
    }
}

/// The problem instance: monotone field, operator whose fixed set carries
/// the constraint, and optionally a reference solution for error tracking.
pub struct VipProblem<'a> {
    field: Box<dyn VectorField + 'a>,
    operator: Box<dyn FixedPointOperator + 'a>,
    dimension: usize,
    known_solution: Option<Point>,
}

impl<'a> VipProblem<'a> {
    pub fn new(
        dimension: usize,
        field: impl VectorField + 'a,
        operator: impl FixedPointOperator + 'a,
    ) -> Self {
        VipProblem {
            field: Box::new(field),
            operator: Box::new(operator),
            dimension,
            known_solution: None,
        }
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

    pub fn field(&self) -> &dyn VectorField {
        self.field.as_ref()
    }

    pub fn operator(&self) -> &dyn FixedPointOperator {
        self.operator.as_ref()
    }

    pub fn known_solution(&self) -> Option<&Point> {
        self.known_solution.as_ref()
    }
}

#[derive(Clone)]
pub struct SolverConfig {
    pub steps: StepSequence,
    pub relax: RelaxationSchedule,
    pub max_iter: usize,
    /// The run stops once `max(|T(x) - x|, |x_next - x|) <= tol` has held
    /// for `consecutive` iterations in a row.
    pub tol: f64,
    pub consecutive: usize,
    /// Field norms at or below this threshold count as zero: no shift.
    pub eps_field: f64,
    /// Record per-iteration Fejer checks and fixed-set distances (when the
    /// operator exposes the oracles needed for them).
    pub record_invariants: bool,
    /// Start point; the origin when absent.
    pub x0: Option<Point>,
    /// Explicit fixed points for the Fejer check; drawn from the operator's
    /// sampler when absent.
    pub fejer_samples: Option<Vec<Point>>,
    pub fejer_sample_count: usize,
    pub invariant_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            steps: StepSequence::default(),
            relax: RelaxationSchedule::default(),
            max_iter: 100_000,
            tol: 1e-6,
            consecutive: 10,
            eps_field: 1e-15,
            record_invariants: false,
            x0: None,
            fejer_samples: None,
            fejer_sample_count: 10,
            invariant_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !validate_step_sequence(&self.steps) {
            return Err(Error::InvalidStepSequence);
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.consecutive == 0 {
            return Err(Error::InvalidInput("consecutive must be at least 1".into()));
        }
        if !(self.eps_field.is_finite() && self.eps_field >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "eps_field must be nonnegative, got {}",
                self.eps_field
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    IterationCap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub rho: f64,
    pub alpha: f64,
    pub norm_field: f64,
    /// `|T(x_k) - x_k|`.
    pub fix_residual: f64,
    /// `|x_{k+1} - x_k|`.
    pub step_norm: f64,
    /// `|z_k - x_k|`; equals `rho_k` whenever the field was nonzero.
    pub shift_norm: f64,
    pub err_to_solution: Option<f64>,
    pub fejer_ok: Option<bool>,
    /// Distance from `x_k` to the fixed set, when a projection oracle
    /// exists and invariant recording is on.
    pub dist_to_fix: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SolverTrace {
    pub records: Vec<IterationRecord>,
    pub status: SolveStatus,
}

impl SolverTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

/// `z = x - rho * fx / |fx|`, or `x` itself when `|fx| <= eps_field`. The
/// shift magnitude is therefore exactly `rho` or zero.
pub fn shifted_point(x: &Point, fx: &Point, rho: f64, eps_field: f64) -> Point {
    let norm = fx.norm();
    if norm > eps_field {
        x - fx * (rho / norm)
    } else {
        x.clone()
    }
}

/// Everything one iteration produces; `next` is the new iterate.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub next: Point,
    pub shifted: Point,
    pub operator_image: Point,
    pub norm_field: f64,
    pub fix_residual: f64,
    pub shift_norm: f64,
}

/// One iteration: cut at `x`, shift against the field, relaxed projection
/// onto the cut. When the shifted point already satisfies the cut the
/// projection leaves it unchanged.
pub fn vip_step(
    x: &Point,
    problem: &VipProblem,
    rho: f64,
    alpha: f64,
    eps_field: f64,
) -> Result<StepOutcome> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidInput(format!(
            "shift size must be positive, got {rho}"
        )));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidInput(format!(
            "relaxation parameter must lie in (0, 2) for a solve step, got {alpha}"
        )));
    }
    ensure_same_dim(problem.dimension, x.len())?;

    let fx = problem.field.eval(x);
    ensure_finite("field", &fx)?;
    let tx = problem.operator.apply(x)?;
    ensure_finite("operator image", &tx)?;
    ensure_same_dim(problem.dimension, tx.len())?;

    let cut = halfspace_from_cut(x, &tx)?;
    let norm_field = fx.norm();
    let shifted = shifted_point(x, &fx, rho, eps_field);
    let shift_norm = (&shifted - x).norm();
    let next = relaxed_project(&shifted, &cut, alpha)?;
    let fix_residual = (x - &tx).norm();

    Ok(StepOutcome {
        next,
        shifted,
        operator_image: tx,
        norm_field,
        fix_residual,
        shift_norm,
    })
}

fn fejer_step_holds(z: &Point, next: &Point, w: &Point, alpha: f64) -> bool {
    let scale = z.norm_squared().max(w.norm_squared()).max(1.0);
    let lhs = (next - w).norm_squared();
    let rhs = (z - w).norm_squared() - ((2.0 - alpha) / alpha) * (next - z).norm_squared();
    lhs <= rhs + FEJER_SLACK * scale
}

fn initial_point(dimension: usize, config: &SolverConfig) -> Result<Point> {
    match &config.x0 {
        Some(p) => {
            ensure_same_dim(dimension, p.len())?;
            ensure_finite("start point", p)?;
            Ok(p.clone())
        }
        None => Ok(Point::zeros(dimension)),
    }
}

fn fejer_references(
    operator: &dyn FixedPointOperator,
    dimension: usize,
    config: &SolverConfig,
) -> Result<Option<Vec<Point>>> {
    if !config.record_invariants {
        return Ok(None);
    }
    let refs = match &config.fejer_samples {
        Some(ws) => Some(ws.clone()),
        None => operator.fix_samples(config.fejer_sample_count, config.invariant_seed),
    };
    if let Some(ws) = &refs {
        for w in ws {
            ensure_same_dim(dimension, w.len())?;
            ensure_finite("fixed-point sample", w)?;
        }
    }
    Ok(refs)
}

/// Runs the cut-based iteration until the composite residual stays at or
/// below `tol` for the configured number of consecutive iterations, or the
/// iteration cap is reached.
pub fn vip_solve(problem: &VipProblem, config: &SolverConfig) -> Result<(Point, SolverTrace)> {
    config.validate()?;
    let mut x = initial_point(problem.dimension, config)?;
    let fejer_refs = fejer_references(problem.operator.as_ref(), problem.dimension, config)?;

    let mut records = Vec::new();
    let mut streak = 0usize;
    let mut status = SolveStatus::IterationCap;

    for k in 0..config.max_iter {
        let rho = config.steps.rho(k);
        let alpha = config.relax.alpha(k);
        let out = vip_step(&x, problem, rho, alpha, config.eps_field)?;
        let step_norm = (&out.next - &x).norm();

        let fejer_ok = fejer_refs.as_ref().map(|ws| {
            ws.iter()
                .all(|w| fejer_step_holds(&out.shifted, &out.next, w, alpha))
        });
        let dist_to_fix = if config.record_invariants {
            problem
                .operator
                .fix_projection(&x)
                .map(|p| (&x - &p).norm())
        } else {
            None
        };
        let err_to_solution = problem.known_solution.as_ref().map(|s| (&x - s).norm());

        records.push(IterationRecord {
            k,
            rho,
            alpha,
            norm_field: out.norm_field,
            fix_residual: out.fix_residual,
            step_norm,
            shift_norm: out.shift_norm,
            err_to_solution,
            fejer_ok,
            dist_to_fix,
        });

        x = out.next;
        if out.fix_residual.max(step_norm) <= config.tol {
            streak += 1;
        } else {
            streak = 0;
        }
        if streak >= config.consecutive {
            status = SolveStatus::Converged;
            break;
        }
    }

    Ok((x, SolverTrace { records, status }))
}

/// Baseline: projected field steps `x <- P_S(x - tau_k F(x))`. `schedule`
/// gives the step size used at iteration `k`.
pub fn auslender_solve(
    field: &dyn VectorField,
    projector: &dyn FixedPointOperator,
    schedule: impl Fn(usize) -> f64,
    dimension: usize,
    known_solution: Option<&Point>,
    config: &SolverConfig,
) -> Result<(Point, SolverTrace)> {
    config.validate()?;
    let mut x = initial_point(dimension, config)?;
    let mut records = Vec::new();
    let mut streak = 0usize;
    let mut status = SolveStatus::IterationCap;

    for k in 0..config.max_iter {
        let tau = schedule(k);
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidInput(format!(
                "step size must be positive, got {tau} at iteration {k}"
            )));
        }
        let fx = field.eval(&x);
        ensure_finite("field", &fx)?;
        let image = projector.apply(&x)?;
        let next = projector.apply(&(&x - &fx * tau))?;
        ensure_finite("projector image", &next)?;

        let fix_residual = (&image - &x).norm();
        let step_norm = (&next - &x).norm();
        let dist_to_fix = if config.record_invariants {
            projector.fix_projection(&x).map(|p| (&x - &p).norm())
        } else {
            None
        };
        records.push(IterationRecord {
            k,
            rho: tau,
            alpha: 1.0,
            norm_field: fx.norm(),
            fix_residual,
            step_norm,
            shift_norm: (&fx * tau).norm(),
            err_to_solution: known_solution.map(|s| (&x - s).norm()),
            fejer_ok: None,
            dist_to_fix,
        });

        x = next;
        if fix_residual.max(step_norm) <= config.tol {
            streak += 1;
        } else {
            streak = 0;
        }
        if streak >= config.consecutive {
            status = SolveStatus::Converged;
            break;
        }
    }
    Ok((x, SolverTrace { records, status }))
}

/// Baseline: hybrid steepest descent `x <- T(x) - lambda_k F(T(x))`.
/// `schedule` gives the damping used at iteration `k`; the usual choice is
/// `lambda0 / (k + 1)`.
pub fn yamada_ogura_solve(
    field: &dyn VectorField,
    operator: &dyn FixedPointOperator,
    schedule: impl Fn(usize) -> f64,
    dimension: usize,
    known_solution: Option<&Point>,
    config: &SolverConfig,
) -> Result<(Point, SolverTrace)> {
    config.validate()?;
    let mut x = initial_point(dimension, config)?;
    let mut records = Vec::new();
    let mut streak = 0usize;
    let mut status = SolveStatus::IterationCap;

    for k in 0..config.max_iter {
        let lambda = schedule(k);
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidInput(format!(
                "damping must be positive, got {lambda} at iteration {k}"
            )));
        }
        let tx = operator.apply(&x)?;
        ensure_finite("operator image", &tx)?;
        let ftx = field.eval(&tx);
        ensure_finite("field", &ftx)?;
        let next = &tx - &ftx * lambda;

        let fix_residual = (&tx - &x).norm();
        let step_norm = (&next - &x).norm();
        let dist_to_fix = if config.record_invariants {
            operator.fix_projection(&x).map(|p| (&x - &p).norm())
        } else {
            None
        };
        records.push(IterationRecord {
            k,
            rho: lambda,
            alpha: 1.0,
            norm_field: ftx.norm(),
            fix_residual,
            step_norm,
            shift_norm: (&ftx * lambda).norm(),
            err_to_solution: known_solution.map(|s| (&x - s).norm()),
            fejer_ok: None,
            dist_to_fix,
        });

        x = next;
        if fix_residual.max(step_norm) <= config.tol {
            streak += 1;
        } else {
            streak = 0;
        }
        if streak >= config.consecutive {
            status = SolveStatus::Converged;
            break;
        }
    }
    Ok((x, SolverTrace { records, status }))
}
