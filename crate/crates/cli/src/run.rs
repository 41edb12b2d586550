//! Command runners and report writers.
//!
//! Exit codes: 0 converged (or all checks passed), 1 a diagnostic check
//! failed or could not be certified, 2 iteration cap reached, 3 invalid
//! config, 4 invalid shift-size sequence, 5 runtime/numeric failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use vipcut::bilevel::{brute_force_bilevel, solve_p_min_norm, BilevelProblem};
use vipcut::diagnostics::{
    check_cutter, check_field_coercivity, check_sqne, check_strong_monotonicity,
    probe_quasi_shrinking, CheckReport, QuasiShrinkReport,
};
use vipcut::geometry::Point;
use vipcut::operators::{FixedPointOperator, VectorField};
use vipcut::solver::{
    auslender_solve, vip_solve, yamada_ogura_solve, SolveStatus, SolverConfig, SolverTrace,
    VipProblem,
};

use crate::config::{
    apply_solver_spec, build_bilevel_problem, build_field, build_region, build_vip_problem,
    load_config, pt, Algorithm, CheckSpec, RunConfig,
};
use crate::suite::{builtin, Builtin, SUITE};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: String) -> Self {
        Failure { code: 3, message }
    }

    pub fn step_sequence(message: String) -> Self {
        Failure { code: 4, message }
    }

    pub fn runtime(message: String) -> Self {
        Failure { code: 5, message }
    }

    /// A diagnostic check that errored out cannot certify anything: treat it
    /// as a failed check, not a crash.
    pub fn check(message: String) -> Self {
        Failure { code: 1, message }
    }

    pub fn from_core(e: vipcut::Error) -> Self {
        match e {
            vipcut::Error::InvalidStepSequence => Failure::step_sequence(e.to_string()),
            other => Failure::runtime(other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::runtime(format!("cannot write {}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

#[derive(Serialize)]
pub struct GridOracleSummary {
    pub argmin: Vec<f64>,
    pub gap_to_solution: f64,
    pub inner_value: f64,
    pub outer_value: f64,
}

#[derive(Serialize)]
pub struct SolveSummary {
    pub command: &'static str,
    pub problem: String,
    pub algorithm: &'static str,
    pub status: SolveStatus,
    pub iterations: usize,
    pub wall_ms: f64,
    pub final_point: Vec<f64>,
    pub final_norm_field: Option<f64>,
    pub final_fix_residual: Option<f64>,
    pub final_step_norm: Option<f64>,
    pub final_shift_norm: Option<f64>,
    pub err_to_solution: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_oracle: Option<GridOracleSummary>,
}

#[derive(Serialize)]
pub struct DiagnoseSummary {
    pub command: &'static str,
    pub problem: String,
    pub all_passed: bool,
    pub wall_ms: f64,
    pub checks: Vec<CheckReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub decrease_grids: Vec<QuasiShrinkReport>,
}

fn status_str(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "converged",
        SolveStatus::IterationCap => "iteration_cap",
    }
}

fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Converged => 0,
        SolveStatus::IterationCap => 2,
    }
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn fmt_flag(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    }
}

/// Writes the per-iteration trace. The column set and order are fixed;
/// reruns with the same config and seed produce byte-identical files.
pub fn write_trace(path: &Path, trace: &SolverTrace) -> Result<(), Failure> {
    let mut out = String::from(
        "k,rho_k,alpha_k,norm_F,fix_residual,step_norm,shift_norm,err_to_solution,fejer_ok\n",
    );
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.k,
            r.rho,
            r.alpha,
            r.norm_field,
            r.fix_residual,
            r.step_norm,
            r.shift_norm,
            fmt_opt(r.err_to_solution),
            fmt_flag(r.fejer_ok),
        ));
    }
    fs::write(path, out).map_err(|e| io_failure(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::runtime(format!("cannot encode summary: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

// ---------------------------------------------------------------------------
// Problem preparation
// ---------------------------------------------------------------------------

enum Prepared {
    Vip {
        name: String,
        problem: VipProblem<'static>,
        config: SolverConfig,
        algorithm: Algorithm,
    },
    Bilevel {
        name: String,
        problem: BilevelProblem<'static>,
        config: SolverConfig,
        grid_step: Option<f64>,
    },
}

fn prepare(cfg: &RunConfig) -> Result<Prepared, Failure> {
    let seed = cfg.seed.unwrap_or(0);
    match (&cfg.problem, &cfg.bilevel) {
        (Some(_), Some(_)) => Err(Failure::config(
            "config has both a problem and a bilevel section; use one".into(),
        )),
        (None, None) => Err(Failure::config(
            "config needs a problem or a bilevel section".into(),
        )),
        (Some(p), None) => {
            if let Some(name) = &p.builtin {
                if p.operator.is_some() || p.field.is_some() || p.dimension.is_some() {
                    return Err(Failure::config(
                        "problem.builtin excludes explicit operator/field/dimension".into(),
                    ));
                }
                let found = builtin(name).ok_or_else(|| {
                    Failure::config(format!("unknown builtin {name:?}; the suite is {SUITE:?}"))
                })?;
                match found {
                    Builtin::Vip {
                        mut problem,
                        mut config,
                    } => {
                        if let Some(x0) = &p.x0 {
                            config.x0 = Some(pt(x0));
                        }
                        if let Some(sol) = &p.known_solution {
                            problem = problem
                                .with_known_solution(pt(sol))
                                .map_err(|e| Failure::config(e.to_string()))?;
                        }
                        let (config, algorithm) =
                            apply_solver_spec(config, cfg.solver.as_ref(), seed)?;
                        Ok(Prepared::Vip {
                            name: name.clone(),
                            problem,
                            config,
                            algorithm,
                        })
                    }
                    Builtin::Bilevel {
                        mut problem,
                        mut config,
                    } => {
                        if let Some(x0) = &p.x0 {
                            config.x0 = Some(pt(x0));
                        }
                        if let Some(sol) = &p.known_solution {
                            problem = problem
                                .with_known_solution(pt(sol))
                                .map_err(|e| Failure::config(e.to_string()))?;
                        }
                        let (config, algorithm) =
                            apply_solver_spec(config, cfg.solver.as_ref(), seed)?;
                        require_vip(algorithm)?;
                        Ok(Prepared::Bilevel {
                            name: name.clone(),
                            problem,
                            config,
                            grid_step: None,
                        })
                    }
                }
            } else {
                let problem = build_vip_problem(p)?;
                let base = SolverConfig {
                    x0: p.x0.as_ref().map(|v| pt(v)),
                    ..SolverConfig::default()
                };
                let (config, algorithm) = apply_solver_spec(base, cfg.solver.as_ref(), seed)?;
                Ok(Prepared::Vip {
                    name: "explicit".into(),
                    problem,
                    config,
                    algorithm,
                })
            }
        }
        (None, Some(b)) => {
            let problem = build_bilevel_problem(b)?;
            let base = SolverConfig {
                x0: b.x0.as_ref().map(|v| pt(v)),
                record_invariants: b.fejer_samples.is_some(),
                fejer_samples: b
                    .fejer_samples
                    .as_ref()
                    .map(|ws| ws.iter().map(|w| pt(w)).collect()),
                ..SolverConfig::default()
            };
            let (config, algorithm) = apply_solver_spec(base, cfg.solver.as_ref(), seed)?;
            require_vip(algorithm)?;
            Ok(Prepared::Bilevel {
                name: "bilevel".into(),
                problem,
                config,
                grid_step: b.grid_oracle_step,
            })
        }
    }
}

fn require_vip(algorithm: Algorithm) -> Result<(), Failure> {
    if matches!(algorithm, Algorithm::Vip) {
        Ok(())
    } else {
        Err(Failure::config(
            "bilevel selection runs on the vip algorithm only".into(),
        ))
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

pub fn run_solve(
    config_path: &Path,
    out: Option<PathBuf>,
    summary: Option<PathBuf>,
) -> Result<u8, Failure> {
    let cfg = load_config(config_path)?;
    let prepared = prepare(&cfg)?;
    execute("solve", prepared, &cfg, out, summary)
}

pub fn run_bilevel(
    config_path: &Path,
    out: Option<PathBuf>,
    summary: Option<PathBuf>,
) -> Result<u8, Failure> {
    let cfg = load_config(config_path)?;
    let prepared = prepare(&cfg)?;
    if matches!(prepared, Prepared::Vip { .. }) {
        return Err(Failure::config(
            "the bilevel command needs a bilevel section or a bilevel builtin".into(),
        ));
    }
    execute("bilevel", prepared, &cfg, out, summary)
}

fn execute(
    command: &'static str,
    prepared: Prepared,
    cfg: &RunConfig,
    out: Option<PathBuf>,
    summary: Option<PathBuf>,
) -> Result<u8, Failure> {
    let trace_path = out.or_else(|| cfg.output.as_ref().and_then(|o| o.trace.clone()));
    let summary_path = summary.or_else(|| cfg.output.as_ref().and_then(|o| o.summary.clone()));

    let (name, algorithm, x, trace, wall_ms, err, grid) = match prepared {
        Prepared::Vip {
            name,
            problem,
            config,
            algorithm,
        } => {
            let start = Instant::now();
            let (x, trace) = match algorithm {
                Algorithm::Vip => vip_solve(&problem, &config),
                Algorithm::Auslender { tau } => auslender_solve(
                    problem.field(),
                    problem.operator(),
                    |_| tau,
                    problem.dimension(),
                    problem.known_solution(),
                    &config,
                ),
                Algorithm::YamadaOgura { lambda0 } => yamada_ogura_solve(
                    problem.field(),
                    problem.operator(),
                    |k| lambda0 / (k as f64 + 1.0),
                    problem.dimension(),
                    problem.known_solution(),
                    &config,
                ),
            }
            .map_err(Failure::from_core)?;
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let err = problem.known_solution().map(|s| (&x - s).norm());
            (name, algorithm.name(), x, trace, wall_ms, err, None)
        }
        Prepared::Bilevel {
            name,
            problem,
            config,
            grid_step,
        } => {
            let start = Instant::now();
            let (x, trace) = solve_p_min_norm(&problem, &config).map_err(Failure::from_core)?;
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let grid = match grid_step {
                Some(step) => {
                    let g = brute_force_bilevel(&problem, step).map_err(Failure::from_core)?;
                    Some(GridOracleSummary {
                        gap_to_solution: (&x - &g.argmin).norm(),
                        argmin: g.argmin.iter().copied().collect(),
                        inner_value: g.inner_value,
                        outer_value: g.outer_value,
                    })
                }
                None => None,
            };
            let err = problem.known_solution().map(|s| (&x - s).norm());
            (name, "vip", x, trace, wall_ms, err, grid)
        }
    };

    if let Some(path) = &trace_path {
        write_trace(path, &trace)?;
    }
    let last = trace.records.last();
    let report = SolveSummary {
        command,
        problem: name,
        algorithm,
        status: trace.status,
        iterations: trace.iterations(),
        wall_ms,
        final_point: x.iter().copied().collect(),
        final_norm_field: last.map(|r| r.norm_field),
        final_fix_residual: last.map(|r| r.fix_residual),
        final_step_norm: last.map(|r| r.step_norm),
        final_shift_norm: last.map(|r| r.shift_norm),
        err_to_solution: err,
        grid_oracle: grid,
    };
    if let Some(path) = &summary_path {
        write_json(path, &report)?;
    }
    let err_note = match report.err_to_solution {
        Some(e) => format!(", err_to_solution = {e:.3e}"),
        None => String::new(),
    };
    println!(
        "{command} {}: {} after {} iterations{err_note}",
        report.problem,
        status_str(report.status),
        report.iterations,
    );
    Ok(status_code(report.status))
}

/// Operator/field pair a diagnostics run probes. Borrows either freshly
/// built objects or a builtin problem's parts.
enum DiagTarget {
    Built {
        operator: Box<dyn FixedPointOperator>,
        field: Option<Box<dyn VectorField>>,
    },
    BuiltinVip(VipProblem<'static>),
}

impl DiagTarget {
    fn operator(&self) -> &dyn FixedPointOperator {
        match self {
            DiagTarget::Built { operator, .. } => operator.as_ref(),
            DiagTarget::BuiltinVip(p) => p.operator(),
        }
    }

    fn field(&self) -> Option<&dyn VectorField> {
        match self {
            DiagTarget::Built { field, .. } => field.as_deref(),
            DiagTarget::BuiltinVip(p) => Some(p.field()),
        }
    }
}

pub fn run_diagnose(config_path: &Path, summary: Option<PathBuf>) -> Result<u8, Failure> {
    let cfg = load_config(config_path)?;
    let seed = cfg.seed.unwrap_or(0);
    let diag = cfg.diagnostics.as_ref().ok_or_else(|| {
        Failure::config("diagnose needs a diagnostics section with checks".into())
    })?;
    let p = cfg
        .problem
        .as_ref()
        .ok_or_else(|| Failure::config("diagnose needs a problem section".into()))?;

    let (name, target) = if let Some(bname) = &p.builtin {
        let found = builtin(bname).ok_or_else(|| {
            Failure::config(format!("unknown builtin {bname:?}; the suite is {SUITE:?}"))
        })?;
        match found {
            Builtin::Vip { problem, .. } => (bname.clone(), DiagTarget::BuiltinVip(problem)),
            Builtin::Bilevel { .. } => {
                return Err(Failure::config(
                    "diagnose works on operators and fields; give the bilevel constraint \
                     explicitly via problem.operator"
                        .into(),
                ))
            }
        }
    } else {
        let operator_spec = p.operator.as_ref().ok_or_else(|| {
            Failure::config("diagnose needs problem.operator (or a builtin)".into())
        })?;
        let operator = crate::config::build_operator(operator_spec)?;
        let field = match &p.field {
            Some(f) => Some(build_field(f)?),
            None => None,
        };
        ("explicit".into(), DiagTarget::Built { operator, field })
    };

    let start = Instant::now();
    let mut checks: Vec<CheckReport> = Vec::new();
    let mut grids: Vec<QuasiShrinkReport> = Vec::new();
    let check_err = |e: vipcut::Error| Failure::check(e.to_string());
    fn need_field(field: Option<&dyn VectorField>) -> Result<&dyn VectorField, Failure> {
        field.ok_or_else(|| Failure::config("this check needs a problem.field".into()))
    }

    for check in &diag.checks {
        match check {
            CheckSpec::Cutter(c) => {
                let region = build_region(&c.region, seed)?;
                let fixes: Option<Vec<Point>> = c
                    .fix_points
                    .as_ref()
                    .map(|ws| ws.iter().map(|w| pt(w)).collect());
                checks.push(
                    check_cutter(target.operator(), &region, fixes.as_deref())
                        .map_err(check_err)?,
                );
            }
            CheckSpec::Sqne(c) => {
                let region = build_region(&c.region, seed)?;
                let fixes: Option<Vec<Point>> = c
                    .fix_points
                    .as_ref()
                    .map(|ws| ws.iter().map(|w| pt(w)).collect());
                checks.push(
                    check_sqne(target.operator(), c.alpha, &region, fixes.as_deref())
                        .map_err(check_err)?,
                );
            }
            CheckSpec::DecreaseGrid(c) => {
                let region = build_region(&c.region, seed)?;
                grids.push(
                    probe_quasi_shrinking(target.operator(), &region, &c.r_grid, c.threshold)
                        .map_err(check_err)?,
                );
            }
            CheckSpec::Coercivity(c) => {
                let region = build_region(&c.region, seed)?;
                let field = need_field(target.field())?;
                checks.push(
                    check_field_coercivity(field, &pt(&c.q), c.beta, &region).map_err(check_err)?,
                );
            }
            CheckSpec::StrongMonotonicity(c) => {
                let region = build_region(&c.region, seed)?;
                let field = need_field(target.field())?;
                checks.push(check_strong_monotonicity(field, c.alpha, &region).map_err(check_err)?);
            }
        }
    }
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    for report in &checks {
        println!(
            "check {}: {} (worst violation {:.3e} over {} samples)",
            report.name,
            if report.passed { "pass" } else { "FAIL" },
            report.worst_violation,
            report.samples_used,
        );
    }
    for grid in &grids {
        let cells: Vec<String> = grid
            .estimates
            .iter()
            .map(|(r, d)| format!("D({r}) = {d:.3e}"))
            .collect();
        println!(
            "decrease grid ({}): {}",
            if grid.consistent {
                "consistent"
            } else {
                "inconsistent"
            },
            cells.join(", "),
        );
    }

    let all_passed = checks.iter().all(|r| r.passed);
    let report = DiagnoseSummary {
        command: "diagnose",
        problem: name,
        all_passed,
        wall_ms,
        checks,
        decrease_grids: grids,
    };
    let summary_path = summary.or_else(|| cfg.output.as_ref().and_then(|o| o.summary.clone()));
    if let Some(path) = &summary_path {
        write_json(path, &report)?;
    }
    Ok(if all_passed { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// Bench
// ---------------------------------------------------------------------------

struct BenchRow {
    name: &'static str,
    algorithm: &'static str,
    status: &'static str,
    iterations: usize,
    final_fix_residual: Option<f64>,
    final_step_norm: Option<f64>,
    err_to_solution: Option<f64>,
}

fn bench_entry(name: &'static str) -> Result<BenchRow, Failure> {
    let found = builtin(name).expect("suite names resolve");
    let (algorithm, trace, err) = match found {
        Builtin::Vip { problem, config } => {
            let (x, trace) = vip_solve(&problem, &config).map_err(Failure::from_core)?;
            let err = problem.known_solution().map(|s| (&x - s).norm());
            ("vip", trace, err)
        }
        Builtin::Bilevel { problem, config } => {
            let (x, trace) = solve_p_min_norm(&problem, &config).map_err(Failure::from_core)?;
            let err = problem.known_solution().map(|s| (&x - s).norm());
            ("vip", trace, err)
        }
    };
    let last = trace.records.last();
    Ok(BenchRow {
        name,
        algorithm,
        status: status_str(trace.status),
        iterations: trace.iterations(),
        final_fix_residual: last.map(|r| r.fix_residual),
        final_step_norm: last.map(|r| r.step_norm),
        err_to_solution: err,
    })
}

/// Runs the builtin suite (entries run concurrently, output is merged in
/// suite order) and writes one CSV row per problem. Wall times are kept out
/// of the CSV so reruns are byte-identical.
pub fn run_bench(suite: &str, out: &Path) -> Result<u8, Failure> {
    if suite != "builtin" {
        return Err(Failure::config(format!(
            "unknown suite {suite:?}; only \"builtin\" exists"
        )));
    }
    let results: Vec<Result<BenchRow, Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = SUITE
            .iter()
            .map(|name| scope.spawn(move || bench_entry(name)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect()
    });

    let mut csv = String::from(
        "name,algorithm,status,iterations,final_fix_residual,final_step_norm,err_to_solution\n",
    );
    for result in results {
        let row = result?;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.name,
            row.algorithm,
            row.status,
            row.iterations,
            fmt_opt(row.final_fix_residual),
            fmt_opt(row.final_step_norm),
            fmt_opt(row.err_to_solution),
        ));
        println!(
            "bench {}: {} after {} iterations{}",
            row.name,
            row.status,
            row.iterations,
            row.err_to_solution
                .map(|e| format!(", err_to_solution = {e:.3e}"))
                .unwrap_or_default(),
        );
    }
    fs::write(out, csv).map_err(|e| io_failure(out, e))?;
    Ok(0)
}
