use std::fmt;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use critnls::asymptotics::{
    check_corollary_envelope, check_theorem1, check_theorem3, lambda_grid, predicted_rate,
    run_sweep, CheckReport, Observable, Sweep,
};
use critnls::functionals::{energy, radial_norms};
use critnls::io::{mass_to_csv, read_sweep_csv, sweep_to_csv, to_json_string, write_atomic};
use critnls::mass::{check_mass_map, mass_table, predicted_rho_rate};
use critnls::params::critical_exponent;
use critnls::solver::{solve_ground_state_with, solve_limit_soliton};
use critnls::special::sobolev_constant;
use critnls::talenti::{rho0, sobolev_m0, talenti_norms};
use critnls::{EnergyForm, Error, Exponent, ProblemParams, ShootingResult, SolverOptions};

use crate::config::{CheckKind, RunConfig};

/// Exit status of `check` when a check ran and failed.
pub const CHECK_FAILED: i32 = 30;
/// Exit status for missing or inconsistent parameters.
pub const USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => e.exit_code(),
            CliError::Usage(_) => USAGE,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{}: {e}", e.kind()),
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn need<T>(v: Option<T>, key: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("missing --{}", key.replace('_', "-"))))
}

fn dim_q(cfg: &RunConfig) -> CliResult<(u32, Exponent)> {
    Ok((need(cfg.dim, "dim")?, need(cfg.q, "q")?))
}

fn options(cfg: &RunConfig) -> SolverOptions {
    SolverOptions::with_tol(cfg.tol.unwrap_or(1e-8))
}

/// Write to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => Ok(write_atomic(p, text.as_bytes())?),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Runtime(format!("stdout: {e}")))
        }
    }
}

fn with_pool<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn grid(cfg: &RunConfig, default: (f64, f64)) -> CliResult<Vec<f64>> {
    let (lo, hi) = cfg.lambda_window.unwrap_or(default);
    Ok(lambda_grid(lo, hi, cfg.points_per_decade.unwrap_or(8))?)
}

fn solution_summary(res: &ShootingResult, params: &ProblemParams, form: Option<EnergyForm>) -> Value {
    let norms = radial_norms(&res.profile, params.q());
    json!({
        "dim": params.dim,
        "q": params.q,
        "lambda": params.lambda,
        "mu0": res.mu0,
        "norms": norms,
        "energy": form.map(|f| energy(&res.profile, params, f)),
        "bisection_iterations": res.bisection_iterations,
        "bracket_width": res.bracket_width,
        "stitch_radius": res.stitch_radius,
        "tail_slope_mismatch": res.tail_slope_mismatch,
        "ambiguous_branch": res.ambiguous_branch,
        "residual_report": res.residual_report,
    })
}

fn write_solution(cfg: &RunConfig, res: &ShootingResult, summary: Value) -> CliResult<()> {
    if let Some(out) = &cfg.out {
        let mut full = summary.clone();
        full["profile"] = serde_json::to_value(&res.profile)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        emit(Some(out), &to_json_string(&full)?)?;
    }
    if let Some(report) = &cfg.report {
        emit(Some(report), &to_json_string(&res.residual_report)?)?;
    }
    emit(None, &to_json_string(&summary)?)
}

pub fn solve(cfg: &RunConfig) -> CliResult<()> {
    let (dim, q) = dim_q(cfg)?;
    let params = ProblemParams::new(dim, q, need(cfg.lambda, "lambda")?)?;
    let res = solve_ground_state_with(&params, &options(cfg))?;
    let summary = solution_summary(&res, &params, Some(EnergyForm::I));
    write_solution(cfg, &res, summary)
}

/// The `λ → ∞` limit `-Δv + v = v^{q-1}`.
pub fn soliton(cfg: &RunConfig) -> CliResult<()> {
    let (dim, q) = dim_q(cfg)?;
    let params = ProblemParams::new(dim, q, 0.0)?;
    let res = solve_limit_soliton(dim, q.value(), cfg.tol.unwrap_or(1e-8))?;
    let mut summary = solution_summary(&res, &params, None);
    summary["lambda"] = json!("infinite");
    write_solution(cfg, &res, summary)
}

fn sweep_data(cfg: &RunConfig) -> CliResult<Sweep> {
    let (dim, q) = dim_q(cfg)?;
    let lambdas = grid(cfg, (1e-4, 1e-1))?;
    let opts = options(cfg);
    Ok(with_pool(cfg, || run_sweep(dim, q, &lambdas, &opts))??)
}

pub fn sweep(cfg: &RunConfig) -> CliResult<()> {
    let data = sweep_data(cfg)?;
    emit(cfg.out.as_deref(), &sweep_to_csv(&data))
}

fn applicable(sweep: &Sweep) -> Vec<CheckKind> {
    let dim = sweep.dim;
    let q = sweep.q.value();
    let small = sweep.ok_records().any(|r| r.lambda < 1.0);
    let large = sweep.ok_records().any(|r| r.lambda >= 1.0);
    let mut out = Vec::new();
    if small && predicted_rate(dim, q, Observable::Mu0).is_ok() {
        out.push(CheckKind::Theorem1);
        out.push(CheckKind::Envelope);
    }
    if small && predicted_rho_rate(dim, q).is_ok() {
        out.push(CheckKind::Mass);
    }
    if large {
        out.push(CheckKind::Theorem3);
    }
    out
}

fn run_check(kind: CheckKind, sweep: &Sweep, tol: f64) -> Result<CheckReport, Error> {
    match kind {
        CheckKind::Theorem1 => check_theorem1(sweep),
        CheckKind::Theorem3 => check_theorem3(sweep, tol),
        CheckKind::Envelope => check_corollary_envelope(sweep),
        CheckKind::Mass => check_mass_map(sweep),
    }
}

/// Verify a sweep CSV; the verdict is the exit status.
pub fn check(cfg: &RunConfig) -> CliResult<bool> {
    let input = need(cfg.input.as_ref(), "input")?;
    let sweep = read_sweep_csv(input)?;
    let kinds = cfg.checks.clone().unwrap_or_else(|| applicable(&sweep));
    if kinds.is_empty() {
        return Err(CliError::Usage("no check applies to this sweep".into()));
    }
    let tol = cfg.tol.unwrap_or(1e-8);
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for kind in kinds {
        match run_check(kind, &sweep, tol) {
            Ok(r) => reports.push(r),
            Err(e) => errors.push(json!({
                "check": kind.name(),
                "kind": e.kind(),
                "message": e.to_string(),
            })),
        }
    }
    let pass = errors.is_empty() && reports.iter().all(|r| r.pass);
    let failing: Vec<String> = reports
        .iter()
        .flat_map(|r| r.failing().into_iter().map(move |o| format!("{}:{o}", r.check)))
        .collect();
    let doc = json!({
        "input": input.display().to_string(),
        "pass": pass,
        "failing": failing,
        "reports": reports,
        "errors": errors,
    });
    emit(cfg.report.as_deref().or(cfg.out.as_deref()), &to_json_string(&doc)?)?;
    Ok(pass)
}

pub fn talenti(cfg: &RunConfig) -> CliResult<()> {
    let dim = need(cfg.dim, "dim")?;
    let ts = critical_exponent(dim)?;
    let q = cfg.q.map(|q| q.value()).unwrap_or(ts);
    let norms = talenti_norms(dim, q)?;
    let (rho0, note) = match rho0(dim, q) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let doc = json!({
        "dim": dim,
        "q": q,
        "two_star": ts,
        "amplitude": critnls::TalentiBubble::amplitude(dim),
        "sobolev_constant": sobolev_constant(dim),
        "m0": sobolev_m0(dim)?,
        "norms": norms,
        "rho0": rho0,
        "rho0_note": note,
    });
    emit(cfg.out.as_deref(), &to_json_string(&doc)?)
}

pub fn mass(cfg: &RunConfig) -> CliResult<()> {
    let data = sweep_data(cfg)?;
    let (rows, prefactor) = mass_table(&data, cfg.prefactor)?;
    if let Some(report) = &cfg.report {
        emit(Some(report), &to_json_string(&check_mass_map(&data)?)?)?;
    }
    emit(cfg.out.as_deref(), &mass_to_csv(data.dim, data.q, prefactor, &rows))
}
