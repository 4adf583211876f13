//! Rescalings, λ-sweeps and the scaling-law checks built on them.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{
    energy_from_norms, l2_lq_defect_from_norms, radial_norms, EnergyForm, IdentityForm, NormSet,
};
use crate::params::{gq_constants, Exponent, ProblemParams};
use crate::profile::RadialProfile;
use crate::solver::{solve_ground_state_with, solve_limit_soliton, SolverOptions};
use crate::special::sobolev_constant;
use crate::talenti::{rho0, sobolev_m0, TalentiBubble};

/// `v(x) = λ^{1/(q-2)} u(λ^{(2*-2)/(2(q-2))} x)`.
pub fn rescale_v(u: &RadialProfile, params: &ProblemParams) -> Result<RadialProfile> {
    let (alpha, beta) = v_factors(params)?;
    Ok(u.dilate(alpha, beta))
}

fn v_factors(params: &ProblemParams) -> Result<(f64, f64)> {
    let lambda = params.lambda;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Rescale(format!("need lambda > 0, got {lambda}")));
    }
    let e = params.exponents();
    Ok((lambda.powf(1.0 / (params.q() - 2.0)), lambda.powf(0.5 * e.sigma)))
}

/// `w(x) = ξ^{(N-2)/2} v(ξ x)`.
pub fn rescale_w(v: &RadialProfile, xi: f64) -> Result<RadialProfile> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::Rescale(format!("need xi > 0, got {xi}")));
    }
    let s = (v.coeffs.n() - 2.0) / 2.0;
    Ok(v.dilate(xi.powf(s), xi))
}

/// The scale at which `rescale_w` matches the height of `U₁`.
///
/// Applied to `v_λ` this gives `ξ_v`; applied to `u_λ` it gives `ξ_u = λ^{σ/2} ξ_v`.
/// Both produce the same `w`.
pub fn extract_xi(v: &RadialProfile, dim: u32) -> Result<f64> {
    xi_from_height(v.u0(), dim)
}

pub fn xi_from_height(v0: f64, dim: u32) -> Result<f64> {
    let bubble0 = TalentiBubble::amplitude(dim);
    if !(v0 > bubble0) {
        return Err(Error::NotConcentrated { v0, bubble0 });
    }
    Ok((bubble0 / v0).powf(2.0 / (dim as f64 - 2.0)))
}

/// Norms of `α u(β ·)` from those of `u`.
pub fn dilate_norms(norms: &NormSet, dim: u32, q: f64, alpha: f64, beta: f64) -> NormSet {
    let n = dim as f64;
    let ts = 2.0 * n / (n - 2.0);
    let vol = beta.powf(-n);
    NormSet {
        grad_sq: alpha * alpha * beta * beta * vol * norms.grad_sq,
        l2_sq: alpha * alpha * vol * norms.l2_sq,
        lq: alpha.powf(q) * vol * norms.lq,
        lcrit: alpha.powf(ts) * vol * norms.lcrit,
    }
}

/// `n` geometric points from `lo` to `hi` at `per_decade` points per decade.
pub fn lambda_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || per_decade == 0 {
        return Err(Error::Domain(format!(
            "bad lambda window {lo}:{hi} with {per_decade} points per decade"
        )));
    }
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).round() as usize).max(1);
    Ok((0..=n)
        .map(|i| {
            if i == n {
                hi
            } else {
                lo * (hi / lo).powf(i as f64 / n as f64)
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub lambda: f64,
    pub mu0: f64,
    pub norms_u: NormSet,
    pub norms_v: NormSet,
    /// `None` when `u_λ(0) ≤ U₁(0)`, where no concentration scale exists.
    pub norms_w: Option<NormSet>,
    pub m_lambda: f64,
    pub delta: f64,
    pub tau: f64,
    /// `ξ_u`, see [`extract_xi`].
    pub xi: Option<f64>,
    /// `"ok"` or the error kind of a failed solve.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl SweepRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    /// Everything that follows from `(λ, u(0), norms of u)` alone.
    pub fn from_norms(params: &ProblemParams, mu0: f64, norms_u: NormSet) -> Result<Self> {
        let (alpha, beta) = v_factors(params)?;
        let dim = params.dim;
        let q = params.q();
        let xi = xi_from_height(mu0, dim).ok();
        let m_lambda = energy_from_norms(&norms_u, params, EnergyForm::I);
        Ok(SweepRecord {
            lambda: params.lambda,
            mu0,
            norms_u,
            norms_v: dilate_norms(&norms_u, dim, q, alpha, beta),
            norms_w: xi.map(|t| dilate_norms(&norms_u, dim, q, t.powf(params.exponents().s), t)),
            m_lambda,
            delta: sobolev_m0(dim)? - m_lambda,
            tau: norms_u.grad_sq / norms_u.lcrit,
            xi,
            status: "ok".into(),
            message: None,
        })
    }

    pub fn failed(lambda: f64, err: &Error) -> Self {
        let nan = f64::NAN;
        let nans = NormSet {
            grad_sq: nan,
            l2_sq: nan,
            lq: nan,
            lcrit: nan,
        };
        SweepRecord {
            lambda,
            mu0: nan,
            norms_u: nans,
            norms_v: nans,
            norms_w: None,
            m_lambda: nan,
            delta: nan,
            tau: nan,
            xi: None,
            status: err.kind().into(),
            message: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub dim: u32,
    pub q: Exponent,
    pub records: Vec<SweepRecord>,
}

impl Sweep {
    pub fn params(&self, lambda: f64) -> ProblemParams {
        ProblemParams {
            dim: self.dim,
            q: self.q,
            lambda,
        }
    }

    pub fn ok_records(&self) -> impl Iterator<Item = &SweepRecord> {
        self.records.iter().filter(|r| r.is_ok())
    }
}

fn sweep_point(params: &ProblemParams, opts: &SolverOptions) -> Result<SweepRecord> {
    let res = solve_ground_state_with(params, opts)?;
    let norms = radial_norms(&res.profile, params.q());
    SweepRecord::from_norms(params, res.mu0, norms)
}

/// Solve at every `λ`, in parallel on the current rayon pool.
///
/// Records come back in the order of `lambdas`; failures are kept as error rows.
pub fn run_sweep(
    dim: u32,
    q: Exponent,
    lambdas: &[f64],
    opts: &SolverOptions,
) -> Result<Sweep> {
    ProblemParams::new(dim, q, 1.0)?;
    let records = lambdas
        .par_iter()
        .map(|&lambda| {
            let params = ProblemParams { dim, q, lambda };
            sweep_point(&params, opts).unwrap_or_else(|e| SweepRecord::failed(lambda, &e))
        })
        .collect();
    Ok(Sweep { dim, q, records })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LogPower {
    Free,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub exponent: f64,
    pub log_power: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Least squares for `y ≈ c λ^a (ln 1/λ)^β`.
///
/// The log factor needs `λ < 1`; a pure power law (`Fixed(0)`) accepts any `λ > 0`.
pub fn fit_power_law(points: &[(f64, f64)], mode: LogPower) -> Result<FitResult> {
    if points.len() < 6 {
        return Err(Error::Fit(format!("need at least 6 points, got {}", points.len())));
    }
    let uses_log = !matches!(mode, LogPower::Fixed(b) if b == 0.0);
    for &(l, y) in points {
        if !(l > 0.0 && y > 0.0 && l.is_finite() && y.is_finite()) {
            return Err(Error::Fit(format!("non-positive data point ({l}, {y})")));
        }
        if uses_log && l >= 1.0 {
            return Err(Error::Fit(format!("log correction needs lambda < 1, got {l}")));
        }
    }
    let m = points.len();
    let cols = if mode == LogPower::Free { 3 } else { 2 };
    let mut design = DMatrix::zeros(m, cols);
    let mut rhs = DVector::zeros(m);
    for (i, &(l, y)) in points.iter().enumerate() {
        let ll = if uses_log { (1.0 / l).ln().ln() } else { 0.0 };
        design[(i, 0)] = l.ln();
        design[(i, 1)] = 1.0;
        rhs[i] = match mode {
            LogPower::Free => {
                design[(i, 2)] = ll;
                y.ln()
            }
            LogPower::Fixed(b) => y.ln() - b * ll,
        };
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::Fit("degenerate design matrix".into()));
    }
    let coef = svd
        .solve(&rhs, 1e-14 * smax)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let resid = &rhs - &design * &coef;
    let mean = rhs.mean();
    let ss_tot: f64 = rhs.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res = resid.norm_squared();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    Ok(FitResult {
        exponent: coef[0],
        log_power: match mode {
            LogPower::Free => coef[2],
            LogPower::Fixed(b) => b,
        },
        prefactor: coef[1].exp(),
        r_squared,
        window: (lo, hi),
    })
}

/// One checked quantity: a fitted exponent, a measured gap, a violation count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Observation {
    pub(crate) fn within(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        Observation {
            name: name.into(),
            value,
            target,
            tolerance,
            pass: (value - target).abs() <= tolerance,
            fit: None,
            note: None,
        }
    }

    pub(crate) fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Observation {
            pass: value <= bound,
            ..Self::within(name, value, 0.0, bound)
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub dim: u32,
    pub q: f64,
    pub observations: Vec<Observation>,
    pub pass: bool,
}

impl CheckReport {
    pub(crate) fn new(check: &str, dim: u32, q: f64, observations: Vec<Observation>) -> Self {
        let pass = observations.iter().all(|o| o.pass);
        CheckReport {
            check: check.into(),
            dim,
            q,
            observations,
            pass,
        }
    }

    pub fn get(&self, name: &str) -> Option<&Observation> {
        self.observations.iter().find(|o| o.name == name)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.observations
            .iter()
            .filter(|o| !o.pass)
            .map(|o| o.name.as_str())
            .collect()
    }
}

/// A predicted rate `λ^a (ln 1/λ)^β` for one observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub exponent: f64,
    pub log_power: f64,
}

const fn rate(exponent: f64, log_power: f64) -> Rate {
    Rate {
        exponent,
        log_power,
    }
}

/// Observables of the small-λ sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    Mu0,
    L2,
    Lq,
    Xi,
    /// `‖∇U‖₂² - ‖∇u_λ‖₂²`; the gradient norm is the same for `u`, `v` and `w`.
    GradDefect,
    Delta,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Mu0 => "mu0",
            Observable::L2 => "l2_sq",
            Observable::Lq => "lq",
            Observable::Xi => "xi",
            Observable::GradDefect => "grad_defect",
            Observable::Delta => "delta",
        }
    }

    fn value(self, r: &SweepRecord, grad_bubble: f64) -> Option<f64> {
        match self {
            Observable::Mu0 => Some(r.mu0),
            Observable::L2 => Some(r.norms_u.l2_sq),
            Observable::Lq => Some(r.norms_u.lq),
            Observable::Xi => r.xi,
            Observable::GradDefect => Some(grad_bubble - r.norms_u.grad_sq),
            Observable::Delta => Some(r.delta),
        }
    }
}

/// Predicted small-λ rate of `obs`.
pub fn predicted_rate(dim: u32, q: f64, obs: Observable) -> Result<Rate> {
    let params = ProblemParams::new(dim, q, 1.0)?;
    let e = params.exponents();
    let ts = e.two_star;
    Ok(match dim {
        4 => {
            let k = 1.0 / (q - 2.0);
            let l = -(4.0 - q) / (q - 2.0);
            match obs {
                Observable::Mu0 => rate(-k, k),
                Observable::L2 | Observable::GradDefect | Observable::Delta => rate(2.0 * k, l),
                Observable::Lq => rate((4.0 - q) * k, l),
                Observable::Xi => rate(k, -k),
            }
        }
        3 => {
            if q <= 4.0 {
                return Err(Error::Domain(format!(
                    "no small-lambda asymptotics for N = 3 and q = {q} <= 4"
                )));
            }
            let k = 1.0 / (q - 4.0);
            match obs {
                Observable::Mu0 => rate(-k, 0.0),
                Observable::L2 | Observable::Xi | Observable::GradDefect | Observable::Delta => {
                    rate(2.0 * k, 0.0)
                }
                Observable::Lq => rate((6.0 - q) * k, 0.0),
            }
        }
        _ => match obs {
            Observable::Mu0 => rate(-1.0 / (q - 2.0), 0.0),
            Observable::L2 | Observable::GradDefect | Observable::Delta => rate(e.sigma, 0.0),
            Observable::Lq => rate((ts - q) / (q - 2.0), 0.0),
            // ξ_u = U₁(0)/u(0) to the power 2/(N-2)
            Observable::Xi => rate(2.0 / ((dim as f64 - 2.0) * (q - 2.0)), 0.0),
        },
    })
}

fn series(sweep: &Sweep, obs: Observable, grad_bubble: f64) -> Vec<(f64, f64)> {
    sweep
        .ok_records()
        .filter_map(|r| obs.value(r, grad_bubble).map(|y| (r.lambda, y)))
        .collect()
}

fn small_lambda(sweep: &Sweep) -> Sweep {
    Sweep {
        records: sweep
            .records
            .iter()
            .filter(|r| r.lambda < 1.0)
            .cloned()
            .collect(),
        ..sweep.clone()
    }
}

fn decades(points: &[(f64, f64)]) -> f64 {
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    (hi / lo).log10()
}

/// Exponent of a fit in the stated mode, scored against `target`.
fn exponent_observation(
    name: &str,
    points: &[(f64, f64)],
    mode: LogPower,
    target: f64,
    tolerance: f64,
    min_r_squared: f64,
) -> Observation {
    match fit_power_law(points, mode) {
        Ok(fit) => {
            let mut o = Observation::within(name, fit.exponent, target, tolerance);
            if fit.r_squared < min_r_squared {
                o.pass = false;
                o.note = Some(format!("r^2 = {} below {min_r_squared}", fit.r_squared));
            }
            o.fit = Some(fit);
            o
        }
        Err(e) => Observation {
            pass: false,
            ..Observation::within(name, f64::NAN, target, tolerance).with_note(e.to_string())
        },
    }
}

/// Exponents from the lower and upper halves of the window must agree.
fn stability_observation(name: &str, points: &[(f64, f64)], mode: LogPower) -> Observation {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = sorted.len() / 2;
    let (lower, upper) = (&sorted[..half + 1], &sorted[half..]);
    match (fit_power_law(lower, mode), fit_power_law(upper, mode)) {
        (Ok(a), Ok(b)) => Observation::at_most(name, (a.exponent - b.exponent).abs(), 0.1),
        (Err(e), _) | (_, Err(e)) => Observation {
            pass: false,
            ..Observation::at_most(name, f64::NAN, 0.1).with_note(e.to_string())
        },
    }
}

pub const EXPONENT_TOL: f64 = 0.05;
pub const DEFECT_TOL: f64 = 0.1;
pub const MIN_R_SQUARED: f64 = 0.99;

fn required_decades(dim: u32) -> f64 {
    if dim == 4 {
        3.0
    } else {
        2.0
    }
}

/// Exponent checks of the small-λ asymptotics, one branch per dimension.
pub fn check_theorem1(sweep: &Sweep) -> Result<CheckReport> {
    let sweep = small_lambda(sweep);
    let dim = sweep.dim;
    let q = sweep.q.value();
    // ‖∇U_ρ‖₂² = S^{N/2} for every ρ
    let grad_bubble = sobolev_constant(dim).powf(dim as f64 / 2.0);
    let mu = series(&sweep, Observable::Mu0, grad_bubble);
    if mu.len() < 6 {
        return Err(Error::Fit(format!("only {} certified sweep points", mu.len())));
    }
    let span = decades(&mu);
    if span < required_decades(dim) {
        return Err(Error::InsufficientDecades {
            decades: span,
            required: required_decades(dim),
        });
    }
    let observables: &[(Observable, f64)] = match dim {
        3 | 4 => &[
            (Observable::Mu0, EXPONENT_TOL),
            (Observable::L2, EXPONENT_TOL),
            (Observable::Lq, EXPONENT_TOL),
            (Observable::Xi, DEFECT_TOL),
            (Observable::GradDefect, DEFECT_TOL),
        ],
        _ => &[
            (Observable::Mu0, EXPONENT_TOL),
            (Observable::L2, EXPONENT_TOL),
            (Observable::Lq, EXPONENT_TOL),
            (Observable::GradDefect, DEFECT_TOL),
        ],
    };
    let mut obs = Vec::new();
    for &(o, tol) in observables {
        let r = predicted_rate(dim, q, o)?;
        let pts = series(&sweep, o, grad_bubble);
        let mode = LogPower::Fixed(r.log_power);
        obs.push(exponent_observation(o.name(), &pts, mode, r.exponent, tol, 0.0));
        if dim == 4 {
            // the fixed-log fit must also be a good fit, and a free fit must agree
            let fixed = obs.last_mut().unwrap();
            if let Some(fit) = fixed.fit {
                if fit.r_squared < MIN_R_SQUARED {
                    fixed.pass = false;
                }
            }
            obs.push(exponent_observation(
                &format!("{}_free", o.name()),
                &pts,
                LogPower::Free,
                r.exponent,
                DEFECT_TOL,
                0.0,
            ));
        }
        obs.push(stability_observation(
            &format!("{}_stability", o.name()),
            &pts,
            mode,
        ));
    }
    if dim >= 5 {
        let params = sweep.params(1.0);
        // the ratio ‖v‖₂²/‖v‖_q^q forced by the two identities
        let worst = sweep
            .ok_records()
            .map(|r| {
                l2_lq_defect_from_norms(&r.norms_v, &params.with_lambda(r.lambda), IdentityForm::VForm)
                    .abs()
            })
            .fold(0.0, f64::max);
        obs.push(Observation::at_most("l2_lq_ratio_defect", worst, 1e-6));
        // v_λ(0) against U_{ρ₀}(0) at the smallest λ
        let smallest = sweep
            .ok_records()
            .min_by(|a, b| a.lambda.total_cmp(&b.lambda))
            .expect("checked non-empty above");
        let target = TalentiBubble::new(dim, rho0(dim, q)?)?.eval(0.0);
        let v0 = smallest.lambda.powf(1.0 / (q - 2.0)) * smallest.mu0;
        obs.push(
            Observation::at_most("v0_gap", (v0 - target).abs() / target, 0.05)
                .with_note(format!("lambda = {}, U_rho0(0) = {target}", smallest.lambda)),
        );
    }
    Ok(CheckReport::new("theorem1", dim, q, obs))
}

/// Energy gap rate and the sandwich bounds on `τ` and `m_λ`.
pub fn check_corollary_envelope(sweep: &Sweep) -> Result<CheckReport> {
    let sweep = small_lambda(sweep);
    let dim = sweep.dim;
    let q = sweep.q.value();
    let r = predicted_rate(dim, q, Observable::Delta)?;
    let pts = series(&sweep, Observable::Delta, 0.0);
    let mut obs = Vec::new();
    let negative = pts.iter().filter(|p| !(p.1 > 0.0)).count();
    obs.push(Observation::at_most("delta_nonpositive", negative as f64, 0.0));
    if negative == 0 {
        obs.push(exponent_observation(
            "delta",
            &pts,
            LogPower::Fixed(r.log_power),
            r.exponent,
            EXPONENT_TOL,
            0.0,
        ));
        // δ_λ ≲ λ^σ: δ must not decay slower than λ^σ
        let sigma = sweep.params(1.0).exponents().sigma;
        if let Ok(fit) = fit_power_law(&pts, LogPower::Fixed(0.0)) {
            obs.push(Observation {
                pass: fit.exponent >= sigma - EXPONENT_TOL,
                ..Observation::within("delta_upper_rate", fit.exponent, sigma, f64::INFINITY)
            });
        }
    }
    obs.push(Observation::at_most(
        "sandwich_violations",
        sandwich_violations(&sweep)? as f64,
        0.0,
    ));
    Ok(CheckReport::new("envelope", dim, q, obs))
}

/// Points violating `1 < τ ≤ 1 + Gλ^σ` or `m₀(1 - λ^σ N G (1+Gλ^σ)^{(N-2)/2}) < m_λ < m₀`.
pub fn sandwich_violations(sweep: &Sweep) -> Result<usize> {
    let dim = sweep.dim;
    let n = dim as f64;
    let (_, g) = gq_constants(dim, sweep.q.value())?;
    let m0 = sobolev_m0(dim)?;
    Ok(sweep
        .ok_records()
        .filter(|r| {
            let ls = sweep.params(r.lambda).lambda_sigma();
            let tau_ok = r.tau > 1.0 && r.tau <= 1.0 + g * ls;
            let lower = m0 * (1.0 - ls * n * g * (1.0 + g * ls).powf((n - 2.0) / 2.0));
            let m_ok = lower < r.m_lambda && r.m_lambda < m0;
            !(tau_ok && m_ok)
        })
        .count())
}

/// `‖v_∞‖²_{H¹} - ‖v_λ‖²_{H¹}` for `v_λ = λ^{1/(q-2)} u_λ` along a large-λ sweep.
pub fn h1_defects(sweep: &Sweep, limit: &NormSet) -> Vec<(f64, f64)> {
    let q = sweep.q.value();
    let h_inf = limit.grad_sq + limit.l2_sq;
    sweep
        .ok_records()
        .map(|r| {
            let a = r.lambda.powf(2.0 / (q - 2.0));
            (r.lambda, h_inf - a * (r.norms_u.grad_sq + r.norms_u.l2_sq))
        })
        .collect()
}

/// Large-λ check: rate and prefactor of the `H¹` defect against the soliton limit.
pub fn check_theorem3(sweep: &Sweep, tol: f64) -> Result<CheckReport> {
    let dim = sweep.dim;
    let q = sweep.q.value();
    let sigma = sweep.params(1.0).exponents().sigma;
    let limit = solve_limit_soliton(dim, q, tol)?;
    let lim_norms = radial_norms(&limit.profile, q);
    let pts: Vec<(f64, f64)> = h1_defects(sweep, &lim_norms)
        .into_iter()
        .filter(|p| p.0 >= 1.0)
        .collect();
    let mut obs = vec![exponent_observation(
        "h1_defect",
        &pts,
        LogPower::Fixed(0.0),
        -sigma,
        EXPONENT_TOL,
        0.0,
    )];
    // prefactor with the exponent pinned to the predicted one
    let pinned: Vec<f64> = pts
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(l, d)| (d * l.powf(sigma)).ln())
        .collect();
    let prefactor = if pinned.len() == pts.len() && !pinned.is_empty() {
        (pinned.iter().sum::<f64>() / pinned.len() as f64).exp()
    } else {
        f64::NAN
    };
    let stated = 1.0 / (q - 2.0);
    obs.push(Observation::within("h1_prefactor", prefactor, stated, 0.1 * stated));
    // first-order perturbation of the least energy gives 2‖v_∞‖_{2*}^{2*}/(q-2)
    let derived = 2.0 * lim_norms.lcrit / (q - 2.0);
    let mut info = Observation::within("h1_prefactor_energy_expansion", prefactor, derived, 0.1 * derived);
    info.note = Some("diagnostic".into());
    obs.push(info);

    let mut heights: Vec<(f64, f64)> = sweep
        .ok_records()
        .filter(|r| r.lambda >= 1.0)
        .map(|r| (r.lambda, r.lambda.powf(1.0 / (q - 2.0)) * r.mu0))
        .collect();
    heights.sort_by(|a, b| a.0.total_cmp(&b.0));
    let v_inf0 = limit.mu0;
    let monotone = heights
        .windows(2)
        .all(|w| (w[1].1 - v_inf0).abs() <= (w[0].1 - v_inf0).abs());
    obs.push(Observation {
        pass: monotone,
        ..Observation::within("v0_monotone", monotone as u8 as f64, 1.0, 0.0)
    });
    let mut report = CheckReport::new("theorem3", dim, q, obs);
    // the diagnostic does not gate the verdict
    report.pass = report
        .observations
        .iter()
        .filter(|o| o.note.as_deref() != Some("diagnostic"))
        .all(|o| o.pass);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayEnvelope {
    pub c_up: f64,
    pub c_low: f64,
    pub kappa: f64,
    pub r_max: f64,
}

impl DecayEnvelope {
    pub fn ratio(&self) -> f64 {
        self.c_up / self.c_low
    }
}

/// Smallest `C_up` and largest `c_low` with
/// `c_low r^{-(N-2)} e^{-κr} ≤ w(r) ≤ C_up (1+r)^{-(N-2)}` on the grid in `[1, R]`,
/// where `κ = λ^{σ/2} ξ^{(2*-2)s/2}` and `w` comes from `v_λ` at scale `ξ`.
pub fn decay_envelope_check(
    w: &RadialProfile,
    params: &ProblemParams,
    xi: f64,
) -> Result<DecayEnvelope> {
    let e = params.exponents();
    let kappa = params.lambda_sigma().sqrt() * xi.powf((e.two_star - 2.0) * e.s / 2.0);
    let p = params.n() - 2.0;
    let mut c_up = 0.0f64;
    let mut c_low = f64::INFINITY;
    let mut r_max = 0.0;
    for (&r, &u) in w.grid.iter().zip(&w.values) {
        if r < 1.0 {
            continue;
        }
        if !(u > 0.0) {
            return Err(Error::EnvelopeViolation(format!("w({r}) = {u} is not positive")));
        }
        if u < 1e-250 {
            break;
        }
        c_up = c_up.max(u * (1.0 + r).powf(p));
        c_low = c_low.min(u * r.powf(p) * (kappa * r).exp());
        r_max = r;
    }
    if !(c_up.is_finite() && c_low > 0.0 && c_low.is_finite()) {
        return Err(Error::EnvelopeViolation(format!(
            "no finite constants on [1, {}]",
            w.r_max()
        )));
    }
    Ok(DecayEnvelope {
        c_up,
        c_low,
        kappa,
        r_max,
    })
}
