//! Shooting on the initial height for positive decaying radial solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::coefficient_identities;
use crate::ode::{Dopri5, Tolerances};
use crate::params::{Existence, ProblemParams, existence_region};
use crate::profile::{OdeCoeffs, RadialProfile, Tail};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Bound on the relative Nehari and Pohozaev defects of the result.
    pub tol: f64,
    /// Relative tolerance of the Runge–Kutta integrator.
    pub rtol: f64,
    pub max_bisections: usize,
    /// Output grid spacing as a fraction of `min(r, 1/κ)`.
    pub grid_step: f64,
    /// Length of the sampled analytic tail, in units of `1/κ`.
    pub tail_span: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            rtol: 1e-12,
            max_bisections: 200,
            grid_step: 0.01,
            tail_span: 40.0,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub nehari: f64,
    pub pohozaev: f64,
    pub ode_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub profile: RadialProfile,
    pub mu0: f64,
    pub bisection_iterations: usize,
    pub bracket_width: f64,
    pub residual_report: ResidualReport,
    /// Radius where the integrated solution hands over to the analytic tail.
    pub stitch_radius: f64,
    /// Relative slope mismatch at the stitch (value is matched exactly).
    pub tail_slope_mismatch: f64,
    /// Set where more than one positive solution may exist (`N = 3`, `q < 4`).
    pub ambiguous_branch: bool,
}

/// Ground state of `-Δu + u = u^{2*-1} + λ u^{q-1}`.
pub fn solve_ground_state(params: &ProblemParams, tol: f64) -> Result<ShootingResult> {
    solve_ground_state_with(params, &SolverOptions::with_tol(tol))
}

pub fn solve_ground_state_with(
    params: &ProblemParams,
    opts: &SolverOptions,
) -> Result<ShootingResult> {
    params.validate()?;
    if params.lambda <= 0.0 {
        return Err(Error::InvalidLambda(params.lambda));
    }
    let mut res = solve_radial(&OdeCoeffs::ground_state(params), opts)?;
    res.ambiguous_branch = existence_region(params) == Existence::ExistsForLargeLambda;
    Ok(res)
}

/// Positive solution of `-Δv + v = v^{q-1}`, the `λ → ∞` limit.
pub fn solve_limit_soliton(dim: u32, q: f64, tol: f64) -> Result<ShootingResult> {
    ProblemParams::new(dim, q, 0.0)?;
    solve_radial(&OdeCoeffs::soliton(dim, q), &SolverOptions::with_tol(tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    Over,
    Under,
}

/// Smallest positive root of `g`, the constant solution.
fn constant_solution(c: &OdeCoeffs) -> Result<f64> {
    // a - Σ b u^{p-2} is decreasing in u
    let h = |u: f64| c.a - c.terms.iter().map(|t| t.b * u.powf(t.p - 2.0)).sum::<f64>();
    let (mut lo, mut hi) = (1.0, 1.0);
    while h(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Domain("no constant solution".into()));
        }
    }
    while h(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Domain("no constant solution".into()));
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Start radius and core length scale for initial height `mu`.
///
/// The radius is rounded down to a power of two so that nearby heights share
/// the same output grid, and with it the same integration steps.
fn start_radius(c: &OdeCoeffs, mu: f64) -> (f64, f64) {
    let scale = 1.0 / (c.dg(mu).abs() + (c.g(mu) / mu).abs()).sqrt();
    let r1 = 2f64.powi((1e-3 * scale).log2().floor() as i32);
    (r1, scale)
}

/// Four-term series `μ + c₂r² + c₄r⁴ + c₆r⁶` and its derivative.
fn series_at(c: &OdeCoeffs, mu: f64, r: f64) -> [f64; 2] {
    let n = c.n();
    let dg = c.dg(mu);
    let c2 = c.g(mu) / (2.0 * n);
    let c4 = dg * c2 / (4.0 * (n + 2.0));
    let c6 = (dg * c4 + 0.5 * c.d2g(mu) * c2 * c2) / (6.0 * (n + 4.0));
    let r2 = r * r;
    [
        mu + r2 * (c2 + r2 * (c4 + r2 * c6)),
        r * (2.0 * c2 + r2 * (4.0 * c4 + 6.0 * c6 * r2)),
    ]
}

/// Relative deviation from the bubble at which integration switches to `u` itself.
const SWITCH: f64 = 1e-3;

/// `U(r) = μ (1 + (r/ρ)²)^{-(N-2)/2}`, the exact solution of `ΔU + b U^{2*-1} = 0`
/// with `U(0) = μ`, for the critical term of the equation.
///
/// Near the origin a solution is this bubble plus a small deviation `φ`.
/// Integrating `φ` instead of `u` keeps the rounding error proportional to `φ`
/// rather than to `μ`; otherwise it feeds the harmonic mode and swamps the far
/// field once `μ` is large.
#[derive(Debug, Clone, Copy)]
struct Bubble {
    mu: f64,
    rho: f64,
    s: f64,
    b: f64,
    power: f64,
    critical: usize,
}

impl Bubble {
    fn new(c: &OdeCoeffs, mu: f64) -> Option<Self> {
        let n = c.n();
        let ts = 2.0 * n / (n - 2.0);
        let critical = c
            .terms
            .iter()
            .position(|t| (t.p - ts).abs() < 1e-12 && t.b > 0.0)?;
        let b = c.terms[critical].b;
        let s = (n - 2.0) / 2.0;
        // U = β U₁ rescaled, with β = b^{-1/(2*-2)} and βKρ^{-s} = μ
        let beta = b.powf(-1.0 / (ts - 2.0));
        let k = (n * (n - 2.0)).powf(s / 2.0);
        let rho = (k * beta / mu).powf(1.0 / s);
        Some(Bubble {
            mu,
            rho,
            s,
            b,
            power: ts - 1.0,
            critical,
        })
    }

    fn eval(&self, r: f64) -> (f64, f64) {
        let x = r / self.rho;
        let w = 1.0 + x * x;
        let u = self.mu * w.powf(-self.s);
        (u, -2.0 * self.s * x / (self.rho * w) * u)
    }

    /// `g(U + φ) + b U^{2*-1}` without cancelling the two large critical terms.
    fn forcing(&self, c: &OdeCoeffs, big_u: f64, phi: f64) -> f64 {
        let u = big_u + phi;
        let ratio = (phi / big_u).max(-0.5);
        let mut f = c.a * u
            - self.b * big_u.powf(self.power) * (self.power * ratio.ln_1p()).exp_m1();
        for (i, t) in c.terms.iter().enumerate() {
            if i != self.critical {
                f -= t.b * u.powf(t.p - 1.0);
            }
        }
        f
    }

    /// Series for `φ = u - U` at small `r`, to order `r⁴`.
    fn deviation_series(&self, c: &OdeCoeffs, r: f64) -> [f64; 2] {
        let n = c.n();
        let mu = self.mu;
        let others = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
            c.terms
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != self.critical)
                .map(|(_, t)| f(t.p, t.b))
                .sum()
        };
        let d2 = (c.a * mu - others(&|p, b| b * mu.powf(p - 1.0))) / (2.0 * n);
        let c2_bubble = -self.b * mu.powf(self.power) / (2.0 * n);
        let dg_diff = c.a - others(&|p, b| b * (p - 1.0) * mu.powf(p - 2.0));
        let d4 = (dg_diff * c2_bubble + c.dg(mu) * d2) / (4.0 * (n + 2.0));
        let r2 = r * r;
        [r2 * (d2 + d4 * r2), r * (2.0 * d2 + 4.0 * d4 * r2)]
    }
}

type Rhs<'a> = Box<dyn Fn(f64, &[f64; 2]) -> [f64; 2] + 'a>;

enum Phase<'a> {
    Deviation(Dopri5<Rhs<'a>, 2>, Bubble),
    Direct(Dopri5<Rhs<'a>, 2>),
}

/// One shot from the origin, reporting `(u, u')` whichever variables it integrates.
struct Trajectory<'a> {
    c: &'a OdeCoeffs,
    tol: Tolerances,
    phase: Phase<'a>,
}

impl<'a> Trajectory<'a> {
    fn launch(c: &'a OdeCoeffs, mu: f64, r1: f64, rtol: f64) -> Self {
        let tol = Tolerances {
            rtol,
            atol: 1e-300,
        };
        let nm1 = c.n() - 1.0;
        if let Some(bubble) = Bubble::new(c, mu) {
            let y0 = bubble.deviation_series(c, r1);
            if y0[0].abs() <= SWITCH * bubble.eval(r1).0 {
                let rhs: Rhs<'a> = Box::new(move |r, y: &[f64; 2]| {
                    let big_u = bubble.eval(r).0;
                    [y[1], bubble.forcing(c, big_u, y[0]) - nm1 / r * y[1]]
                });
                let ig = Dopri5::new(rhs, r1, y0, 0.1 * r1, tol);
                return Trajectory {
                    c,
                    tol,
                    phase: Phase::Deviation(ig, bubble),
                };
            }
        }
        let ig = Self::direct(c, r1, series_at(c, mu, r1), 0.1 * r1, tol);
        Trajectory {
            c,
            tol,
            phase: Phase::Direct(ig),
        }
    }

    fn direct(c: &'a OdeCoeffs, r: f64, y: [f64; 2], h: f64, tol: Tolerances) -> Dopri5<Rhs<'a>, 2> {
        let nm1 = c.n() - 1.0;
        let rhs: Rhs<'a> = Box::new(move |r, y: &[f64; 2]| [y[1], c.g(y[0]) - nm1 / r * y[1]]);
        Dopri5::new(rhs, r, y, h, tol)
    }

    fn t(&self) -> f64 {
        match &self.phase {
            Phase::Deviation(ig, _) | Phase::Direct(ig) => ig.t(),
        }
    }

    /// `(u, u')` at the current radius.
    fn state(&self) -> [f64; 2] {
        match &self.phase {
            Phase::Deviation(ig, bubble) => {
                let (u, du) = bubble.eval(ig.t());
                let [phi, dphi] = *ig.y();
                [u + phi, du + dphi]
            }
            Phase::Direct(ig) => *ig.y(),
        }
    }

    fn step(&mut self, limit: f64) -> Result<()> {
        let ig = match &mut self.phase {
            Phase::Deviation(ig, _) | Phase::Direct(ig) => ig,
        };
        ig.step(limit).map_err(|e| {
            Error::ToleranceNotReached(format!("integrator failed ({e:?}) at r = {}", ig.t()))
        })?;
        if let Phase::Deviation(ig, bubble) = &self.phase {
            if ig.y()[0].abs() > SWITCH * bubble.eval(ig.t()).0 {
                let (t, h) = (ig.t(), ig.step_size());
                let y = self.state();
                self.phase = Phase::Direct(Self::direct(self.c, t, y, h, self.tol));
            }
        }
        Ok(())
    }

    /// Advance to `target`, stopping early when `u` crosses zero or turns up.
    fn advance(&mut self, target: f64) -> Result<Option<Shot>> {
        while self.t() < target {
            self.step(target)?;
            let [u, du] = self.state();
            if u < 0.0 {
                return Ok(Some(Shot::Over));
            }
            if du > 0.0 {
                return Ok(Some(Shot::Under));
            }
        }
        Ok(None)
    }
}

fn next_grid_point(r: f64, step: f64, far: f64) -> f64 {
    r + step * r.min(far)
}

fn horizon(c: &OdeCoeffs, scale: f64) -> f64 {
    1e4 * scale + 200.0 / c.a.sqrt()
}

fn shoot(c: &OdeCoeffs, mu: f64, opts: &SolverOptions) -> Result<Shot> {
    let kappa = c.a.sqrt();
    let (r1, scale) = start_radius(c, mu);
    let r_max = horizon(c, scale);
    let mut ig = Trajectory::launch(c, mu, r1, opts.rtol);
    let mut r = r1;
    loop {
        let next = next_grid_point(r, opts.grid_step, 1.0 / kappa);
        if next > r_max {
            let [u, du] = ig.state();
            return Ok(if du + kappa * u > 0.0 {
                Shot::Under
            } else {
                Shot::Over
            });
        }
        if let Some(shot) = ig.advance(next)? {
            return Ok(shot);
        }
        r = next;
    }
}

const SCAN_LIMIT: f64 = 1e30;
const MAX_GAP: f64 = 1e-3;
const MAX_STITCH_ERROR: f64 = 1e-4;
const MAX_SLOPE_MISMATCH: f64 = 1e-3;

/// Shooting for `u'' + (N-1)/r u' = a u - Σ b_k u^{p_k-1}`, `a > 0`.
pub fn solve_radial(c: &OdeCoeffs, opts: &SolverOptions) -> Result<ShootingResult> {
    if !(c.a > 0.0) {
        return Err(Error::Domain("shooting needs a positive mass coefficient".into()));
    }
    if c.terms.is_empty() || c.terms.iter().any(|t| !(t.b >= 0.0 && t.p > 2.0)) {
        return Err(Error::Domain("power terms must be focusing with p > 2".into()));
    }
    let mu_star = constant_solution(c)?;
    let mut lo = mu_star;
    let mut hi = mu_star * 2.0;
    loop {
        match shoot(c, hi, opts)? {
            Shot::Over => break,
            Shot::Under => {
                lo = hi;
                hi *= 2.0;
                if hi > SCAN_LIMIT * mu_star {
                    return Err(Error::NoDecayingSolution(format!(
                        "every initial height up to {hi:.3e} undershoots"
                    )));
                }
            }
        }
    }
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if iterations >= opts.max_bisections {
            return Err(Error::ToleranceNotReached(format!(
                "bisection stopped after {iterations} steps with bracket [{lo}, {hi}]"
            )));
        }
        iterations += 1;
        match shoot(c, mid, opts)? {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
        }
    }
    let bracket_width = hi - lo;
    let mu0 = 0.5 * (lo + hi);
    if bracket_width > opts.tol * mu0 {
        return Err(Error::ToleranceNotReached(format!(
            "bracket width {bracket_width:e} exceeds tol · u(0)"
        )));
    }
    let (profile, stitch_radius, tail_slope_mismatch) = build_profile(c, lo, hi, opts)?;
    let (nehari, pohozaev) = coefficient_identities(&profile);
    let ode_sup = ode_residual(&profile);
    let residual_report = ResidualReport {
        nehari,
        pohozaev,
        ode_sup,
    };
    if nehari.abs() > opts.tol || pohozaev.abs() > opts.tol {
        return Err(Error::ToleranceNotReached(format!(
            "identity residuals nehari = {nehari:e}, pohozaev = {pohozaev:e} above {}",
            opts.tol
        )));
    }
    Ok(ShootingResult {
        mu0: profile.u0(),
        profile,
        bisection_iterations: iterations,
        bracket_width,
        residual_report,
        stitch_radius,
        tail_slope_mismatch,
        ambiguous_branch: false,
    })
}

/// Integrate both bracket ends on a shared grid, keep the part where they agree
/// and continue with the analytic linear tail.
fn build_profile(
    c: &OdeCoeffs,
    lo: f64,
    hi: f64,
    opts: &SolverOptions,
) -> Result<(RadialProfile, f64, f64)> {
    let n = c.n();
    let kappa = c.a.sqrt();
    let far = 1.0 / kappa;
    let (r1, scale) = start_radius(c, lo);
    let mut ig_lo = Trajectory::launch(c, lo, r1, opts.rtol);
    let mut ig_hi = Trajectory::launch(c, hi, r1, opts.rtol);

    let mu = 0.5 * (lo + hi);
    let [ul, dl] = ig_lo.state();
    let [uh, dh] = ig_hi.state();
    let mut grid = vec![0.0, r1];
    let mut values = vec![mu, 0.5 * (ul + uh)];
    let mut derivs = vec![0.0, 0.5 * (dl + dh)];
    // Error proxy at each sample: the spread of the two bracket ends plus the
    // size of the nonlinearity the linear tail would neglect from there on.
    let mut proxy = vec![f64::INFINITY, f64::INFINITY];
    let r_max = horizon(c, scale);
    let mut r = r1;
    loop {
        let next = next_grid_point(r, opts.grid_step, far);
        if next > r_max {
            break;
        }
        if ig_lo.advance(next)?.is_some() || ig_hi.advance(next)?.is_some() {
            break;
        }
        let [ul, dl] = ig_lo.state();
        let [uh, dh] = ig_hi.state();
        let u = 0.5 * (ul + uh);
        let gap = (ul - uh).abs() / u;
        if gap > MAX_GAP {
            break;
        }
        grid.push(next);
        values.push(u);
        derivs.push(0.5 * (dl + dh));
        proxy.push(gap + c.nonlinear(u) / (c.a * u));
        r = next;
    }
    let m = proxy
        .iter()
        .enumerate()
        .fold(0, |best, (i, &e)| if e < proxy[best] { i } else { best });
    grid.truncate(m + 1);
    values.truncate(m + 1);
    derivs.truncate(m + 1);
    let r_s = grid[m];
    let u_s = values[m];
    if m < 8 || proxy[m] > MAX_STITCH_ERROR {
        return Err(Error::ToleranceNotReached(format!(
            "no clean hand-over to the linear tail (best error proxy {:e} at r = {r_s})",
            proxy[m]
        )));
    }
    let shape = Tail::shape(c.dim, kappa, r_s);
    let tail = Tail::exponential(c.dim, u_s / shape, kappa);
    let (_, du_model, _) = tail.eval(c.dim, r_s);
    let mismatch = (derivs[m] - du_model) / derivs[m].abs();
    if mismatch.abs() > MAX_SLOPE_MISMATCH {
        // The bracket closed on a classifier flip that is not a decaying
        // trajectory: both ends leave the linear decaying branch together.
        return Err(Error::NoDecayingSolution(format!(
            "bracket collapsed at u(0) = {lo:e} without a decaying trajectory \
             (slope mismatch {mismatch:.3e} at r = {r_s:.3})"
        )));
    }

    let mut second: Vec<f64> = grid
        .iter()
        .zip(values.iter().zip(&derivs))
        .map(|(&r, (&u, &du))| if r == 0.0 { c.g(u) / n } else { c.g(u) - (n - 1.0) / r * du })
        .collect();
    let tail_end = r_s + opts.tail_span * far;
    let mut r = r_s;
    loop {
        r = next_grid_point(r, opts.grid_step, far);
        if r > tail_end {
            break;
        }
        let (u, du, d2u) = tail.eval(c.dim, r);
        grid.push(r);
        values.push(u);
        derivs.push(du);
        second.push(d2u);
    }
    Ok((
        RadialProfile {
            coeffs: c.clone(),
            grid,
            values,
            derivs,
            second,
            tail,
        },
        r_s,
        mismatch,
    ))
}

/// Finite-difference weights for the first derivative at `x0` (Fornberg).
fn fd_weights(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![[0.0f64; 2]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Pointwise `|u'' + (N-1)/r u' - g(u)|` at interior grid points, with `u''`
/// from a 7-point difference of the `u'` samples.
pub fn ode_residual_samples(profile: &RadialProfile) -> Vec<f64> {
    let m = profile.len();
    if m < 7 {
        return Vec::new();
    }
    let c = &profile.coeffs;
    let n = c.n();
    (1..m - 1)
        .map(|i| {
            let start = i.saturating_sub(3).min(m - 7);
            let w = fd_weights(profile.grid[i], &profile.grid[start..start + 7]);
            let d2: f64 = w
                .iter()
                .zip(&profile.derivs[start..start + 7])
                .map(|(w, d)| w * d)
                .sum();
            let r = profile.grid[i];
            (d2 + (n - 1.0) / r * profile.derivs[i] - c.g(profile.values[i])).abs()
        })
        .collect()
}

/// Sup of [`ode_residual_samples`] relative to `sup Σ b_k u^{p_k-1}`.
pub fn ode_residual(profile: &RadialProfile) -> f64 {
    let c = &profile.coeffs;
    let worst = ode_residual_samples(profile)
        .into_iter()
        .fold(0.0f64, f64::max);
    if worst == 0.0 {
        return 0.0;
    }
    let scale = profile
        .values
        .iter()
        .fold(0.0f64, |s, &u| s.max(c.nonlinear(u).abs()));
    worst / scale
}
