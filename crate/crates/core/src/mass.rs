//! The mass-constrained problem: `‖v‖₂ = ρ`, `-Δv + ωv = v^{2*-1} + v^{q-1}`.
//!
//! A ground state `u_λ` maps onto a constrained critical point through
//! `v(x) = λ^{-1/(2*-q)} u(λ^{-2/((N-2)(2*-q))} x)`, with `ω = λ^{-4/((N-2)(2*-q))}`.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{dilate_norms, fit_power_law, CheckReport, LogPower, Observation, Sweep};
use crate::error::{Error, Result};
use crate::functionals::NormSet;
use crate::params::{critical_exponent, ProblemParams, ENDPOINT_GUARD};
use crate::solver::ShootingResult;

/// Principal branch `W₀(x)` of the inverse of `y ↦ y e^y`.
pub fn lambert_w0(x: f64, tol: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("W0 needs a finite x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let ok = |y: f64| (y * y.exp() - x).abs() <= tol * x.max(1.0);
    let mut y = if x < 0.5 {
        x * (1.0 - x + 1.5 * x * x)
    } else if x >= 3.0 {
        let l = x.ln();
        l - l.ln()
    } else {
        x.ln_1p() * 0.75
    };
    for _ in 0..50 {
        let e = y.exp();
        let f = y * e - x;
        let d1 = e * (y + 1.0);
        let step = f / (d1 - (y + 2.0) * f / (2.0 * y + 2.0));
        y -= step;
        if step.abs() <= 1e-16 * y.abs().max(1e-300) {
            break;
        }
    }
    if y >= 0.0 && ok(y) {
        return Ok(y);
    }
    // bisection on [0, ln(1+x)], where y e^y - x changes sign
    let (mut lo, mut hi) = (0.0, x.ln_1p().max(x.min(1.0)));
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid * mid.exp() < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = 0.5 * (lo + hi);
    if ok(y) {
        Ok(y)
    } else {
        Err(Error::ToleranceNotReached(format!(
            "W0({x}) not resolved to {tol}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassPoint {
    pub rho: f64,
    pub omega: f64,
    pub m_rho: f64,
    pub lambda: f64,
}

impl MassPoint {
    /// `λ = ω^{-(N-2)(2*-q)/4}`.
    pub fn lambda_from_omega(omega: f64, dim: u32, q: f64) -> f64 {
        let n = dim as f64;
        let ts = 2.0 * n / (n - 2.0);
        omega.powf(-(n - 2.0) * (ts - q) / 4.0)
    }
}

fn check_exponent(dim: u32, q: f64) -> Result<f64> {
    let ts = critical_exponent(dim)?;
    if !(q > 2.0 && q < ts) {
        return Err(Error::ExponentRange {
            q,
            lower: 2.0,
            upper: ts,
        });
    }
    if ts - q < ENDPOINT_GUARD {
        return Err(Error::Domain(format!(
            "the Nehari-Pohozaev system is singular at q = 2* (q = {q})"
        )));
    }
    Ok(ts)
}

/// Solve the energy, Nehari and Pohozaev relations for `(ω, m_ρ, C)` given `A = ‖∇v‖₂²`,
/// `B = ‖v‖_q^q` and the mass `ρ`.
pub fn solve_mass_identities(a: f64, b: f64, rho: f64, dim: u32, q: f64) -> Result<(f64, f64, f64)> {
    let ts = check_exponent(dim, q)?;
    if !(a > 0.0 && b > 0.0 && rho > 0.0) {
        return Err(Error::Domain(format!(
            "need A, B, rho > 0, got ({a}, {b}, {rho})"
        )));
    }
    let n = dim as f64;
    let omega = (n - 2.0) * (ts - q) / (2.0 * q * rho * rho) * b;
    let m_rho = a / n - 0.5 * n * (1.0 / q - 1.0 / ts) * b;
    let c = a - n * (0.5 - 1.0 / q) * b;
    Ok((omega, m_rho, c))
}

/// Relative residuals of the three relations, each scaled by its largest term.
pub fn mass_system_residuals(
    (a, b, c): (f64, f64, f64),
    omega: f64,
    m_rho: f64,
    rho: f64,
    dim: u32,
    q: f64,
) -> [f64; 3] {
    let n = dim as f64;
    let ts = 2.0 * n / (n - 2.0);
    let w = omega * rho * rho;
    let rel = |terms: &[f64]| {
        let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        terms.iter().sum::<f64>().abs() / scale
    };
    [
        rel(&[0.5 * a, -b / q, -c / ts, -m_rho]),
        rel(&[a, -b, -c, w]),
        rel(&[0.5 * (n - 2.0) * a, -n * b / q, -n * c / ts, 0.5 * n * w]),
    ]
}

/// Dilation factors `(α, β)` taking `u_λ` to the constrained critical point.
fn mass_factors(params: &ProblemParams) -> (f64, f64) {
    let n = params.n();
    let gap = params.two_star() - params.q();
    let l = params.lambda;
    (l.powf(-1.0 / gap), l.powf(-2.0 / ((n - 2.0) * gap)))
}

/// Norms of the constrained critical point built from `u_λ`.
pub fn rescaled_mass_norms(params: &ProblemParams, norms_u: &NormSet) -> NormSet {
    let (alpha, beta) = mass_factors(params);
    dilate_norms(norms_u, params.dim, params.q(), alpha, beta)
}

/// The exact map `λ ↦ (ρ, ω, m_ρ)`.
///
/// `ρ²ω = (N-2)(2*-q)/(2q) · B` and `B = λ‖u_λ‖_q^q` give
/// `ρ² = (N-2)(2*-q)/(2q) · λ^{1+4/((N-2)(2*-q))} ‖u_λ‖_q^q`.
pub fn rho_of_lambda(params: &ProblemParams, solved: &ShootingResult) -> Result<MassPoint> {
    let norms = crate::functionals::radial_norms(&solved.profile, params.q());
    mass_point_from_norms(params, &norms)
}

pub fn mass_point_from_norms(params: &ProblemParams, norms_u: &NormSet) -> Result<MassPoint> {
    let dim = params.dim;
    let q = params.q();
    let ts = check_exponent(dim, q)?;
    let lambda = params.lambda;
    if !(lambda > 0.0) {
        return Err(Error::InvalidLambda(lambda));
    }
    let n = params.n();
    let c = (n - 2.0) * (ts - q) / (2.0 * q);
    let rho = (c * lambda.powf(1.0 + 4.0 / ((n - 2.0) * (ts - q))) * norms_u.lq).sqrt();
    let omega = lambda.powf(-4.0 / ((n - 2.0) * (ts - q)));
    let v = rescaled_mass_norms(params, norms_u);
    let (_, m_rho, _) = solve_mass_identities(v.grad_sq, v.lq, rho, dim, q)?;
    Ok(MassPoint {
        rho,
        omega,
        m_rho,
        lambda,
    })
}

/// Asymptotic model of `λ_ρ` as `ρ → 0`, up to the supplied prefactor.
pub fn lambda_of_rho_model(rho: f64, dim: u32, q: f64, prefactor: f64) -> Result<f64> {
    let ts = check_exponent(dim, q)?;
    if !(rho > 0.0 && prefactor > 0.0) {
        return Err(Error::Domain(format!(
            "need rho > 0 and prefactor > 0, got ({rho}, {prefactor})"
        )));
    }
    let n = dim as f64;
    match dim {
        3 => {
            if q <= 4.0 {
                return Err(Error::Domain(format!("the N = 3 model needs q > 4, got {q}")));
            }
            Ok(prefactor * rho.powf((q - 4.0) * (6.0 - q) / (q - 2.0)))
        }
        4 => {
            if q >= 4.0 {
                return Err(Error::Domain(format!("the N = 4 model needs q < 4, got {q}")));
            }
            let k = 4.0 - q;
            let arg = 4.0 / (k * k) * rho.powf(-2.0 * (q - 2.0) / k);
            let w = lambert_w0(arg, 1e-13)?;
            Ok(prefactor * rho.powf((q - 2.0) * k / 2.0) * w.powf(k * k / 4.0))
        }
        _ => Ok(prefactor * rho.powf((n - 2.0).powi(2) * (q - 2.0) * (ts - q) / 8.0)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassRow {
    pub point: MassPoint,
    pub lambda_model: f64,
}

/// Exact map along a sweep next to the model; the model prefactor is calibrated on
/// the first certified point unless given.
pub fn mass_table(sweep: &Sweep, prefactor: Option<f64>) -> Result<(Vec<MassRow>, f64)> {
    let dim = sweep.dim;
    let q = sweep.q.value();
    let points: Vec<MassPoint> = sweep
        .ok_records()
        .map(|r| mass_point_from_norms(&sweep.params(r.lambda), &r.norms_u))
        .collect::<Result<_>>()?;
    let first = points
        .first()
        .ok_or_else(|| Error::Domain("no certified sweep points".into()))?;
    let prefactor = match prefactor {
        Some(p) => p,
        None => first.lambda / lambda_of_rho_model(first.rho, dim, q, 1.0)?,
    };
    let rows = points
        .into_iter()
        .map(|point| {
            Ok(MassRow {
                lambda_model: lambda_of_rho_model(point.rho, dim, q, prefactor)?,
                point,
            })
        })
        .collect::<Result<_>>()?;
    Ok((rows, prefactor))
}

/// Predicted `ρ ∼ λ^a (ln 1/λ)^β` by branch.
pub fn predicted_rho_rate(dim: u32, q: f64) -> Result<(f64, f64)> {
    let ts = check_exponent(dim, q)?;
    let n = dim as f64;
    match dim {
        3 if q > 4.0 => Ok(((q - 2.0) / ((q - 4.0) * (6.0 - q)), 0.0)),
        4 if q < 4.0 => Ok((
            2.0 / ((q - 2.0) * (4.0 - q)),
            -(4.0 - q) / (2.0 * (q - 2.0)),
        )),
        3 | 4 => Err(Error::Domain(format!("no small-mass model for N = {dim}, q = {q}"))),
        _ => Ok((8.0 / ((n - 2.0).powi(2) * (q - 2.0) * (ts - q)), 0.0)),
    }
}

/// Monotonicity and exponent of the exact `ρ(λ)` map, and consistency with the model.
pub fn check_mass_map(sweep: &Sweep) -> Result<CheckReport> {
    let dim = sweep.dim;
    let q = sweep.q.value();
    let (a, beta) = predicted_rho_rate(dim, q)?;
    let (rows, _) = mass_table(sweep, None)?;
    let mut pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.point.lambda, r.point.rho)).collect();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let monotone = pts.windows(2).all(|w| w[1].1 > w[0].1);
    let mut obs = vec![Observation {
        pass: monotone,
        ..Observation::within("rho_monotone", monotone as u8 as f64, 1.0, 0.0)
    }];
    let small: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 < 1.0).collect();
    obs.push(match fit_power_law(&small, LogPower::Fixed(beta)) {
        Ok(fit) => Observation {
            fit: Some(fit),
            ..Observation::within("rho_exponent", fit.exponent, a, 0.05)
        },
        Err(e) => Observation {
            pass: false,
            note: Some(e.to_string()),
            ..Observation::within("rho_exponent", f64::NAN, a, 0.05)
        },
    });
    let ratios: Vec<f64> = rows.iter().map(|r| r.lambda_model / r.point.lambda).collect();
    let spread = ratios.iter().fold(0.0f64, |m, r| m.max(r.max(1.0 / r)));
    obs.push(Observation::at_most("model_ratio_spread", spread, 2.0));
    Ok(CheckReport::new("mass", dim, q, obs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `y e^y = x` by plain bisection, as an independent oracle.
    fn w_bisect(x: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64 + x.ln_1p());
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if mid * mid.exp() < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn lambert_fixtures() {
        assert_eq!(lambert_w0(0.0, 1e-13).unwrap(), 0.0);
        assert!((lambert_w0(std::f64::consts::E, 1e-13).unwrap() - 1.0).abs() < 1e-14);
        let w1 = lambert_w0(1.0, 1e-13).unwrap();
        assert!((w1 - w_bisect(1.0)).abs() < 1e-14);
        assert!((w1 - 0.567_143_290_409_783_8).abs() < 1e-15);
        assert!(matches!(lambert_w0(-0.1, 1e-13), Err(Error::Domain(_))));
    }

    #[test]
    fn lambert_is_increasing_and_concave() {
        let xs: Vec<f64> = (1..400).map(|i| 0.05 * i as f64).collect();
        let w: Vec<f64> = xs.iter().map(|&x| lambert_w0(x, 1e-13).unwrap()).collect();
        assert!(w.windows(2).all(|p| p[1] > p[0]));
        assert!(w.windows(3).all(|p| p[2] - 2.0 * p[1] + p[0] < 0.0));
    }

    proptest! {
        #[test]
        fn lambert_inverts(y in 0.0f64..100.0) {
            let x = y * y.exp();
            let w = lambert_w0(x, 1e-13).unwrap();
            prop_assert!((w - y).abs() <= 1e-10 * y.max(1.0));
        }

        #[test]
        fn mass_system_back_substitution(
            a in 1e-3f64..1e3, b in 1e-3f64..1e3, rho in 1e-3f64..1e3,
            dim in 3u32..8, t in 0.01f64..0.99,
        ) {
            let ts = critical_exponent(dim).unwrap();
            let q = 2.0 + t * (ts - 2.0);
            let (omega, m, c) = solve_mass_identities(a, b, rho, dim, q).unwrap();
            prop_assert!(omega > 0.0);
            let r = mass_system_residuals((a, b, c), omega, m, rho, dim, q);
            prop_assert!(r.iter().all(|&x| x <= 1e-12), "{r:?}");
        }
    }

    #[test]
    fn mass_system_guards() {
        assert!(solve_mass_identities(1.0, -1.0, 1.0, 5, 3.0).is_err());
        assert!(solve_mass_identities(1.0, 1.0, 1.0, 5, 10.0 / 3.0 - 1e-12).is_err());
        assert!(solve_mass_identities(1.0, 1.0, 1.0, 5, 10.0 / 3.0).is_err());
    }

    #[test]
    fn omega_lambda_round_trip() {
        for &(dim, q, lambda) in &[(5u32, 3.0, 1e-3), (3, 5.0, 0.2), (4, 3.5, 7.0)] {
            let norms = NormSet {
                grad_sq: 3.0,
                l2_sq: 1.0,
                lq: 0.7,
                lcrit: 2.0,
            };
            let p = ProblemParams::new(dim, q, lambda).unwrap();
            let mp = mass_point_from_norms(&p, &norms).unwrap();
            let back = MassPoint::lambda_from_omega(mp.omega, dim, q);
            assert!((back - lambda).abs() <= 1e-12 * lambda);
        }
    }

    #[test]
    fn models_by_branch() {
        // N ≥ 5 is the exact inverse of ρ ∼ λ^{8/((N-2)²(q-2)(2*-q))}
        let (a, _) = predicted_rho_rate(5, 3.0).unwrap();
        let rho = 1e-3f64;
        let lam = lambda_of_rho_model(rho, 5, 3.0, 1.0).unwrap();
        assert!((lam.powf(a) - rho).abs() < 1e-12 * rho);
        assert!(lambda_of_rho_model(0.1, 4, 3.0, 1.0).unwrap() > 0.0);
        assert!(lambda_of_rho_model(0.1, 3, 5.0, 1.0).unwrap() > 0.0);
        assert!(matches!(lambda_of_rho_model(0.1, 3, 3.5, 1.0), Err(Error::Domain(_))));
        assert!(lambda_of_rho_model(0.0, 5, 3.0, 1.0).is_err());
    }
}
