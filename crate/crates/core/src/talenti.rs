//! Talenti bubbles `U_ρ(r) = ρ^{-(N-2)/2} [N(N-2)]^{(N-2)/4} (1 + (r/ρ)²)^{-(N-2)/2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::NormSet;
use crate::params::{critical_exponent, ProblemParams};
use crate::profile::{OdeCoeffs, RadialProfile, Tail};
use crate::special::{integrate_panels, sphere_area};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TalentiBubble {
    pub rho: f64,
    pub dim: u32,
}

impl TalentiBubble {
    pub fn new(dim: u32, rho: f64) -> Result<Self> {
        critical_exponent(dim)?;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Domain(format!("bubble scale must be positive, got {rho}")));
        }
        Ok(TalentiBubble { rho, dim })
    }

    pub fn unit(dim: u32) -> Self {
        TalentiBubble { rho: 1.0, dim }
    }

    fn s(&self) -> f64 {
        (self.dim as f64 - 2.0) / 2.0
    }

    /// `[N(N-2)]^{(N-2)/4}`, the height of `U₁`.
    pub fn amplitude(dim: u32) -> f64 {
        let n = dim as f64;
        (n * (n - 2.0)).powf((n - 2.0) / 4.0)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.derivatives(r).0
    }

    /// `(U, U', U'')` at radius `r`.
    pub fn derivatives(&self, r: f64) -> (f64, f64, f64) {
        let s = self.s();
        let k = Self::amplitude(self.dim) * self.rho.powf(-s);
        let x = r / self.rho;
        let w = 1.0 + x * x;
        let u = k * w.powf(-s);
        let du = -2.0 * s * k * x * w.powf(-s - 1.0) / self.rho;
        let d2u = -2.0 * s * k * (w.powf(-s - 1.0) - 2.0 * (s + 1.0) * x * x * w.powf(-s - 2.0))
            / (self.rho * self.rho);
        (u, du, d2u)
    }

    /// Norms of `U_ρ` from those of `U₁` through the exact scaling laws.
    pub fn norms(&self, q: f64) -> Result<NormSet> {
        let unit = talenti_norms(self.dim, q)?;
        let ts = critical_exponent(self.dim)?;
        Ok(NormSet {
            l2_sq: self.rho * self.rho * unit.l2_sq,
            lq: self.rho.powf(2.0 * (ts - q) / (ts - 2.0)) * unit.lq,
            ..unit
        })
    }

    /// Sample on a geometric grid out to `r_max_factor · ρ`, with the algebraic tail.
    pub fn profile(&self, r_max_factor: f64) -> RadialProfile {
        let mut grid = vec![0.0];
        let mut r = 1e-3 * self.rho;
        let end = r_max_factor * self.rho;
        while r < end {
            grid.push(r);
            r *= 1.01;
        }
        grid.push(end);
        let tail = Tail {
            c: Self::amplitude(self.dim) * self.rho.powf(self.s()),
            kappa: 0.0,
            p: self.dim as f64 - 2.0,
        };
        let bubble = *self;
        RadialProfile::from_fn(
            OdeCoeffs::critical(self.dim),
            grid,
            move |r| bubble.derivatives(r),
            tail,
        )
    }
}

pub fn talenti_eval(bubble: &TalentiBubble, r: f64) -> f64 {
    bubble.eval(r)
}

const HEAD_CUT: f64 = 32.0;

/// `∫₀^∞ r^m (1+r²)^{-e} dr`, or `+∞` when the integral diverges.
///
/// Gauss–Legendre on a geometric mesh up to `R`, then the binomial series
/// `Σ_j C(-e, j) R^{m+1-2e-2j} / (2e+2j-m-1)` for the tail.
pub fn bubble_moment(m: f64, e: f64) -> f64 {
    if 2.0 * e - m - 1.0 <= 0.0 {
        return f64::INFINITY;
    }
    let f = |r: f64| r.powf(m) * (1.0 + r * r).powf(-e);
    let mut head = integrate_panels(f, 0.0, 1.0, 8);
    let mut a = 1.0;
    while a < HEAD_CUT {
        let b = (a * 1.2).min(HEAD_CUT);
        head += integrate_panels(f, a, b, 1);
        a = b;
    }
    let big_r = HEAD_CUT;
    let mut tail = 0.0;
    let mut binom = 1.0;
    for j in 0..200 {
        let jf = j as f64;
        if j > 0 {
            binom *= -(e + jf - 1.0) / jf;
        }
        let expo = m + 1.0 - 2.0 * e - 2.0 * jf;
        let term = binom * big_r.powf(expo) / (-expo);
        tail += term;
        if term.abs() < 1e-18 * (head + tail).abs() {
            break;
        }
    }
    head + tail
}

/// Norms of `U₁`. `l2_sq` (and `lq` when divergent) is `+∞`.
pub fn talenti_norms(dim: u32, q: f64) -> Result<NormSet> {
    let ts = critical_exponent(dim)?;
    if !(q > 2.0 && q <= ts) {
        return Err(Error::ExponentRange {
            q,
            lower: 2.0,
            upper: ts,
        });
    }
    let n = dim as f64;
    let s = (n - 2.0) / 2.0;
    let k = TalentiBubble::amplitude(dim);
    let omega = sphere_area(dim);
    Ok(NormSet {
        grad_sq: omega * 4.0 * s * s * k * k * bubble_moment(n + 1.0, n),
        l2_sq: omega * k * k * bubble_moment(n - 1.0, 2.0 * s),
        lq: omega * k.powf(q) * bubble_moment(n - 1.0, q * s),
        lcrit: omega * k.powf(ts) * bubble_moment(n - 1.0, n),
    })
}

/// `‖U₁‖₂²`, which is finite only for `N ≥ 5`.
pub fn talenti_l2_sq(dim: u32) -> Result<f64> {
    critical_exponent(dim)?;
    if dim <= 4 {
        return Err(Error::DivergentNorm(format!(
            "U_1 is not in L^2 for N = {dim}"
        )));
    }
    let n = dim as f64;
    let k = TalentiBubble::amplitude(dim);
    Ok(sphere_area(dim) * k * k * bubble_moment(n - 1.0, n - 2.0))
}

/// The least energy `m₀ = ‖∇U₁‖₂² / N` of the critical problem.
pub fn sobolev_m0(dim: u32) -> Result<f64> {
    let ts = critical_exponent(dim)?;
    Ok(talenti_norms(dim, ts)?.grad_sq / dim as f64)
}

/// Optimal bubble scale `ρ₀` maximizing `(1/q)‖U_ρ‖_q^q - (1/2)‖U_ρ‖₂²`.
pub fn rho0(dim: u32, q: f64) -> Result<f64> {
    let params = ProblemParams::new(dim, q, 1.0)?;
    let l2 = talenti_l2_sq(dim)?;
    let lq = talenti_norms(dim, q)?.lq;
    let ts = params.two_star();
    let base = 2.0 * (ts - q) * lq / (q * (ts - 2.0) * l2);
    Ok(base.powf((ts - 2.0) / (2.0 * (q - 2.0))))
}
