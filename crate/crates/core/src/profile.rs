//! Radially symmetric profiles sampled on a graded grid, with an analytic tail.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::params::ProblemParams;
use crate::special::{bessel_k_scaled, gauss_legendre, integrate_panels};

/// One power nonlinearity `b |u|^{p-2} u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub p: f64,
    pub b: f64,
}

/// Coefficients of `u'' + (N-1)/r u' = a u - Σ b_k |u|^{p_k-2} u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeCoeffs {
    pub dim: u32,
    pub a: f64,
    pub terms: Vec<PowerTerm>,
}

impl OdeCoeffs {
    /// `-Δu + u = u^{2*-1} + λ u^{q-1}`.
    pub fn ground_state(params: &ProblemParams) -> Self {
        OdeCoeffs {
            dim: params.dim,
            a: 1.0,
            terms: vec![
                PowerTerm {
                    p: params.two_star(),
                    b: 1.0,
                },
                PowerTerm {
                    p: params.q(),
                    b: params.lambda,
                },
            ],
        }
    }

    /// The `v`-form: `-Δv + λ^σ v = v^{2*-1} + λ^σ v^{q-1}`.
    pub fn rescaled(params: &ProblemParams) -> Self {
        let ls = params.lambda_sigma();
        OdeCoeffs {
            dim: params.dim,
            a: ls,
            terms: vec![
                PowerTerm {
                    p: params.two_star(),
                    b: 1.0,
                },
                PowerTerm {
                    p: params.q(),
                    b: ls,
                },
            ],
        }
    }

    /// `-Δv + v = v^{q-1}`.
    pub fn soliton(dim: u32, q: f64) -> Self {
        OdeCoeffs {
            dim,
            a: 1.0,
            terms: vec![PowerTerm { p: q, b: 1.0 }],
        }
    }

    /// `-ΔU = U^{2*-1}`.
    pub fn critical(dim: u32) -> Self {
        let n = dim as f64;
        OdeCoeffs {
            dim,
            a: 0.0,
            terms: vec![PowerTerm {
                p: 2.0 * n / (n - 2.0),
                b: 1.0,
            }],
        }
    }

    pub fn n(&self) -> f64 {
        self.dim as f64
    }

    /// `Σ b_k |u|^{p_k-2} u`
    pub fn nonlinear(&self, u: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.b * u.abs().powf(t.p - 2.0) * u)
            .sum()
    }

    /// Right-hand side `g(u) = a u - Σ b_k |u|^{p_k-2} u`.
    pub fn g(&self, u: f64) -> f64 {
        self.a * u - self.nonlinear(u)
    }

    pub fn dg(&self, u: f64) -> f64 {
        self.a
            - self
                .terms
                .iter()
                .map(|t| t.b * (t.p - 1.0) * u.abs().powf(t.p - 2.0))
                .sum::<f64>()
    }

    /// `g''(u)` for `u > 0`.
    pub fn d2g(&self, u: f64) -> f64 {
        -self
            .terms
            .iter()
            .map(|t| t.b * (t.p - 1.0) * (t.p - 2.0) * u.powf(t.p - 3.0))
            .sum::<f64>()
    }

    /// Coefficients solved by `α u(β r)` when `u` solves `self`.
    pub fn dilate(&self, alpha: f64, beta: f64) -> Self {
        OdeCoeffs {
            dim: self.dim,
            a: self.a * beta * beta,
            terms: self
                .terms
                .iter()
                .map(|t| PowerTerm {
                    p: t.p,
                    b: t.b * beta * beta * alpha.powf(2.0 - t.p),
                })
                .collect(),
        }
    }
}

/// Far-field model beyond the last grid point.
///
/// With `kappa > 0` this is the decaying solution of the linearized equation,
/// `c √(2κ/π) r^{-ν} K_ν(κr)` with `ν = (N-2)/2`, which behaves like
/// `c r^{-p} e^{-κr}` with `p = (N-1)/2`. With `kappa = 0` it is `c r^{-p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub c: f64,
    pub kappa: f64,
    pub p: f64,
}

impl Tail {
    pub fn exponential(dim: u32, c: f64, kappa: f64) -> Self {
        Tail {
            c,
            kappa,
            p: (dim as f64 - 1.0) / 2.0,
        }
    }

    /// Value, derivative and second derivative at `r > 0`.
    pub fn eval(&self, dim: u32, r: f64) -> (f64, f64, f64) {
        if self.c == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        if self.kappa > 0.0 {
            let nu = (dim as f64 - 2.0) / 2.0;
            let z = self.kappa * r;
            let pre = self.c * (2.0 * self.kappa / PI).sqrt() * r.powf(-nu) * (-z).exp();
            let u = pre * bessel_k_scaled(nu, z);
            let du = -pre * self.kappa * bessel_k_scaled(nu + 1.0, z);
            let d2u = self.kappa * self.kappa * u - (dim as f64 - 1.0) / r * du;
            (u, du, d2u)
        } else {
            let u = self.c * r.powf(-self.p);
            (u, -self.p * u / r, self.p * (self.p + 1.0) * u / (r * r))
        }
    }

    /// `c √(2κ/π) r^{-ν} K_ν(κr)` divided by `c`, used to fit `c` to a value.
    pub fn shape(dim: u32, kappa: f64, r: f64) -> f64 {
        Tail {
            c: 1.0,
            kappa,
            p: (dim as f64 - 1.0) / 2.0,
        }
        .eval(dim, r)
        .0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub coeffs: OdeCoeffs,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    /// `u''` at the grid points, used by the quintic Hermite quadrature.
    pub second: Vec<f64>,
    pub tail: Tail,
}

/// Quintic Hermite basis and its derivative at the 6 Gauss–Legendre nodes of `[0, 1]`.
struct HermiteTable {
    weights: [f64; 6],
    nodes: [f64; 6],
    basis: [[f64; 6]; 6],
    dbasis: [[f64; 6]; 6],
}

fn hermite_basis(t: f64) -> ([f64; 6], [f64; 6]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 0.5 * (t3 - 2.0 * t4 + t5);
    let d0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let d1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let d2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let d4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let d5 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    (
        [h0, h1, h2, 1.0 - h0, h4, h5],
        [d0, d1, d2, -d0, d4, d5],
    )
}

fn hermite_table() -> &'static HermiteTable {
    static TABLE: OnceLock<HermiteTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let (x, w) = gauss_legendre(6);
        let mut table = HermiteTable {
            weights: [0.0; 6],
            nodes: [0.0; 6],
            basis: [[0.0; 6]; 6],
            dbasis: [[0.0; 6]; 6],
        };
        for j in 0..6 {
            let t = 0.5 * (x[j] + 1.0);
            table.nodes[j] = t;
            table.weights[j] = 0.5 * w[j];
            let (b, d) = hermite_basis(t);
            table.basis[j] = b;
            table.dbasis[j] = d;
        }
        table
    })
}

impl RadialProfile {
    pub fn dim(&self) -> u32 {
        self.coeffs.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.grid.last().expect("non-empty profile")
    }

    pub fn u0(&self) -> f64 {
        self.values[0]
    }

    /// Sample an explicit function (with its first two derivatives) on `grid`.
    pub fn from_fn(
        coeffs: OdeCoeffs,
        grid: Vec<f64>,
        f: impl Fn(f64) -> (f64, f64, f64),
        tail: Tail,
    ) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        let mut derivs = Vec::with_capacity(grid.len());
        let mut second = Vec::with_capacity(grid.len());
        for &r in &grid {
            let (u, du, d2u) = f(r);
            values.push(u);
            derivs.push(du);
            second.push(d2u);
        }
        RadialProfile {
            coeffs,
            grid,
            values,
            derivs,
            second,
            tail,
        }
    }

    /// `u(r)` by quintic Hermite interpolation, or the tail model past the grid.
    pub fn eval(&self, r: f64) -> f64 {
        self.eval_with_derivative(r).0
    }

    pub fn eval_with_derivative(&self, r: f64) -> (f64, f64) {
        let r_m = self.r_max();
        if r >= r_m {
            if r == r_m {
                let m = self.len() - 1;
                return (self.values[m], self.derivs[m]);
            }
            let (u, du, _) = self.tail.eval(self.dim(), r);
            return (u, du);
        }
        let i = match self.grid.partition_point(|&x| x <= r) {
            0 => 0,
            k => k - 1,
        };
        let h = self.grid[i + 1] - self.grid[i];
        let t = (r - self.grid[i]) / h;
        let (b, d) = hermite_basis(t);
        let c = self.hermite_coeffs(i, h);
        let u: f64 = b.iter().zip(&c).map(|(b, c)| b * c).sum();
        let du: f64 = d.iter().zip(&c).map(|(d, c)| d * c).sum::<f64>() / h;
        (u, du)
    }

    fn hermite_coeffs(&self, i: usize, h: f64) -> [f64; 6] {
        [
            self.values[i],
            h * self.derivs[i],
            h * h * self.second[i],
            self.values[i + 1],
            h * self.derivs[i + 1],
            h * h * self.second[i + 1],
        ]
    }

    /// `∫₀^{r_M} f(r, u, u') dr` on the sampled part of the profile.
    pub fn integrate_head(&self, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let table = hermite_table();
        let mut total = 0.0;
        for i in 0..self.len() - 1 {
            let r0 = self.grid[i];
            let h = self.grid[i + 1] - r0;
            let c = self.hermite_coeffs(i, h);
            let mut s = 0.0;
            for j in 0..6 {
                let u: f64 = table.basis[j].iter().zip(&c).map(|(b, c)| b * c).sum();
                let du: f64 = table.dbasis[j].iter().zip(&c).map(|(d, c)| d * c).sum::<f64>() / h;
                s += table.weights[j] * f(r0 + table.nodes[j] * h, u, du);
            }
            total += s * h;
        }
        total
    }

    /// `∫₀^∞ |u|^p r^{N-1} dr`, possibly infinite for algebraic tails.
    pub fn power_moment(&self, p: f64) -> f64 {
        let n = self.coeffs.n();
        let head = self.integrate_head(|r, u, _| u.abs().powf(p) * r.powf(n - 1.0));
        head + self.tail_moment(p)
    }

    /// `∫₀^∞ |u'|² r^{N-1} dr`.
    pub fn gradient_moment(&self) -> f64 {
        let n = self.coeffs.n();
        let head = self.integrate_head(|r, _, du| du * du * r.powf(n - 1.0));
        let r_m = self.r_max();
        let tail = if self.tail.c == 0.0 {
            0.0
        } else if self.tail.kappa > 0.0 {
            let len = 60.0 / self.tail.kappa;
            integrate_panels(
                |r| {
                    let (_, du, _) = self.tail.eval(self.dim(), r);
                    du * du * r.powf(n - 1.0)
                },
                r_m,
                r_m + len,
                60,
            )
        } else {
            let e = 2.0 * self.tail.p + 2.0 - n;
            let cp = self.tail.c * self.tail.p;
            if e > 0.0 {
                cp * cp * r_m.powf(-e) / e
            } else {
                f64::INFINITY
            }
        };
        head + tail
    }

    fn tail_moment(&self, p: f64) -> f64 {
        let n = self.coeffs.n();
        let r_m = self.r_max();
        if self.tail.c == 0.0 {
            return 0.0;
        }
        if self.tail.kappa > 0.0 {
            let len = 60.0 / self.tail.kappa;
            integrate_panels(
                |r| self.tail.eval(self.dim(), r).0.abs().powf(p) * r.powf(n - 1.0),
                r_m,
                r_m + len,
                60,
            )
        } else {
            let e = p * self.tail.p - n;
            if e > 0.0 {
                self.tail.c.abs().powf(p) * r_m.powf(-e) / e
            } else {
                f64::INFINITY
            }
        }
    }

    /// The profile `α u(β r)`, realized by remapping the grid.
    pub fn dilate(&self, alpha: f64, beta: f64) -> RadialProfile {
        RadialProfile {
            coeffs: self.coeffs.dilate(alpha, beta),
            grid: self.grid.iter().map(|r| r / beta).collect(),
            values: self.values.iter().map(|u| alpha * u).collect(),
            derivs: self.derivs.iter().map(|d| alpha * beta * d).collect(),
            second: self.second.iter().map(|d| alpha * beta * beta * d).collect(),
            tail: Tail {
                c: alpha * self.tail.c * beta.powf(-self.tail.p),
                kappa: self.tail.kappa * beta,
                p: self.tail.p,
            },
        }
    }

    /// Multiply by a constant `t`; the ODE coefficients are left as they are.
    pub fn scale(&self, t: f64) -> RadialProfile {
        RadialProfile {
            coeffs: self.coeffs.clone(),
            grid: self.grid.clone(),
            values: self.values.iter().map(|u| t * u).collect(),
            derivs: self.derivs.iter().map(|d| t * d).collect(),
            second: self.second.iter().map(|d| t * d).collect(),
            tail: Tail {
                c: t * self.tail.c,
                ..self.tail
            },
        }
    }

    /// Cut the profile to zero beyond the grid point at or after `r_cut`.
    pub fn truncate(&self, r_cut: f64) -> RadialProfile {
        let m = self.grid.partition_point(|&r| r < r_cut).max(1).min(self.len() - 1);
        RadialProfile {
            coeffs: self.coeffs.clone(),
            grid: self.grid[..=m].to_vec(),
            values: self.values[..=m].to_vec(),
            derivs: self.derivs[..=m].to_vec(),
            second: self.second[..=m].to_vec(),
            tail: Tail { c: 0.0, ..self.tail },
        }
    }

    /// Positive everywhere on the grid and non-increasing.
    pub fn is_positive_decreasing(&self) -> bool {
        self.values.iter().all(|&u| u > 0.0)
            && self.values.windows(2).all(|w| w[1] <= w[0])
            && self.derivs[0] == 0.0
    }
}
