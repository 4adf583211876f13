//! Special functions used by the radial quadratures.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// `Γ(k/2)` for a positive integer `k`, from `Γ(1/2) = √π`, `Γ(1) = 1` and
/// the recurrence `Γ(x+1) = xΓ(x)`.
pub fn gamma_half(k: u32) -> f64 {
    assert!(k > 0, "Γ(0) is a pole");
    let (mut x, mut g) = if k.is_multiple_of(2) { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    let target = k as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface area `ω_{N-1} = 2π^{N/2}/Γ(N/2)` of the unit sphere in `ℝ^N`.
pub fn sphere_area(dim: u32) -> f64 {
    2.0 * PI.powf(dim as f64 / 2.0) / gamma_half(dim)
}

/// Best Sobolev constant `S = πN(N-2)(Γ(N/2)/Γ(N))^{2/N}`.
pub fn sobolev_constant(dim: u32) -> f64 {
    let n = dim as f64;
    PI * n * (n - 2.0) * (gamma_half(dim) / gamma_half(2 * dim)).powf(2.0 / n)
}

/// Exponentially scaled modified Bessel function `e^z K_ν(z)` for `z > 0`.
///
/// Trapezoidal rule on `∫₀^∞ exp(-z(cosh t - 1)) cosh(νt) dt`; the integrand is
/// analytic in the strip `|Im t| < π/2`, so the rule converges geometrically.
pub fn bessel_k_scaled(nu: f64, z: f64) -> f64 {
    assert!(z > 0.0, "K_ν needs z > 0");
    let h = 0.25f64.min(0.5 / z.sqrt());
    let cm1 = |t: f64| 2.0 * (0.5 * t).sinh().powi(2);
    let f = |t: f64| (-z * cm1(t)).exp() * (nu * t).cosh();
    let mut sum = 0.5 * f(0.0);
    let mut k = 1u32;
    loop {
        let t = k as f64 * h;
        let term = f(t);
        sum += term;
        if z * cm1(t) - nu.abs() * t > 45.0 && term < 1e-18 * sum {
            break;
        }
        k += 1;
    }
    sum * h
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached 8-point rule mapped to `[0, 1]`.
pub(crate) fn unit_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre(8);
        (
            x.iter().map(|&t| 0.5 * (t + 1.0)).collect(),
            w.iter().map(|&t| 0.5 * t).collect(),
        )
    })
}

/// Integrate `f` over `[a, b]` with the cached rule on `panels` equal panels.
pub(crate) fn integrate_panels(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = unit_rule();
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let left = a + p as f64 * h;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            s += wi * f(left + xi * h);
        }
        sum += s * h;
    }
    sum
}
