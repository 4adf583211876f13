//! Dormand–Prince 5(4) with FSAL and a PI step-size controller.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-12,
            atol: 1e-300,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepError {
    /// The controller drove the step below the representable spacing of `t`.
    StepUnderflow,
    NonFinite,
}

pub struct Dopri5<F, const D: usize>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    f: F,
    tol: Tolerances,
    t: f64,
    y: [f64; D],
    k1: [f64; D],
    h: f64,
    err_old: f64,
    pub evaluations: usize,
}

impl<F, const D: usize> Dopri5<F, D>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    pub fn new(f: F, t0: f64, y0: [f64; D], h0: f64, tol: Tolerances) -> Self {
        let k1 = f(t0, &y0);
        Dopri5 {
            f,
            tol,
            t: t0,
            y: y0,
            k1,
            h: h0,
            err_old: 1e-4,
            evaluations: 1,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; D] {
        &self.y
    }

    /// Step size the controller will try next.
    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// Current derivative `f(t, y)`, available for free thanks to FSAL.
    pub fn dy(&self) -> &[f64; D] {
        &self.k1
    }

    /// Take one accepted step, never passing `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<(), StepError> {
        loop {
            let mut h = self.h;
            let last = self.t + h >= t_limit;
            if last {
                h = t_limit - self.t;
            }
            if h <= self.t.abs() * 4.0 * f64::EPSILON || h <= 0.0 {
                return Err(StepError::StepUnderflow);
            }
            let (y_new, k7, err) = self.attempt(h);
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                self.h = 0.5 * h;
                if self.h < self.t.abs() * 4.0 * f64::EPSILON {
                    return Err(StepError::NonFinite);
                }
                continue;
            }
            if err <= 1.0 {
                let fac = 0.9 * err.max(1e-10).powf(-0.17) * self.err_old.powf(0.04);
                self.err_old = err.max(1e-4);
                self.t = if last { t_limit } else { self.t + h };
                self.y = y_new;
                self.k1 = k7;
                let next = h * fac.clamp(0.2, 5.0);
                // keep the controller's proposal if we only shortened for the limit
                self.h = if last { next.max(self.h) } else { next };
                return Ok(());
            }
            let fac = 0.9 * err.powf(-0.2);
            self.h = h * fac.clamp(0.1, 0.9);
        }
    }

    fn attempt(&mut self, h: f64) -> ([f64; D], [f64; D], f64) {
        let t = self.t;
        let y = &self.y;
        let k1 = &self.k1;
        let comb = |coef: &[(f64, &[f64; D])]| -> [f64; D] {
            let mut out = *y;
            for (c, k) in coef {
                for i in 0..D {
                    out[i] += h * c * k[i];
                }
            }
            out
        };
        let k2 = (self.f)(t + C2 * h, &comb(&[(A21, k1)]));
        let k3 = (self.f)(t + C3 * h, &comb(&[(A31, k1), (A32, &k2)]));
        let k4 = (self.f)(t + C4 * h, &comb(&[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = (self.f)(
            t + C5 * h,
            &comb(&[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = (self.f)(
            t + h,
            &comb(&[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = comb(&[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = (self.f)(t + h, &y_new);
        self.evaluations += 6;

        let mut err = 0.0f64;
        for i in 0..D {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        (y_new, k7, err)
    }
}
