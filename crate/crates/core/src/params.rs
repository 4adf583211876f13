//! Problem parameters `(N, q, λ)` and the exponents derived from them.
//!
//! Every formula elsewhere in the crate reads its exponents from here:
//! the critical exponent `2* = 2N/(N-2)`, the rescaling exponent
//! `σ = (2*-2)/(q-2)` and the half-dimension `s = (N-2)/2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance from the endpoints of `(2, 2*)` inside which `q` is rejected.
pub const ENDPOINT_GUARD: f64 = 1e-9;

pub fn critical_exponent(dim: u32) -> Result<f64> {
    if dim < 3 {
        return Err(Error::Dimension { dim });
    }
    let n = dim as f64;
    Ok(2.0 * n / (n - 2.0))
}

/// The nonlinearity exponent `q`, kept as an exact fraction when given as one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Exponent {
    Ratio { num: i64, den: i64 },
    Float(f64),
}

impl Exponent {
    pub fn value(&self) -> f64 {
        match *self {
            Exponent::Ratio { num, den } => num as f64 / den as f64,
            Exponent::Float(x) => x,
        }
    }
}

impl From<f64> for Exponent {
    fn from(x: f64) -> Self {
        Exponent::Float(x)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Exponent::Ratio { num, den } => write!(f, "{num}/{den}"),
            Exponent::Float(x) => write!(f, "{x:?}"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |m: &str| Error::Parse {
            line: 0,
            message: format!("invalid exponent `{s}`: {m}"),
        };
        if let Some((a, b)) = s.split_once('/') {
            let num: i64 = a.trim().parse().map_err(|_| bad("numerator"))?;
            let den: i64 = b.trim().parse().map_err(|_| bad("denominator"))?;
            if den <= 0 {
                return Err(bad("denominator must be positive"));
            }
            Ok(Exponent::Ratio { num, den })
        } else {
            let x: f64 = s.parse().map_err(|_| bad("not a number"))?;
            if !x.is_finite() {
                return Err(bad("not finite"));
            }
            Ok(Exponent::Float(x))
        }
    }
}

impl From<Exponent> for String {
    fn from(e: Exponent) -> String {
        e.to_string()
    }
}

impl TryFrom<String> for Exponent {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub dim: u32,
    pub q: Exponent,
    pub lambda: f64,
}

impl ProblemParams {
    /// Validated constructor; `λ = 0` is accepted for limit-equation queries.
    pub fn new(dim: u32, q: impl Into<Exponent>, lambda: f64) -> Result<Self> {
        let params = ProblemParams {
            dim,
            q: q.into(),
            lambda,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_q(self.dim, self.q.value())?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidLambda(self.lambda));
        }
        Ok(())
    }

    pub fn q(&self) -> f64 {
        self.q.value()
    }

    pub fn n(&self) -> f64 {
        self.dim as f64
    }

    pub fn two_star(&self) -> f64 {
        let n = self.n();
        2.0 * n / (n - 2.0)
    }

    pub fn exponents(&self) -> Exponents {
        let n = self.n();
        let q = self.q();
        Exponents {
            two_star: self.two_star(),
            sigma: 4.0 / ((n - 2.0) * (q - 2.0)),
            s: (n - 2.0) / 2.0,
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        ProblemParams { lambda, ..*self }
    }

    /// `λ^σ`, the coupling seen by the `v`-rescaled problem.
    pub fn lambda_sigma(&self) -> f64 {
        self.lambda.powf(self.exponents().sigma)
    }
}

fn check_q(dim: u32, q: f64) -> Result<f64> {
    let two_star = critical_exponent(dim)?;
    if !(q > 2.0 + ENDPOINT_GUARD && q < two_star - ENDPOINT_GUARD) {
        return Err(Error::ExponentRange {
            q,
            lower: 2.0,
            upper: two_star,
        });
    }
    Ok(two_star)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub two_star: f64,
    pub sigma: f64,
    pub s: f64,
}

pub fn derive_exponents(params: &ProblemParams) -> Result<Exponents> {
    params.validate()?;
    Ok(params.exponents())
}

/// The constants `Q(q)` and `G(q) = (q-2)/(2*-2) Q(q)` bounding the least energy.
pub fn gq_constants(dim: u32, q: f64) -> Result<(f64, f64)> {
    let two_star = check_q(dim, q)?;
    let big_q = ((two_star - q) / (two_star - 2.0)).powf((two_star - q) / (q - 2.0));
    let big_g = (q - 2.0) / (two_star - 2.0) * big_q;
    Ok((big_q, big_g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    /// `q → 2⁺`
    Lower,
    /// `q → 2*⁻`
    Upper,
}

/// Analytic endpoint limits of `(Q, G)`; these are independent of `N`.
pub fn gq_limits(dim: u32, endpoint: Endpoint) -> Result<(f64, f64)> {
    critical_exponent(dim)?;
    Ok(match endpoint {
        Endpoint::Lower => ((-1.0f64).exp(), 0.0),
        Endpoint::Upper => (1.0, 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Existence {
    Exists,
    ExistsForLargeLambda,
    Unknown,
}

pub fn existence_region(params: &ProblemParams) -> Existence {
    if params.dim >= 4 || params.q() > 4.0 {
        Existence::Exists
    } else {
        Existence::ExistsForLargeLambda
    }
}
