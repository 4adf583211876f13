//! Norms, energies and the integral identities satisfied by ground states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::profile::RadialProfile;
use crate::special::sphere_area;

/// `(‖∇u‖₂², ‖u‖₂², ‖u‖_q^q, ‖u‖_{2*}^{2*})`, written `(A, L2, B, C)` below.
///
/// `l2_sq` is `+∞` for profiles outside `L²` (Talenti bubbles with `N ≤ 4`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSet {
    pub grad_sq: f64,
    #[serde(with = "maybe_infinite")]
    pub l2_sq: f64,
    #[serde(with = "maybe_infinite")]
    pub lq: f64,
    pub lcrit: f64,
}

/// Serialize `+∞` as the string `"infinite"`.
pub mod maybe_infinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            s.serialize_str("infinite")
        } else {
            s.serialize_f64(*x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) if s == "infinite" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad norm `{s}`"))),
        }
    }
}

impl NormSet {
    /// Interpolation inequality `B ≤ L2^{(2*-q)/(2*-2)} C^{(q-2)/(2*-2)}`.
    pub fn satisfies_interpolation(&self, two_star: f64, q: f64) -> bool {
        let theta = (two_star - q) / (two_star - 2.0);
        let bound = self.l2_sq.powf(theta) * self.lcrit.powf(1.0 - theta);
        self.lq <= bound * (1.0 + 1e-10)
    }

    /// Sobolev inequality `C^{2/2*} ≤ A / S`.
    pub fn satisfies_sobolev(&self, dim: u32) -> bool {
        let n = dim as f64;
        let two_star = 2.0 * n / (n - 2.0);
        let s = crate::special::sobolev_constant(dim);
        self.lcrit.powf(2.0 / two_star) <= self.grad_sq / s * (1.0 + 1e-10)
    }
}

pub fn radial_norms(profile: &RadialProfile, q: f64) -> NormSet {
    let omega = sphere_area(profile.dim());
    let n = profile.coeffs.n();
    let two_star = 2.0 * n / (n - 2.0);
    NormSet {
        grad_sq: omega * profile.gradient_moment(),
        l2_sq: omega * profile.power_moment(2.0),
        lq: omega * profile.power_moment(q),
        lcrit: omega * profile.power_moment(two_star),
    }
}

/// `ω ∫ |u|^p r^{N-1} dr` for an arbitrary power.
pub fn lp_norm_pow(profile: &RadialProfile, p: f64) -> f64 {
    sphere_area(profile.dim()) * profile.power_moment(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EnergyForm {
    /// `I_λ` on the original problem.
    I,
    /// `J_λ` on the `v`-rescaled problem.
    J,
    /// `J̃_λ` on the `w`-rescaled problem at scale `ξ`.
    Jtilde { xi: f64 },
}

/// `(mass weight, q-power weight)` multiplying `L2` and `B` in each functional.
fn form_weights(params: &ProblemParams, form: EnergyForm) -> (f64, f64) {
    let e = params.exponents();
    let q = params.q();
    match form {
        EnergyForm::I => (1.0, params.lambda),
        EnergyForm::J => {
            let ls = params.lambda_sigma();
            (ls, ls)
        }
        EnergyForm::Jtilde { xi } => {
            let ls = params.lambda_sigma();
            (
                ls * xi.powf((e.two_star - 2.0) * e.s),
                ls * xi.powf((e.two_star - q) * e.s),
            )
        }
    }
}

fn weighted(w: f64, x: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * x
    }
}

pub fn energy_from_norms(norms: &NormSet, params: &ProblemParams, form: EnergyForm) -> f64 {
    let (a, b) = form_weights(params, form);
    let ts = params.two_star();
    0.5 * norms.grad_sq + 0.5 * weighted(a, norms.l2_sq)
        - norms.lcrit / ts
        - weighted(b, norms.lq) / params.q()
}

pub fn energy(profile: &RadialProfile, params: &ProblemParams, form: EnergyForm) -> f64 {
    energy_from_norms(&radial_norms(profile, params.q()), params, form)
}

fn normalized(terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if scale == 0.0 {
        0.0
    } else {
        terms.iter().sum::<f64>() / scale
    }
}

pub fn nehari_from_norms(norms: &NormSet, params: &ProblemParams, form: EnergyForm) -> f64 {
    let (a, b) = form_weights(params, form);
    normalized(&[
        norms.grad_sq,
        weighted(a, norms.l2_sq),
        -norms.lcrit,
        -weighted(b, norms.lq),
    ])
}

pub fn pohozaev_from_norms(norms: &NormSet, params: &ProblemParams, form: EnergyForm) -> f64 {
    let (a, b) = form_weights(params, form);
    let ts = params.two_star();
    normalized(&[
        norms.grad_sq / ts,
        0.5 * weighted(a, norms.l2_sq),
        -norms.lcrit / ts,
        -weighted(b, norms.lq) / params.q(),
    ])
}

pub fn nehari_residual(profile: &RadialProfile, params: &ProblemParams, form: EnergyForm) -> f64 {
    nehari_from_norms(&radial_norms(profile, params.q()), params, form)
}

pub fn pohozaev_residual(
    profile: &RadialProfile,
    params: &ProblemParams,
    form: EnergyForm,
) -> f64 {
    pohozaev_from_norms(&radial_norms(profile, params.q()), params, form)
}

/// Nehari and Pohozaev defects for whatever equation `profile.coeffs` describes.
pub fn coefficient_identities(profile: &RadialProfile) -> (f64, f64) {
    let c = &profile.coeffs;
    let omega = sphere_area(c.dim);
    let n = c.n();
    let ts = 2.0 * n / (n - 2.0);
    let grad = omega * profile.gradient_moment();
    let mass = if c.a == 0.0 {
        0.0
    } else {
        c.a * omega * profile.power_moment(2.0)
    };
    let powers: Vec<(f64, f64)> = c
        .terms
        .iter()
        .map(|t| (t.p, t.b * omega * profile.power_moment(t.p)))
        .collect();
    let mut neh = vec![grad, mass];
    let mut poh = vec![grad / ts, 0.5 * mass];
    for &(p, bb) in &powers {
        neh.push(-bb);
        poh.push(-bb / p);
    }
    (normalized(&neh), normalized(&poh))
}

/// `τ = A / C`.
pub fn tau_ratio(profile: &RadialProfile) -> Result<f64> {
    let n = profile.coeffs.n();
    tau_from_norms(&radial_norms(profile, 2.0 * n / (n - 2.0)))
}

pub fn tau_from_norms(norms: &NormSet) -> Result<f64> {
    if norms.lcrit <= 0.0 {
        return Err(Error::DegenerateProfile(
            "critical norm vanishes, tau undefined".into(),
        ));
    }
    Ok(norms.grad_sq / norms.lcrit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IdentityForm {
    VForm,
    WForm { xi: f64 },
}

/// `2(2*-q)/(q(2*-2))`, the ratio `‖v‖₂² / ‖v‖_q^q` forced on solutions.
pub fn l2_lq_ratio(params: &ProblemParams) -> f64 {
    let ts = params.two_star();
    let q = params.q();
    2.0 * (ts - q) / (q * (ts - 2.0))
}

pub fn l2_lq_defect_from_norms(norms: &NormSet, params: &ProblemParams, which: IdentityForm) -> f64 {
    let k = l2_lq_ratio(params);
    let lhs = match which {
        IdentityForm::VForm => norms.l2_sq,
        IdentityForm::WForm { xi } => {
            let e = params.exponents();
            xi.powf((params.q() - 2.0) * e.s) * norms.l2_sq
        }
    };
    let rhs = k * norms.lq;
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs) / scale
    }
}

pub fn l2_lq_identity_defect(
    profile: &RadialProfile,
    params: &ProblemParams,
    which: IdentityForm,
) -> f64 {
    l2_lq_defect_from_norms(&radial_norms(profile, params.q()), params, which)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_l2_serializes_as_marker() {
        let n = NormSet {
            grad_sq: 1.0,
            l2_sq: f64::INFINITY,
            lq: 2.0,
            lcrit: 1.0,
        };
        let s = serde_json::to_string(&n).unwrap();
        assert!(s.contains("\"infinite\""), "{s}");
        let back: NormSet = serde_json::from_str(&s).unwrap();
        assert!(back.l2_sq.is_infinite());
        assert_eq!(back.lq, 2.0);
    }

    #[test]
    fn zero_norms_give_zero_energy_and_residuals() {
        let z = NormSet {
            grad_sq: 0.0,
            l2_sq: 0.0,
            lq: 0.0,
            lcrit: 0.0,
        };
        let p = ProblemParams::new(5, 3.0, 0.1).unwrap();
        for form in [EnergyForm::I, EnergyForm::J, EnergyForm::Jtilde { xi: 2.0 }] {
            assert_eq!(energy_from_norms(&z, &p, form), 0.0);
            assert_eq!(nehari_from_norms(&z, &p, form), 0.0);
            assert_eq!(pohozaev_from_norms(&z, &p, form), 0.0);
        }
        assert!(tau_from_norms(&z).is_err());
    }
}
