//! Ground states of `-Δu + u = u^{2*-1} + λ u^{q-1}` on `ℝ^N`, radial case:
//! a shooting solver, the rescalings that expose the `λ → 0` and `λ → ∞`
//! limits, and checks of the resulting scaling laws.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod functionals;
pub mod io;
pub mod mass;
pub mod ode;
pub mod params;
pub mod profile;
pub mod solver;
pub mod special;
pub mod talenti;

pub use asymptotics::{CheckReport, FitResult, LogPower, Sweep, SweepRecord};
pub use error::{Error, Result};
pub use functionals::{EnergyForm, IdentityForm, NormSet};
pub use mass::MassPoint;
pub use params::{Exponent, Exponents, ProblemParams};
pub use profile::{OdeCoeffs, PowerTerm, RadialProfile, Tail};
pub use solver::{ResidualReport, ShootingResult, SolverOptions};
pub use talenti::TalentiBubble;
