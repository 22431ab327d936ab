//! Lower bounds on the spectral gap of `L = Δ - B·∇ - c` with Dirichlet conditions on
//! convex domains, built from an associated one-dimensional Sturm–Liouville problem, plus
//! a finite-difference eigensolver to check the bounds against.

// `!(x > y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bessel;
pub mod catalog;
pub mod certificate;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod modulus;
pub mod ode;
pub mod operator;
pub mod sl;
pub mod sparse;
pub mod spectrum;

pub use certificate::{certify, general_bound, soundness_report, Branch, CertifyOptions, GapCertificate, SoundnessReport};
pub use error::{Error, Result};
pub use modulus::{
    build_continuity_modulus, build_modulus, build_riccati, find_sigma2, find_turning_point, ContinuityModulus, ModulusProfile, RiccatiProfile, Sigma2Search,
};
pub use operator::OperatorSpec;
pub use sl::{check_lagrange_monotonicity, critical_sigma, sl_gap, solve_sl, Parity, SlEigenpair, SlGap, SlProblem, SlSpectrum};
pub use spectrum::{assemble, low_spectrum, principal_eigenpair, DiscreteOperator, DiscreteSpectrum};
