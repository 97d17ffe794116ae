//! Spectral stability of constant stationary states of two nonlocal
//! reaction-diffusion equations.
//!
//! * [`kernels`]: kernel densities and closed-form Fourier images.
//! * [`linearization`]: constant states and the spectral symbol `Φ`.
//! * [`scalar_roots`]: bisection and the special roots `z₁`, `x*`, `s₀`.
//! * [`stability`]: sharp analytic classifiers.
//! * [`oracle`]: brute-force minimization of `Φ` and instability witnesses.
//! * [`spectral_sim`]: pseudospectral confirmation of the verdicts.
//! * [`cli_io`]: command implementations, serialization and sweeps.
//! * [`sampling`]: seeded random parameter draws.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_io;
pub mod error;
pub mod kernels;
pub mod linearization;
pub mod oracle;
pub mod sampling;
pub mod scalar_roots;
pub mod spectral_sim;
pub mod stability;

pub use error::{Error, Result};
