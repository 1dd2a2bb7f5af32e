//! Bayesian expected-loss objectives for experimental design where the
//! expectation is taken under a *designer* model that may differ from the
//! model that will be *fitted* to the responses.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure numerical
//! code. File formats, the command line and thread pools live in the
//! `altdesign` companion crate.
//!
//! Layout:
//!
//! * [`numeric`]: dense matrices, Cholesky factors, special functions,
//!   distributions, counter-based random streams and quadrature.
//! * [`design`]: designs, loss functions, self-normalised importance sampling
//!   and the nested Monte Carlo internal/external expected-loss estimators.
//! * [`linear`]: conjugate normal-inverse-gamma closed forms and the
//!   full-treatment designer model.
//! * [`asymptotic`]: KL projection, sandwich matrices and the approximate
//!   objectives built from them.
//! * [`mm`]: Michaelis–Menten fitted model with a Gaussian-process
//!   discrepancy designer model.
//! * [`spline`]: model-averaged cubic B-spline fitted model and the
//!   predictive squared-error loss.
//! * [`optimizer`]: grid coordinate exchange with common random numbers.
#![no_std]
#![forbid(unsafe_code)]
// Test builds link std, whose inherent float methods shadow `num_traits::Float`.

extern crate alloc;

pub mod asymptotic;
pub mod design;
mod error;
pub mod linear;
pub mod mm;
pub mod numeric;
pub mod optimizer;
pub mod spline;

pub use design::{
    efficiency, mc_external_loss, mc_internal_loss, snis_posterior_moments, Compatibility, Design,
    EfficiencyScale, ExpectedLossEstimate, LossKind, LossSpec, Model, ModelPair,
};
pub use error::{Error, Result};
pub use numeric::exec::{Executor, Sequential};
pub use numeric::matrix::{Matrix, SpdFactor};
pub use numeric::rng::RandomStream;
