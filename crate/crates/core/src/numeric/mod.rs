//! Deterministic numerical foundations shared by every model module.

pub mod dist;
pub mod exec;
pub mod kernel;
pub mod matrix;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use dist::{sample, Distribution};
pub use kernel::matern52;
pub use matrix::{cholesky_logdet, trace_inverse, Matrix, SpdFactor};
pub use quadrature::{integrate_unit, QuadratureRule};
pub use rng::{RandomStream, StreamRng};
pub use special::{f_cdf, f_quantile};
