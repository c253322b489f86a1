//! Randomized-benchmarking survival curves for a single qubit driven by
//! finite-duration Clifford gates under classical Gaussian noise on `σ_z`.
//!
//! Times are measured in units of the gate time `t_g`, rates in `1/t_g`.

pub mod analytic;
pub mod clifford;
pub mod cumulant;
pub mod error;
pub mod fit;
pub mod gates;
pub mod linalg;
pub mod montecarlo;
pub mod noise;
pub mod pauli;
pub mod quadrature;
pub mod special;
pub mod validation;

pub use error::{Error, Result};
