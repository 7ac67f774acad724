//! Graph structure learning from smooth signals with quantified edge-wise
//! uncertainty.
//!
//! The crate solves the smoothness-regularized topology inference problem
//! with a step-size-free dual proximal gradient method, unrolls a fixed
//! number of its iterations into a three-parameter network with a sigmoid
//! edge-probability head, and samples the parameter posterior with
//! Hamiltonian Monte Carlo. Posterior predictive draws yield per-edge point
//! estimates and uncertainties, scored with proper rules and calibration
//! metrics.
//!
//! Numeric code is generic over the scalar type via [`scalar::Real`]
//! (f32/f64); the unrolled forward pass is additionally generic over
//! [`scalar::Scalar`] so the same code runs on plain floats and on
//! forward-mode dual numbers.

pub mod checks;
pub mod dataset;
pub mod diagnostics;
pub mod dual;
pub mod error;
pub mod graph;
pub mod hmc;
pub mod posterior;
pub mod predict;
pub mod prior;
pub mod scalar;
pub mod scaling;
pub mod solver;
pub mod synth;
pub mod unroll;

pub use error::{Error, Result};

/// Default-precision edge vector.
pub type EdgeVec = graph::EdgeVector<f64>;
/// Single-precision edge vector.
pub type EdgeVec32 = graph::EdgeVector<f32>;
/// Dual number with the model's three tangent slots (log θ, log δ, log b).
pub type Dual3 = dual::Dual<f64, 3>;
