//! A numerical laboratory for the singular limit of the rescaled Fisher-KPP
//! equation `∂ₜu = εΔu + ε⁻¹u(1−u)`.
//!
//! The crate computes travelling waves and the logistic semiflow, evaluates
//! the sub- and super-solutions that sandwich `u^ε`, integrates the equation
//! with Strang splitting, and measures front speed, layer thickness,
//! generation time and the absence of an interface for slowly decaying data.

pub mod barriers;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod kinetics;
pub mod numerics;
pub mod solver;
pub mod waves;

pub use error::{Error, Result};

/// `ε|ln ε|`, the scale of every generation and thickness estimate.
#[inline]
pub fn eps_log(epsilon: f64) -> f64 {
    epsilon * epsilon.ln().abs()
}

/// Minimal speed of the monotone travelling waves of `u(1−u)`.
pub const MINIMAL_SPEED: f64 = 2.0;
