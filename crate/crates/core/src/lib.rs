//! Certified lower bounds for the minimum overlap constant.
//!
//! The pipeline builds a convex relaxation of `min ||f * (1 - f)||_inf`,
//! solves its second-order cone dual, and verifies dual points under a
//! worst-case floating-point error model so that each dual objective is a
//! rigorous lower bound.

pub mod certify;
pub mod cli;
pub mod dual;
pub mod error;
pub mod fourier;
pub mod interval;
pub mod oracle;
pub mod programs;
pub mod solver;

pub use error::{Error, Result};
