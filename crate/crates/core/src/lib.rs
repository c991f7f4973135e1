//! Quantum Wasserstein-1 distances, recovery maps, contraction coefficients
//! and transportation-cost constants for few-qudit systems.

pub mod chain;
pub mod concentration;
pub mod curvature;
pub mod dobrushin;
pub mod ensembles;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod recovery;
pub mod states;
pub mod w1;

pub use error::{Error, Result};
