//! Functional Bayesian filtering of unknown nonlinear dynamics with a kernel state-space model.

pub mod baselines;
pub mod error;
pub mod experiments;
pub mod filter;
pub mod kernel;
pub mod ssm;

pub use error::{FbfError, Result};
