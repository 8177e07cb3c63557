//! Numerical engine for the calculus of variations over epsilon-indexed
//! nets. The crate represents generalized numbers and functions by finite
//! samplings of a regularization parameter, classifies their asymptotic
//! growth, computes first and second variations and conservation-law
//! residuals, and reproduces a set of singular worked scenarios.

pub mod asymptotics;
pub mod calculus;
pub mod error;
pub mod gen_opt;
pub mod net_core;
pub mod numerics;
pub mod ode;
pub mod par;
pub mod scenarios;
pub mod suite;
pub mod symmetry;
pub mod variational;

pub use error::{ColvarError, Result};
