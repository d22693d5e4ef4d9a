//! Interior point solver for convex QPs and LPs whose inner Krylov solvers
//! estimate the outer convergence indicators at every inner iteration and stop
//! once those indicators stagnate.

pub mod error;
pub mod harness;
pub mod ipkrylov;
pub mod ipm;
pub mod krylov;
pub mod linop;
pub mod problems;
pub mod vecops;

pub use error::{Error, Result};
