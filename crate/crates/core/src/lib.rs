//! Axisymmetric mean curvature flow with surgery, an explicit neck-capping
//! construction, and a quadrature harness for weighted Gaussian
//! monotonicity inequalities.

pub mod cli;
pub mod curve2d;
pub mod error;
pub mod flow;
pub mod gaussfunc;
pub mod neckmodel;
pub mod smooth;
pub mod surgery;
pub mod verify;

pub use error::{Error, Result};
