//! Numerical construction and certification of quadrature domains in ℂⁿ.

pub mod domains;
pub mod error;
pub mod jet;
pub mod quad;
pub mod scalar;

pub use error::{Error, Result};
pub mod kernels;
pub mod span;
pub mod diff;
pub mod testfn;
pub mod certify;
pub mod construct;
pub mod onepoint;
