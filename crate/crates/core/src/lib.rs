//! Numerical kernels for q-Borel summation and the three q-Laplace
//! resummations of the divergent basic hypergeometric series 2phi0, plus the
//! identity and property checks that certify them against each other.

pub mod error;
pub mod laplace;
pub mod qcore;
pub mod quad;
pub mod series;
pub mod stokes;
pub mod uq;

pub use error::{QError, Result};
pub use qcore::QContext;
