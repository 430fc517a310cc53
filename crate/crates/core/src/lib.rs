//! Numerical operator calculus on finite-dimensional Hilbert spaces.

pub mod calculus;
pub mod divdiff;
pub mod error;
pub mod fd;
pub mod functions;
pub mod harness;
pub mod linalg;
pub mod moi;
pub mod paths;
pub mod random;
pub mod scalar;

pub use error::{Error, Result};

/// Complex 64-bit scalar.
pub type C64 = num_complex::Complex<f64>;
/// Double-precision dense complex matrix.
pub type ComplexMatrix = linalg::Matrix<f64>;
/// Double-precision spectral decomposition.
pub type SpectralDecomposition = linalg::Spectral<f64>;
