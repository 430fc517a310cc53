//! Dense complex linear algebra generic over the real scalar type.

mod eigen;
mod matrix;
mod norms;

pub use eigen::{
    best_gap_angle, cayley, expm_hermitian, herm_eig, inverse_cayley, is_hermitian, is_unitary,
    rotation_for_gap, set_structure_tolerance, structure_tolerance, unitary_eig,
    unitary_eig_commuting, Spectral, MAX_SWEEPS, MIN_ROTATION_GAP, ROTATION_GRID,
};
pub use matrix::Matrix;
pub use norms::{operator_norm, qr_unitary, schatten_norm, singular_values, SchattenOrder};

use num_complex::Complex;

use crate::error::Result;
use crate::scalar::Real;

/// `f(M) = W diag(f(λ)) W*` over a precomputed decomposition.
pub fn apply_function<T: Real, F>(f: F, dec: &Spectral<T>) -> Result<Matrix<T>>
where
    F: FnMut(Complex<T>) -> Option<Complex<T>>,
{
    dec.apply(f)
}
