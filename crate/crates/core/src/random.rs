//! Seeded random matrix draws.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::{qr_unitary, schatten_norm, SchattenOrder};
use crate::{ComplexMatrix, C64};

/// Entries `(g₁ + i g₂)/√2` with independent standard normals.
pub fn gaussian_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
    })
}

pub fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

/// `x y*` for Gaussian vectors.
pub fn rank_one<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let x = gaussian_vector(dim, rng);
    let y = gaussian_vector(dim, rng);
    ComplexMatrix::from_fn(dim, |i, j| x[i] * y[j].conj())
}

/// Haar-distributed unitary: Gram–Schmidt of a Gaussian matrix with the
/// triangular factor normalised to a positive diagonal.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<ComplexMatrix> {
    loop {
        let g = gaussian_matrix(dim, rng);
        if let Ok(q) = qr_unitary(&g) {
            return Ok(q);
        }
    }
}

/// Hermitian matrix with `‖H‖_p = scale`.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, scale: f64, p: SchattenOrder, rng: &mut R) -> ComplexMatrix {
    let h = gaussian_matrix(dim, rng).hermitian_part();
    let norm = schatten_norm(&h, p);
    if norm == 0.0 {
        return h;
    }
    h.scale_real(scale / norm)
}

/// `W diag(e^{2πi θ_k}) W*` with Haar `W`; `fractions` are `θ_k`.
pub fn unitary_with_spectrum<R: Rng + ?Sized>(fractions: &[f64], rng: &mut R) -> Result<ComplexMatrix> {
    let w = haar_unitary(fractions.len(), rng)?;
    let d: Vec<C64> = fractions.iter().map(|&f| C64::cis(TAU * f)).collect();
    Ok(w.matmul(&ComplexMatrix::from_diag(&d)).mul_adjoint(&w))
}
