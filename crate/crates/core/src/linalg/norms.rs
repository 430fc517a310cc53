use num_complex::Complex;
use num_traits::Zero;

use super::eigen::jacobi_eigh;
use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Schatten exponent `p ∈ (0, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchattenOrder(f64);

impl SchattenOrder {
    pub const INFINITY: SchattenOrder = SchattenOrder(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p <= 0.0 {
            return Err(Error::domain(format!("Schatten order must be positive, got {p}")));
        }
        Ok(Self(p))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl std::fmt::Display for SchattenOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Singular values, descending.
pub fn singular_values<T: Real>(m: &Matrix<T>) -> Vec<T> {
    if m.max_abs().is_zero() {
        return vec![T::zero(); m.dim()];
    }
    let gram = m.adjoint_mul(m).hermitian_part();
    let mut sv: Vec<T> = match jacobi_eigh(&gram) {
        Ok(dec) => dec.eigenvalues.iter().map(|l| l.re.max(T::zero()).sqrt()).collect(),
        Err(_) => return vec![T::nan(); m.dim()],
    };
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Largest singular value.
pub fn operator_norm<T: Real>(m: &Matrix<T>) -> T {
    singular_values(m).first().copied().unwrap_or_else(T::zero)
}

/// `‖M‖_p = (Σ σ_k^p)^{1/p}`; a quasi-norm for `p < 1`.
pub fn schatten_norm<T: Real>(m: &Matrix<T>, p: SchattenOrder) -> T {
    let sv = singular_values(m);
    if p.is_infinite() {
        return sv.first().copied().unwrap_or_else(T::zero);
    }
    let max = sv.first().copied().unwrap_or_else(T::zero);
    if max.is_zero() {
        return T::zero();
    }
    let pe = T::lit(p.get());
    let s: T = sv.iter().map(|&x| (x / max).powf(pe)).sum();
    max * s.powf(T::one() / pe)
}

/// Orthonormalises the columns of `m` (modified Gram–Schmidt with one
/// reorthogonalisation pass). The triangular factor has a positive diagonal.
pub fn qr_unitary<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let n = m.dim();
    let mut q = m.clone();
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                let mut proj: Complex<T> = Complex::zero();
                for i in 0..n {
                    proj = proj + q[(i, k)].conj() * q[(i, j)];
                }
                for i in 0..n {
                    let qik = q[(i, k)];
                    q[(i, j)] = q[(i, j)] - proj * qik;
                }
            }
        }
        let norm = (0..n).map(|i| q[(i, j)].norm_sqr()).sum::<T>().sqrt();
        if norm <= T::epsilon() * T::lit(n as f64) * m.max_abs() || norm.is_zero() {
            return Err(Error::Numeric {
                msg: format!("column {j} is linearly dependent"),
                residual: norm.as_f64(),
            });
        }
        for i in 0..n {
            q[(i, j)] = q[(i, j)] / norm;
        }
    }
    Ok(q)
}
