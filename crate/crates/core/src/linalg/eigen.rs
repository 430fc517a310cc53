//! Eigendecompositions of normal matrices.
//!
//! Hermitian matrices are diagonalised by cyclic complex Jacobi sweeps.
//! Unitary matrices are rotated so that a spectral gap sits at `1`, mapped to
//! a Hermitian matrix by the inverse Cayley transform `z ↦ i(z+1)/(z-1)`,
//! diagonalised there, and mapped back.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex;
use num_traits::{One, Zero};

use super::matrix::Matrix;
use super::norms::operator_norm;
use crate::error::{Error, Result};
use crate::scalar::{cis, Real};

/// Maximum number of cyclic Jacobi sweeps.
pub const MAX_SWEEPS: usize = 60;

/// Relative off-diagonal Frobenius threshold for Jacobi convergence.
pub const OFF_DIAGONAL_THRESHOLD: f64 = 1e-14;

/// Number of candidate rotation angles for the unitary route.
pub const ROTATION_GRID: usize = 720;

/// Smallest accepted distance between the rotation point and the spectrum.
pub const MIN_ROTATION_GAP: f64 = 1e-3;

static STRUCTURE_TOL_OVERRIDE: AtomicU64 = AtomicU64::new(0);

/// Overrides the Hermitian/unitary acceptance tolerance process-wide.
/// Passing `None` restores the per-type default.
pub fn set_structure_tolerance(tol: Option<f64>) {
    let bits = tol.filter(|t| *t > 0.0).map_or(0, f64::to_bits);
    STRUCTURE_TOL_OVERRIDE.store(bits, Ordering::Relaxed);
}

/// Tolerance used by [`herm_eig`] and [`unitary_eig`] for their input checks.
pub fn structure_tolerance<T: Real>() -> T {
    match STRUCTURE_TOL_OVERRIDE.load(Ordering::Relaxed) {
        0 => T::default_structure_tol(),
        bits => T::lit(f64::from_bits(bits)),
    }
}

/// Eigenvalues and unitary eigenvector matrix `W` of a normal matrix,
/// with `M ≈ W · diag(λ) · W*`.
#[derive(Clone, Debug)]
pub struct Spectral<T: Real> {
    pub eigenvalues: Vec<Complex<T>>,
    pub eigenvectors: Matrix<T>,
    /// `‖M − W diag(λ) W*‖_F` measured after the decomposition.
    pub residual: T,
}

impl<T: Real> Spectral<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `W · diag(values) · W*`.
    pub fn synthesize(&self, values: &[Complex<T>]) -> Matrix<T> {
        let w = &self.eigenvectors;
        let n = self.dim();
        Matrix::from_fn(n, |i, j| {
            (0..n).fold(Complex::zero(), |acc, k| acc + w[(i, k)] * values[k] * w[(j, k)].conj())
        })
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        self.synthesize(&self.eigenvalues)
    }

    /// Functional calculus `f(M) = W diag(f(λ)) W*`. A failing or non-finite
    /// evaluation is reported with the offending eigenvalue.
    pub fn apply<F>(&self, mut f: F) -> Result<Matrix<T>>
    where
        F: FnMut(Complex<T>) -> Option<Complex<T>>,
    {
        let mut values = Vec::with_capacity(self.dim());
        for &lambda in &self.eigenvalues {
            match f(lambda) {
                Some(v) if v.re.is_finite() && v.im.is_finite() => values.push(v),
                _ => {
                    return Err(Error::domain(format!(
                        "function cannot be evaluated at eigenvalue {}{:+}i",
                        lambda.re, lambda.im
                    )))
                }
            }
        }
        Ok(self.synthesize(&values))
    }

    /// Rank-one spectral projection `w_k w_k*`.
    pub fn projection(&self, k: usize) -> Matrix<T> {
        let w = &self.eigenvectors;
        Matrix::from_fn(self.dim(), |i, j| w[(i, k)] * w[(j, k)].conj())
    }

    fn measure_residual(&mut self, m: &Matrix<T>) {
        self.residual = (m - &self.reconstruct()).frobenius_norm();
    }
}

/// Checks `‖M − M*‖_op ≤ tol · ‖M‖_op`.
pub fn is_hermitian<T: Real>(m: &Matrix<T>, tol: T) -> bool {
    let skew = m - &m.adjoint();
    let scale = operator_norm(m);
    skew.max_abs().is_zero() || operator_norm(&skew) <= tol * scale
}

/// Checks `‖M*M − I‖_op ≤ tol`.
pub fn is_unitary<T: Real>(m: &Matrix<T>, tol: T) -> bool {
    let defect = &m.adjoint_mul(m) - &Matrix::identity(m.dim());
    operator_norm(&defect) <= tol
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
pub fn herm_eig<T: Real>(h: &Matrix<T>) -> Result<Spectral<T>> {
    let tol = structure_tolerance::<T>();
    if !h.is_finite() {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    if !is_hermitian(h, tol) {
        return Err(Error::domain(format!(
            "matrix is not Hermitian within tolerance {}",
            tol
        )));
    }
    jacobi_eigh(&h.hermitian_part())
}

/// Cyclic Jacobi on an exactly Hermitian input (no structure check).
pub(crate) fn jacobi_eigh<T: Real>(h: &Matrix<T>) -> Result<Spectral<T>> {
    let n = h.dim();
    let mut a = h.clone();
    let mut v = Matrix::<T>::identity(n);
    let threshold = T::lit(OFF_DIAGONAL_THRESHOLD).max(T::epsilon() * T::lit(45.0)) * h.frobenius_norm();

    let off_norm = |a: &Matrix<T>| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s = s + a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&a) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        converged = off_norm(&a) <= threshold;
    }
    if !converged {
        return Err(Error::Numeric {
            msg: format!("Jacobi iteration did not converge in {MAX_SWEEPS} sweeps"),
            residual: off_norm(&a).as_f64(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap_or(std::cmp::Ordering::Equal));
    let eigenvalues = order.iter().map(|&k| Complex::new(a[(k, k)].re, T::zero())).collect();
    let eigenvectors = Matrix::from_fn(n, |i, j| v[(i, order[j])]);
    let mut out = Spectral {
        eigenvalues,
        eigenvectors,
        residual: T::zero(),
    };
    out.measure_residual(h);
    Ok(out)
}

/// One complex Jacobi rotation annihilating `a[p][q]`.
///
/// The pivot is first made real by the phase `D = diag(1, e^{-iφ})`, then a
/// real symmetric rotation `R` finishes; `W = D R` is applied as `W* A W`.
fn rotate<T: Real>(a: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r.is_zero() {
        return;
    }
    let n = a.dim();
    let phase = apq / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (r + r);
    let sign = if theta < T::zero() { -T::one() } else { T::one() };
    let t = sign / (theta.abs() + (theta * theta + T::one()).sqrt());
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    let cz = Complex::new(c, T::zero());
    let sz = Complex::new(s, T::zero());
    let w_pp = cz;
    let w_pq = sz;
    let w_qp = -(phase.conj() * s);
    let w_qq = phase.conj() * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * w_pp + akq * w_qp;
        a[(k, q)] = akp * w_pq + akq * w_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = w_pp.conj() * apk + w_qp.conj() * aqk;
        a[(q, k)] = w_pq.conj() * apk + w_qq.conj() * aqk;
    }
    a[(p, q)] = Complex::zero();
    a[(q, p)] = Complex::zero();
    a[(p, p)] = Complex::new(a[(p, p)].re, T::zero());
    a[(q, q)] = Complex::new(a[(q, q)].re, T::zero());

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * w_pp + vkq * w_qp;
        v[(k, q)] = vkp * w_pq + vkq * w_qq;
    }
}

/// Residual bound `1e-12 · N · ‖M‖_F` (loosened to `1e4·ε` per unit for
/// low-precision types).
pub(crate) fn residual_bound<T: Real>(m: &Matrix<T>) -> T {
    let unit = T::lit(1e-12).max(T::epsilon() * T::lit(1e4));
    unit * T::lit(m.dim() as f64) * m.frobenius_norm().max(T::min_positive_value())
}

/// Picks the angle `θ` on a 720-point grid maximising the distance from
/// `e^{iθ}` to a superset of the spectrum of the unitary `u`.
///
/// The superset is `{e^{±i·arccos c}}` for `c` ranging over the eigenvalues of
/// the Hermitian part `(U+U*)/2`, which are exactly the real parts of the
/// eigenvalues of `U`.
pub fn rotation_for_gap<T: Real>(u: &Matrix<T>) -> Result<(T, T)> {
    let cosines = jacobi_eigh(&u.hermitian_part())?.eigenvalues;
    let proxy: Vec<Complex<T>> = cosines
        .iter()
        .flat_map(|c| {
            let ang = c.re.max(-T::one()).min(T::one()).acos();
            [cis(ang), cis(-ang)]
        })
        .collect();
    Ok(best_gap_angle(&proxy))
}

/// Grid search of `θ` maximising `min_k |e^{iθ} − z_k|`; returns `(θ, gap)`.
pub fn best_gap_angle<T: Real>(points: &[Complex<T>]) -> (T, T) {
    let two_pi = T::PI() + T::PI();
    let mut best = (T::zero(), -T::one());
    for m in 0..ROTATION_GRID {
        let theta = two_pi * T::lit(m as f64) / T::lit(ROTATION_GRID as f64);
        let z = cis(theta);
        let gap = points
            .iter()
            .map(|&p| (z - p).norm())
            .fold(T::infinity(), T::min);
        if gap > best.1 {
            best = (theta, gap);
        }
    }
    best
}

/// `η^{-1}(z) = i (z + 1)/(z − 1)` applied to a matrix with `1 ∉ σ(z)`.
pub fn inverse_cayley<T: Real>(z: &Matrix<T>) -> Result<Matrix<T>> {
    let n = z.dim();
    let eye = Matrix::identity(n);
    let resolvent = (z - &eye).inverse()?;
    let num = (z + &eye).scale(Complex::new(T::zero(), T::one()));
    Ok(num.matmul(&resolvent))
}

/// `η(a) = (a + i)(a − i)^{-1}` for Hermitian `a`.
pub fn cayley<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.dim();
    let i_eye = Matrix::identity(n).scale(Complex::new(T::zero(), T::one()));
    let inv = (a - &i_eye).inverse()?;
    Ok((a + &i_eye).matmul(&inv))
}

/// Eigendecomposition of a unitary matrix.
///
/// Primary route: rotate by `e^{-iθ}` to open a gap at `1`, apply the inverse
/// Cayley transform, run [`herm_eig`], map the eigenvalues back. If no usable
/// rotation exists or the reconstruction residual is out of bounds, falls
/// back to simultaneous diagonalisation of the commuting pair
/// `(U+U*)/2`, `(U−U*)/(2i)`.
pub fn unitary_eig<T: Real>(u: &Matrix<T>) -> Result<Spectral<T>> {
    let tol = structure_tolerance::<T>();
    if !u.is_finite() {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    if !is_unitary(u, tol) {
        return Err(Error::domain(format!(
            "matrix is not unitary within tolerance {}",
            tol
        )));
    }
    let bound = residual_bound(u);
    let (theta, gap) = rotation_for_gap(u)?;
    if gap >= T::lit(MIN_ROTATION_GAP) {
        if let Ok(dec) = cayley_route(u, theta) {
            if dec.residual <= bound {
                return Ok(dec);
            }
        }
    }
    let dec = unitary_eig_commuting(u)?;
    if dec.residual > bound {
        return Err(Error::Numeric {
            msg: "unitary eigendecomposition failed on both routes".into(),
            residual: dec.residual.as_f64(),
        });
    }
    Ok(dec)
}

fn cayley_route<T: Real>(u: &Matrix<T>, theta: T) -> Result<Spectral<T>> {
    let z = u.scale(cis(-theta));
    let a = inverse_cayley(&z)?.hermitian_part();
    let herm = jacobi_eigh(&a)?;
    Ok(finish_unitary(u, herm.eigenvectors))
}

/// Commuting-pair fallback: diagonalise the Hermitian part, then resolve each
/// degenerate cluster with the skew part restricted to it.
pub fn unitary_eig_commuting<T: Real>(u: &Matrix<T>) -> Result<Spectral<T>> {
    let n = u.dim();
    let re_part = jacobi_eigh(&u.hermitian_part())?;
    let im_part = u.skew_part();
    let w = re_part.eigenvectors.clone();
    let im_in_basis = w.adjoint_mul(&im_part.matmul(&w));
    let cluster_tol = T::lit(1e-8).max(T::epsilon().sqrt() * T::lit(10.0));

    let mut refined = w.clone();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (re_part.eigenvalues[end].re - re_part.eigenvalues[end - 1].re) <= cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            let idx: Vec<usize> = (start..end).collect();
            let block = im_in_basis.submatrix(&idx).hermitian_part();
            let local = jacobi_eigh(&block)?;
            for i in 0..n {
                for (b, _) in idx.iter().enumerate() {
                    let mut acc = Complex::zero();
                    for (a, &col) in idx.iter().enumerate() {
                        acc = acc + w[(i, col)] * local.eigenvectors[(a, b)];
                    }
                    refined[(i, start + b)] = acc;
                }
            }
        }
        start = end;
    }
    Ok(finish_unitary(u, refined))
}

/// Rayleigh-quotient eigenvalues projected to the unit circle.
fn finish_unitary<T: Real>(u: &Matrix<T>, w: Matrix<T>) -> Spectral<T> {
    let n = u.dim();
    let uw = u.matmul(&w);
    let eigenvalues = (0..n)
        .map(|k| {
            let q: Complex<T> = (0..n).fold(Complex::zero(), |acc, i| acc + w[(i, k)].conj() * uw[(i, k)]);
            let r = q.norm();
            if r.is_zero() {
                Complex::one()
            } else {
                q / r
            }
        })
        .collect();
    let mut out = Spectral {
        eigenvalues,
        eigenvectors: w,
        residual: T::zero(),
    };
    out.measure_residual(u);
    out
}

/// `e^{iA}` for Hermitian `A`.
pub fn expm_hermitian<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let dec = herm_eig(a)?;
    dec.apply(|l| Some(cis(l.re)))
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Matrix<f64>;

    fn lcg_matrix(n: usize, seed: u64) -> M {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        M::from_fn(n, |_, _| Complex::new(next(), next()))
    }

    #[test]
    fn diagonal_input_is_untouched() {
        let d = M::from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap();
        let dec = herm_eig(&d).unwrap();
        assert_eq!(dec.eigenvalues, vec![Complex::new(1.0, 0.0), Complex::new(2.0, 0.0)]);
        assert_eq!(dec.eigenvectors, M::identity(2));
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = M::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let dec = herm_eig(&x).unwrap();
        assert!((dec.eigenvalues[0].re + 1.0).abs() < 1e-15);
        assert!((dec.eigenvalues[1].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        for seed in 0..10 {
            let g = lcg_matrix(8, seed);
            let h = g.hermitian_part();
            let dec = herm_eig(&h).unwrap();
            assert!(dec.residual <= 1e-12 * 8.0 * h.frobenius_norm(), "{}", dec.residual);
            let defect = &dec.eigenvectors.adjoint_mul(&dec.eigenvectors) - &M::identity(8);
            assert!(operator_norm(&defect) <= 1e-11);
            assert!(dec.eigenvalues.windows(2).all(|w| w[0].re <= w[1].re));
        }
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let m = M::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(herm_eig(&m), Err(Error::Domain(_))));
    }

    #[test]
    fn diagonal_unitary_spectrum() {
        let u = M::from_diag(&[Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)]);
        let dec = unitary_eig(&u).unwrap();
        let mut vals = dec.eigenvalues.clone();
        vals.sort_by(|a, b| a.arg().partial_cmp(&b.arg()).unwrap());
        assert!((vals[0] - Complex::new(1.0, 0.0)).norm() < 1e-14);
        assert!((vals[1] - Complex::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn plane_rotation_spectrum() {
        let phi: f64 = 0.7;
        let u = M::from_real_rows(&[&[phi.cos(), -phi.sin()], &[phi.sin(), phi.cos()]]).unwrap();
        let dec = unitary_eig(&u).unwrap();
        let mut args: Vec<f64> = dec.eigenvalues.iter().map(|z| z.arg()).collect();
        args.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((args[0] + phi).abs() < 1e-13);
        assert!((args[1] - phi).abs() < 1e-13);
    }

    #[test]
    fn commuting_fallback_matches_primary_route() {
        let h = lcg_matrix(6, 3).hermitian_part();
        let u = expm_hermitian(&h).unwrap();
        let a = unitary_eig(&u).unwrap();
        let b = unitary_eig_commuting(&u).unwrap();
        assert!(b.residual <= residual_bound(&u));
        let mut x: Vec<f64> = a.eigenvalues.iter().map(|z| z.arg()).collect();
        let mut y: Vec<f64> = b.eigenvalues.iter().map(|z| z.arg()).collect();
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        y.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn expm_of_zero_and_diagonal() {
        assert!((&expm_hermitian(&M::zeros(3)).unwrap() - &M::identity(3)).frobenius_norm() < 1e-15);
        let a = M::from_real_rows(&[&[std::f64::consts::PI, 0.0], &[0.0, 0.0]]).unwrap();
        let e = expm_hermitian(&a).unwrap();
        let want = M::from_real_rows(&[&[-1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert!((&e - &want).frobenius_norm() < 1e-15);
    }

    #[test]
    fn single_precision_decomposition() {
        let h: Matrix<f32> = lcg_matrix(5, 11).hermitian_part().cast();
        let dec = herm_eig(&h).unwrap();
        assert!(dec.residual <= residual_bound(&h), "{}", dec.residual);
        let u = expm_hermitian(&h).unwrap();
        let ud = unitary_eig(&u).unwrap();
        assert!(ud.residual <= residual_bound(&u), "{}", ud.residual);
    }

    #[test]
    fn cayley_round_trip() {
        let h = lcg_matrix(4, 5).hermitian_part();
        let u = cayley(&h).unwrap();
        assert!(is_unitary(&u, 1e-12));
        let back = inverse_cayley(&u).unwrap();
        assert!((&back - &h).frobenius_norm() < 1e-12);
    }
}
