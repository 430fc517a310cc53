//! Central finite differences with one Richardson step; used only as a
//! verification oracle.

use crate::error::Result;
use crate::ComplexMatrix;

/// Base step `ε^{1/(k+4)} · max(1, |t|)`, balancing the `O(h⁴)` Richardson
/// truncation against the `O(ε/h^k)` roundoff of a `k`-th difference.
pub fn default_step(k: usize, t: f64) -> f64 {
    f64::EPSILON.powf(1.0 / (k + 4) as f64) * t.abs().max(1.0)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Iterated central difference `Σ_j C(k,j) (−1)^j φ(t + (k−2j)h) / (2h)^k`.
pub fn central_difference<F>(phi: &F, k: usize, t: f64, h: f64) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> Result<ComplexMatrix> + ?Sized,
{
    if k == 0 {
        return phi(t);
    }
    let mut acc: Option<ComplexMatrix> = None;
    for j in 0..=k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let coeff = sign * binomial(k, j) / (2.0 * h).powi(k as i32);
        let sample = phi(t + (k as f64 - 2.0 * j as f64) * h)?.scale_real(coeff);
        acc = Some(match acc {
            None => sample,
            Some(a) => &a + &sample,
        });
    }
    Ok(acc.expect("at least one stencil point"))
}

/// `(4 D(h/2) − D(h)) / 3` with `h` from [`default_step`].
pub fn richardson<F>(phi: &F, k: usize, t: f64) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> Result<ComplexMatrix> + ?Sized,
{
    let h = default_step(k, t);
    let coarse = central_difference(phi, k, t, h)?;
    let fine = central_difference(phi, k, t, h / 2.0)?;
    Ok((&fine.scale_real(4.0) - &coarse).scale_real(1.0 / 3.0))
}

/// Stencil points `t + (k − 2j)h` touched by [`richardson`].
pub fn stencil_extent(k: usize, t: f64) -> (f64, f64) {
    let h = default_step(k, t);
    (t - k as f64 * h, t + k as f64 * h)
}

/// `‖a − b‖_F / ‖a‖_F`, returning the absolute error when `a = 0` and `0`
/// when that error is at roundoff level for the given scale.
pub fn relative_error(exact: &ComplexMatrix, approx: &ComplexMatrix, scale: f64) -> f64 {
    let err = (exact - approx).frobenius_norm();
    let denom = exact.frobenius_norm();
    if denom > 0.0 {
        return err / denom;
    }
    if err <= 1e-8 * scale.max(1.0) {
        0.0
    } else {
        err
    }
}
