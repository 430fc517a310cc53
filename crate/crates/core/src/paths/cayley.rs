use std::sync::Arc;

use super::basic::binomial;
use super::{check_order, Flavor, OperatorPath};
use crate::error::{Error, Result};
use crate::linalg::{best_gap_angle, operator_norm, unitary_eig};
use crate::{ComplexMatrix, C64};

/// Smallest admissible distance between `e^{iθ}` and `σ(U(t))`.
pub const MIN_GAP: f64 = 1e-3;

/// `A(t) = η^{-1}(e^{−iθ} U(t)) = i(Z + I)(Z − I)^{-1}` with `Z = e^{−iθ}U(t)`.
///
/// Since `A = iI + 2i R` with `R = (Z − I)^{-1}`, derivatives follow from the
/// resolvent recursion `R^(l) = −R Σ_{r=1}^{l} C(l,r) Z^(r) R^(l−r)`.
#[derive(Clone)]
pub struct CayleyPath {
    inner: Arc<dyn OperatorPath>,
    rotation: f64,
    phase: C64,
    base_gap: f64,
}

pub fn cayley_path(inner: Arc<dyn OperatorPath>, rotation: f64) -> Result<CayleyPath> {
    if inner.flavor() != Flavor::Unitary {
        return Err(Error::domain("cayley_path needs a unitary path"));
    }
    let mut path = CayleyPath {
        inner,
        rotation,
        phase: C64::cis(-rotation),
        base_gap: 0.0,
    };
    let resolvent = path.resolvent(0.0)?;
    path.base_gap = 1.0 / operator_norm(&resolvent);
    Ok(path)
}

/// Rotation maximising the gap between `e^{iθ}` and the spectra of `U(t)`
/// over the sample times.
pub fn choose_rotation(path: &dyn OperatorPath, times: &[f64]) -> Result<f64> {
    let mut points = Vec::new();
    for &t in times {
        points.extend(unitary_eig(&path.eval(t)?)?.eigenvalues);
    }
    Ok(best_gap_angle(&points).0)
}

impl CayleyPath {
    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    /// `dist(e^{iθ}, σ(U(0)))`.
    pub fn base_gap(&self) -> f64 {
        self.base_gap
    }

    /// Half-width of the interval around `0` on which the gap stays at least
    /// half its initial value: `gap / (2 L)` with `L` the path's Lipschitz
    /// bound. Infinite for constant paths, `None` when no bound is known.
    pub fn certified_radius(&self) -> Option<f64> {
        let lip = self.inner.lipschitz_bound()?;
        if lip == 0.0 {
            return Some(f64::INFINITY);
        }
        Some(self.base_gap / (2.0 * lip))
    }

    /// `e^{iθ} η(A(t))`, which should reproduce `U(t)`.
    pub fn reconstruct(&self, t: f64) -> Result<ComplexMatrix> {
        let a = self.eval(t)?;
        Ok(crate::linalg::cayley(&a)?.scale(self.phase.conj()))
    }

    fn rotated(&self, l: usize, t: f64) -> Result<ComplexMatrix> {
        let m = if l == 0 {
            self.inner.eval(t)?
        } else {
            self.inner.deriv(l, t)?
        };
        Ok(m.scale(self.phase))
    }

    fn resolvent(&self, t: f64) -> Result<ComplexMatrix> {
        let z = self.rotated(0, t)?;
        let shifted = &z - &ComplexMatrix::identity(z.dim());
        let gap_failure = || {
            Error::domain(format!(
                "e^(i·{:.6}) is within {MIN_GAP} of the spectrum of U({t}); choose another rotation",
                self.rotation
            ))
        };
        let r = shifted.inverse().map_err(|_| gap_failure())?;
        if operator_norm(&r) > 1.0 / MIN_GAP {
            return Err(gap_failure());
        }
        Ok(r)
    }

    fn resolvent_stack(&self, l: usize, t: f64) -> Result<Vec<ComplexMatrix>> {
        let r0 = self.resolvent(t)?;
        let z_derivs: Vec<ComplexMatrix> = (1..=l).map(|r| self.rotated(r, t)).collect::<Result<_>>()?;
        let mut stack = vec![r0.clone()];
        for m in 1..=l {
            let mut sum = ComplexMatrix::zeros(r0.dim());
            for r in 1..=m {
                sum.axpy(C64::new(binomial(m, r), 0.0), &z_derivs[r - 1].matmul(&stack[m - r]));
            }
            stack.push(r0.matmul(&sum).scale_real(-1.0));
        }
        Ok(stack)
    }
}

impl OperatorPath for CayleyPath {
    fn flavor(&self) -> Flavor {
        Flavor::SelfAdjoint
    }

    fn order(&self) -> usize {
        self.inner.order()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, t: f64) -> Result<ComplexMatrix> {
        let r = self.resolvent(t)?;
        let n = r.dim();
        let i = C64::new(0.0, 1.0);
        let mut a = ComplexMatrix::identity(n).scale(i);
        a.axpy(i * 2.0, &r);
        Ok(a.hermitian_part())
    }

    fn deriv(&self, l: usize, t: f64) -> Result<ComplexMatrix> {
        check_order(self, l)?;
        if l == 0 {
            return Ok(&self.eval(t)? - &self.eval(0.0)?);
        }
        let stack = self.resolvent_stack(l, t)?;
        Ok(stack[l].scale(C64::new(0.0, 2.0)).hermitian_part())
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        let lip = self.inner.lipschitz_bound()?;
        let half_gap = self.base_gap / 2.0;
        Some(2.0 * lip / (half_gap * half_gap))
    }

    fn label(&self) -> String {
        format!("cayley({})", self.inner.label())
    }
}
