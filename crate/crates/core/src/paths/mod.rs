//! Differentiable operator paths `t ↦ U(t)` (unitary) and `t ↦ A(t)`
//! (selfadjoint) with closed-form derivative stacks.
//!
//! `deriv(l, t)` is the `l`-th derivative of the difference path
//! `t ↦ X(t) − X(0)`; for `l = 0` it returns `X(t) − X(0)` itself.

mod basic;
mod cayley;
mod log;
mod truncation;

use crate::error::{Error, Result};
use crate::fd;
use crate::ComplexMatrix;

pub use basic::{binomial, AdjointPath, ExpPath, LinearSAPath, ProductExpPath};
pub use cayley::{cayley_path, choose_rotation, CayleyPath, MIN_GAP};
pub use log::{log_path, LogPath, LOG_SERIES_TOL};
pub use truncation::{truncate, truncate_path, CompressedPath, ProjectionTruncation, TruncatedPath};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Unitary,
    SelfAdjoint,
}

pub trait OperatorPath: Send + Sync {
    fn flavor(&self) -> Flavor;

    /// Highest available derivative (`usize::MAX` when smooth).
    fn order(&self) -> usize;

    fn dim(&self) -> usize;

    fn eval(&self, t: f64) -> Result<ComplexMatrix>;

    fn deriv(&self, l: usize, t: f64) -> Result<ComplexMatrix>;

    fn base(&self) -> Result<ComplexMatrix> {
        self.eval(0.0)
    }

    /// Upper bound on `sup_t ‖X'(t)‖_op`, when known.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }

    fn label(&self) -> String;
}

pub(crate) fn check_order(path: &dyn OperatorPath, l: usize) -> Result<()> {
    if l > path.order() {
        return Err(Error::domain(format!(
            "derivative {l} requested from path {} of order {}",
            path.label(),
            path.order()
        )));
    }
    Ok(())
}

/// Relative Frobenius error between `deriv(l, t)` and a Richardson central
/// difference of `eval`. A zero exact derivative is compared absolutely.
pub fn path_fd_check(path: &dyn OperatorPath, l: usize, t: f64) -> Result<f64> {
    check_order(path, l)?;
    let exact = path.deriv(l, t)?;
    if l == 0 {
        let direct = &path.eval(t)? - &path.base()?;
        return Ok(fd::relative_error(&exact, &direct, 1.0));
    }
    let approx = fd::richardson(&|s: f64| path.eval(s), l, t)?;
    let scale = path.eval(t)?.frobenius_norm();
    Ok(fd::relative_error(&exact, &approx, scale))
}
