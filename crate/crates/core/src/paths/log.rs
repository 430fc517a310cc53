use std::sync::Arc;

use super::basic::binomial;
use super::{check_order, Flavor, OperatorPath};
use crate::error::{Error, Result};
use crate::linalg::{operator_norm, unitary_eig};
use crate::{ComplexMatrix, C64};

/// Tail threshold for the logarithm series.
pub const LOG_SERIES_TOL: f64 = 1e-14;

const MAX_SERIES_TERMS: usize = 400;

/// `A(t) = −i log(U(t) U(0)*)`, defined while `‖U(t)U(0)* − I‖ < 1/2`.
#[derive(Clone)]
pub struct LogPath {
    inner: Arc<dyn OperatorPath>,
    base_adjoint: ComplexMatrix,
}

pub fn log_path(inner: Arc<dyn OperatorPath>) -> Result<LogPath> {
    if inner.flavor() != Flavor::Unitary {
        return Err(Error::domain("log_path needs a unitary path"));
    }
    let base_adjoint = inner.base()?.adjoint();
    Ok(LogPath { inner, base_adjoint })
}

impl LogPath {
    /// `Z(t) = U(t)U(0)* − I` with the smallness check.
    fn offset(&self, t: f64) -> Result<(ComplexMatrix, f64)> {
        let w = self.inner.eval(t)?.matmul(&self.base_adjoint);
        let z = &w - &ComplexMatrix::identity(w.dim());
        let size = operator_norm(&z);
        if size >= 0.5 {
            return Err(Error::domain(format!(
                "‖U(t)U(0)* − I‖ = {size:.4} ≥ 1/2 at t = {t}; the logarithm path is undefined there"
            )));
        }
        Ok((z, size))
    }

    /// Number of series terms so that the bound on the `l`-th derivative of
    /// the tail, `m^l ‖Z‖^{m−l} D^l / m` with `D = max(1, ‖Z^(r)‖)`, drops
    /// below the threshold.
    fn series_length(size: f64, drift: f64, l: usize) -> usize {
        let mut m = l.max(1);
        loop {
            m += 1;
            let mf = m as f64;
            let tail = mf.powi(l as i32) * size.powi((m - l) as i32) * drift.powi(l as i32) / mf;
            if tail < LOG_SERIES_TOL || m >= MAX_SERIES_TERMS {
                return m - 1;
            }
        }
    }
}

impl OperatorPath for LogPath {
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
        self.offset(t)?;
        let w = self.inner.eval(t)?.matmul(&self.base_adjoint);
        let dec = unitary_eig(&w)?;
        Ok(dec.apply(|z| Some(C64::new(z.arg(), 0.0)))?.hermitian_part())
    }

    /// Leibniz recursion on `P_m = Z P_{m−1}` for `log(I + Z) = Σ (−1)^{m+1} Z^m / m`.
    fn deriv(&self, l: usize, t: f64) -> Result<ComplexMatrix> {
        check_order(self, l)?;
        if l == 0 {
            return self.eval(t);
        }
        let (z, size) = self.offset(t)?;
        let mut z_stack = vec![z];
        for r in 1..=l {
            z_stack.push(self.inner.deriv(r, t)?.matmul(&self.base_adjoint));
        }
        let drift = z_stack[1..].iter().map(operator_norm).fold(1.0, f64::max);
        let terms = Self::series_length(size, drift, l);

        let n = self.dim();
        let mut power = z_stack.clone();
        let mut total = power[l].clone();
        for m in 2..=terms {
            let next: Vec<ComplexMatrix> = (0..=l)
                .map(|d| {
                    let mut acc = ComplexMatrix::zeros(n);
                    for r in 0..=d {
                        acc.axpy(C64::new(binomial(d, r), 0.0), &z_stack[r].matmul(&power[d - r]));
                    }
                    acc
                })
                .collect();
            power = next;
            let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
            total.axpy(C64::new(sign / m as f64, 0.0), &power[l]);
        }
        Ok(total.scale(C64::new(0.0, -1.0)).hermitian_part())
    }

    fn base(&self) -> Result<ComplexMatrix> {
        Ok(ComplexMatrix::zeros(self.dim()))
    }

    fn label(&self) -> String {
        format!("log({})", self.inner.label())
    }
}
