//! Derivative formulas for `t ↦ f(U(t))` and `t ↦ g(A(t))`, perturbation
//! identities and Taylor remainders, each paired with an independent route.
//!
//! For a path `X` and `k ≥ 1`:
//!
//! ```text
//! d^k/dt^k f(X(t)) = Σ_{m=1}^{k} Σ_{l₁+…+l_m=k} k!/(l₁!⋯l_m!) Γ^{(X(t))^{m+1}}(f^[m])(X̃^(l₁)(t), …, X̃^(l_m)(t))
//! ```

mod identities;
mod record;
mod taylor;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fd;
use crate::functions::DerivStack;
use crate::linalg::{herm_eig, unitary_eig, Spectral};
use crate::moi::{MoiOperator, MoiSymbol};
use crate::paths::{Flavor, OperatorPath};
use crate::{ComplexMatrix, C64};

pub use identities::{
    cayley_consistency, perturbation_identity, telescoping_identity, truncation_convergence,
    truncation_identity,
};
pub use record::{CheckParams, CheckRecord, REL_FLOOR};
pub use taylor::{
    lipschitz_bound_report, remainder_estimate_report, taylor_identity, taylor_remainder_direct,
    taylor_remainder_moi, RemainderReport,
};

/// Ordered tuple `(l₁, …, l_m)` of positive parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition {
    pub parts: Vec<usize>,
}

impl Composition {
    pub fn order(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `k! / (l₁! ⋯ l_m!)`.
    pub fn weight(&self) -> f64 {
        let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        fact(self.order()) / self.parts.iter().map(|&l| fact(l)).product::<f64>()
    }
}

impl std::fmt::Display for Composition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(|l| l.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Compositions of `k` into exactly `m` positive parts, lexicographic.
pub fn compositions(k: usize, m: usize) -> Result<Vec<Composition>> {
    if m == 0 || m > k {
        return Err(Error::domain(format!("no compositions of {k} into {m} positive parts")));
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(m);
    fill(k, m, &mut current, &mut out);
    Ok(out)
}

fn fill(remaining: usize, slots: usize, current: &mut Vec<usize>, out: &mut Vec<Composition>) {
    if slots == 1 {
        current.push(remaining);
        out.push(Composition { parts: current.clone() });
        current.pop();
        return;
    }
    for first in 1..=remaining - (slots - 1) {
        current.push(first);
        fill(remaining - first, slots - 1, current, out);
        current.pop();
    }
}

/// `k`-th derivative together with its per-composition breakdown.
#[derive(Clone, Debug)]
pub struct DerivativeReport {
    pub order: usize,
    pub total: ComplexMatrix,
    pub terms: Vec<(Composition, ComplexMatrix)>,
    pub fd_reference: Option<ComplexMatrix>,
    pub fd_rel_error: Option<f64>,
}

impl DerivativeReport {
    /// Attaches a finite-difference reference of `t ↦ f(X(t))`.
    pub fn attach_fd(&mut self, reference: ComplexMatrix, scale: f64) {
        self.fd_rel_error = Some(fd::relative_error(&self.total, &reference, scale));
        self.fd_reference = Some(reference);
    }
}

pub(crate) fn decompose(m: &ComplexMatrix, flavor: Flavor) -> Result<Spectral<f64>> {
    match flavor {
        Flavor::Unitary => unitary_eig(m),
        Flavor::SelfAdjoint => herm_eig(m),
    }
}

fn check_derivative_orders(f: &dyn DerivStack, path: &dyn OperatorPath, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::domain("derivative order must be at least 1"));
    }
    if f.order() < k {
        return Err(Error::domain(format!("{} has only {} derivatives, {k} requested", f.label(), f.order())));
    }
    if path.order() < k {
        return Err(Error::domain(format!("path {} has order {}, {k} requested", path.label(), path.order())));
    }
    Ok(())
}

fn derivative_formula(f: Arc<dyn DerivStack>, path: &dyn OperatorPath, flavor: Flavor, k: usize, t: f64) -> Result<DerivativeReport> {
    if path.flavor() != flavor {
        return Err(Error::domain(format!("path {} has the wrong flavor for this formula", path.label())));
    }
    check_derivative_orders(f.as_ref(), path, k)?;
    let dec = decompose(&path.eval(t)?, flavor)?;
    let derivs: Vec<ComplexMatrix> = (1..=k).map(|l| path.deriv(l, t)).collect::<Result<_>>()?;
    let mut total = ComplexMatrix::zeros(path.dim());
    let mut terms = Vec::new();
    for m in 1..=k {
        let op = MoiOperator::new(vec![&dec; m + 1], MoiSymbol::divided_difference(f.clone(), m)?)?;
        for comp in compositions(k, m)? {
            let ks: Vec<&ComplexMatrix> = comp.parts.iter().map(|&l| &derivs[l - 1]).collect();
            let term = op.apply(&ks)?.scale_real(comp.weight());
            total = &total + &term;
            terms.push((comp, term));
        }
    }
    Ok(DerivativeReport {
        order: k,
        total,
        terms,
        fd_reference: None,
        fd_rel_error: None,
    })
}

/// `d^k/dt^k f(U(t))` for a circle function and a unitary path; one
/// eigendecomposition of `U(t)` serves every term.
pub fn derivative_unitary(f: Arc<dyn DerivStack>, path: &dyn OperatorPath, k: usize, t: f64) -> Result<DerivativeReport> {
    derivative_formula(f, path, Flavor::Unitary, k, t)
}

/// `d^k/dt^k g(A(t))` for a line function and a selfadjoint path.
pub fn derivative_selfadjoint(g: Arc<dyn DerivStack>, path: &dyn OperatorPath, k: usize, t: f64) -> Result<DerivativeReport> {
    derivative_formula(g, path, Flavor::SelfAdjoint, k, t)
}

/// `f(X(t))` by functional calculus.
pub fn function_of_path(f: &dyn DerivStack, path: &dyn OperatorPath, t: f64) -> Result<ComplexMatrix> {
    let dec = decompose(&path.eval(t)?, path.flavor())?;
    dec.apply(|z| {
        f.check_point(z).ok()?;
        Some(f.eval(z))
    })
}

/// Richardson central difference of `t ↦ f(X(t))`.
pub fn function_path_fd(f: &dyn DerivStack, path: &dyn OperatorPath, k: usize, t: f64) -> Result<ComplexMatrix> {
    fd::richardson(&|s: f64| function_of_path(f, path, s), k, t)
}

fn path_value(path: &dyn OperatorPath, t: f64) -> Result<ComplexMatrix> {
    path.eval(t)
}

/// `Γ^{(A(t))^n}(f^[n−1])(S₁(t), …, S_{n−1}(t))`.
pub fn moi_path_value(f: Arc<dyn DerivStack>, a: &dyn OperatorPath, s: &[&dyn OperatorPath], t: f64) -> Result<ComplexMatrix> {
    let dec = herm_eig(&a.eval(t)?)?;
    let n = s.len() + 1;
    let op = MoiOperator::new(vec![&dec; n], MoiSymbol::divided_difference(f, n - 1)?)?;
    let values: Vec<ComplexMatrix> = s.iter().map(|p| path_value(*p, t)).collect::<Result<_>>()?;
    let refs: Vec<&ComplexMatrix> = values.iter().collect();
    op.apply(&refs)
}

/// Derivative of [`moi_path_value`]: one term per differentiated `S_k`, plus
/// one term per insertion slot for `Ã′(t)` in the order-`n` operator.
pub fn moi_path_derivative(f: Arc<dyn DerivStack>, a: &dyn OperatorPath, s: &[&dyn OperatorPath], t: f64) -> Result<ComplexMatrix> {
    if a.flavor() != Flavor::SelfAdjoint {
        return Err(Error::domain("moi_path_derivative needs a selfadjoint base path"));
    }
    let n = s.len() + 1;
    if f.order() < n {
        return Err(Error::domain(format!("{} has only {} derivatives, {n} needed", f.label(), f.order())));
    }
    let dec = herm_eig(&a.eval(t)?)?;
    let values: Vec<ComplexMatrix> = s.iter().map(|p| path_value(*p, t)).collect::<Result<_>>()?;
    let slopes: Vec<ComplexMatrix> = s.iter().map(|p| p.deriv(1, t)).collect::<Result<_>>()?;
    let a_slope = a.deriv(1, t)?;

    let mut total = ComplexMatrix::zeros(a.dim());
    if !s.is_empty() {
        let op = MoiOperator::new(vec![&dec; n], MoiSymbol::divided_difference(f.clone(), n - 1)?)?;
        for k in 0..s.len() {
            let ks: Vec<&ComplexMatrix> = (0..s.len()).map(|q| if q == k { &slopes[q] } else { &values[q] }).collect();
            total = &total + &op.apply(&ks)?;
        }
    }
    let op = MoiOperator::new(vec![&dec; n + 1], MoiSymbol::divided_difference(f, n)?)?;
    for slot in 0..n {
        let mut ks: Vec<&ComplexMatrix> = values.iter().collect();
        ks.insert(slot, &a_slope);
        total = &total + &op.apply(&ks)?;
    }
    Ok(total)
}

pub(crate) fn c64(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[cfg(test)]
mod tests;
