use std::sync::Arc;

use super::{derivative_selfadjoint, derivative_unitary, CheckRecord};
use crate::error::{Error, Result};
use crate::functions::{cayley_pullback, CircleFunction, DerivStack};
use crate::linalg::{expm_hermitian, schatten_norm, unitary_eig, SchattenOrder, Spectral};
use crate::moi::{MoiOperator, MoiSymbol};
use crate::paths::{cayley_path, choose_rotation, truncate, OperatorPath, ProjectionTruncation};
use crate::ComplexMatrix;

fn moi(f: &Arc<dyn DerivStack>, decs: Vec<&Spectral<f64>>, ks: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    let order = decs.len() - 1;
    MoiOperator::new(decs, MoiSymbol::divided_difference(f.clone(), order)?)?.apply(ks)
}

fn with_inserted<'a>(ks: &[&'a ComplexMatrix], slot: usize, extra: &'a ComplexMatrix) -> Vec<&'a ComplexMatrix> {
    let mut out = ks.to_vec();
    out.insert(slot, extra);
    out
}

/// `Γ^{…,U,…}(f^[n−1])(K⃗) − Γ^{…,V,…}(f^[n−1])(K⃗)` against
/// `Γ^{…,U,V,…}(f^[n])(K₁,…,K_{i−1},U−V,K_i,…)`, with `U` inserted before
/// `others[slot − 1]` (`slot ∈ 1..=n`, `n = others.len() + 1`).
#[allow(clippy::too_many_arguments)]
pub fn perturbation_identity(
    f: Arc<dyn DerivStack>,
    others: &[ComplexMatrix],
    u: &ComplexMatrix,
    v: &ComplexMatrix,
    ks: &[ComplexMatrix],
    slot: usize,
    p: SchattenOrder,
    tol: f64,
) -> Result<CheckRecord> {
    let n = others.len() + 1;
    if ks.len() != others.len() {
        return Err(Error::Dimension {
            expected: others.len(),
            found: ks.len(),
        });
    }
    if !(1..=n).contains(&slot) {
        return Err(Error::domain(format!("insertion index {slot} outside 1..={n}")));
    }
    let other_decs: Vec<Spectral<f64>> = others.iter().map(unitary_eig).collect::<Result<_>>()?;
    let du = unitary_eig(u)?;
    let dv = unitary_eig(v)?;
    fn at<'a>(others: &'a [Spectral<f64>], slot: usize, inserted: &[&'a Spectral<f64>]) -> Vec<&'a Spectral<f64>> {
        let mut list: Vec<&Spectral<f64>> = others.iter().collect();
        for (offset, d) in inserted.iter().enumerate() {
            list.insert(slot - 1 + offset, d);
        }
        list
    }
    let k_refs: Vec<&ComplexMatrix> = ks.iter().collect();
    let lhs = &moi(&f, at(&other_decs, slot, &[&du]), &k_refs)? - &moi(&f, at(&other_decs, slot, &[&dv]), &k_refs)?;
    let diff = u - v;
    let rhs = moi(&f, at(&other_decs, slot, &[&du, &dv]), &with_inserted(&k_refs, slot - 1, &diff))?;
    Ok(CheckRecord::compare("perturbation", n, &lhs, &rhs, p, tol))
}

/// `Γ^{(U)^n}(f^[n−1])(K⃗) − Γ^{(V)^n}(f^[n−1])(K⃗)` against
/// `Σ_{i=1}^{n} Γ^{(U)^i,(V)^{n−i+1}}(f^[n])(K₁,…,K_{i−1},U−V,K_i,…)`.
pub fn telescoping_identity(
    f: Arc<dyn DerivStack>,
    u: &ComplexMatrix,
    v: &ComplexMatrix,
    ks: &[ComplexMatrix],
    p: SchattenOrder,
    tol: f64,
) -> Result<CheckRecord> {
    let n = ks.len() + 1;
    let du = unitary_eig(u)?;
    let dv = unitary_eig(v)?;
    let k_refs: Vec<&ComplexMatrix> = ks.iter().collect();
    let lhs = &moi(&f, vec![&du; n], &k_refs)? - &moi(&f, vec![&dv; n], &k_refs)?;
    let diff = u - v;
    let mut rhs = ComplexMatrix::zeros(u.dim());
    for i in 1..=n {
        let mut decs = vec![&du; i];
        decs.extend(std::iter::repeat_n(&dv, n - i + 1));
        rhs = &rhs + &moi(&f, decs, &with_inserted(&k_refs, i - 1, &diff))?;
    }
    Ok(CheckRecord::compare("telescoping", n, &lhs, &rhs, p, tol))
}

/// `Γ^{(e^{iA_j}V_j)^{n+1}}(f^[n])(K⃗_j)` realised on `range(P_j)` against
/// `Γ^{(e^{iA_j}V)^{n+1}}(f^[n])(K⃗_j)` on the full space, where
/// `A_j = P_j A P_j` and `K_{i,j} = P_j K_i P_j`.
pub fn truncation_identity(
    f: Arc<dyn DerivStack>,
    a: &ComplexMatrix,
    tr: &ProjectionTruncation,
    ks: &[ComplexMatrix],
    p: SchattenOrder,
    tol: f64,
) -> Result<CheckRecord> {
    if ks.is_empty() {
        return Err(Error::domain("truncation_identity needs at least one perturbation"));
    }
    let n = ks.len();
    let dim = tr.dim();
    let lhs = if tr.rank() == 0 {
        ComplexMatrix::zeros(dim)
    } else {
        let reduced = expm_hermitian(&tr.compress(a).hermitian_part())?.matmul(&tr.reduced_unitary());
        let dec = unitary_eig(&reduced)?;
        let compressed: Vec<ComplexMatrix> = ks.iter().map(|k| tr.compress(k)).collect();
        let refs: Vec<&ComplexMatrix> = compressed.iter().collect();
        tr.expand(&moi(&f, vec![&dec; n + 1], &refs)?)
    };
    let full = expm_hermitian(&truncate(tr, a).hermitian_part())?.matmul(&tr.spectral().reconstruct());
    let dec = unitary_eig(&full)?;
    let truncated: Vec<ComplexMatrix> = ks.iter().map(|k| truncate(tr, k)).collect();
    let refs: Vec<&ComplexMatrix> = truncated.iter().collect();
    let rhs = moi(&f, vec![&dec; n + 1], &refs)?;
    Ok(CheckRecord::compare("truncation", n, &lhs, &rhs, p, tol))
}

/// `‖Γ^{(VP_j)^{n+1}}(f^[n])(K⃗_j) − Γ^{(V)^{n+1}}(f^[n])(K⃗)‖_p` for each `j`.
///
/// Both sides run through the same eigenbasis route, so the error is exactly
/// zero once `P_j = I`.
pub fn truncation_convergence(
    f: Arc<dyn DerivStack>,
    v: &ComplexMatrix,
    ks: &[ComplexMatrix],
    js: &[usize],
    p: SchattenOrder,
) -> Result<Vec<(usize, f64)>> {
    if ks.is_empty() {
        return Err(Error::domain("truncation_convergence needs at least one perturbation"));
    }
    let dec = unitary_eig(v)?;
    let n = ks.len();
    let on_range = |tr: &ProjectionTruncation| -> Result<ComplexMatrix> {
        if tr.rank() == 0 {
            return Ok(ComplexMatrix::zeros(tr.dim()));
        }
        let reduced = tr.reduced_spectral();
        let compressed: Vec<ComplexMatrix> = ks.iter().map(|k| tr.compress(k)).collect();
        let refs: Vec<&ComplexMatrix> = compressed.iter().collect();
        Ok(tr.expand(&moi(&f, vec![&reduced; n + 1], &refs)?))
    };
    let reference = on_range(&ProjectionTruncation::full(dec.clone()))?;
    js.iter()
        .map(|&j| {
            let tr = ProjectionTruncation::from_spectral(dec.clone(), j)?;
            Ok((j, schatten_norm(&(&on_range(&tr)? - &reference), p)))
        })
        .collect()
}

/// `d^k/dt^k f(U(t))` against `d^k/dt^k g(A(t))` with `A` the rotated Cayley
/// path and `g(x) = f(e^{iθ} η(x))`; compared in the Frobenius norm.
pub fn cayley_consistency(
    f: Arc<dyn CircleFunction>,
    path: Arc<dyn OperatorPath>,
    t: f64,
    k: usize,
    tol: f64,
) -> Result<CheckRecord> {
    let theta = choose_rotation(path.as_ref(), &[0.0, t])?;
    let selfadjoint = cayley_path(path.clone(), theta)?;
    let pulled = Arc::new(cayley_pullback(f.clone(), theta));
    let lhs = derivative_unitary(f, path.as_ref(), k, t)?.total;
    let rhs = derivative_selfadjoint(pulled, &selfadjoint, k, t)?.total;
    Ok(CheckRecord::compare("cayley", k, &lhs, &rhs, SchattenOrder::new(2.0)?, tol))
}
