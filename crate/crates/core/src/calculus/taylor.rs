use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use super::{c64, compositions, derivative_unitary, function_of_path, CheckRecord};
use crate::error::{Error, Result};
use crate::functions::{sup_norm, CircleFunction, DerivStack, SUP_GRID};
use crate::linalg::{schatten_norm, unitary_eig, SchattenOrder, Spectral};
use crate::moi::{MoiOperator, MoiSymbol, RatioStats};
use crate::paths::{ExpPath, Flavor, OperatorPath};
use crate::random::gaussian_matrix;
use crate::ComplexMatrix;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn require_unitary_path(path: &dyn OperatorPath, n: usize) -> Result<()> {
    if path.flavor() != Flavor::Unitary {
        return Err(Error::domain("Taylor remainders are defined for unitary paths"));
    }
    if n == 0 {
        return Err(Error::domain("remainder order must be at least 1"));
    }
    Ok(())
}

/// `f(U(t)) − f(U(0)) − Σ_{k=1}^{n−1} t^k/k! φ^(k)(0)` with `φ = f∘U`.
pub fn taylor_remainder_direct(f: Arc<dyn DerivStack>, path: &dyn OperatorPath, t: f64, n: usize) -> Result<ComplexMatrix> {
    require_unitary_path(path, n)?;
    let mut out = &function_of_path(f.as_ref(), path, t)? - &function_of_path(f.as_ref(), path, 0.0)?;
    for k in 1..n {
        let term = derivative_unitary(f.clone(), path, k, 0.0)?.total;
        out.axpy(c64(-t.powi(k as i32) / factorial(k)), &term);
    }
    Ok(out)
}

/// `Σ_m Σ_{l₁+…+l_m=n} Γ^{U(t),(U(0))^m}(f^[m])(R_{l₁}(t), t^{l₂}Ũ^(l₂)(0)/l₂!, …)`
/// with `R_l(t) = Ũ(t) − Σ_{k<l} t^k/k! Ũ^(k)(0)`.
pub fn taylor_remainder_moi(f: Arc<dyn DerivStack>, path: &dyn OperatorPath, t: f64, n: usize) -> Result<ComplexMatrix> {
    require_unitary_path(path, n)?;
    if f.order() < n || path.order() < n {
        return Err(Error::domain(format!("remainder of order {n} needs {n} derivatives of f and of the path")));
    }
    let dec_t = unitary_eig(&path.eval(t)?)?;
    let dec_0 = unitary_eig(&path.base()?)?;
    let difference = path.deriv(0, t)?;
    let scaled: Vec<ComplexMatrix> = (1..=n)
        .map(|l| Ok(path.deriv(l, 0.0)?.scale_real(t.powi(l as i32) / factorial(l))))
        .collect::<Result<_>>()?;
    let remainders: Vec<ComplexMatrix> = (1..=n)
        .map(|l| {
            let mut r = difference.clone();
            for s in &scaled[..l - 1] {
                r = &r - s;
            }
            r
        })
        .collect();

    let mut total = ComplexMatrix::zeros(path.dim());
    for m in 1..=n {
        let mut decs: Vec<&Spectral<f64>> = vec![&dec_t];
        decs.extend(std::iter::repeat_n(&dec_0, m));
        let op = MoiOperator::new(decs, MoiSymbol::divided_difference(f.clone(), m)?)?;
        for comp in compositions(n, m)? {
            let mut ks: Vec<&ComplexMatrix> = vec![&remainders[comp.parts[0] - 1]];
            ks.extend(comp.parts[1..].iter().map(|&l| &scaled[l - 1]));
            total = &total + &op.apply(&ks)?;
        }
    }
    Ok(total)
}

/// Direct remainder against its multiple-operator-integral representation.
pub fn taylor_identity(
    f: Arc<dyn DerivStack>,
    path: &dyn OperatorPath,
    t: f64,
    n: usize,
    p: SchattenOrder,
    tol: f64,
) -> Result<CheckRecord> {
    let lhs = taylor_remainder_direct(f.clone(), path, t, n)?;
    let rhs = taylor_remainder_moi(f, path, t, n)?;
    Ok(CheckRecord::compare("taylor", n, &lhs, &rhs, p, tol))
}

/// `‖R_{n,f,U}(1)‖_{p/n}` for `U(t) = e^{itA}U₀`, normalised by
/// `Σ_{m=1}^{n} ‖f^(m)‖_∞ ‖A‖_p^n`.
#[derive(Clone, Debug, Serialize)]
pub struct RemainderReport {
    pub n: usize,
    pub p: f64,
    pub remainder_norm: f64,
    pub generator_norm: f64,
    pub sup_sum: f64,
    pub ratio: f64,
    /// `p/n < 1`: the remainder is measured in a quasi-norm.
    pub quasi_norm: bool,
}

pub fn remainder_estimate_report(
    f: Arc<dyn CircleFunction>,
    a: &ComplexMatrix,
    u0: &ComplexMatrix,
    p: SchattenOrder,
    n: usize,
) -> Result<RemainderReport> {
    if n == 0 || p.is_infinite() {
        return Err(Error::domain("remainder estimate needs n ≥ 1 and finite p"));
    }
    let path = ExpPath::new(a.clone(), u0.clone())?;
    let remainder = taylor_remainder_direct(f.clone(), &path, 1.0, n)?;
    let reduced = SchattenOrder::new(p.get() / n as f64)?;
    let remainder_norm = schatten_norm(&remainder, reduced);
    let generator_norm = schatten_norm(a, p);
    let sup_sum: f64 = (1..=n).map(|m| sup_norm(f.as_ref(), m, SUP_GRID)).sum();
    let denom = sup_sum * generator_norm.powi(n as i32);
    let ratio = if remainder_norm == 0.0 { 0.0 } else { remainder_norm / denom };
    Ok(RemainderReport {
        n,
        p: p.get(),
        remainder_norm,
        generator_norm,
        sup_sum,
        ratio,
        quasi_norm: reduced.get() < 1.0,
    })
}

/// Sampled `‖(Γ^{U⃗} − Γ^{V⃗})(f^[n−1])(K⃗)‖_p / (‖f^(n)‖_∞ max_k ‖U_k − V_k‖_p Π ‖K_i‖_p)`.
pub fn lipschitz_bound_report<R: Rng + ?Sized>(
    f: Arc<dyn CircleFunction>,
    us: &[ComplexMatrix],
    vs: &[ComplexMatrix],
    p: SchattenOrder,
    trials: usize,
    rng: &mut R,
) -> Result<RatioStats> {
    let n = us.len();
    if n == 0 || vs.len() != n {
        return Err(Error::Dimension { expected: n, found: vs.len() });
    }
    let spread = us.iter().zip(vs).map(|(u, v)| schatten_norm(&(u - v), p)).fold(0.0, f64::max);
    if spread == 0.0 {
        return Ok(RatioStats { max: 0.0, mean: 0.0, samples: trials.max(1) });
    }
    let sup = sup_norm(f.as_ref(), n, SUP_GRID);
    let du: Vec<Spectral<f64>> = us.iter().map(unitary_eig).collect::<Result<_>>()?;
    let dv: Vec<Spectral<f64>> = vs.iter().map(unitary_eig).collect::<Result<_>>()?;
    let symbol = || MoiSymbol::divided_difference(f.clone(), n - 1);
    let op_u = MoiOperator::new(du.iter().collect(), symbol()?)?;
    let op_v = MoiOperator::new(dv.iter().collect(), symbol()?)?;
    let dim = us[0].dim();
    let rounds = if n == 1 { 1 } else { trials.max(1) };
    let mut max = 0.0f64;
    let mut total = 0.0;
    for _ in 0..rounds {
        let ks: Vec<ComplexMatrix> = (1..n).map(|_| gaussian_matrix(dim, rng)).collect();
        let refs: Vec<&ComplexMatrix> = ks.iter().collect();
        let diff = &op_u.apply(&refs)? - &op_v.apply(&refs)?;
        let probe: f64 = ks.iter().map(|k| schatten_norm(k, p)).product();
        let ratio = schatten_norm(&diff, p) / (sup * spread * probe);
        max = max.max(ratio);
        total += ratio;
    }
    Ok(RatioStats { max, mean: total / rounds as f64, samples: rounds })
}
