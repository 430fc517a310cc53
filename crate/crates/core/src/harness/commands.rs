use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;

use super::{EnsembleSpec, PathSpec, MAX_DIM, MAX_ORDER};
use crate::calculus::{
    derivative_selfadjoint, derivative_unitary, function_path_fd, remainder_estimate_report, truncation_convergence,
};
use crate::error::{Error, Result};
use crate::functions::{
    angle_sup_distance, angle_sup_norm, cayley_pullback, fejer_smooth, parse_family, steklov_smooth, CircleFunction,
    DerivStack, SUP_GRID,
};
use crate::linalg::{operator_norm, SchattenOrder};
use crate::paths::{Flavor, ProjectionTruncation};
use crate::random::{gaussian_matrix, unitary_with_spectrum};
use crate::ComplexMatrix;

/// Tab-separated table plus an overall verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandOutput {
    pub table: String,
    pub pass: bool,
}

/// Parses `a..b` (inclusive) or a comma list.
pub fn parse_range(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::config("range", format!("`{text}` is neither `a..b` nor a comma list"));
    let values: Vec<usize> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        (lo..=hi).collect()
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

fn check_dim(dim: usize) -> Result<()> {
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(Error::config("dim", format!("{dim} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

fn check_order(field: &str, n: usize) -> Result<()> {
    if !(1..=MAX_ORDER).contains(&n) {
        return Err(Error::config(field, format!("{n} outside 1..={MAX_ORDER}")));
    }
    Ok(())
}

fn family_with_order(family: &str, seed: u64, needed: usize) -> Result<Arc<dyn CircleFunction>> {
    let f = parse_family(family, seed)?;
    if f.order() < needed {
        return Err(Error::config(
            "family",
            format!("`{family}` has {} derivatives, {needed} needed", f.order()),
        ));
    }
    Ok(f)
}

fn push_matrix(out: &mut String, m: &ComplexMatrix) {
    out.push_str("row\tcol\tre\tim\n");
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            let z = m[(i, j)];
            let _ = writeln!(out, "{i}\t{j}\t{:.12e}\t{:.12e}", z.re, z.im);
        }
    }
}

/// `d^k/dt^k f(X(t))` along a CLI path: per-composition term norms, the
/// entries of the derivative, and the Richardson FD relative error.
/// Selfadjoint paths use the Cayley pullback `x ↦ f((x+i)/(x−i))`.
pub fn cmd_derivative(spec: &PathSpec, family: &str, k: usize, t: f64, tol_fd: f64) -> Result<CommandOutput> {
    check_order("k", k)?;
    if !t.is_finite() {
        return Err(Error::config("t", "must be finite"));
    }
    let path = spec.build()?;
    let circle = family_with_order(family, spec.seed, k)?;
    let f: Arc<dyn DerivStack> = match path.flavor() {
        Flavor::Unitary => circle,
        Flavor::SelfAdjoint => Arc::new(cayley_pullback(circle, 0.0)),
    };
    let mut report = match path.flavor() {
        Flavor::Unitary => derivative_unitary(f.clone(), path.as_ref(), k, t)?,
        Flavor::SelfAdjoint => derivative_selfadjoint(f.clone(), path.as_ref(), k, t)?,
    };
    let reference = function_path_fd(f.as_ref(), path.as_ref(), k, t)?;
    report.attach_fd(reference, 1.0);
    let fd_err = report.fd_rel_error.unwrap_or(f64::NAN);

    let mut out = String::new();
    let _ = writeln!(out, "# derivative k={k} t={t} path={} f={}", path.label(), f.label());
    out.push_str("composition\tfrobenius\n");
    for (comp, term) in &report.terms {
        let _ = writeln!(out, "{comp}\t{:.12e}", term.frobenius_norm());
    }
    push_matrix(&mut out, &report.total);
    let _ = writeln!(out, "fd_rel_error\t{fd_err:.3e}");
    Ok(CommandOutput {
        table: out,
        pass: fd_err.is_finite() && fd_err <= tol_fd,
    })
}

/// Least-squares slope of `ln y` against `ln x` over pairs with `y > 0`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Remainder `‖R_{n,f,U}(1)‖_{p/n}` for `U(t) = e^{itsA}U₀` over the scales
/// `s`, with the fitted exponent in `s`.
pub fn cmd_remainder(family: &str, dim: usize, n: usize, p: f64, scales: &[f64], seed: u64) -> Result<CommandOutput> {
    check_dim(dim)?;
    check_order("n", n)?;
    let p = SchattenOrder::new(p).map_err(|_| Error::config("p", format!("{p} is not a Schatten exponent")))?;
    if p.is_infinite() {
        return Err(Error::config("p", "must be finite"));
    }
    if scales.is_empty() || scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::config("scales", "need positive finite scales"));
    }
    let f = family_with_order(family, seed, n)?;
    let ens = EnsembleSpec::new(dim, seed);
    let a = ens.hermitian("generator", p);
    let u0 = ens.unitary("base")?;

    let mut out = String::new();
    let _ = writeln!(out, "# remainder n={n} p={p} dim={dim} f={}", f.label());
    out.push_str("scale\tremainder_norm\tgenerator_norm\tratio\n");
    let mut points = Vec::with_capacity(scales.len());
    for &s in scales {
        let r = remainder_estimate_report(f.clone(), &a.scale_real(s), &u0, p, n)?;
        let _ = writeln!(
            out,
            "{s}\t{:.12e}\t{:.12e}\t{:.12e}",
            r.remainder_norm, r.generator_norm, r.ratio
        );
        points.push((s, r.remainder_norm));
    }
    let slope = log_log_slope(&points);
    match slope {
        Some(v) => {
            let _ = writeln!(out, "slope\t{v:.6}");
        }
        None => out.push_str("slope\tnan\n"),
    }
    Ok(CommandOutput {
        table: out,
        pass: slope.is_some_and(f64::is_finite),
    })
}

/// Fejér and Steklov approximants of a family over `js`: sampled
/// `sup |d^k/dt^k (f − f_j)|` for both, and the Fejér derivative sup next to
/// that of `f`.
pub fn cmd_smooth(family: &str, js: &[usize], k: usize, seed: u64) -> Result<CommandOutput> {
    if js.is_empty() || js.contains(&0) {
        return Err(Error::config("j", "need positive smoothing indices"));
    }
    let f = family_with_order(family, seed, k)?;
    let base_sup = angle_sup_norm(f.as_ref(), k, SUP_GRID);
    let mut out = String::new();
    let _ = writeln!(out, "# smooth f={} k={k} sup_f={base_sup:.12e}", f.label());
    out.push_str("j\tfejer_distance\tsteklov_distance\tfejer_sup\n");
    let mut previous = f64::INFINITY;
    let mut decreasing = true;
    for &j in js {
        let fejer = fejer_smooth(f.as_ref(), j);
        let steklov = steklov_smooth(f.clone(), j);
        let fejer_dist = angle_sup_distance(f.as_ref(), &fejer, k, SUP_GRID);
        let steklov_dist = angle_sup_distance(f.as_ref(), &steklov, k, SUP_GRID);
        let fejer_sup = angle_sup_norm(&fejer, k, SUP_GRID);
        let _ = writeln!(out, "{j}\t{fejer_dist:.12e}\t{steklov_dist:.12e}\t{fejer_sup:.12e}");
        decreasing &= fejer_dist <= previous;
        previous = fejer_dist;
    }
    Ok(CommandOutput { table: out, pass: decreasing })
}

/// Truncation error `‖Γ^{(VP_j)^{n+1}}(f^[n])(K⃗_j) − Γ^{(V)^{n+1}}(f^[n])(K⃗)‖_p`
/// for a random `V` with uniform eigenvalue arguments.
pub fn cmd_truncate(family: &str, dim: usize, n: usize, p: f64, js: &[usize], seed: u64) -> Result<CommandOutput> {
    check_dim(dim)?;
    check_order("n", n)?;
    if js.is_empty() || js.contains(&0) {
        return Err(Error::config("j", "need positive truncation indices"));
    }
    let p = SchattenOrder::new(p).map_err(|_| Error::config("p", format!("{p} is not a Schatten exponent")))?;
    let f = family_with_order(family, seed, n)?;
    let ens = EnsembleSpec::new(dim, seed);
    let mut rng = ens.rng("truncate");
    let fractions: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let v = unitary_with_spectrum(&fractions, &mut rng)?;
    let ks: Vec<ComplexMatrix> = (0..n).map(|_| gaussian_matrix(dim, &mut rng)).collect();
    let errors = truncation_convergence(f.clone(), &v, &ks, js, p)?;

    let mut out = String::new();
    let _ = writeln!(out, "# truncate f={} n={n} p={p} dim={dim}", f.label());
    out.push_str("j\trank\terror\n");
    let mut previous = f64::INFINITY;
    let mut nonincreasing = true;
    for (j, err) in errors {
        let tr = ProjectionTruncation::new(&v, j)?;
        let _ = writeln!(out, "{j}\t{}\t{err:.12e}", tr.rank());
        nonincreasing &= err <= previous + 1e-12 * operator_norm(&v).max(1.0);
        previous = err;
    }
    Ok(CommandOutput {
        table: out,
        pass: nonincreasing,
    })
}
