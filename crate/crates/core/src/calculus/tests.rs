use std::f64::consts::TAU;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::functions::{cayley_pullback, Combination, LinePoly, TriangleStack, TrigPoly};
use crate::linalg::{SchattenOrder, Spectral};
use crate::paths::{ExpPath, LinearSAPath, ProductExpPath, ProjectionTruncation};
use crate::random::{gaussian_matrix, haar_unitary, random_hermitian, unitary_with_spectrum};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn herm(dim: usize, scale: f64, r: &mut ChaCha8Rng) -> ComplexMatrix {
    random_hermitian(dim, scale, SchattenOrder::INFINITY, r)
}

fn exp_path(dim: usize, scale: f64, r: &mut ChaCha8Rng) -> ExpPath {
    let a = herm(dim, scale, r);
    ExpPath::new(a, haar_unitary(dim, r).unwrap()).unwrap()
}

fn product_path(dim: usize, scale: f64, r: &mut ChaCha8Rng) -> ProductExpPath {
    let a1 = herm(dim, scale, r);
    let a2 = herm(dim, scale, r);
    ProductExpPath::new(a1, a2, haar_unitary(dim, r).unwrap()).unwrap()
}

fn identity_fn() -> Arc<dyn DerivStack> {
    Arc::new(TrigPoly::monomial(1, C64::new(1.0, 0.0)))
}

fn trig(degree: usize, seed: u64) -> Arc<TrigPoly> {
    Arc::new(TrigPoly::random(degree, &mut rng(seed)))
}

fn p2() -> SchattenOrder {
    SchattenOrder::new(2.0).unwrap()
}

#[test]
fn composition_enumeration() {
    let c = compositions(3, 2).unwrap();
    assert_eq!(c.iter().map(|c| c.parts.clone()).collect::<Vec<_>>(), vec![vec![1, 2], vec![2, 1]]);
    assert_eq!(compositions(4, 1).unwrap()[0].parts, vec![4]);
    assert_eq!(compositions(5, 3).unwrap().len(), 6);
    assert!(compositions(2, 3).is_err());
    assert!(compositions(2, 0).is_err());
    for k in 1..=7 {
        let mut total = 0;
        for m in 1..=k {
            let list = compositions(k, m).unwrap();
            let binom = (0..m - 1).fold(1usize, |acc, i| acc * (k - 1 - i) / (i + 1));
            assert_eq!(list.len(), binom);
            assert!(list.windows(2).all(|w| w[0] < w[1]));
            assert!(list.iter().all(|c| c.order() == k && c.parts.iter().all(|&l| l >= 1)));
            total += list.len();
        }
        assert_eq!(total, 1 << (k - 1));
    }
    assert_eq!(Composition { parts: vec![2, 1] }.weight(), 3.0);
}

#[test]
fn identity_function_returns_path_derivative() {
    let mut r = rng(1);
    let path = product_path(3, 1.0, &mut r);
    for k in 1..=3 {
        let report = derivative_unitary(identity_fn(), &path, k, 0.2).unwrap();
        let want = path.deriv(k, 0.2).unwrap();
        assert!((&report.total - &want).max_abs() < 1e-12);
        let sum = report.terms.iter().fold(ComplexMatrix::zeros(3), |acc, (_, m)| &acc + m);
        assert!((&sum - &report.total).max_abs() < 1e-13);
    }
}

#[test]
fn square_obeys_product_rule() {
    let mut r = rng(2);
    let path = exp_path(4, 1.0, &mut r);
    let sq: Arc<dyn DerivStack> = Arc::new(TrigPoly::monomial(2, C64::new(1.0, 0.0)));
    let u0 = path.base().unwrap();
    let du = path.generator().scale(C64::new(0.0, 1.0)).matmul(&u0);
    let want = &du.matmul(&u0) + &u0.matmul(&du);
    let got = derivative_unitary(sq, &path, 1, 0.0).unwrap().total;
    assert!((&got - &want).max_abs() < 1e-12);
}

#[test]
fn triangle_derivatives_match_finite_differences() {
    let mut r = rng(3);
    let path = product_path(4, 1.0, &mut r);
    let f = Arc::new(TriangleStack::new(3).unwrap());
    let t = 0.1;
    for (k, tol) in [(1, 1e-6), (2, 1e-4), (3, 1e-4)] {
        let mut report = derivative_unitary(f.clone(), &path, k, t).unwrap();
        report.attach_fd(function_path_fd(f.as_ref(), &path, k, t).unwrap(), 1.0);
        let err = report.fd_rel_error.unwrap();
        assert!(err <= tol, "k = {k}: {err}");
    }
}

#[test]
fn selfadjoint_examples() {
    let mut r = rng(4);
    let a0 = herm(3, 1.0, &mut r);
    let k = herm(3, 1.0, &mut r);
    let path = LinearSAPath::new(a0, k.clone()).unwrap();
    let id: Arc<dyn DerivStack> = Arc::new(LinePoly::monomial(1));
    assert!((&derivative_selfadjoint(id, &path, 1, 0.4).unwrap().total - &k).max_abs() < 1e-13);
    let sq: Arc<dyn DerivStack> = Arc::new(LinePoly::monomial(2));
    let got = derivative_selfadjoint(sq, &path, 2, 0.4).unwrap().total;
    assert!((&got - &k.matmul(&k).scale_real(2.0)).max_abs() < 1e-12);
}

#[test]
fn pulled_back_trig_matches_finite_differences() {
    let mut r = rng(5);
    let a0 = herm(5, 1.0, &mut r);
    let k = herm(5, 1.0, &mut r);
    let path = LinearSAPath::new(a0, k).unwrap();
    let g = Arc::new(cayley_pullback(trig(3, 6), 0.7));
    for (order, tol) in [(1, 1e-6), (2, 1e-4)] {
        let mut report = derivative_selfadjoint(g.clone(), &path, order, 0.0).unwrap();
        report.attach_fd(function_path_fd(g.as_ref(), &path, order, 0.0).unwrap(), 1.0);
        assert!(report.fd_rel_error.unwrap() <= tol);
    }
}

#[test]
fn moi_path_derivative_cases() {
    let mut r = rng(7);
    let f = trig(3, 8);
    let a0 = herm(3, 1.0, &mut r);
    let zero = ComplexMatrix::zeros(3);
    let z = herm(3, 1.0, &mut r);
    let constant = LinearSAPath::new(a0.clone(), zero.clone()).unwrap();
    let s_const = LinearSAPath::new(z.clone(), zero.clone()).unwrap();
    let d = moi_path_derivative(f.clone(), &constant, &[&s_const], 0.3).unwrap();
    assert!(d.max_abs() < 1e-13);

    let k = herm(3, 1.0, &mut r);
    let moving = LinearSAPath::new(a0.clone(), k.clone()).unwrap();
    let s1 = LinearSAPath::new(zero.clone(), z.clone()).unwrap();
    let s: [&dyn OperatorPath; 1] = [&s1];
    let exact = moi_path_derivative(f.clone(), &moving, &s, 0.0).unwrap();
    let approx = fd::richardson(&|t: f64| moi_path_value(f.clone(), &moving, &s, t), 1, 0.0).unwrap();
    assert!(fd::relative_error(&exact, &approx, 1.0) <= 1e-6);

    let s2 = LinearSAPath::new(herm(3, 1.0, &mut r), herm(3, 1.0, &mut r)).unwrap();
    let s: [&dyn OperatorPath; 2] = [&s1, &s2];
    let exact = moi_path_derivative(f.clone(), &moving, &s, 0.2).unwrap();
    let approx = fd::richardson(&|t: f64| moi_path_value(f.clone(), &moving, &s, t), 1, 0.2).unwrap();
    assert!(fd::relative_error(&exact, &approx, 1.0) <= 1e-6);
}

#[test]
fn moi_path_derivative_square_hand_expansion() {
    let mut r = rng(9);
    let sq: Arc<dyn DerivStack> = Arc::new(LinePoly::monomial(2));
    let (a0, k, s0, s1) = (herm(2, 1.0, &mut r), herm(2, 1.0, &mut r), herm(2, 1.0, &mut r), herm(2, 1.0, &mut r));
    let a = LinearSAPath::new(a0.clone(), k.clone()).unwrap();
    let s = LinearSAPath::new(s0.clone(), s1.clone()).unwrap();
    let t = 0.6;
    let (at, st) = (&a0 + &k.scale_real(t), &s0 + &s1.scale_real(t));
    let want = &(&(&k.matmul(&st) + &at.matmul(&s1)) + &s1.matmul(&at)) + &st.matmul(&k);
    let got = moi_path_derivative(sq, &a, &[&s], t).unwrap();
    assert!((&got - &want).max_abs() < 1e-12);
}

#[test]
fn perturbation_identity_cases() {
    let mut r = rng(10);
    let u = haar_unitary(4, &mut r).unwrap();
    let v = haar_unitary(4, &mut r).unwrap();
    let rec = perturbation_identity(trig(3, 11), &[], &u, &v, &[], 1, p2(), 1e-10).unwrap();
    assert!(rec.pass, "{rec:?}");

    let same = perturbation_identity(trig(3, 11), &[], &u, &u, &[], 1, p2(), 1e-10).unwrap();
    assert_eq!(same.lhs_norm, 0.0);
    assert_eq!(same.rhs_norm, 0.0);
    assert!(same.pass);

    let others: Vec<ComplexMatrix> = (0..2).map(|_| haar_unitary(4, &mut r).unwrap()).collect();
    let ks: Vec<ComplexMatrix> = (0..2).map(|_| gaussian_matrix(4, &mut r)).collect();
    let tri = Arc::new(TriangleStack::new(3).unwrap());
    for slot in 1..=3 {
        let rec = perturbation_identity(tri.clone(), &others, &u, &v, &ks, slot, p2(), 1e-10).unwrap();
        assert!(rec.pass, "slot {slot}: {rec:?}");
    }
    assert!(perturbation_identity(tri, &others, &u, &v, &ks, 4, p2(), 1e-10).is_err());
}

#[test]
fn telescoping_identity_cases() {
    let mut r = rng(12);
    let u = haar_unitary(3, &mut r).unwrap();
    let v = haar_unitary(3, &mut r).unwrap();
    let k1 = vec![gaussian_matrix(3, &mut r)];
    assert!(telescoping_identity(trig(4, 13), &u, &v, &k1, p2(), 1e-10).unwrap().pass);
    let k2 = vec![gaussian_matrix(3, &mut r), gaussian_matrix(3, &mut r)];
    let tri = Arc::new(TriangleStack::new(3).unwrap());
    assert!(telescoping_identity(tri.clone(), &u, &v, &k2, p2(), 1e-10).unwrap().pass);
    let same = telescoping_identity(tri, &u, &u, &k2, p2(), 1e-10).unwrap();
    assert_eq!(same.abs_err, 0.0);
}

#[test]
fn taylor_remainder_cases() {
    let mut r = rng(14);
    let path = exp_path(3, 1.0, &mut r);
    let f = trig(4, 15);
    let first = taylor_remainder_direct(f.clone(), &path, 0.4, 1).unwrap();
    let want = &function_of_path(f.as_ref(), &path, 0.4).unwrap() - &function_of_path(f.as_ref(), &path, 0.0).unwrap();
    assert!((&first - &want).max_abs() < 1e-14);
    assert!(taylor_remainder_direct(f.clone(), &path, 0.0, 3).unwrap().max_abs() < 1e-14);
    assert!(taylor_identity(f.clone(), &path, 0.5, 2, p2(), 1e-8).unwrap().pass);

    let prod = product_path(3, 1.0, &mut r);
    let tri = Arc::new(TriangleStack::new(3).unwrap());
    let rec = taylor_identity(tri, &prod, 0.5, 3, p2(), 1e-8).unwrap();
    assert!(rec.pass, "{rec:?}");
}

#[test]
fn taylor_remainder_of_identity_is_exponential_tail() {
    let a = ComplexMatrix::from_real_rows(&[&[0.8]]).unwrap();
    let u0 = ComplexMatrix::from_diag(&[C64::cis(1.1)]);
    let path = ExpPath::new(a, u0).unwrap();
    let t = 0.7;
    for n in 1..=4 {
        let got = taylor_remainder_direct(identity_fn(), &path, t, n).unwrap()[(0, 0)];
        let x = C64::new(0.0, 0.8 * t);
        let partial = (0..n).fold(C64::new(0.0, 0.0), |acc, k| acc + x.powu(k as u32) / factorial_f(k));
        let want = (x.exp() - partial) * C64::cis(1.1);
        assert!((got - want).norm() < 1e-14);
    }
}

fn factorial_f(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

#[test]
fn remainder_report_scaling() {
    let mut r = rng(16);
    let u0 = haar_unitary(4, &mut r).unwrap();
    let zero = remainder_estimate_report(trig(4, 17), &ComplexMatrix::zeros(4), &u0, SchattenOrder::new(4.0).unwrap(), 2).unwrap();
    assert_eq!(zero.ratio, 0.0);

    let a = random_hermitian(4, 0.1, SchattenOrder::new(4.0).unwrap(), &mut r);
    let p4 = SchattenOrder::new(4.0).unwrap();
    let logs: Vec<(f64, f64)> = [0.25, 0.5, 1.0]
        .iter()
        .map(|&s| {
            let rep = remainder_estimate_report(trig(4, 17), &a.scale_real(s), &u0, p4, 2).unwrap();
            (f64::ln(s), rep.remainder_norm.ln())
        })
        .collect();
    let slope = least_squares_slope(&logs);
    assert!((slope - 2.0).abs() <= 0.2, "{slope}");
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

#[test]
fn truncation_identity_and_convergence() {
    let mut r = rng(18);
    let v = unitary_with_spectrum(&[0.05, 0.3, 0.55, 0.95], &mut r).unwrap();
    let a = herm(4, 0.5, &mut r);
    let ks: Vec<ComplexMatrix> = (0..2).map(|_| gaussian_matrix(4, &mut r)).collect();
    let tri = Arc::new(TriangleStack::new(2).unwrap());
    for j in [1, 3, 10, 40] {
        let tr = ProjectionTruncation::new(&v, j).unwrap();
        let rec = truncation_identity(tri.clone(), &a, &tr, &ks, p2(), 1e-10).unwrap();
        assert!(rec.pass, "j = {j}: {rec:?}");
    }
    let js: Vec<usize> = (10..=40).collect();
    let errs = truncation_convergence(tri, &v, &ks, &js, p2()).unwrap();
    assert!(errs.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
    assert!(errs[0].1 > 0.0);
    assert_eq!(errs.last().unwrap().1, 0.0);
}

#[test]
fn truncation_convergence_single_perturbation_p2_is_monotone() {
    let mut r = rng(19);
    let fractions: Vec<f64> = (0..6).map(|k| (k as f64 + 0.5) / 6.2).collect();
    let v = unitary_with_spectrum(&fractions, &mut r).unwrap();
    let ks = vec![gaussian_matrix(6, &mut r)];
    let js: Vec<usize> = (1..=80).collect();
    let errs = truncation_convergence(trig(3, 20), &v, &ks, &js, p2()).unwrap();
    assert!(errs.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
    assert_eq!(errs.last().unwrap().1, 0.0);
}

#[test]
fn cayley_consistency_cases() {
    let mut r = rng(21);
    let path: Arc<dyn OperatorPath> = Arc::new(exp_path(3, 1.0, &mut r));
    let id: Arc<dyn crate::functions::CircleFunction> = Arc::new(TrigPoly::monomial(1, C64::new(1.0, 0.0)));
    assert!(cayley_consistency(id, path.clone(), 0.1, 1, 1e-10).unwrap().pass);
    let rec = cayley_consistency(trig(3, 22), path.clone(), 0.1, 2, 1e-8).unwrap();
    assert!(rec.pass, "{rec:?}");
    let tri = Arc::new(TriangleStack::new(2).unwrap());
    let rec = cayley_consistency(tri, path, 0.1, 2, 1e-7).unwrap();
    assert!(rec.pass, "{rec:?}");
}

#[test]
fn derivative_is_linear_in_the_function() {
    let mut r = rng(23);
    let path = product_path(3, 1.0, &mut r);
    let (f, g) = (trig(3, 24), trig(2, 25));
    let alpha = C64::new(0.3, -1.2);
    let combo = Arc::new(Combination { alpha, first: f.clone(), second: g.clone() });
    for k in 1..=2 {
        let lhs = derivative_unitary(combo.clone(), &path, k, 0.3).unwrap().total;
        let rhs = &derivative_unitary(f.clone(), &path, k, 0.3).unwrap().total.scale(alpha)
            + &derivative_unitary(g.clone(), &path, k, 0.3).unwrap().total;
        assert!((&lhs - &rhs).max_abs() < 1e-12);
    }
}

#[test]
fn lipschitz_report_basics() {
    let mut r = rng(26);
    let us: Vec<ComplexMatrix> = (0..2).map(|_| haar_unitary(3, &mut r).unwrap()).collect();
    let stats = lipschitz_bound_report(trig(3, 27), &us, &us, p2(), 5, &mut r).unwrap();
    assert_eq!(stats.max, 0.0);
    let h = herm(3, 1.0, &mut r);
    let dec: Spectral<f64> = crate::linalg::herm_eig(&h).unwrap();
    let ratios: Vec<f64> = [1e-2, 1e-3]
        .iter()
        .map(|&eps| {
            let rot = dec.apply(|l| Some(C64::cis(eps * l.re))).unwrap();
            let vs: Vec<ComplexMatrix> = us.iter().map(|u| rot.matmul(u)).collect();
            lipschitz_bound_report(trig(3, 27), &us, &vs, p2(), 20, &mut rng(28)).unwrap().max
        })
        .collect();
    assert!(ratios[0] / ratios[1] < 2.0 && ratios[1] / ratios[0] < 2.0, "{ratios:?}");
}

#[test]
fn spectrum_fraction_sanity() {
    let v = unitary_with_spectrum(&[0.95], &mut rng(29)).unwrap();
    assert!((v[(0, 0)].arg().rem_euclid(TAU) / TAU - 0.95).abs() < 1e-12);
}
