//! Acceptance criteria 1–12. Each test writes one status line to stdout
//! (bypassing libtest capture) and then asserts.

use std::io::Write;
use std::process::Command;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use opcalc::calculus::{
    cayley_consistency, derivative_selfadjoint, function_path_fd, moi_path_derivative, moi_path_value,
    remainder_estimate_report, taylor_remainder_direct, truncation_convergence, CheckRecord,
};
use opcalc::divdiff::{divided_difference, NodeTuple};
use opcalc::fd;
use opcalc::functions::{
    angle_sup_distance, angle_sup_norm, cayley_pullback, fejer_smooth, steklov_smooth, sup_norm, CircleFunction,
    DerivStack, LineExp, TriangleStack, TrigPoly, SUP_GRID,
};
use opcalc::harness::{log_log_slope, run_suite, SuiteConfig, SuiteOutcome};
use opcalc::linalg::{herm_eig, unitary_eig, SchattenOrder};
use opcalc::moi::{moi_norm_ratio, MoiOperator, MoiSymbol};
use opcalc::paths::{ExpPath, LinearSAPath, OperatorPath, ProductExpPath};
use opcalc::random::{gaussian_matrix, haar_unitary, random_hermitian, unitary_with_spectrum};
use opcalc::{ComplexMatrix, C64};

fn report(id: u32, title: &str, pass: bool, detail: String) {
    let status = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {id:>2} {status} {title}: {detail}");
    let _ = out.flush();
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn op_norm() -> SchattenOrder {
    SchattenOrder::INFINITY
}

fn frobenius() -> SchattenOrder {
    SchattenOrder::new(2.0).unwrap()
}

fn random_trig(r: &mut ChaCha8Rng) -> Arc<dyn CircleFunction> {
    let degree = r.gen_range(1..=5);
    Arc::new(TrigPoly::random(degree, r))
}

fn triangle(n: usize) -> Arc<dyn CircleFunction> {
    Arc::new(TriangleStack::new(n).unwrap())
}

fn unitary_path(dim: usize, product: bool, r: &mut ChaCha8Rng) -> Arc<dyn OperatorPath> {
    let u0 = haar_unitary(dim, r).unwrap();
    if product {
        let a = random_hermitian(dim, 0.7, op_norm(), r);
        let b = random_hermitian(dim, 0.7, op_norm(), r);
        Arc::new(ProductExpPath::new(a, b, u0).unwrap())
    } else {
        Arc::new(ExpPath::new(random_hermitian(dim, 1.0, op_norm(), r), u0).unwrap())
    }
}

/// Identity + FD suite at the criterion-1 grid, shared by criteria 1 and 2.
fn suite() -> &'static SuiteOutcome {
    static OUTCOME: OnceLock<SuiteOutcome> = OnceLock::new();
    OUTCOME.get_or_init(|| {
        let cfg = SuiteConfig {
            dims: vec![2, 3, 4, 6],
            orders: vec![1, 2, 3],
            ps: vec![2.0, 4.0],
            families: vec!["trig".into(), "triangle".into()],
            trials: 50,
            seed: 7,
            ..SuiteConfig::default()
        };
        run_suite(&cfg).expect("suite config is valid")
    })
}

fn summarize<'a>(records: impl Iterator<Item = &'a CheckRecord>) -> (usize, usize, f64) {
    let (mut total, mut failed, mut worst) = (0, 0, 0.0f64);
    for r in records {
        total += 1;
        if !r.pass {
            failed += 1;
        }
        worst = worst.max(if r.rel_err.is_nan() { f64::INFINITY } else { r.rel_err });
    }
    (total, failed, worst)
}

#[test]
fn criterion_01_identity_suite() {
    let names = ["perturbation", "telescoping", "taylor", "truncation"];
    let mut pass = true;
    let mut parts = Vec::new();
    for name in names {
        let (total, failed, worst) = summarize(suite().records.iter().filter(|r| r.name == name));
        let cells_ok = total == 4 * 3 * 2 * 2 * 50;
        pass &= failed == 0 && cells_ok;
        parts.push(format!("{name} {}/{total} worst {worst:.1e}", total - failed));
    }
    report(1, "identity suite (tol 1e-10, 50 trials/cell)", pass, parts.join(", "));
}

#[test]
fn criterion_02_unitary_derivative_vs_fd() {
    let mut pass = true;
    let mut parts = Vec::new();
    for k in 1..=3 {
        let subset = suite().records.iter().filter(|r| r.name == "derivative_fd" && r.params.n == k);
        let (total, failed, worst) = summarize(subset);
        let tol = if k == 1 { 1e-6 } else { 1e-4 };
        pass &= failed == 0 && total > 0 && worst <= tol;
        parts.push(format!("k={k} {}/{total} worst {worst:.1e}", total - failed));
    }
    let (_, tri_failed, _) = summarize(
        suite()
            .records
            .iter()
            .filter(|r| r.name == "derivative_fd" && r.params.family == "triangle"),
    );
    pass &= tri_failed == 0;
    report(2, "derivative_unitary vs Richardson FD", pass, parts.join(", "));
}

/// Smallest `|λ|` over `σ(A(s))` on the FD stencil around `t`; the pulled-back
/// triangle stack has its jumps where `η(x) = −1`, i.e. at `x = 0`.
fn jump_clearance(path: &dyn OperatorPath, k: usize, t: f64) -> f64 {
    let (lo, hi) = fd::stencil_extent(k, t);
    [lo, t, hi]
        .iter()
        .map(|&s| {
            herm_eig(&path.eval(s).unwrap())
                .unwrap()
                .eigenvalues
                .iter()
                .map(|z| z.re.abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

fn linear_path(dim: usize, r: &mut ChaCha8Rng) -> LinearSAPath {
    let a = random_hermitian(dim, 1.0, op_norm(), r);
    let k = random_hermitian(dim, 1.0, op_norm(), r);
    LinearSAPath::new(a, k).unwrap()
}

#[test]
fn criterion_03_selfadjoint_derivative_vs_fd() {
    let t = 0.1;
    let mut worst = [0.0f64; 4];
    let mut cases = 0;
    let mut pass = true;
    for dim in [2, 3, 4, 6] {
        for seed in 0..6u64 {
            let mut r = rng(300 + 10 * dim as u64 + seed);
            let funcs: Vec<(Arc<dyn DerivStack>, bool)> = vec![
                (Arc::new(LineExp { frequency: 1.3 }), false),
                (Arc::new(cayley_pullback(random_trig(&mut r), 0.0)), false),
                (Arc::new(cayley_pullback(triangle(3), 0.0)), true),
            ];
            for (g, has_jump) in &funcs {
                for k in 1..=3 {
                    let mut path = linear_path(dim, &mut r);
                    if *has_jump {
                        let mut redraws = 0;
                        while jump_clearance(&path, k, t) < 0.05 && redraws < 50 {
                            path = linear_path(dim, &mut r);
                            redraws += 1;
                        }
                    }
                    let exact = derivative_selfadjoint(g.clone(), &path, k, t).unwrap().total;
                    let approx = function_path_fd(g.as_ref(), &path, k, t).unwrap();
                    let err = fd::relative_error(&exact, &approx, 1.0);
                    let tol = if k == 1 { 1e-6 } else { 1e-4 };
                    pass &= err <= tol;
                    worst[k - 1] = worst[k - 1].max(err);
                    cases += 1;
                }
            }
            for n in [2, 3] {
                let a = linear_path(dim, &mut r);
                let s: Vec<LinearSAPath> = (1..n).map(|_| linear_path(dim, &mut r)).collect();
                let s_refs: Vec<&dyn OperatorPath> = s.iter().map(|p| p as &dyn OperatorPath).collect();
                let g: Arc<dyn DerivStack> = Arc::new(cayley_pullback(random_trig(&mut r), 0.0));
                let exact = moi_path_derivative(g.clone(), &a, &s_refs, t).unwrap();
                let approx = fd::richardson(&|x: f64| moi_path_value(g.clone(), &a, &s_refs, x), 1, t).unwrap();
                let err = fd::relative_error(&exact, &approx, 1.0);
                pass &= err <= 1e-6;
                worst[3] = worst[3].max(err);
                cases += 1;
            }
        }
    }
    report(
        3,
        "selfadjoint derivatives vs FD on LinearSAPath",
        pass,
        format!(
            "{cases} cases, worst k=1 {:.1e}, k=2 {:.1e}, k=3 {:.1e}, moi_path_derivative {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    );
}

#[test]
fn criterion_04_cayley_consistency() {
    let mut pass = true;
    let (mut worst_smooth, mut worst_triangle, mut cases) = (0.0f64, 0.0f64, 0);
    for dim in [2, 3, 4] {
        for seed in 0..8u64 {
            let mut r = rng(400 + 10 * dim as u64 + seed);
            let path = unitary_path(dim, seed % 2 == 1, &mut r);
            for k in 1..=2 {
                let smooth = cayley_consistency(random_trig(&mut r), path.clone(), 0.1, k, 1e-8).unwrap();
                pass &= smooth.pass;
                worst_smooth = worst_smooth.max(smooth.rel_err);
                for n in k..=3 {
                    let rec = cayley_consistency(triangle(n), path.clone(), 0.1, k, 1e-7).unwrap();
                    pass &= rec.pass;
                    worst_triangle = worst_triangle.max(rec.rel_err);
                    cases += 1;
                }
                cases += 1;
            }
        }
    }
    report(
        4,
        "Cayley dual-route derivatives",
        pass,
        format!("{cases} cases, worst smooth {worst_smooth:.1e} (tol 1e-8), triangle {worst_triangle:.1e} (tol 1e-7)"),
    );
}

#[test]
fn criterion_05_taylor_order() {
    let times: Vec<f64> = (0..=8).map(|i| 1e-3 * 10f64.powf(i as f64 / 4.0)).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 1..=3 {
        let mut min_slope = f64::INFINITY;
        for seed in 0..5u64 {
            let mut r = rng(500 + 10 * n as u64 + seed);
            let path = unitary_path(4, seed % 2 == 1, &mut r);
            let f = random_trig(&mut r);
            let points: Vec<(f64, f64)> = times
                .iter()
                .map(|&t| (t, taylor_remainder_direct(f.clone(), path.as_ref(), t, n).unwrap().frobenius_norm()))
                .collect();
            let slope = log_log_slope(&points).unwrap_or(f64::NAN);
            min_slope = min_slope.min(slope);
        }
        pass &= min_slope >= n as f64 - 0.15;
        parts.push(format!("n={n} min slope {min_slope:.3}"));
    }
    report(5, "Taylor remainder order", pass, parts.join(", "));
}

#[test]
fn criterion_06_remainder_scaling() {
    let (n, dim) = (2, 4);
    let p = SchattenOrder::new(4.0).unwrap();
    let scales = [0.02, 0.05, 0.1, 0.2];
    let mut pass = true;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ratios = Vec::new();
    for seed in 0..20u64 {
        let mut r = rng(600 + seed);
        let f = random_trig(&mut r);
        let a = random_hermitian(dim, 1.0, p, &mut r);
        let u0 = haar_unitary(dim, &mut r).unwrap();
        let mut points = Vec::new();
        for &s in &scales {
            let rep = remainder_estimate_report(f.clone(), &a.scale_real(s), &u0, p, n).unwrap();
            points.push((s, rep.remainder_norm));
        }
        let slope = log_log_slope(&points).unwrap_or(f64::NAN);
        lo = lo.min(slope);
        hi = hi.max(slope);
        pass &= (slope - n as f64).abs() <= 0.2;
        let unit = remainder_estimate_report(f, &a, &u0, p, n).unwrap();
        pass &= unit.ratio.is_finite();
        ratios.push(unit.ratio);
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    report(
        6,
        "remainder exponent under A -> sA",
        pass,
        format!("exponents in [{lo:.3}, {hi:.3}], ensemble max ratio {max_ratio:.3e} over 20 seeds"),
    );
}

fn max_moi_ratio(dim: usize, n: usize, seeds: std::ops::Range<u64>) -> f64 {
    let p = SchattenOrder::new(2.0).unwrap();
    let exponents = vec![SchattenOrder::new(2.0 * n as f64).unwrap(); n];
    let mut worst = 0.0f64;
    for seed in seeds {
        let mut r = rng(700 + 1000 * n as u64 + 100 * dim as u64 + seed);
        let us: Vec<ComplexMatrix> = (0..=n).map(|_| haar_unitary(dim, &mut r).unwrap()).collect();
        let decs: Vec<_> = us.iter().map(|u| unitary_eig(u).unwrap()).collect();
        let symbol = MoiSymbol::divided_difference(triangle(n), n).unwrap();
        let op = MoiOperator::new(decs.iter().collect(), symbol).unwrap();
        let stats = moi_norm_ratio(&op, p, &exponents, 10, &mut r).unwrap();
        worst = worst.max(stats.max);
    }
    worst
}

#[test]
fn criterion_07_moi_dimension_robustness() {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 1..=2 {
        let calibrated = max_moi_ratio(2, n, 0..8).max(max_moi_ratio(4, n, 0..8));
        let large = max_moi_ratio(8, n, 0..4).max(max_moi_ratio(16, n, 0..2));
        let growth = large / calibrated;
        pass &= growth.is_finite() && growth <= 2.0;
        parts.push(format!("n={n} calibrated {calibrated:.3} large {large:.3} growth {growth:.2}x"));
    }
    report(7, "MOI Schatten ratio robustness (TriangleStack)", pass, parts.join(", "));
}

#[test]
fn criterion_08_moi_oracle_equivalence() {
    let mut r = rng(800);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let dim = r.gen_range(1..=4);
        let n = r.gen_range(1..=3);
        let f: Arc<dyn DerivStack> = if case % 2 == 0 {
            Arc::new(TrigPoly::random(r.gen_range(1..=5), &mut r))
        } else {
            Arc::new(TriangleStack::new(n).unwrap())
        };
        let us: Vec<ComplexMatrix> = (0..=n).map(|_| haar_unitary(dim, &mut r).unwrap()).collect();
        let decs: Vec<_> = us.iter().map(|u| unitary_eig(u).unwrap()).collect();
        let op = MoiOperator::new(decs.iter().collect(), MoiSymbol::divided_difference(f, n).unwrap()).unwrap();
        let ks: Vec<ComplexMatrix> = (0..n).map(|_| gaussian_matrix(dim, &mut r)).collect();
        let refs: Vec<&ComplexMatrix> = ks.iter().collect();
        let fast = op.apply(&refs).unwrap();
        let brute = op.apply_by_projections(&refs).unwrap();
        worst = worst.max((&fast - &brute).frobenius_norm() / fast.frobenius_norm().max(1.0));
    }
    report(8, "moi_apply vs projection-sandwich sum", worst <= 1e-12, format!("200 cases, worst {worst:.1e}"));
}

/// Literal recursion in the given node order (distinct nodes only).
fn literal_divdiff(f: &dyn DerivStack, pts: &[C64]) -> C64 {
    if pts.len() == 1 {
        return f.eval(pts[0]);
    }
    let last = pts.len() - 1;
    (literal_divdiff(f, &pts[1..]) - literal_divdiff(f, &pts[..last])) / (pts[last] - pts[0])
}

fn circle_points(r: &mut ChaCha8Rng, count: usize) -> Vec<C64> {
    (0..count).map(|_| C64::cis(r.gen_range(0.0..std::f64::consts::TAU))).collect()
}

#[test]
fn criterion_09_divided_differences() {
    let mut r = rng(900);
    let (mut sym, mut diag, mut annihilate) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = r.gen_range(1..=4);
        let f: Arc<dyn DerivStack> = if r.gen_bool(0.5) {
            Arc::new(TrigPoly::random(r.gen_range(1..=5), &mut r))
        } else {
            Arc::new(TriangleStack::new(n).unwrap())
        };
        let pts = circle_points(&mut r, n + 1);
        let mut perm = pts.clone();
        perm.reverse();
        perm.rotate_left(r.gen_range(0..=n));
        let a = divided_difference(f.as_ref(), &NodeTuple::circle(&pts).unwrap()).unwrap().value;
        let b = divided_difference(f.as_ref(), &NodeTuple::circle(&perm).unwrap()).unwrap().value;
        sym = sym.max((a - b).norm());
        let min_gap = pts
            .iter()
            .enumerate()
            .flat_map(|(i, x)| pts[i + 1..].iter().map(move |y| (x - y).norm()))
            .fold(f64::INFINITY, f64::min);
        if min_gap > 0.05 {
            sym = sym.max((a - literal_divdiff(f.as_ref(), &perm)).norm());
        }

        let lambda = pts[0];
        let same = vec![lambda; n + 1];
        let factorial: f64 = (1..=n).map(|i| i as f64).product();
        let d = divided_difference(f.as_ref(), &NodeTuple::circle(&same).unwrap()).unwrap().value;
        diag = diag.max((d - f.deriv(n, lambda) / factorial).norm());

        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * (n - 1) + 1];
        for c in coeffs.iter_mut().skip(n - 1) {
            *c = C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        }
        let poly = TrigPoly::new(n - 1, coeffs).unwrap();
        let dd = divided_difference(&poly, &NodeTuple::circle(&pts).unwrap()).unwrap().value;
        annihilate = annihilate.max(dd.norm());
    }
    let pass = sym <= 1e-9 && diag <= 1e-10 && annihilate <= 1e-11;
    report(
        9,
        "divided differences",
        pass,
        format!("symmetry {sym:.1e} (1e-9), diagonal {diag:.1e} (1e-10), annihilation {annihilate:.1e} (1e-11)"),
    );
}

#[test]
fn criterion_10_smoothing() {
    let js = [4, 8, 16, 32, 64];
    let mut r = rng(1000);
    let mut funcs: Vec<(Arc<dyn CircleFunction>, usize)> = (1..=3).map(|n| (triangle(n), n)).collect();
    for _ in 0..2 {
        funcs.push((random_trig(&mut r), 3));
    }
    let (mut contraction_ok, mut steklov_ok, mut monotone_ok) = (true, true, true);
    let (mut contraction_excess, mut steklov_excess) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (f, n) in &funcs {
        let sups: Vec<f64> = (0..=*n).map(|k| sup_norm(f.as_ref(), k, SUP_GRID)).collect();
        let angle_sups: Vec<f64> = (0..=*n).map(|k| angle_sup_norm(f.as_ref(), k, 10 * SUP_GRID)).collect();
        let mut fejer_prev = vec![f64::INFINITY; *n];
        let mut steklov_prev = vec![f64::INFINITY; *n];
        for &j in &js {
            let fj = fejer_smooth(f.as_ref(), j);
            let sj = steklov_smooth(f.clone(), j);
            for k in 0..=*n {
                let excess = sup_norm(&fj, k, SUP_GRID) - sups[k];
                contraction_excess = contraction_excess.max(excess);
                contraction_ok &= excess <= 1e-9;
                if k >= 1 {
                    let ratio = angle_sup_norm(&sj, k, SUP_GRID) / angle_sups[k] - 1.0;
                    steklov_excess = steklov_excess.max(ratio);
                    steklov_ok &= ratio <= 1e-3;
                }
                if k < *n {
                    let df = angle_sup_distance(f.as_ref(), &fj, k, SUP_GRID);
                    let ds = angle_sup_distance(f.as_ref(), &sj, k, SUP_GRID);
                    monotone_ok &= df <= fejer_prev[k] + 1e-12 && ds <= steklov_prev[k] + 1e-12;
                    fejer_prev[k] = df;
                    steklov_prev[k] = ds;
                }
            }
        }
    }
    report(
        10,
        "Fejér/Steklov smoothing",
        contraction_ok && steklov_ok && monotone_ok,
        format!(
            "Fejér sup excess {contraction_excess:.1e} (1e-9), Steklov relative excess {steklov_excess:.1e} (1e-3), \
             sup-distance monotone over j=4..64: {monotone_ok}"
        ),
    );
}

#[test]
fn criterion_11_truncation_convergence() {
    let js: Vec<usize> = (1..=60).collect();
    let mut pass = true;
    let (mut cases, mut worst_rise) = (0, 0.0f64);
    for dim in [2, 3, 4, 6] {
        for seed in 0..5u64 {
            let mut r = rng(1100 + 10 * dim as u64 + seed);
            let fractions: Vec<f64> = (0..dim).map(|_| r.gen_range(0.0..0.95)).collect();
            let v = unitary_with_spectrum(&fractions, &mut r).unwrap();
            let ks = vec![gaussian_matrix(dim, &mut r)];
            let f: Arc<dyn DerivStack> = if seed % 2 == 0 { random_trig(&mut r) } else { triangle(1) };
            let errs = truncation_convergence(f, &v, &ks, &js, frobenius()).unwrap();
            for w in errs.windows(2) {
                worst_rise = worst_rise.max(w[1].1 - w[0].1);
            }
            pass &= errs.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
            pass &= errs.last().unwrap().1 == 0.0;
            cases += 1;
        }
    }
    report(
        11,
        "truncation error over growing arcs (one perturbation, p = 2)",
        pass,
        format!("{cases} sequences j=1..60, worst rise {worst_rise:.1e} (slack 1e-12), final error exactly 0"),
    );
}

#[test]
fn criterion_12_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_opcalc"))
            .args(["verify", "--seed", "7", "--out"])
            .arg(&path)
            .args(extra)
            .env_remove("OPCALC_SEED")
            .status()
            .unwrap();
        (status, std::fs::read(&path).unwrap())
    };
    let (s1, a) = run("a.csv", &[]);
    let (s2, b) = run("b.csv", &["--jobs", "1"]);
    let identical = a == b && !a.is_empty();
    let clean = s1.success() && s2.success();
    let (s3, c) = run("c.csv", &["--dims", "2", "--trials", "2", "--tol-identity", "1e-300"]);
    let has_failures = String::from_utf8_lossy(&c).lines().any(|l| l.ends_with(",false"));
    let failure_reported = s3.code() == Some(1) && has_failures;
    report(
        12,
        "verify determinism and exit status",
        identical && clean && failure_reported,
        format!(
            "{} report bytes identical: {identical}, exit codes {:?}/{:?}, forced-failure exit {:?}",
            a.len(),
            s1.code(),
            s2.code(),
            s3.code()
        ),
    );
}
