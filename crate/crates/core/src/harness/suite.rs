use std::io::Write;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{cell_rng, MAX_DIM, MAX_ORDER};
use crate::calculus::{
    cayley_consistency, derivative_unitary, function_path_fd, perturbation_identity, taylor_identity,
    telescoping_identity, truncation_identity, CheckRecord,
};
use crate::error::{Error, Result};
use crate::fd;
use crate::functions::{parse_family, CircleFunction, TriangleStack, TrigPoly};
use crate::linalg::{unitary_eig, SchattenOrder};
use crate::paths::{ExpPath, OperatorPath, ProductExpPath, ProjectionTruncation};
use crate::random::{gaussian_matrix, haar_unitary, random_hermitian, unitary_with_spectrum};
use crate::ComplexMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub dims: Vec<usize>,
    pub orders: Vec<usize>,
    pub ps: Vec<f64>,
    pub families: Vec<String>,
    pub trials: usize,
    pub seed: u64,
    pub tol_identity: f64,
    pub tol_fd1: f64,
    pub tol_fd: f64,
    pub format: ReportFormat,
    /// Worker threads; `0` uses every core.
    pub jobs: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 4, 8],
            orders: vec![1, 2, 3],
            ps: vec![2.0, 4.0],
            families: vec!["trig".into(), "triangle".into()],
            trials: 20,
            seed: 7,
            tol_identity: 1e-10,
            tol_fd1: 1e-6,
            tol_fd: 1e-4,
            format: ReportFormat::Csv,
            jobs: 0,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        let nonempty = |field: &str, len: usize| {
            if len == 0 {
                Err(Error::config(field, "list must not be empty"))
            } else {
                Ok(())
            }
        };
        nonempty("dims", self.dims.len())?;
        nonempty("orders", self.orders.len())?;
        nonempty("p", self.ps.len())?;
        nonempty("families", self.families.len())?;
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if let Some(d) = self.dims.iter().find(|d| !(1..=MAX_DIM).contains(*d)) {
            return Err(Error::config("dims", format!("{d} outside 1..={MAX_DIM}")));
        }
        if let Some(n) = self.orders.iter().find(|n| !(1..=MAX_ORDER).contains(*n)) {
            return Err(Error::config("orders", format!("{n} outside 1..={MAX_ORDER}")));
        }
        if let Some(p) = self.ps.iter().find(|p| !(p.is_finite() && **p >= 1.0)) {
            return Err(Error::config("p", format!("{p} is not a finite exponent ≥ 1")));
        }
        for (field, tol) in [("tol-identity", self.tol_identity), ("tol-fd1", self.tol_fd1), ("tol-fd", self.tol_fd)] {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Error::config(field, "tolerance must be positive"));
            }
        }
        let max_order = *self.orders.iter().max().expect("orders checked non-empty");
        for family in &self.families {
            let f = instantiate(family, max_order, 0, &mut cell_rng(0, "validate"))?;
            if f.order() < max_order {
                return Err(Error::config(
                    "families",
                    format!("`{family}` has {} derivatives, orders need {max_order}", f.order()),
                ));
            }
        }
        Ok(())
    }
}

/// `trig`: random trigonometric polynomial of degree `1 + trial mod 5`;
/// `triangle`: piecewise polynomial whose order-`n` derivative is a sign
/// function; anything else is handed to [`parse_family`].
fn instantiate(family: &str, n: usize, trial: usize, rng: &mut ChaCha8Rng) -> Result<Arc<dyn CircleFunction>> {
    match family {
        "trig" => Ok(Arc::new(TrigPoly::random(1 + trial % 5, rng))),
        "triangle" => Ok(Arc::new(TriangleStack::new(n.max(1))?)),
        other => parse_family(other, rng.next_u64()),
    }
}

const P_DEPENDENT: [&str; 4] = ["perturbation", "telescoping", "taylor", "truncation"];
const FROBENIUS_ONLY: [&str; 2] = ["derivative_fd", "cayley"];

#[derive(Clone, Debug)]
struct Cell {
    name: &'static str,
    dim: usize,
    n: usize,
    p: f64,
    family: String,
    trial: usize,
}

impl Cell {
    fn key(&self) -> String {
        format!("{}|{}|{}|{}|{}|{}", self.name, self.dim, self.n, self.p, self.family, self.trial)
    }
}

fn cells(cfg: &SuiteConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    let mut push = |name: &'static str, p: f64| {
        for &dim in &cfg.dims {
            for &n in &cfg.orders {
                for family in &cfg.families {
                    for trial in 0..cfg.trials {
                        out.push(Cell {
                            name,
                            dim,
                            n,
                            p,
                            family: family.clone(),
                            trial,
                        });
                    }
                }
            }
        }
    };
    for name in P_DEPENDENT {
        for &p in &cfg.ps {
            push(name, p);
        }
    }
    for name in FROBENIUS_ONLY {
        push(name, 2.0);
    }
    out
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub records: Vec<CheckRecord>,
}

impl SuiteOutcome {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.pass).count()
    }
}

/// Runs every cell; records are returned in cell order whatever `jobs` is.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    cfg.validate()?;
    let cells = cells(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    let records = pool.install(|| cells.par_iter().map(|c| run_cell(cfg, c)).collect());
    Ok(SuiteOutcome { records })
}

fn run_cell(cfg: &SuiteConfig, cell: &Cell) -> CheckRecord {
    let p = SchattenOrder::new(cell.p).expect("validated exponent");
    match evaluate(cfg, cell, p) {
        Ok(rec) => rec,
        Err(_) => CheckRecord::from_norms(cell.name, cell.dim, cell.n, p, f64::NAN, f64::NAN, f64::NAN, f64::NAN),
    }
    .with_context(&cell.family, cfg.seed, cell.trial)
}

fn gaussians(count: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<ComplexMatrix> {
    (0..count).map(|_| gaussian_matrix(dim, rng)).collect()
}

fn unitary_path(dim: usize, trial: usize, rng: &mut ChaCha8Rng) -> Result<Arc<dyn OperatorPath>> {
    let op = SchattenOrder::INFINITY;
    let u0 = haar_unitary(dim, rng)?;
    Ok(if trial.is_multiple_of(2) {
        Arc::new(ExpPath::new(random_hermitian(dim, 1.0, op, rng), u0)?)
    } else {
        Arc::new(ProductExpPath::new(
            random_hermitian(dim, 0.7, op, rng),
            random_hermitian(dim, 0.7, op, rng),
            u0,
        )?)
    })
}

/// Minimal distance from `σ(U(t))` to `±1`, where sign-type top derivatives jump.
fn jump_distance(path: &dyn OperatorPath, t: f64) -> Result<f64> {
    let dec = unitary_eig(&path.eval(t)?)?;
    Ok(dec
        .eigenvalues
        .iter()
        .map(|z| (z - 1.0).norm().min((z + 1.0).norm()))
        .fold(f64::INFINITY, f64::min))
}

const FD_TIME: f64 = 0.1;
const CAYLEY_TIME: f64 = 0.1;
const TAYLOR_TIME: f64 = 0.5;
const MAX_REDRAWS: usize = 32;

fn evaluate(cfg: &SuiteConfig, cell: &Cell, p: SchattenOrder) -> Result<CheckRecord> {
    let mut rng = cell_rng(cfg.seed, &cell.key());
    let f = instantiate(&cell.family, cell.n, cell.trial, &mut rng)?;
    let (dim, n) = (cell.dim, cell.n);
    let tol = cfg.tol_identity;
    match cell.name {
        "perturbation" => {
            let others: Vec<ComplexMatrix> = (1..n).map(|_| haar_unitary(dim, &mut rng)).collect::<Result<_>>()?;
            let u = haar_unitary(dim, &mut rng)?;
            let v = haar_unitary(dim, &mut rng)?;
            let ks = gaussians(n - 1, dim, &mut rng);
            perturbation_identity(f, &others, &u, &v, &ks, 1 + cell.trial % n, p, tol)
        }
        "telescoping" => {
            let u = haar_unitary(dim, &mut rng)?;
            let v = haar_unitary(dim, &mut rng)?;
            let ks = gaussians(n - 1, dim, &mut rng);
            telescoping_identity(f, &u, &v, &ks, p, tol)
        }
        "taylor" => {
            let path = unitary_path(dim, cell.trial, &mut rng)?;
            taylor_identity(f, path.as_ref(), TAYLOR_TIME, n, p, tol)
        }
        "truncation" => {
            let fractions: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
            let v = unitary_with_spectrum(&fractions, &mut rng)?;
            let j = rng.gen_range(2..=12);
            let tr = ProjectionTruncation::new(&v, j)?;
            let a = random_hermitian(dim, 0.5, SchattenOrder::INFINITY, &mut rng);
            let ks = gaussians(n, dim, &mut rng);
            truncation_identity(f, &a, &tr, &ks, p, tol)
        }
        "derivative_fd" => {
            let k = n.min(3);
            let tol = if k == 1 { cfg.tol_fd1 } else { cfg.tol_fd };
            let mut path = unitary_path(dim, cell.trial, &mut rng)?;
            if f.order() <= k {
                let (lo, hi) = fd::stencil_extent(k, FD_TIME);
                let lip = path.lipschitz_bound().unwrap_or(f64::INFINITY);
                let mut redraws = 0;
                while jump_distance(path.as_ref(), FD_TIME)? <= 2.0 * lip * (hi - lo) {
                    redraws += 1;
                    if redraws > MAX_REDRAWS {
                        return Err(Error::domain("no path draw keeps the stencil away from jumps"));
                    }
                    path = unitary_path(dim, cell.trial, &mut rng)?;
                }
            }
            let exact = derivative_unitary(f.clone(), path.as_ref(), k, FD_TIME)?.total;
            let approx = function_path_fd(f.as_ref(), path.as_ref(), k, FD_TIME)?;
            let p2 = SchattenOrder::new(2.0)?;
            Ok(CheckRecord::compare("derivative_fd", k, &exact, &approx, p2, tol))
        }
        "cayley" => {
            let k = n.min(2);
            let tol = if f.order() <= k { 1e-7 } else { 1e-8 };
            let path = unitary_path(dim, cell.trial, &mut rng)?;
            cayley_consistency(f, path, CAYLEY_TIME, k, tol)
        }
        other => Err(Error::domain(format!("unknown suite check {other}"))),
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    name: &'a str,
    dim: usize,
    n: usize,
    p: &'a str,
    family: &'a str,
    seed: u64,
    trial: usize,
    lhs_norm: f64,
    rhs_norm: f64,
    abs_err: f64,
    rel_err: f64,
    tol: f64,
    pass: bool,
}

/// CSV columns: `name,dim,n,p,family,seed,trial,lhs_norm,rhs_norm,abs_err,rel_err,tol,pass`.
/// JSON: array of records.
pub fn write_report<W: Write>(records: &[CheckRecord], format: ReportFormat, out: W) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in records {
                w.serialize(CsvRow {
                    name: &r.name,
                    dim: r.params.dim,
                    n: r.params.n,
                    p: &r.params.p,
                    family: &r.params.family,
                    seed: r.params.seed,
                    trial: r.params.trial,
                    lhs_norm: r.lhs_norm,
                    rhs_norm: r.rhs_norm,
                    abs_err: r.abs_err,
                    rel_err: r.rel_err,
                    tol: r.tol,
                    pass: r.pass,
                })?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, records)?;
            writeln!(out)?;
        }
    }
    Ok(())
}
