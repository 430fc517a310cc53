//! Multiple operator integrals `Γ^{A₁,…,A_{n+1}}(φ)(K₁,…,K_n)` for normal
//! matrices.
//!
//! With `A_q = W_q diag(λ^{(q)}) W_q*` and `K̂_q = W_q* K_q W_{q+1}`,
//!
//! ```text
//! R̂[i₁, i_{n+1}] = Σ_{i₂…i_n} φ(λ^{(1)}_{i₁}, …, λ^{(n+1)}_{i_{n+1}}) Π_q K̂_q[i_q, i_{q+1}]
//! Γ(φ)(K) = W₁ R̂ W_{n+1}*
//! ```

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::divdiff::{cluster_points, clustered_table, NodeDomain, CLUSTER_TERMS};
use crate::error::{Error, Result};
use crate::functions::DerivStack;
use crate::linalg::{schatten_norm, SchattenOrder, Spectral};
use crate::random::{gaussian_matrix, rank_one};
use crate::{ComplexMatrix, C64};

/// Largest weight tensor kept in memory.
pub const WEIGHT_CACHE_LIMIT: usize = 1_000_000;

pub type ScalarFn = Arc<dyn Fn(&[C64]) -> C64 + Send + Sync>;

#[derive(Clone)]
pub enum MoiSymbol {
    /// `f^[n]`, arity `n + 1`.
    DividedDiff { f: Arc<dyn DerivStack>, n: usize },
    Callable { arity: usize, phi: ScalarFn },
    /// `f₁(λ₁) ⋯ f_{n+1}(λ_{n+1})`.
    Product(Vec<Arc<dyn DerivStack>>),
    /// `base · χ_Δ` (`diagonal = true`) or `base · (1 − χ_Δ)`, where `Δ` is the
    /// set of tuples whose eigenvalues all fall in one cluster.
    DiagonalRestricted { base: Box<MoiSymbol>, diagonal: bool },
}

impl MoiSymbol {
    pub fn divided_difference(f: Arc<dyn DerivStack>, n: usize) -> Result<Self> {
        if f.order() < n {
            return Err(Error::domain(format!(
                "divided-difference symbol of order {n} needs a function of order ≥ {n}, {} has {}",
                f.label(),
                f.order()
            )));
        }
        Ok(MoiSymbol::DividedDiff { f, n })
    }

    pub fn callable(arity: usize, phi: impl Fn(&[C64]) -> C64 + Send + Sync + 'static) -> Self {
        MoiSymbol::Callable { arity, phi: Arc::new(phi) }
    }

    pub fn arity(&self) -> usize {
        match self {
            MoiSymbol::DividedDiff { n, .. } => n + 1,
            MoiSymbol::Callable { arity, .. } => *arity,
            MoiSymbol::Product(fs) => fs.len(),
            MoiSymbol::DiagonalRestricted { base, .. } => base.arity(),
        }
    }

    fn divided_difference_parts(&self) -> Option<(&Arc<dyn DerivStack>, usize)> {
        match self {
            MoiSymbol::DividedDiff { f, n } => Some((f, *n)),
            MoiSymbol::DiagonalRestricted { base, .. } => base.divided_difference_parts(),
            _ => None,
        }
    }
}

impl std::fmt::Debug for MoiSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MoiSymbol::DividedDiff { f: func, n } => write!(f, "DividedDiff({}, {n})", func.label()),
            MoiSymbol::Callable { arity, .. } => write!(f, "Callable(arity {arity})"),
            MoiSymbol::Product(fs) => write!(f, "Product({})", fs.len()),
            MoiSymbol::DiagonalRestricted { base, diagonal } => {
                write!(f, "DiagonalRestricted({base:?}, diagonal={diagonal})")
            }
        }
    }
}

/// Which tuples of the index space contribute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    All,
    Diagonal,
    OffDiagonal,
}

/// `Γ^{A₁,…,A_{n+1}}(φ)` over precomputed spectral decompositions.
pub struct MoiOperator<'a> {
    decomps: Vec<&'a Spectral<f64>>,
    symbol: MoiSymbol,
    dim: usize,
    /// Global cluster id of eigenvalue `i` of operator `q`.
    cluster_of: Vec<Vec<usize>>,
    reps: Vec<C64>,
    /// `f^(k)(rep_c)` for divided-difference symbols, `k ≤ n + CLUSTER_TERMS`
    /// where available.
    derivs: Vec<Vec<C64>>,
    weights: Option<Vec<C64>>,
}

impl<'a> MoiOperator<'a> {
    pub fn new(decomps: Vec<&'a Spectral<f64>>, symbol: MoiSymbol) -> Result<Self> {
        if decomps.is_empty() || decomps.len() != symbol.arity() {
            return Err(Error::Dimension {
                expected: symbol.arity(),
                found: decomps.len(),
            });
        }
        let dim = decomps[0].dim();
        if let Some(d) = decomps.iter().find(|d| d.dim() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                found: d.dim(),
            });
        }
        let (cluster_of, reps) = global_clusters(&decomps);
        let mut derivs = Vec::new();
        if let Some((f, n)) = symbol.divided_difference_parts() {
            for &z in &reps {
                f.check_point(z)?;
            }
            let top = f.order().min(n + CLUSTER_TERMS);
            derivs = reps.iter().map(|&z| (0..=top).map(|k| f.deriv(k, z)).collect()).collect();
        }
        let mut op = Self {
            decomps,
            symbol,
            dim,
            cluster_of,
            reps,
            derivs,
            weights: None,
        };
        let size = dim.checked_pow(op.arity() as u32).unwrap_or(usize::MAX);
        if size <= WEIGHT_CACHE_LIMIT {
            op.weights = Some(op.weight_tensor()?);
        }
        Ok(op)
    }

    pub fn arity(&self) -> usize {
        self.decomps.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn symbol(&self) -> &MoiSymbol {
        &self.symbol
    }

    pub fn has_weight_cache(&self) -> bool {
        self.weights.is_some()
    }

    fn weight_tensor(&self) -> Result<Vec<C64>> {
        let n = self.dim;
        let per_slab = n.pow(self.arity() as u32 - 1);
        let slabs: Vec<Result<Vec<C64>>> = (0..n)
            .into_par_iter()
            .map(|i1| {
                let mut idx = vec![0usize; self.arity()];
                idx[0] = i1;
                let mut out = Vec::with_capacity(per_slab);
                for flat in 0..per_slab {
                    let mut rest = flat;
                    for q in (1..self.arity()).rev() {
                        idx[q] = rest % n;
                        rest /= n;
                    }
                    let w = self.weight(&idx)?;
                    if !w.re.is_finite() || !w.im.is_finite() {
                        return Err(Error::Numeric {
                            msg: format!("symbol weight at indices {idx:?} is not finite"),
                            residual: f64::NAN,
                        });
                    }
                    out.push(w);
                }
                Ok(out)
            })
            .collect();
        let mut all = Vec::with_capacity(per_slab * n);
        for s in slabs {
            all.extend(s?);
        }
        Ok(all)
    }

    fn on_diagonal(&self, idx: &[usize]) -> bool {
        let first = self.cluster_of[0][idx[0]];
        idx.iter().enumerate().all(|(q, &i)| self.cluster_of[q][i] == first)
    }

    fn eigenvalue(&self, q: usize, i: usize) -> C64 {
        self.decomps[q].eigenvalues[i]
    }

    /// `φ(λ^{(1)}_{i₁}, …, λ^{(n+1)}_{i_{n+1}})`.
    pub fn weight(&self, idx: &[usize]) -> Result<C64> {
        self.symbol_weight(&self.symbol, idx)
    }

    fn symbol_weight(&self, symbol: &MoiSymbol, idx: &[usize]) -> Result<C64> {
        match symbol {
            MoiSymbol::DividedDiff { .. } => {
                let mut nodes: Vec<(C64, usize)> = idx
                    .iter()
                    .enumerate()
                    .map(|(q, &i)| (self.eigenvalue(q, i), self.cluster_of[q][i]))
                    .collect();
                nodes.sort_by_key(|&(_, c)| c);
                let top = self.derivs[0].len() - 1;
                Ok(clustered_table(&nodes, &self.reps, top, |c, k| self.derivs[c][k]))
            }
            MoiSymbol::Callable { phi, .. } => {
                let pts: Vec<C64> = idx.iter().enumerate().map(|(q, &i)| self.eigenvalue(q, i)).collect();
                Ok(phi(&pts))
            }
            MoiSymbol::Product(fs) => Ok(fs
                .iter()
                .zip(idx)
                .enumerate()
                .map(|(q, (f, &i))| f.eval(self.eigenvalue(q, i)))
                .product()),
            MoiSymbol::DiagonalRestricted { base, diagonal } => {
                if self.on_diagonal(idx) == *diagonal {
                    self.symbol_weight(base, idx)
                } else {
                    Ok(C64::new(0.0, 0.0))
                }
            }
        }
    }

    fn check_inputs(&self, ks: &[&ComplexMatrix]) -> Result<()> {
        if ks.len() + 1 != self.arity() {
            return Err(Error::Dimension {
                expected: self.arity() - 1,
                found: ks.len(),
            });
        }
        if let Some(k) = ks.iter().find(|k| k.dim() != self.dim) {
            return Err(Error::Dimension {
                expected: self.dim,
                found: k.dim(),
            });
        }
        Ok(())
    }

    /// `Γ(φ)(K₁, …, K_n)`.
    pub fn apply(&self, ks: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
        self.apply_part(ks, Part::All)
    }

    /// Contraction restricted to diagonal or off-diagonal tuples.
    pub fn apply_part(&self, ks: &[&ComplexMatrix], part: Part) -> Result<ComplexMatrix> {
        self.check_inputs(ks)?;
        let n = self.dim;
        let order = ks.len();
        let hats: Vec<ComplexMatrix> = ks
            .iter()
            .enumerate()
            .map(|(q, k)| {
                let left = &self.decomps[q].eigenvectors;
                let right = &self.decomps[q + 1].eigenvectors;
                left.adjoint_mul(&k.matmul(right))
            })
            .collect();

        let rows: Vec<Result<Vec<C64>>> = (0..n)
            .into_par_iter()
            .map(|i1| {
                let mut row = vec![C64::new(0.0, 0.0); n];
                let mut idx = vec![0usize; order + 1];
                idx[0] = i1;
                if order == 0 {
                    if self.include(&idx, part) {
                        row[i1] = self.cached_weight(&idx, i1)?;
                    }
                    return Ok(row);
                }
                self.descend(1, C64::new(1.0, 0.0), i1, &mut idx, &hats, part, &mut row)?;
                Ok(row)
            })
            .collect();

        let mut r_hat = ComplexMatrix::zeros(n);
        for (i1, row) in rows.into_iter().enumerate() {
            for (j, v) in row?.into_iter().enumerate() {
                r_hat[(i1, j)] = v;
            }
        }
        let first = &self.decomps[0].eigenvectors;
        let last = &self.decomps[order].eigenvectors;
        Ok(first.matmul(&r_hat).mul_adjoint(last))
    }

    fn include(&self, idx: &[usize], part: Part) -> bool {
        match part {
            Part::All => true,
            Part::Diagonal => self.on_diagonal(idx),
            Part::OffDiagonal => !self.on_diagonal(idx),
        }
    }

    fn cached_weight(&self, idx: &[usize], flat: usize) -> Result<C64> {
        match &self.weights {
            Some(w) => Ok(w[flat]),
            None => self.weight(idx),
        }
    }

    /// Chooses `i_{q+1}` given `i₁…i_q`; `flat` is the mixed-radix offset of
    /// the chosen prefix.
    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        q: usize,
        prefix: C64,
        flat: usize,
        idx: &mut [usize],
        hats: &[ComplexMatrix],
        part: Part,
        row: &mut [C64],
    ) -> Result<()> {
        let n = self.dim;
        let order = hats.len();
        let hat = &hats[q - 1];
        let prev = idx[q - 1];
        for next in 0..n {
            let k = hat[(prev, next)];
            if k == C64::new(0.0, 0.0) {
                continue;
            }
            idx[q] = next;
            let flat_next = flat * n + next;
            let value = prefix * k;
            if q == order {
                if self.include(idx, part) {
                    row[next] += self.cached_weight(idx, flat_next)? * value;
                }
            } else {
                self.descend(q + 1, value, flat_next, idx, hats, part, row)?;
            }
        }
        Ok(())
    }

    /// Brute-force projection sandwich `Σ φ(…) P_{i₁} K₁ P_{i₂} ⋯ K_n P_{i_{n+1}}`.
    /// Costs `N^{n+1}` matrix products; intended as a small-size reference.
    pub fn apply_by_projections(&self, ks: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
        self.check_inputs(ks)?;
        let n = self.dim;
        let arity = self.arity();
        let projections: Vec<Vec<ComplexMatrix>> = self
            .decomps
            .iter()
            .map(|d| (0..n).map(|i| d.projection(i)).collect())
            .collect();
        let mut total = ComplexMatrix::zeros(n);
        let mut idx = vec![0usize; arity];
        for flat in 0..n.pow(arity as u32) {
            let mut rest = flat;
            for q in (0..arity).rev() {
                idx[q] = rest % n;
                rest /= n;
            }
            let w = self.weight(&idx)?;
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            let mut term = projections[0][idx[0]].clone();
            for q in 0..ks.len() {
                term = term.matmul(ks[q]).matmul(&projections[q + 1][idx[q + 1]]);
            }
            total.axpy(w, &term);
        }
        Ok(total)
    }
}

/// Clusters the eigenvalues of all operators jointly; decompositions shared
/// by pointer are processed once.
fn global_clusters(decomps: &[&Spectral<f64>]) -> (Vec<Vec<usize>>, Vec<C64>) {
    let mut unique: Vec<&Spectral<f64>> = Vec::new();
    let mut which: Vec<usize> = Vec::with_capacity(decomps.len());
    for d in decomps {
        match unique.iter().position(|u| std::ptr::eq(*u, *d)) {
            Some(pos) => which.push(pos),
            None => {
                which.push(unique.len());
                unique.push(d);
            }
        }
    }
    let all: Vec<C64> = unique.iter().flat_map(|d| d.eigenvalues.iter().copied()).collect();
    let domain = if all.iter().all(|z| (z.norm() - 1.0).abs() < 1e-8) {
        NodeDomain::Circle
    } else {
        NodeDomain::Line
    };
    let (clusters, _) = cluster_points(&all, domain);
    let mut id_of = vec![0usize; all.len()];
    for (c, cl) in clusters.iter().enumerate() {
        for &m in &cl.members {
            id_of[m] = c;
        }
    }
    let mut offsets = Vec::with_capacity(unique.len());
    let mut acc = 0;
    for u in &unique {
        offsets.push(acc);
        acc += u.dim();
    }
    let cluster_of = which
        .iter()
        .map(|&u| (0..unique[u].dim()).map(|i| id_of[offsets[u] + i]).collect())
        .collect();
    (cluster_of, clusters.iter().map(|c| c.point).collect())
}

pub fn moi_apply(op: &MoiOperator<'_>, ks: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    op.apply(ks)
}

/// `(diagonal part, off-diagonal part)`; they sum to [`moi_apply`].
pub fn moi_apply_split(op: &MoiOperator<'_>, ks: &[&ComplexMatrix]) -> Result<(ComplexMatrix, ComplexMatrix)> {
    Ok((op.apply_part(ks, Part::Diagonal)?, op.apply_part(ks, Part::OffDiagonal)?))
}

/// Literal sandwich `f₁(A₁) K₁ f₂(A₂) ⋯ K_n f_{n+1}(A_{n+1})`.
pub fn moi_product_symbol(
    fs: &[Arc<dyn DerivStack>],
    decomps: &[&Spectral<f64>],
    ks: &[&ComplexMatrix],
) -> Result<ComplexMatrix> {
    if fs.len() != decomps.len() || ks.len() + 1 != fs.len() {
        return Err(Error::Dimension {
            expected: fs.len(),
            found: decomps.len(),
        });
    }
    let mut out = decomps[0].apply(|z| Some(fs[0].eval(z)))?;
    for q in 0..ks.len() {
        let fa = decomps[q + 1].apply(|z| Some(fs[q + 1].eval(z)))?;
        out = out.matmul(ks[q]).matmul(&fa);
    }
    Ok(out)
}

/// Summary of sampled ratios `‖Γ(K⃗)‖_p / Π ‖K_i‖_{p_i}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioStats {
    pub max: f64,
    pub mean: f64,
    pub samples: usize,
}

/// Samples Gaussian and rank-one probes; requires `1/p = Σ 1/p_i`.
pub fn moi_norm_ratio<R: Rng + ?Sized>(
    op: &MoiOperator<'_>,
    p: SchattenOrder,
    exponents: &[SchattenOrder],
    trials: usize,
    rng: &mut R,
) -> Result<RatioStats> {
    if exponents.len() + 1 != op.arity() {
        return Err(Error::Dimension {
            expected: op.arity() - 1,
            found: exponents.len(),
        });
    }
    let inv = |s: SchattenOrder| if s.is_infinite() { 0.0 } else { 1.0 / s.get() };
    let sum: f64 = exponents.iter().map(|&s| inv(s)).sum();
    if (inv(p) - sum).abs() > 1e-12 {
        return Err(Error::domain(format!(
            "Hölder relation violated: 1/p = {} but Σ 1/p_i = {sum}",
            inv(p)
        )));
    }
    let mut max = 0.0f64;
    let mut total = 0.0;
    let mut count = 0;
    for trial in 0..trials {
        let ks: Vec<ComplexMatrix> = (0..exponents.len())
            .map(|_| {
                if trial % 2 == 0 {
                    gaussian_matrix(op.dim(), rng)
                } else {
                    rank_one(op.dim(), rng)
                }
            })
            .collect();
        let refs: Vec<&ComplexMatrix> = ks.iter().collect();
        let denom: f64 = ks.iter().zip(exponents).map(|(k, &e)| schatten_norm(k, e)).product();
        if denom == 0.0 {
            continue;
        }
        let ratio = schatten_norm(&op.apply(&refs)?, p) / denom;
        max = max.max(ratio);
        total += ratio;
        count += 1;
    }
    Ok(RatioStats {
        max,
        mean: if count == 0 { 0.0 } else { total / count as f64 },
        samples: count,
    })
}
