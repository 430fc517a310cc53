use std::f64::consts::TAU;
use std::sync::Arc;

use super::{check_order, Flavor, OperatorPath};
use crate::calculus::derivative_selfadjoint;
use crate::error::{Error, Result};
use crate::functions::LineExp;
use crate::linalg::{expm_hermitian, unitary_eig, Spectral};
use crate::{ComplexMatrix, C64};

const ARC_TIE_TOL: f64 = 1e-12;

/// Spectral projection `P_j` of a unitary `V` onto the arc
/// `{e^{2πis} : 0 ≤ s ≤ (j−1)/j}`.
#[derive(Clone, Debug)]
pub struct ProjectionTruncation {
    j: usize,
    dec: Spectral<f64>,
    included: Vec<usize>,
    projection: ComplexMatrix,
}

impl ProjectionTruncation {
    pub fn new(v: &ComplexMatrix, j: usize) -> Result<Self> {
        Self::from_spectral(unitary_eig(v)?, j)
    }

    pub fn from_spectral(dec: Spectral<f64>, j: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::domain("arc index j must be at least 1"));
        }
        let end = (j - 1) as f64 / j as f64 + ARC_TIE_TOL;
        let included: Vec<usize> = dec
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, z)| z.arg().rem_euclid(TAU) / TAU <= end)
            .map(|(k, _)| k)
            .collect();
        let n = dec.dim();
        let projection = if included.len() == n {
            ComplexMatrix::identity(n)
        } else {
            let w = &dec.eigenvectors;
            ComplexMatrix::from_fn(n, |a, b| {
                included
                    .iter()
                    .fold(C64::new(0.0, 0.0), |acc, &k| acc + w[(a, k)] * w[(b, k)].conj())
            })
            .hermitian_part()
        };
        Ok(Self {
            j,
            dec,
            included,
            projection,
        })
    }

    /// Projection onto the whole space (`P = I`), as reached for `j` large.
    pub fn full(dec: Spectral<f64>) -> Self {
        let n = dec.dim();
        Self {
            j: usize::MAX,
            included: (0..n).collect(),
            projection: ComplexMatrix::identity(n),
            dec,
        }
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn dim(&self) -> usize {
        self.dec.dim()
    }

    pub fn rank(&self) -> usize {
        self.included.len()
    }

    /// Eigen-indices (into the decomposition of `V`) kept by the projection.
    pub fn included(&self) -> &[usize] {
        &self.included
    }

    pub fn covers_all(&self) -> bool {
        self.included.len() == self.dim()
    }

    pub fn projection(&self) -> &ComplexMatrix {
        &self.projection
    }

    pub fn spectral(&self) -> &Spectral<f64> {
        &self.dec
    }

    /// `V_j = V P_j` on the full space.
    pub fn truncated_unitary(&self) -> ComplexMatrix {
        let kept: Vec<C64> = (0..self.dim())
            .map(|k| {
                if self.included.contains(&k) {
                    self.dec.eigenvalues[k]
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        self.dec.synthesize(&kept)
    }

    /// `X` restricted to `range(P_j)`, in the eigenbasis of `V`.
    pub fn compress(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let w = &self.dec.eigenvectors;
        w.adjoint_mul(&x.matmul(w)).submatrix(&self.included)
    }

    /// Inverse of [`compress`](Self::compress): embeds a `rank × rank` block as
    /// an operator on the full space vanishing off `range(P_j)`.
    pub fn expand(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let w = &self.dec.eigenvectors;
        w.matmul(&y.embed(&self.included, self.dim())).mul_adjoint(w)
    }

    /// `V_j` as a unitary on `range(P_j)` (diagonal in the eigenbasis).
    pub fn reduced_unitary(&self) -> ComplexMatrix {
        ComplexMatrix::from_diag(&self.reduced_eigenvalues())
    }

    /// Spectral decomposition of [`reduced_unitary`](Self::reduced_unitary).
    pub fn reduced_spectral(&self) -> Spectral<f64> {
        Spectral {
            eigenvalues: self.reduced_eigenvalues(),
            eigenvectors: ComplexMatrix::identity(self.rank()),
            residual: 0.0,
        }
    }

    fn reduced_eigenvalues(&self) -> Vec<C64> {
        self.included.iter().map(|&k| self.dec.eigenvalues[k]).collect()
    }
}

/// `P_j X P_j`.
pub fn truncate(tr: &ProjectionTruncation, x: &ComplexMatrix) -> ComplexMatrix {
    if tr.covers_all() {
        return x.clone();
    }
    let p = tr.projection();
    p.matmul(x).matmul(p)
}

/// `A_j(t) = P_j A(t) P_j` on `range(P_j)`.
#[derive(Clone)]
pub struct CompressedPath {
    inner: Arc<dyn OperatorPath>,
    tr: ProjectionTruncation,
}

impl OperatorPath for CompressedPath {
    fn flavor(&self) -> Flavor {
        Flavor::SelfAdjoint
    }

    fn order(&self) -> usize {
        self.inner.order()
    }

    fn dim(&self) -> usize {
        self.tr.rank()
    }

    fn eval(&self, t: f64) -> Result<ComplexMatrix> {
        Ok(self.tr.compress(&self.inner.eval(t)?).hermitian_part())
    }

    fn deriv(&self, l: usize, t: f64) -> Result<ComplexMatrix> {
        Ok(self.tr.compress(&self.inner.deriv(l, t)?).hermitian_part())
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        self.inner.lipschitz_bound()
    }

    fn label(&self) -> String {
        format!("compressed({})", self.inner.label())
    }
}

/// `U_j(t) = e^{iA_j(t)} V_j` on `range(P_j)`, in the eigenbasis of `V`.
///
/// Derivatives come from the selfadjoint derivative formula applied to
/// `x ↦ e^{ix}` along the compressed path.
#[derive(Clone)]
pub struct TruncatedPath {
    generator: CompressedPath,
    reduced: ComplexMatrix,
}

pub fn truncate_path(tr: &ProjectionTruncation, path: Arc<dyn OperatorPath>) -> Result<TruncatedPath> {
    if path.flavor() != Flavor::SelfAdjoint {
        return Err(Error::domain("truncate_path needs a selfadjoint path"));
    }
    if path.dim() != tr.dim() {
        return Err(Error::Dimension {
            expected: tr.dim(),
            found: path.dim(),
        });
    }
    Ok(TruncatedPath {
        generator: CompressedPath {
            inner: path,
            tr: tr.clone(),
        },
        reduced: tr.reduced_unitary(),
    })
}

impl TruncatedPath {
    pub fn generator(&self) -> &CompressedPath {
        &self.generator
    }

    pub fn truncation(&self) -> &ProjectionTruncation {
        &self.generator.tr
    }

    /// `U_j(t)` as an operator on the full space (zero off `range(P_j)`).
    pub fn embedded(&self, t: f64) -> Result<ComplexMatrix> {
        Ok(self.truncation().expand(&self.eval(t)?))
    }
}

impl OperatorPath for TruncatedPath {
    fn flavor(&self) -> Flavor {
        Flavor::Unitary
    }

    fn order(&self) -> usize {
        self.generator.order()
    }

    fn dim(&self) -> usize {
        self.generator.dim()
    }

    fn eval(&self, t: f64) -> Result<ComplexMatrix> {
        Ok(expm_hermitian(&self.generator.eval(t)?)?.matmul(&self.reduced))
    }

    fn deriv(&self, l: usize, t: f64) -> Result<ComplexMatrix> {
        check_order(self, l)?;
        if l == 0 {
            return Ok(&self.eval(t)? - &self.eval(0.0)?);
        }
        let exp = Arc::new(LineExp { frequency: 1.0 });
        let report = derivative_selfadjoint(exp, &self.generator, l, t)?;
        Ok(report.total.matmul(&self.reduced))
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        self.generator.lipschitz_bound()
    }

    fn label(&self) -> String {
        format!("truncated({}, j={})", self.generator.inner.label(), self.truncation().j())
    }
}
