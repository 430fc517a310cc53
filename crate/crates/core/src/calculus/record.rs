use serde::{Deserialize, Serialize};

use crate::linalg::{schatten_norm, SchattenOrder};
use crate::ComplexMatrix;

/// Floor used in place of a vanishing left-hand side norm.
pub const REL_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckParams {
    pub dim: usize,
    pub n: usize,
    pub p: String,
    pub family: String,
    pub seed: u64,
    pub trial: usize,
}

/// Outcome of one two-sided identity check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub params: CheckParams,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// Compares `lhs` and `rhs` in the Schatten `p`-norm;
    /// `rel_err = ‖lhs − rhs‖_p / max(‖lhs‖_p, REL_FLOOR)`.
    pub fn compare(name: &str, n: usize, lhs: &ComplexMatrix, rhs: &ComplexMatrix, p: SchattenOrder, tol: f64) -> Self {
        let lhs_norm = schatten_norm(lhs, p);
        let rhs_norm = schatten_norm(rhs, p);
        let abs_err = schatten_norm(&(lhs - rhs), p);
        Self::from_norms(name, lhs.dim(), n, p, lhs_norm, rhs_norm, abs_err, tol)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_norms(
        name: &str,
        dim: usize,
        n: usize,
        p: SchattenOrder,
        lhs_norm: f64,
        rhs_norm: f64,
        abs_err: f64,
        tol: f64,
    ) -> Self {
        let rel_err = abs_err / lhs_norm.max(REL_FLOOR);
        let pass = rel_err.is_finite() && rel_err <= tol;
        Self {
            name: name.to_string(),
            params: CheckParams {
                dim,
                n,
                p: p.to_string(),
                family: String::new(),
                seed: 0,
                trial: 0,
            },
            lhs_norm,
            rhs_norm,
            abs_err,
            rel_err,
            tol,
            pass,
        }
    }

    pub fn with_context(mut self, family: &str, seed: u64, trial: usize) -> Self {
        self.params.family = family.to_string();
        self.params.seed = seed;
        self.params.trial = trial;
        self
    }
}
