//! Seeded ensembles, the verification suite and single-experiment commands
//! behind the `opcalc` binary.

mod commands;
mod suite;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::SchattenOrder;
use crate::paths::{ExpPath, LinearSAPath, OperatorPath, ProductExpPath};
use crate::random::{haar_unitary, random_hermitian, unitary_with_spectrum};
use crate::ComplexMatrix;

pub use commands::{cmd_derivative, cmd_remainder, cmd_smooth, cmd_truncate, log_log_slope, parse_range, CommandOutput};
pub use suite::{run_suite, write_report, ReportFormat, SuiteConfig, SuiteOutcome};

/// Largest supported dimension.
pub const MAX_DIM: usize = 32;
/// Largest supported derivative / MOI order.
pub const MAX_ORDER: usize = 4;

/// ChaCha8 seeded by `seed`, on the stream given by the first 8 bytes of
/// `SHA-256(key)`. Distinct keys give independent streams, so adding cells
/// leaves existing draws untouched.
pub fn cell_rng(seed: u64, key: &str) -> ChaCha8Rng {
    let digest = Sha256::digest(key.as_bytes());
    let mut stream = [0u8; 8];
    stream.copy_from_slice(&digest[..8]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from_le_bytes(stream));
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum UnitaryKind {
    /// QR of a Gaussian matrix with positive `R` diagonal.
    HaarLike,
    /// `W diag(e^{2πiθ_k}) W*` with prescribed fractions `θ_k`.
    Spectral(Vec<f64>),
}

/// Reproducible random draws for one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub dim: usize,
    pub seed: u64,
    pub unitary_kind: UnitaryKind,
    pub perturbation_scale: f64,
}

impl EnsembleSpec {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            unitary_kind: UnitaryKind::HaarLike,
            perturbation_scale: 1.0,
        }
    }

    pub fn rng(&self, stream: &str) -> ChaCha8Rng {
        cell_rng(self.seed, &format!("{}|{stream}", self.dim))
    }

    pub fn unitary(&self, stream: &str) -> Result<ComplexMatrix> {
        let mut rng = self.rng(stream);
        match &self.unitary_kind {
            UnitaryKind::HaarLike => haar_unitary(self.dim, &mut rng),
            UnitaryKind::Spectral(fractions) => {
                if fractions.len() != self.dim {
                    return Err(Error::Dimension {
                        expected: self.dim,
                        found: fractions.len(),
                    });
                }
                unitary_with_spectrum(fractions, &mut rng)
            }
        }
    }

    /// Hermitian draw with `‖H‖_p` equal to the perturbation scale.
    pub fn hermitian(&self, stream: &str, p: SchattenOrder) -> ComplexMatrix {
        random_hermitian(self.dim, self.perturbation_scale, p, &mut self.rng(stream))
    }
}

/// CLI path description: `{"kind", "dim", "seed", "norm_scale"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub kind: String,
    pub dim: usize,
    pub seed: u64,
    #[serde(default = "default_norm_scale")]
    pub norm_scale: f64,
}

fn default_norm_scale() -> f64 {
    1.0
}

impl PathSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: PathSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_DIM).contains(&self.dim) {
            return Err(Error::config("dim", format!("{} outside 1..={MAX_DIM}", self.dim)));
        }
        if !(self.norm_scale.is_finite() && self.norm_scale >= 0.0) {
            return Err(Error::config("norm_scale", "must be finite and non-negative"));
        }
        if !matches!(self.kind.as_str(), "exp" | "linear_sa" | "product_exp") {
            return Err(Error::config("kind", format!("unknown path kind `{}`", self.kind)));
        }
        Ok(())
    }

    /// Generators are scaled to operator norm `norm_scale`.
    pub fn build(&self) -> Result<Box<dyn OperatorPath>> {
        self.validate()?;
        let ens = EnsembleSpec {
            perturbation_scale: self.norm_scale,
            ..EnsembleSpec::new(self.dim, self.seed)
        };
        let op = SchattenOrder::INFINITY;
        Ok(match self.kind.as_str() {
            "exp" => Box::new(ExpPath::new(ens.hermitian("generator", op), ens.unitary("base")?)?),
            "product_exp" => Box::new(ProductExpPath::new(
                ens.hermitian("generator", op),
                ens.hermitian("generator2", op),
                ens.unitary("base")?,
            )?),
            _ => Box::new(LinearSAPath::new(
                ens.hermitian("start", op),
                ens.hermitian("direction", op),
            )?),
        })
    }
}
