use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{CircleFunction, DerivStack};
use crate::error::{Error, Result};
use crate::C64;

/// Trigonometric polynomial `Σ_{k=-d}^{d} c_k z^k` on the unit circle.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    degree: usize,
    coeffs: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct TrigPolyJson {
    degree: usize,
    coeffs: Vec<(i64, f64, f64)>,
}

impl TrigPoly {
    /// `coeffs[k + degree]` holds `c_k`.
    pub fn new(degree: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != 2 * degree + 1 {
            return Err(Error::Dimension {
                expected: 2 * degree + 1,
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::domain("trigonometric coefficients must be finite"));
        }
        Ok(Self { degree, coeffs })
    }

    pub fn constant(c: C64) -> Self {
        Self {
            degree: 0,
            coeffs: vec![c],
        }
    }

    /// `c · z^k`.
    pub fn monomial(k: i32, c: C64) -> Self {
        let degree = k.unsigned_abs() as usize;
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * degree + 1];
        coeffs[(k + degree as i32) as usize] = c;
        Self { degree, coeffs }
    }

    /// Gaussian coefficients normalised to `Σ |c_k| = 1`, so `‖f‖∞ ≤ 1`.
    pub fn random<R: Rng + ?Sized>(degree: usize, rng: &mut R) -> Self {
        let mut coeffs: Vec<C64> = (0..2 * degree + 1)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let total: f64 = coeffs.iter().map(|c| c.norm()).sum();
        for c in &mut coeffs {
            *c /= total;
        }
        Self { degree, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, k: i64) -> C64 {
        if k.unsigned_abs() as usize > self.degree {
            return C64::new(0.0, 0.0);
        }
        self.coeffs[(k + self.degree as i64) as usize]
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// `α·self + other`.
    pub fn combine(&self, alpha: C64, other: &TrigPoly) -> TrigPoly {
        let degree = self.degree.max(other.degree);
        let coeffs = (-(degree as i64)..=degree as i64)
            .map(|k| alpha * self.coeff(k) + other.coeff(k))
            .collect();
        TrigPoly { degree, coeffs }
    }

    pub fn to_json(&self) -> Result<String> {
        let repr = TrigPolyJson {
            degree: self.degree,
            coeffs: (-(self.degree as i64)..=self.degree as i64)
                .map(|k| {
                    let c = self.coeff(k);
                    (k, c.re, c.im)
                })
                .collect(),
        };
        Ok(serde_json::to_string(&repr)?)
    }

    /// Accepts sparse coefficient lists; absent indices are zero.
    pub fn from_json(text: &str) -> Result<Self> {
        let repr: TrigPolyJson = serde_json::from_str(text)?;
        let d = repr.degree as i64;
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * repr.degree + 1];
        for (k, re, im) in repr.coeffs {
            if k.abs() > d {
                return Err(Error::config("coeffs", format!("index {k} exceeds degree {d}")));
            }
            coeffs[(k + d) as usize] += C64::new(re, im);
        }
        Self::new(repr.degree, coeffs)
    }
}

impl DerivStack for TrigPoly {
    fn order(&self) -> usize {
        usize::MAX
    }

    fn deriv(&self, m: usize, z: C64) -> C64 {
        let d = self.degree as i64;
        let m_i = m as i64;
        let mut power = z.powi((-d - m_i) as i32);
        let mut acc = C64::new(0.0, 0.0);
        for (idx, &c) in self.coeffs.iter().enumerate() {
            let k = idx as i64 - d;
            if c != C64::new(0.0, 0.0) {
                let falling: f64 = (0..m_i).map(|r| (k - r) as f64).product();
                if falling != 0.0 {
                    acc += c * falling * power;
                }
            }
            power *= z;
        }
        acc
    }

    fn label(&self) -> String {
        let nonzero: Vec<i64> = (-(self.degree as i64)..=self.degree as i64)
            .filter(|&k| self.coeff(k) != C64::new(0.0, 0.0))
            .collect();
        match nonzero.as_slice() {
            [k] if self.coeff(*k) == C64::new(1.0, 0.0) => format!("z^{k}"),
            _ => format!("trig:{}", self.degree),
        }
    }
}

impl CircleFunction for TrigPoly {
    fn angle_deriv(&self, m: usize, t: f64) -> C64 {
        let d = self.degree as i64;
        (-d..=d)
            .map(|k| self.coeff(k) * C64::new(0.0, k as f64).powu(m as u32) * C64::cis(k as f64 * t))
            .sum()
    }
}
