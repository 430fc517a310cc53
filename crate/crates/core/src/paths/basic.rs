use std::sync::Arc;

use super::{check_order, Flavor, OperatorPath};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, is_unitary, operator_norm, structure_tolerance, Spectral};
use crate::{ComplexMatrix, C64};

pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `d^r/dt^r e^{itA} = W diag((iλ)^r e^{itλ}) W*`.
fn exp_factor(dec: &Spectral<f64>, t: f64, r: usize) -> ComplexMatrix {
    let values: Vec<C64> = dec
        .eigenvalues
        .iter()
        .map(|l| C64::new(0.0, l.re).powu(r as u32) * C64::cis(t * l.re))
        .collect();
    dec.synthesize(&values)
}

fn require_unitary(u: &ComplexMatrix, what: &str) -> Result<()> {
    if !is_unitary(u, structure_tolerance::<f64>()) {
        return Err(Error::domain(format!("{what} must be unitary")));
    }
    Ok(())
}

/// `U(t) = e^{itA} U₀`.
#[derive(Clone, Debug)]
pub struct ExpPath {
    generator: ComplexMatrix,
    dec: Spectral<f64>,
    start: ComplexMatrix,
}

impl ExpPath {
    pub fn new(generator: ComplexMatrix, start: ComplexMatrix) -> Result<Self> {
        if generator.dim() != start.dim() {
            return Err(Error::Dimension {
                expected: generator.dim(),
                found: start.dim(),
            });
        }
        require_unitary(&start, "base point")?;
        let dec = herm_eig(&generator)?;
        Ok(Self {
            generator,
            dec,
            start,
        })
    }

    pub fn generator(&self) -> &ComplexMatrix {
        &self.generator
    }
}

impl OperatorPath for ExpPath {
    fn flavor(&self) -> Flavor {
        Flavor::Unitary
    }

    fn order(&self) -> usize {
        usize::MAX
    }

    fn dim(&self) -> usize {
        self.start.dim()
    }

    fn eval(&self, t: f64) -> Result<ComplexMatrix> {
        Ok(exp_factor(&self.dec, t, 0).matmul(&self.start))
    }

    fn deriv(&self, l: usize, t: f64) -> Result<ComplexMatrix> {
        if l == 0 {
            return Ok(&self.eval(t)? - &self.start);
        }
        Ok(exp_factor(&self.dec, t, l).matmul(&self.start))
    }

    fn base(&self) -> Result<ComplexMatrix> {
        Ok(self.start.clone())
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some(operator_norm(&self.generator))
    }

    fn label(&self) -> String {
        "exp".into()
    }
}

/// `A(t) = A₀ + tK`.
#[derive(Clone, Debug)]
pub struct LinearSAPath {
    start: ComplexMatrix,
    direction: ComplexMatrix,
}

impl LinearSAPath {
    pub fn new(start: ComplexMatrix, direction: ComplexMatrix) -> Result<Self> {
        if start.dim() != direction.dim() {
            return Err(Error::Dimension {
                expected: start.dim(),
                found: direction.dim(),
            });
        }
        let tol = structure_tolerance::<f64>();
        for (m, what) in [(&start, "start"), (&direction, "direction")] {
            if !crate::linalg::is_hermitian(m, tol) {
                return Err(Error::domain(format!("{what} of a selfadjoint path must be Hermitian")));
            }
        }
        Ok(Self { start, direction })
    }
}

impl OperatorPath for LinearSAPath {
    fn flavor(&self) -> Flavor {
        Flavor::SelfAdjoint
    }

    fn order(&self) -> usize {
        usize::MAX
    }

    fn dim(&self) -> usize {
        self.start.dim()
    }

    fn eval(&self, t: f64) -> Result<ComplexMatrix> {
        Ok(&self.start + &self.direction.scale_real(t))
    }

    fn deriv(&self, l: usize, t: f64) -> Result<ComplexMatrix> {
        Ok(match l {
            0 => self.direction.scale_real(t),
            1 => self.direction.clone(),
            _ => ComplexMatrix::zeros(self.dim()),
        })
    }

    fn base(&self) -> Result<ComplexMatrix> {
        Ok(self.start.clone())
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some(operator_norm(&self.direction))
    }

    fn label(&self) -> String {
        "linear_sa".into()
    }
}

/// `U(t) = e^{itA₁} e^{itA₂} U₀`: non-commuting derivatives.
#[derive(Clone, Debug)]
pub struct ProductExpPath {
    first: Spectral<f64>,
    second: Spectral<f64>,
    start: ComplexMatrix,
    bound: f64,
}

impl ProductExpPath {
    pub fn new(first: ComplexMatrix, second: ComplexMatrix, start: ComplexMatrix) -> Result<Self> {
        for m in [&first, &second] {
            if m.dim() != start.dim() {
                return Err(Error::Dimension {
                    expected: start.dim(),
                    found: m.dim(),
                });
            }
        }
        require_unitary(&start, "base point")?;
        let bound = operator_norm(&first) + operator_norm(&second);
        Ok(Self {
            first: herm_eig(&first)?,
            second: herm_eig(&second)?,
            start,
            bound,
        })
    }
}

impl OperatorPath for ProductExpPath {
    fn flavor(&self) -> Flavor {
        Flavor::Unitary
    }

    fn order(&self) -> usize {
        usize::MAX
    }

    fn dim(&self) -> usize {
        self.start.dim()
    }

    fn eval(&self, t: f64) -> Result<ComplexMatrix> {
        Ok(exp_factor(&self.first, t, 0).matmul(&exp_factor(&self.second, t, 0)).matmul(&self.start))
    }

    fn deriv(&self, l: usize, t: f64) -> Result<ComplexMatrix> {
        if l == 0 {
            return Ok(&self.eval(t)? - &self.start);
        }
        let mut total = ComplexMatrix::zeros(self.dim());
        for r in 0..=l {
            let term = exp_factor(&self.first, t, r).matmul(&exp_factor(&self.second, t, l - r));
            total.axpy(C64::new(binomial(l, r), 0.0), &term);
        }
        Ok(total.matmul(&self.start))
    }

    fn base(&self) -> Result<ComplexMatrix> {
        Ok(self.start.clone())
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some(self.bound)
    }

    fn label(&self) -> String {
        "product_exp".into()
    }
}

/// `t ↦ X(t)*`.
#[derive(Clone)]
pub struct AdjointPath {
    pub inner: Arc<dyn OperatorPath>,
}

impl OperatorPath for AdjointPath {
    fn flavor(&self) -> Flavor {
        self.inner.flavor()
    }

    fn order(&self) -> usize {
        self.inner.order()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, t: f64) -> Result<ComplexMatrix> {
        Ok(self.inner.eval(t)?.adjoint())
    }

    fn deriv(&self, l: usize, t: f64) -> Result<ComplexMatrix> {
        check_order(self, l)?;
        Ok(self.inner.deriv(l, t)?.adjoint())
    }

    fn base(&self) -> Result<ComplexMatrix> {
        Ok(self.inner.base()?.adjoint())
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        self.inner.lipschitz_bound()
    }

    fn label(&self) -> String {
        format!("adjoint({})", self.inner.label())
    }
}
