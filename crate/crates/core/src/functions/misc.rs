use std::sync::Arc;

use super::{CircleFunction, DerivStack, LineFunction};
use crate::C64;

/// Polynomial `Σ c_k x^k` on the real line.
#[derive(Clone, Debug)]
pub struct LinePoly {
    coeffs: Vec<C64>,
}

impl LinePoly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Self { coeffs }
    }

    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); k + 1];
        coeffs[k] = C64::new(1.0, 0.0);
        Self { coeffs }
    }
}

impl DerivStack for LinePoly {
    fn order(&self) -> usize {
        usize::MAX
    }

    fn deriv(&self, m: usize, x: C64) -> C64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(m)
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, (k, &c)| {
                let falling: f64 = (0..m).map(|r| (k - r) as f64).product();
                acc * x + c * falling
            })
    }

    fn label(&self) -> String {
        format!("linepoly:{}", self.coeffs.len().saturating_sub(1))
    }
}

impl LineFunction for LinePoly {}

/// `e^{iωx}` on the real line.
#[derive(Clone, Copy, Debug)]
pub struct LineExp {
    pub frequency: f64,
}

impl DerivStack for LineExp {
    fn order(&self) -> usize {
        usize::MAX
    }

    fn deriv(&self, k: usize, x: C64) -> C64 {
        let w = C64::new(0.0, self.frequency);
        w.powu(k as u32) * (w * x).exp()
    }

    fn label(&self) -> String {
        format!("lineexp:{}", self.frequency)
    }
}

impl LineFunction for LineExp {}

/// `α f + g` on the circle.
#[derive(Clone)]
pub struct Combination {
    pub alpha: C64,
    pub first: Arc<dyn CircleFunction>,
    pub second: Arc<dyn CircleFunction>,
}

impl DerivStack for Combination {
    fn order(&self) -> usize {
        self.first.order().min(self.second.order())
    }

    fn deriv(&self, k: usize, z: C64) -> C64 {
        self.alpha * self.first.deriv(k, z) + self.second.deriv(k, z)
    }

    fn label(&self) -> String {
        format!("({})*{} + {}", self.alpha, self.first.label(), self.second.label())
    }
}

impl CircleFunction for Combination {
    fn angle_deriv(&self, k: usize, t: f64) -> C64 {
        self.alpha * self.first.angle_deriv(k, t) + self.second.angle_deriv(k, t)
    }
}

/// `z ↦ conj(f(z̄))`, so that `g(U*) = f(U)*` for unitary `U`.
#[derive(Clone)]
pub struct ConjReflected {
    pub inner: Arc<dyn CircleFunction>,
}

impl DerivStack for ConjReflected {
    fn order(&self) -> usize {
        self.inner.order()
    }

    fn deriv(&self, k: usize, z: C64) -> C64 {
        self.inner.deriv(k, z.conj()).conj()
    }

    fn label(&self) -> String {
        format!("conj({})", self.inner.label())
    }
}

impl CircleFunction for ConjReflected {}
