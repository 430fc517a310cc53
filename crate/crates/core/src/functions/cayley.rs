use std::sync::Arc;

use super::{cayley_chain_coefficients, CircleFunction, DerivStack, LineFunction};
use crate::error::{Error, Result};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Minimum distance to the Cayley pole accepted by checked evaluations.
pub const POLE_TOLERANCE: f64 = 1e-8;

/// `η(x) = (x + i)/(x − i)`, mapping `ℝ` onto `𝕋 ∖ {1}`.
pub fn cayley_eta(x: C64) -> C64 {
    (x + I) / (x - I)
}

/// `η^{-1}(z) = i(z + 1)/(z − 1)`; the pole `z = 1` is a domain error.
pub fn cayley_eta_inverse(z: C64) -> Result<C64> {
    if (z - 1.0).norm() < POLE_TOLERANCE {
        return Err(Error::domain(format!("point {z} is at the Cayley pole 1")));
    }
    Ok(I * (z + 1.0) / (z - 1.0))
}

/// `g(x) = f(e^{iθ} η(x))` on the real line.
#[derive(Clone)]
pub struct CayleyPullback {
    circle: Arc<dyn CircleFunction>,
    rotation: f64,
}

pub fn cayley_pullback(f: Arc<dyn CircleFunction>, rotation: f64) -> CayleyPullback {
    CayleyPullback { circle: f, rotation }
}

impl CayleyPullback {
    pub fn rotation(&self) -> f64 {
        self.rotation
    }
}

/// `Σ_p c_{k,p} h^(p)(w) (x − pole)^{-(k+p)}` for the composition
/// `x ↦ h(1 + 2i/(x − pole))`.
fn chain(k: usize, x: C64, pole: C64, w: C64, h: impl Fn(usize, C64) -> C64) -> C64 {
    if k == 0 {
        return h(0, w);
    }
    let c = cayley_chain_coefficients(k);
    let inv = (x - pole).inv();
    (1..=k).fold(C64::new(0.0, 0.0), |acc, p| acc + c[p] * h(p, w) * inv.powu((k + p) as u32))
}

impl DerivStack for CayleyPullback {
    fn order(&self) -> usize {
        self.circle.order()
    }

    fn deriv(&self, k: usize, x: C64) -> C64 {
        let rot = C64::cis(self.rotation);
        let w = rot * cayley_eta(x);
        chain(k, x, I, w, |p, w| rot.powu(p as u32) * self.circle.deriv(p, w))
    }

    fn label(&self) -> String {
        format!("pullback({}, {})", self.circle.label(), self.rotation)
    }
}

impl LineFunction for CayleyPullback {}

/// `f(z) = g(η^{-1}(z))` on `𝕋 ∖ {1}`.
#[derive(Clone)]
pub struct CayleyPushforward {
    line: Arc<dyn LineFunction>,
}

pub fn cayley_pushforward(g: Arc<dyn LineFunction>) -> CayleyPushforward {
    CayleyPushforward { line: g }
}

impl CayleyPushforward {
    pub fn eval_checked(&self, k: usize, z: C64) -> Result<C64> {
        self.check_point(z)?;
        Ok(self.deriv(k, z))
    }
}

impl DerivStack for CayleyPushforward {
    fn order(&self) -> usize {
        self.line.order()
    }

    /// Returns NaN at the pole; use [`CayleyPushforward::eval_checked`] for a
    /// reported error.
    fn deriv(&self, k: usize, z: C64) -> C64 {
        match cayley_eta_inverse(z) {
            Ok(x) => chain(k, z, C64::new(1.0, 0.0), x, |p, x| self.line.deriv(p, x)),
            Err(_) => C64::new(f64::NAN, f64::NAN),
        }
    }

    fn label(&self) -> String {
        format!("pushforward({})", self.line.label())
    }

    fn check_point(&self, z: C64) -> Result<()> {
        cayley_eta_inverse(z).map(|_| ())
    }
}

impl CircleFunction for CayleyPushforward {}
