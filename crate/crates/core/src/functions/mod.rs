//! Functions on the unit circle and the real line carrying exact derivative
//! stacks, together with the Fejér and Steklov smoothing constructions.
//!
//! Circle derivatives are limits of difference quotients taken along the
//! circle: `f'(z) = lim (f(w) − f(z))/(w − z)` with `w → z` on `𝕋`. For
//! `f̃(t) = f(e^{it})` the two notions are related by
//!
//! ```text
//! f̃^(k)(t)      = Σ_{p=1}^k a_{p,k} e^{ipt} f^(p)(e^{it})
//! f^(k)(e^{it}) = e^{-ikt} Σ_{p=1}^k b_{p,k} f̃^(p)(t)
//! ```
//!
//! with coefficient tables generated by [`angle_coefficients`] and
//! [`circle_coefficients`].

mod cayley;
mod coeffs;
mod misc;
mod smoothing;
mod triangle;
mod trig;

use std::f64::consts::TAU;
use std::fmt;

use crate::error::Result;
use crate::C64;

pub use cayley::{cayley_eta, cayley_eta_inverse, cayley_pullback, cayley_pushforward, CayleyPullback, CayleyPushforward};
pub use coeffs::{angle_coefficients, cayley_chain_coefficients, circle_coefficients};
pub use misc::{Combination, ConjReflected, LineExp, LinePoly};
pub use smoothing::{adaptive_simpson, fejer_smooth, steklov_smooth, SteklovSmoothed, FEJER_GRID};
pub use triangle::TriangleStack;
pub use trig::TrigPoly;

/// Default number of uniform samples for sup-norm estimates.
pub const SUP_GRID: usize = 4096;

/// A scalar function with derivatives `0..=order()` available in closed form.
///
/// `deriv(k, z)` must only be called with `k ≤ order()`. Smooth functions
/// report `usize::MAX`.
pub trait DerivStack: Send + Sync {
    fn order(&self) -> usize;

    fn deriv(&self, k: usize, z: C64) -> C64;

    fn eval(&self, z: C64) -> C64 {
        self.deriv(0, z)
    }

    fn label(&self) -> String;

    /// Rejects points where the function is undefined.
    fn check_point(&self, _z: C64) -> Result<()> {
        Ok(())
    }
}

/// A function on the unit circle; derivatives are circle derivatives.
pub trait CircleFunction: DerivStack {
    /// `d^k/dt^k f(e^{it})`.
    fn angle_deriv(&self, k: usize, t: f64) -> C64 {
        let z = C64::cis(t);
        if k == 0 {
            return self.deriv(0, z);
        }
        let a = angle_coefficients(k);
        (1..=k).fold(C64::new(0.0, 0.0), |acc, p| {
            acc + a[p] * C64::cis(p as f64 * t) * self.deriv(p, z)
        })
    }
}

/// A function on the real line, evaluated at real points embedded in `ℂ`.
pub trait LineFunction: DerivStack {}

impl fmt::Debug for dyn CircleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CircleFunction({})", self.label())
    }
}

impl fmt::Debug for dyn LineFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LineFunction({})", self.label())
    }
}

/// Circle derivative assembled from angle derivatives.
pub(crate) fn circle_from_angle(k: usize, t: f64, angle: impl Fn(usize) -> C64) -> C64 {
    if k == 0 {
        return angle(0);
    }
    let b = circle_coefficients(k);
    let sum = (1..=k).fold(C64::new(0.0, 0.0), |acc, p| acc + b[p] * angle(p));
    C64::cis(-(k as f64) * t) * sum
}

fn grid_max(grid: usize, sample: impl Fn(f64) -> f64) -> f64 {
    (0..grid)
        .map(|m| sample(TAU * m as f64 / grid as f64))
        .fold(0.0, f64::max)
}

/// `max |f^(k)|` over `grid` uniform circle samples. This is a lower bound
/// for the true supremum.
pub fn sup_norm(f: &dyn CircleFunction, k: usize, grid: usize) -> f64 {
    grid_max(grid, |t| f.deriv(k, C64::cis(t)).norm())
}

/// `max |d^k/dt^k f(e^{it})|` over `grid` uniform samples.
pub fn angle_sup_norm(f: &dyn CircleFunction, k: usize, grid: usize) -> f64 {
    grid_max(grid, |t| f.angle_deriv(k, t).norm())
}

/// `max |d^k/dt^k (f − g)(e^{it})|` over `grid` uniform samples.
pub fn angle_sup_distance(f: &dyn CircleFunction, g: &dyn CircleFunction, k: usize, grid: usize) -> f64 {
    grid_max(grid, |t| (f.angle_deriv(k, t) - g.angle_deriv(k, t)).norm())
}

/// Sup-norm reference on a grid ten times finer than [`SUP_GRID`].
pub fn refined_sup_norm(f: &dyn CircleFunction, k: usize) -> f64 {
    sup_norm(f, k, 10 * SUP_GRID)
}

/// Parses a function family label: `z`, `monomial:k`, `trig:d` (seeded
/// random coefficients), `triangle:n`.
pub fn parse_family(spec: &str, seed: u64) -> Result<std::sync::Arc<dyn CircleFunction>> {
    use rand::SeedableRng;
    use std::sync::Arc;

    let bad = |reason: &str| crate::Error::config("family", format!("`{spec}`: {reason}"));
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (spec, None),
    };
    let int_arg = || -> Result<i64> {
        arg.ok_or_else(|| bad("missing parameter"))?
            .trim()
            .parse::<i64>()
            .map_err(|_| bad("parameter must be an integer"))
    };
    match kind {
        "z" if arg.is_none() => Ok(Arc::new(TrigPoly::monomial(1, C64::new(1.0, 0.0)))),
        "monomial" => {
            let k = int_arg()?;
            if k.abs() > 64 {
                return Err(bad("degree out of range"));
            }
            Ok(Arc::new(TrigPoly::monomial(k as i32, C64::new(1.0, 0.0))))
        }
        "trig" => {
            let d = int_arg()?;
            if !(0..=64).contains(&d) {
                return Err(bad("degree must be in 0..=64"));
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            Ok(Arc::new(TrigPoly::random(d as usize, &mut rng)))
        }
        "triangle" => {
            let n = int_arg()?;
            if !(1..=8).contains(&n) {
                return Err(bad("order must be in 1..=8"));
            }
            Ok(Arc::new(TriangleStack::new(n as usize)?))
        }
        _ => Err(bad("unknown function family")),
    }
}
