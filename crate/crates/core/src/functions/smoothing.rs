use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::FftPlanner;

use super::{circle_from_angle, CircleFunction, DerivStack, TrigPoly};
use crate::C64;

/// Number of quadrature nodes for Fourier coefficients.
pub const FEJER_GRID: usize = 1 << 14;

const SIMPSON_TOL: f64 = 1e-10;
const SIMPSON_DEPTH: u32 = 40;

/// Fejér mean `f * F_j`: the trigonometric polynomial with coefficients
/// `ĉ_k (1 − |k|/(j+1))` for `|k| ≤ j`. `ĉ_k` come from trapezoidal
/// quadrature on [`FEJER_GRID`] nodes.
pub fn fejer_smooth(f: &dyn CircleFunction, j: usize) -> TrigPoly {
    let j = j.max(1);
    let m = FEJER_GRID;
    let mut samples: Vec<C64> = (0..m).map(|i| f.eval(C64::cis(TAU * i as f64 / m as f64))).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut samples);
    let degree = j.min(m / 2 - 1);
    let coeffs = (-(degree as i64)..=degree as i64)
        .map(|k| {
            let idx = k.rem_euclid(m as i64) as usize;
            let weight = 1.0 - k.unsigned_abs() as f64 / (j + 1) as f64;
            samples[idx] * (weight / m as f64)
        })
        .collect();
    TrigPoly::new(degree, coeffs).expect("coefficient count matches degree")
}

/// Steklov average `f_j` with `f̃_j(t) = j∫_0^t (f̃(u+1/j) − f̃(u)) du + f̃(0)`.
#[derive(Clone)]
pub struct SteklovSmoothed {
    base: Arc<dyn CircleFunction>,
    j: usize,
}

pub fn steklov_smooth(f: Arc<dyn CircleFunction>, j: usize) -> SteklovSmoothed {
    SteklovSmoothed { base: f, j: j.max(1) }
}

impl SteklovSmoothed {
    fn step(&self) -> f64 {
        1.0 / self.j as f64
    }

    /// Level-0 value. The defining integral is rewritten as
    /// `j∫_t^{t+1/j} f̃ − j∫_0^{1/j} f̃ + f̃(0)` (same value, short intervals).
    fn value(&self, t: f64) -> C64 {
        let h = self.step();
        let jf = self.j as f64;
        let g = |u: f64| self.base.angle_deriv(0, u);
        let t = t.rem_euclid(TAU);
        jf * adaptive_simpson(&g, t, t + h, SIMPSON_TOL) - jf * adaptive_simpson(&g, 0.0, h, SIMPSON_TOL) + g(0.0)
    }
}

impl DerivStack for SteklovSmoothed {
    fn order(&self) -> usize {
        self.base.order()
    }

    fn deriv(&self, k: usize, z: C64) -> C64 {
        let t = z.arg();
        circle_from_angle(k, t, |p| self.angle_deriv(p, t))
    }

    fn label(&self) -> String {
        format!("steklov({}, {})", self.base.label(), self.j)
    }
}

impl CircleFunction for SteklovSmoothed {
    fn angle_deriv(&self, k: usize, t: f64) -> C64 {
        if k == 0 {
            return self.value(t);
        }
        let jf = self.j as f64;
        jf * (self.base.angle_deriv(k - 1, t + self.step()) - self.base.angle_deriv(k - 1, t))
    }
}

/// Adaptive Simpson quadrature of a complex integrand.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> C64, a: f64, b: f64, tol: f64) -> C64 {
    let fa = f(a);
    let fb = f(b);
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, SIMPSON_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> C64, a: f64, b: f64, fa: C64, fm: C64, fb: C64, whole: C64, tol: f64, depth: u32) -> C64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
