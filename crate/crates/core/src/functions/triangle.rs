use std::f64::consts::{PI, TAU};

use super::{circle_from_angle, CircleFunction, DerivStack};
use crate::error::{Error, Result};
use crate::C64;

/// Piecewise polynomial on `[0, π)` and `[π, 2π)`, each piece in its local
/// variable `s = θ` resp. `s = θ − π`, coefficients ascending.
#[derive(Clone, Debug)]
struct Piecewise {
    first: Vec<f64>,
    second: Vec<f64>,
}

fn horner(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

fn integrate(coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend(coeffs.iter().enumerate().map(|(i, &c)| c / (i + 1) as f64));
    out
}

impl Piecewise {
    fn eval(&self, theta: f64) -> f64 {
        let t = theta.rem_euclid(TAU);
        if t < PI {
            horner(&self.first, t)
        } else {
            horner(&self.second, t - PI)
        }
    }

    /// Zero-mean periodic antiderivative; requires `self` to have zero mean.
    fn antiderivative(&self) -> Piecewise {
        let mut first = integrate(&self.first);
        let mut second = integrate(&self.second);
        second[0] = horner(&first, PI);
        let mean = (horner(&integrate(&first), PI) + horner(&integrate(&second), PI)) / TAU;
        first[0] -= mean;
        second[0] -= mean;
        Piecewise { first, second }
    }
}

/// Function whose `n`-th angle derivative is `sgn(sin θ)`: bounded, with
/// jumps at `θ ∈ {0, π}`. Lower levels are the iterated zero-mean periodic
/// antiderivatives, so levels `< n` are continuous and level `n − 1` is
/// Lipschitz.
#[derive(Clone, Debug)]
pub struct TriangleStack {
    order: usize,
    levels: Vec<Piecewise>,
}

impl TriangleStack {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::domain("triangle stack order must be at least 1"));
        }
        let mut levels = vec![Piecewise {
            first: vec![1.0],
            second: vec![-1.0],
        }];
        for _ in 0..order {
            let next = levels.last().expect("non-empty").antiderivative();
            levels.push(next);
        }
        levels.reverse();
        Ok(Self { order, levels })
    }
}

impl DerivStack for TriangleStack {
    fn order(&self) -> usize {
        self.order
    }

    fn deriv(&self, k: usize, z: C64) -> C64 {
        let t = z.arg();
        circle_from_angle(k, t, |p| self.angle_deriv(p, t))
    }

    fn label(&self) -> String {
        format!("triangle:{}", self.order)
    }
}

impl CircleFunction for TriangleStack {
    fn angle_deriv(&self, k: usize, t: f64) -> C64 {
        match self.levels.get(k) {
            Some(level) => C64::new(level.eval(t), 0.0),
            None => C64::new(0.0, 0.0),
        }
    }
}
