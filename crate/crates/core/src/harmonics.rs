//! Zonal spherical harmonics on `S^{n-1}`.
//!
//! The degree-`ℓ` zonal harmonic is the Gegenbauer polynomial
//! `C_ℓ^{(n-2)/2}(t)` in `t = x_n/|x|`, normalised here to equal 1 at
//! `t = 1`. In that normalisation the three-term recurrence reads
//!
//! ```text
//! (ℓ + n - 2) P_{ℓ+1}(t) = (2ℓ + n - 2) t P_ℓ(t) - ℓ P_{ℓ-1}(t)
//! ```
//!
//! which also covers `n = 2` (Chebyshev) once `P_1 = t` is seeded directly.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::quadrature::panel_rule;

pub const MAX_DEGREE: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct ZonalPolynomial {
    n: usize,
    ell: usize,
    /// Monomial coefficients, constant term first.
    coefficients: Vec<f64>,
}

pub fn zonal(n: usize, ell: usize) -> Result<ZonalPolynomial> {
    if n < 2 {
        return invalid(format!("sphere dimension needs n >= 2, got {n}"));
    }
    if ell > MAX_DEGREE {
        return invalid(format!("degree {ell} exceeds the guard {MAX_DEGREE}"));
    }
    let nf = n as f64;
    let mut prev = vec![1.0];
    let mut cur = vec![0.0, 1.0];
    if ell == 0 {
        cur = prev.clone();
    } else {
        for k in 1..ell {
            let kf = k as f64;
            let a = (2.0 * kf + nf - 2.0) / (kf + nf - 2.0);
            let b = kf / (kf + nf - 2.0);
            let mut next = vec![0.0; k + 2];
            for (i, c) in cur.iter().enumerate() {
                next[i + 1] += a * c;
            }
            for (i, c) in prev.iter().enumerate() {
                next[i] -= b * c;
            }
            prev = cur;
            cur = next;
        }
    }
    Ok(ZonalPolynomial {
        n,
        ell,
        coefficients: cur,
    })
}

impl ZonalPolynomial {
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.ell
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// Value, first and second derivative at `t`.
    pub fn eval_with_derivatives(&self, t: f64) -> (f64, f64, f64) {
        let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for &c in self.coefficients.iter().rev() {
            d2 = d2 * t + 2.0 * d1;
            d1 = d1 * t + v;
            v = v * t + c;
        }
        (v, d1, d2)
    }

    /// `∫_{-1}^{1} z(t) w(t) (1 - t²)^{(n-3)/2} dt`, via `t = cos θ` so the
    /// endpoint behaviour of the weight does not limit accuracy.
    pub fn weighted_pairing(&self, other: &ZonalPolynomial) -> Result<f64> {
        if self.n != other.n {
            return invalid("zonal polynomials live on different spheres");
        }
        let (theta, w) = panel_rule(0.0, PI, 16, 32);
        let power = self.n as i32 - 2;
        Ok(theta
            .iter()
            .zip(&w)
            .map(|(&th, &wk)| {
                let t = th.cos();
                wk * self.eval(t) * other.eval(t) * th.sin().powi(power)
            })
            .sum())
    }

    /// `∫_{S^{n-1}} |z(x_n)|² dσ`.
    pub fn sphere_norm_sq(&self) -> f64 {
        let inner = self.weighted_pairing(self).expect("same sphere");
        sphere_area(self.n - 2) * inner
    }
}

/// Surface area of the unit sphere `S^k ⊂ R^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}

/// Max over 1000 interior points of the Gegenbauer ODE residual
/// `(1-t²)z'' - (n-1)t z' + ℓ(ℓ+n-2) z`, relative to `max |z|`.
pub fn zonal_ode_residual(z: &ZonalPolynomial) -> f64 {
    let nf = z.n as f64;
    let l = z.ell as f64;
    let eig = l * (l + nf - 2.0);
    let mut max_res: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    for k in 0..1000 {
        let t = -1.0 + 2.0 * (k as f64 + 1.0) / 1001.0;
        let (v, d1, d2) = z.eval_with_derivatives(t);
        let res = (1.0 - t * t) * d2 - (nf - 1.0) * t * d1 + eig * v;
        max_res = max_res.max(res.abs());
        max_z = max_z.max(v.abs());
    }
    if max_z == 0.0 {
        0.0
    } else {
        max_res / max_z
    }
}
