//! The Laplacian and its pieces acting on a single spherical-harmonic mode
//! `f = g(r) Y_ℓ(ω)`, written as operators on the radial profile `g`.
//!
//! Operators are returned as lightweight evaluable values; sampling is left
//! to the caller's quadrature rule.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::profiles::{RadialFn, RadialProfile};

/// `n(n - 4)/4`.
pub fn rellich_constant(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 4.0) / 4.0
}

/// `ℓ(ℓ + n - 2)`, the eigenvalue of `-Δ` on `S^{n-1}` for degree `ℓ`.
pub fn mode_eigenvalue(n: usize, ell: usize) -> f64 {
    let (n, l) = (n as f64, ell as f64);
    l * (l + n - 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeContext {
    pub n: usize,
    pub ell: usize,
    pub lambda: f64,
    pub rellich: f64,
}

impl ModeContext {
    pub fn new(n: usize, ell: usize) -> Result<Self> {
        if n < 2 {
            return invalid(format!("dimension {n} must be at least 2"));
        }
        Ok(Self {
            n,
            ell,
            lambda: mode_eigenvalue(n, ell),
            rellich: rellich_constant(n),
        })
    }
}

/// `g'' + (n - 1) g'/r`.
#[derive(Clone, Copy, Debug)]
pub struct RadialLaplacian<'a> {
    g: &'a RadialProfile,
    n: usize,
}

/// `g'' + (n - 3) g'/r`: the radial Laplacian of dimension `n - 2`.
#[derive(Clone, Copy, Debug)]
pub struct ShiftedRadialLaplacian<'a> {
    g: &'a RadialProfile,
    n: usize,
}

/// `g'' + (n - 1) g'/r - λ g/r²`.
#[derive(Clone, Copy, Debug)]
pub struct ModeLaplacian<'a> {
    g: &'a RadialProfile,
    ctx: ModeContext,
}

pub fn radial_laplacian(g: &RadialProfile, n: usize) -> RadialLaplacian<'_> {
    RadialLaplacian { g, n }
}

pub fn shifted_radial_laplacian(g: &RadialProfile, n: usize) -> Result<ShiftedRadialLaplacian<'_>> {
    if n < 4 {
        return invalid(format!("dimension shift needs n >= 4, got {n}"));
    }
    Ok(ShiftedRadialLaplacian { g, n })
}

pub fn mode_laplacian(g: &RadialProfile, ctx: ModeContext) -> ModeLaplacian<'_> {
    ModeLaplacian { g, ctx }
}

impl RadialFn for RadialLaplacian<'_> {
    fn eval(&self, r: f64) -> f64 {
        let j = self.g.jet(r);
        j.second + (self.n as f64 - 1.0) * j.first / r
    }
}

impl RadialFn for ShiftedRadialLaplacian<'_> {
    fn eval(&self, r: f64) -> f64 {
        let j = self.g.jet(r);
        j.second + (self.n as f64 - 3.0) * j.first / r
    }
}

impl RadialFn for ModeLaplacian<'_> {
    fn eval(&self, r: f64) -> f64 {
        let j = self.g.jet(r);
        j.second + (self.ctx.n as f64 - 1.0) * j.first / r - self.ctx.lambda * j.value / (r * r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{bump, linear_combination, random_profile, windowed_poly, ParameterRanges};

    fn plateau_poly(coefficients: Vec<f64>) -> RadialProfile {
        windowed_poly(0.5, 6.0, 0.5, coefficients).unwrap()
    }

    #[test]
    fn constants() {
        assert_eq!(rellich_constant(4), 0.0);
        assert_eq!(rellich_constant(5), 1.25);
        assert_eq!(rellich_constant(5).powi(2), 1.5625);
        assert_eq!(rellich_constant(3), -0.75);
        assert_eq!(mode_eigenvalue(7, 0), 0.0);
        assert_eq!(mode_eigenvalue(3, 1), 2.0);
        assert_eq!(mode_eigenvalue(5, 2), 10.0);
    }

    #[test]
    fn context_invariants() {
        for n in 2..12 {
            for ell in 0..6 {
                let ctx = ModeContext::new(n, ell).unwrap();
                assert!(ctx.lambda >= 0.0);
                assert_eq!(ctx.lambda == 0.0, ell == 0);
                assert_eq!(ctx.rellich == 0.0, n == 4);
            }
        }
        assert!(ModeContext::new(1, 0).is_err());
    }

    #[test]
    fn polynomial_identities() {
        let sq = plateau_poly(vec![0.0, 0.0, 1.0]);
        let lin = plateau_poly(vec![0.0, 1.0]);
        for r in [1.5, 2.5, 4.0] {
            assert!((radial_laplacian(&sq, 3).eval(r) - 6.0).abs() < 1e-12);
            assert!((shifted_radial_laplacian(&sq, 6).unwrap().eval(r) - 8.0).abs() < 1e-12);
            let harmonic = mode_laplacian(&lin, ModeContext::new(3, 1).unwrap()).eval(r);
            assert!(harmonic.abs() < 1e-12, "{harmonic}");
            let m = mode_laplacian(&sq, ModeContext::new(5, 1).unwrap()).eval(r);
            assert!((m - 6.0).abs() < 1e-12);
            let c = plateau_poly(vec![3.0]);
            assert!(radial_laplacian(&c, 5).eval(r).abs() < 1e-12);
        }
    }

    #[test]
    fn bump_peak_values() {
        let g = bump(2.0, 1.0, 1.0).unwrap();
        assert_eq!(radial_laplacian(&g, 4).eval(2.0), g.second(2.0));
        for r in [1.2, 2.0, 2.9] {
            let s = shifted_radial_laplacian(&g, 4).unwrap().eval(r);
            assert_eq!(s, g.second(r) + g.first(r) / r);
            assert_eq!(shifted_radial_laplacian(&g, 5).unwrap().eval(r), radial_laplacian(&g, 3).eval(r));
        }
        assert!(shifted_radial_laplacian(&g, 3).is_err());
    }

    #[test]
    fn ell_zero_mode_is_radial() {
        let g = random_profile(7, 3, &ParameterRanges::default()).unwrap();
        for n in 2..9 {
            let ctx = ModeContext::new(n, 0).unwrap();
            for k in 0..200 {
                let r = 0.05 + 0.025 * k as f64;
                assert_eq!(mode_laplacian(&g, ctx).eval(r), radial_laplacian(&g, n).eval(r));
            }
        }
    }

    #[test]
    fn harmonic_powers_are_annihilated() {
        for n in 2..8 {
            for ell in 0..5 {
                let mut c = vec![0.0; ell + 1];
                c[ell] = 1.0;
                let g = windowed_poly(0.5, 4.0, 0.5, c).unwrap();
                let ctx = ModeContext::new(n, ell).unwrap();
                for r in [1.1f64, 2.0, 3.3] {
                    let scale = (r.powi(ell as i32) / (r * r)).max(1.0) * (1.0 + ctx.lambda);
                    let v = mode_laplacian(&g, ctx).eval(r);
                    assert!(v.abs() < 1e-12 * scale, "n={n} ell={ell} r={r} v={v}");
                }
            }
        }
    }

    #[test]
    fn operators_are_linear() {
        let ranges = ParameterRanges::default();
        let a = random_profile(1, 2, &ranges).unwrap();
        let b = random_profile(2, 2, &ranges).unwrap();
        let (ca, cb) = (0.7, -1.9);
        let sum = linear_combination(vec![(ca, a.clone()), (cb, b.clone())]).unwrap();
        let ctx = ModeContext::new(6, 2).unwrap();
        for k in 1..100 {
            let r = 0.1 + 0.05 * k as f64;
            let checks = [
                (radial_laplacian(&sum, 6).eval(r), radial_laplacian(&a, 6).eval(r), radial_laplacian(&b, 6).eval(r)),
                (
                    shifted_radial_laplacian(&sum, 6).unwrap().eval(r),
                    shifted_radial_laplacian(&a, 6).unwrap().eval(r),
                    shifted_radial_laplacian(&b, 6).unwrap().eval(r),
                ),
                (mode_laplacian(&sum, ctx).eval(r), mode_laplacian(&a, ctx).eval(r), mode_laplacian(&b, ctx).eval(r)),
            ];
            for (s, x, y) in checks {
                let want = ca * x + cb * y;
                let scale = (ca * x).abs() + (cb * y).abs();
                assert!((s - want).abs() <= 1e-13 * scale.max(1e-300), "r={r}");
            }
        }
    }
}
