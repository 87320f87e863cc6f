//! Analytic radial test functions with closed-form first and second
//! derivatives.
//!
//! Three families are available: the classical `exp(-1/(1-u²))` bump, a
//! polynomial multiplied by a smooth plateau window, and finite linear
//! combinations of either. All supports lie inside
//! `[SUPPORT_FLOOR, SUPPORT_CEIL]`.
//!
//! Random profiles are drawn from ChaCha8 keyed by `seed_from_u64(seed)`;
//! [`profile_rng`] selects an independent stream of the same key, so a
//! `(seed, stream)` pair identifies a draw on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{Interval, QuadratureRule, DEFAULT_NODES_PER_PANEL, DEFAULT_PANELS};

pub const SUPPORT_FLOOR: f64 = 1e-3;
pub const SUPPORT_CEIL: f64 = 1e3;
/// Largest ratio `b/a` of a quadrature segment `[a, b]` built by
/// [`RadialProfile::rule`]; profiles spread over decades get log-spaced
/// segments so weights like `r^{-2}` stay resolved.
pub const MAX_SEGMENT_RATIO: f64 = 4.0;

/// Anything that can be evaluated pointwise on the half-line.
pub trait RadialFn {
    fn eval(&self, r: f64) -> f64;
}

impl<F: Fn(f64) -> f64> RadialFn for F {
    fn eval(&self, r: f64) -> f64 {
        self(r)
    }
}

/// Value and first two derivatives at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

impl Jet {
    /// Jet of `amplitude · φ((r - c)/width)` given the jet of `φ`.
    fn rescale(self, amplitude: f64, width: f64) -> Jet {
        Jet {
            value: amplitude * self.value,
            first: amplitude * self.first / width,
            second: amplitude * self.second / (width * width),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "parameters", rename_all = "snake_case")]
pub enum Shape {
    Bump {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    WindowedPoly {
        lo: f64,
        hi: f64,
        ramp: f64,
        /// Monomial coefficients in `r`, constant term first.
        coefficients: Vec<f64>,
    },
    LinearCombination {
        coefficients: Vec<f64>,
        components: Vec<RadialProfile>,
    },
}

/// A smooth compactly supported function on `(0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileDoc", into = "ProfileDoc")]
pub struct RadialProfile {
    shape: Shape,
    support: Interval,
}

#[derive(Serialize, Deserialize)]
struct ProfileDoc {
    #[serde(flatten)]
    shape: Shape,
    support: Interval,
}

impl From<RadialProfile> for ProfileDoc {
    fn from(p: RadialProfile) -> Self {
        ProfileDoc {
            shape: p.shape,
            support: p.support,
        }
    }
}

impl TryFrom<ProfileDoc> for RadialProfile {
    type Error = Error;

    fn try_from(doc: ProfileDoc) -> Result<Self> {
        let rebuilt = RadialProfile::from_shape(doc.shape)?;
        if rebuilt.support != doc.support {
            return invalid(format!(
                "stored support ({}, {}) disagrees with parameters ({}, {})",
                doc.support.lo(),
                doc.support.hi(),
                rebuilt.support.lo(),
                rebuilt.support.hi()
            ));
        }
        Ok(rebuilt)
    }
}

fn check_support(lo: f64, hi: f64) -> Result<Interval> {
    if !(lo >= SUPPORT_FLOOR) {
        return invalid(format!("support starts at {lo}, below the floor {SUPPORT_FLOOR}"));
    }
    if !(hi <= SUPPORT_CEIL) {
        return invalid(format!("support ends at {hi}, above the ceiling {SUPPORT_CEIL}"));
    }
    Interval::new(lo, hi)
}

/// `g(r) = amplitude · exp(-1/(1-u²))`, `u = (r - center)/width`.
pub fn bump(center: f64, width: f64, amplitude: f64) -> Result<RadialProfile> {
    RadialProfile::from_shape(Shape::Bump {
        center,
        width,
        amplitude,
    })
}

/// Polynomial in `r` times a smooth window that is 1 on `[lo + ramp, hi - ramp]`.
pub fn windowed_poly(lo: f64, hi: f64, ramp: f64, coefficients: Vec<f64>) -> Result<RadialProfile> {
    RadialProfile::from_shape(Shape::WindowedPoly {
        lo,
        hi,
        ramp,
        coefficients,
    })
}

pub fn linear_combination(terms: Vec<(f64, RadialProfile)>) -> Result<RadialProfile> {
    let (coefficients, components) = terms.into_iter().unzip();
    RadialProfile::from_shape(Shape::LinearCombination {
        coefficients,
        components,
    })
}

impl RadialProfile {
    pub fn from_shape(shape: Shape) -> Result<Self> {
        let support = match &shape {
            Shape::Bump {
                center,
                width,
                amplitude,
            } => {
                if !(width.is_finite() && *width > 0.0) {
                    return invalid(format!("bump width {width} must be positive"));
                }
                if !center.is_finite() || !amplitude.is_finite() {
                    return invalid("bump parameters must be finite");
                }
                check_support(center - width, center + width)?
            }
            Shape::WindowedPoly {
                lo,
                hi,
                ramp,
                coefficients,
            } => {
                let support = check_support(*lo, *hi)?;
                if !(*ramp > 0.0 && 2.0 * ramp <= hi - lo) {
                    return invalid(format!("window ramp {ramp} does not fit in ({lo}, {hi})"));
                }
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    return invalid("windowed polynomial needs finite coefficients");
                }
                support
            }
            Shape::LinearCombination {
                coefficients,
                components,
            } => {
                if components.is_empty() || coefficients.len() != components.len() {
                    return invalid("linear combination needs one coefficient per component");
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return invalid("combination coefficients must be finite");
                }
                components
                    .iter()
                    .skip(1)
                    .fold(components[0].support, |acc, c| acc.hull(&c.support))
            }
        };
        Ok(Self { shape, support })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).value
    }

    pub fn first(&self, r: f64) -> f64 {
        self.jet(r).first
    }

    pub fn second(&self, r: f64) -> f64 {
        self.jet(r).second
    }

    pub fn jet(&self, r: f64) -> Jet {
        if !(r > self.support.lo() && r < self.support.hi()) {
            return Jet::default();
        }
        match &self.shape {
            Shape::Bump {
                center,
                width,
                amplitude,
            } => bump_jet((r - center) / width).rescale(*amplitude, *width),
            Shape::WindowedPoly {
                lo,
                hi,
                ramp,
                coefficients,
            } => {
                let p = poly_jet(coefficients, r);
                let a = smooth_step((r - lo) / ramp);
                let b = smooth_step((hi - r) / ramp);
                let w = Jet {
                    value: a.value * b.value,
                    first: (a.first * b.value - a.value * b.first) / ramp,
                    second: (a.second * b.value - 2.0 * a.first * b.first + a.value * b.second)
                        / (ramp * ramp),
                };
                Jet {
                    value: p.value * w.value,
                    first: p.first * w.value + p.value * w.first,
                    second: p.second * w.value + 2.0 * p.first * w.first + p.value * w.second,
                }
            }
            Shape::LinearCombination {
                coefficients,
                components,
            } => {
                let mut acc = Jet::default();
                for (c, g) in coefficients.iter().zip(components) {
                    let j = g.jet(r);
                    acc.value += c * j.value;
                    acc.first += c * j.first;
                    acc.second += c * j.second;
                }
                acc
            }
        }
    }

    /// Points where the integrand may lose smoothness or change scale:
    /// every component support endpoint and window ramp end.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breaks(&mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn collect_breaks(&self, out: &mut Vec<f64>) {
        match &self.shape {
            Shape::LinearCombination { components, .. } => {
                for c in components {
                    c.collect_breaks(out);
                }
            }
            Shape::WindowedPoly { lo, hi, ramp, .. } => {
                out.extend([*lo, lo + ramp, hi - ramp, *hi]);
            }
            Shape::Bump { .. } => {
                out.push(self.support.lo());
                out.push(self.support.hi());
            }
        }
    }

    /// Quadrature rule adapted to this profile: `panels` panels between each
    /// pair of consecutive breakpoints, after splitting any gap wider than a
    /// factor [`MAX_SEGMENT_RATIO`] at geometrically spaced points.
    pub fn rule(&self, panels: usize, nodes_per_panel: usize) -> Result<QuadratureRule> {
        let breaks = self.breakpoints();
        let mut refined = Vec::with_capacity(breaks.len());
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let pieces = ((b / a).ln() / MAX_SEGMENT_RATIO.ln()).ceil().max(1.0) as usize;
            let q = (b / a).powf(1.0 / pieces as f64);
            refined.extend((0..pieces).map(|k| a * q.powi(k as i32)));
        }
        refined.extend(breaks.last());
        QuadratureRule::with_breakpoints(&refined, panels, nodes_per_panel)
    }

    pub fn default_rule(&self) -> Result<QuadratureRule> {
        self.rule(DEFAULT_PANELS, DEFAULT_NODES_PER_PANEL)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl RadialFn for RadialProfile {
    fn eval(&self, r: f64) -> f64 {
        self.value(r)
    }
}

/// `exp(-1/(1-u²))` and its u-derivatives.
fn bump_jet(u: f64) -> Jet {
    let q = 1.0 - u * u;
    if !(q > 0.0) || 1.0 / q > 700.0 {
        return Jet::default();
    }
    let phi = (-1.0 / q).exp();
    let q2 = q * q;
    Jet {
        value: phi,
        first: -2.0 * u * phi / q2,
        second: phi * (4.0 * u * u / (q2 * q2) - 2.0 / q2 - 8.0 * u * u / (q2 * q)),
    }
}

/// `ψ(y) = exp(-1/y)` for `y > 0`, else 0.
fn psi(y: f64) -> Jet {
    if !(y > 0.0) || 1.0 / y > 700.0 {
        return Jet::default();
    }
    let v = (-1.0 / y).exp();
    let iy = 1.0 / y;
    Jet {
        value: v,
        first: v * iy * iy,
        second: v * (iy.powi(4) - 2.0 * iy.powi(3)),
    }
}

/// C^∞ step rising from 0 at `x ≤ 0` to 1 at `x ≥ 1`.
fn smooth_step(x: f64) -> Jet {
    if x <= 0.0 {
        return Jet::default();
    }
    if x >= 1.0 {
        return Jet {
            value: 1.0,
            first: 0.0,
            second: 0.0,
        };
    }
    let p = psi(x);
    let q0 = psi(1.0 - x);
    // derivatives of q(x) = ψ(1 - x)
    let q = Jet {
        value: q0.value,
        first: -q0.first,
        second: q0.second,
    };
    let d = p.value + q.value;
    let num = p.first * q.value - p.value * q.first;
    let num_prime = p.second * q.value - p.value * q.second;
    let d_prime = p.first + q.first;
    Jet {
        value: p.value / d,
        first: num / (d * d),
        second: num_prime / (d * d) - 2.0 * num * d_prime / (d * d * d),
    }
}

fn poly_jet(coefficients: &[f64], r: f64) -> Jet {
    let mut v = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for &c in coefficients.iter().rev() {
        d2 = d2 * r + 2.0 * d1;
        d1 = d1 * r + v;
        v = v * r + c;
    }
    Jet {
        value: v,
        first: d1,
        second: d2,
    }
}

/// `g_*(r) = g'(r) + ((n-4)/2) g(r)/r`.
#[derive(Clone, Debug)]
pub struct StarProfile {
    base: RadialProfile,
    n: usize,
}

pub fn star(g: &RadialProfile, n: usize) -> Result<StarProfile> {
    if n < 2 {
        return invalid(format!("dimension {n} must be at least 2"));
    }
    Ok(StarProfile { base: g.clone(), n })
}

impl StarProfile {
    pub fn base(&self) -> &RadialProfile {
        &self.base
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> Interval {
        self.base.support()
    }
}

impl RadialFn for StarProfile {
    fn eval(&self, r: f64) -> f64 {
        let j = self.base.jet(r);
        j.first + 0.5 * (self.n as f64 - 4.0) * j.value / r
    }
}

/// Uniform sampling ranges for [`random_profile`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterRanges {
    pub center: (f64, f64),
    pub width: (f64, f64),
    pub amplitude: (f64, f64),
}

impl Default for ParameterRanges {
    fn default() -> Self {
        Self {
            center: (1.0, 4.0),
            width: (0.3, 0.9),
            amplitude: (-1.0, 1.0),
        }
    }
}

impl ParameterRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("center", self.center), ("width", self.width), ("amplitude", self.amplitude)] {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return invalid(format!("{name} range ({lo}, {hi}) is empty"));
            }
        }
        if self.width.0 <= 0.0 {
            return invalid("width range must be positive");
        }
        if self.center.0 - self.width.1 < SUPPORT_FLOOR || self.center.1 + self.width.1 > SUPPORT_CEIL {
            return invalid("ranges allow supports outside [1e-3, 1e3]");
        }
        Ok(())
    }
}

/// Independent deterministic generator for `(seed, stream)`.
pub fn profile_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sum of `n_components` bumps with parameters drawn uniformly from `ranges`.
pub fn random_profile(seed: u64, n_components: usize, ranges: &ParameterRanges) -> Result<RadialProfile> {
    ranges.validate()?;
    if n_components == 0 {
        return invalid("random profile needs at least one component");
    }
    let mut rng = profile_rng(seed, 0);
    let mut terms = Vec::with_capacity(n_components);
    for _ in 0..n_components {
        let center = rng.gen_range(ranges.center.0..=ranges.center.1);
        let width = rng.gen_range(ranges.width.0..=ranges.width.1);
        let mut amplitude = rng.gen_range(ranges.amplitude.0..=ranges.amplitude.1);
        if amplitude == 0.0 {
            amplitude = 1.0;
        }
        terms.push((1.0, bump(center, width, amplitude)?));
    }
    linear_combination(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    fn central(f: impl Fn(f64) -> f64, r: f64, h: f64) -> f64 {
        (f(r + h) - f(r - h)) / (2.0 * h)
    }

    #[test]
    fn bump_peak_and_endpoints() {
        let g = bump(2.0, 1.0, 1.0).unwrap();
        assert!((g.value(2.0) - 1.0 / E).abs() < 1e-15);
        assert_eq!(g.first(2.0), 0.0);
        assert_eq!(g.value(3.0), 0.0);
        assert_eq!(g.first(3.0), 0.0);
        assert_eq!(g.value(1.0), 0.0);
        // at the peak g'' = -2 e^{-1} / width²
        assert!((g.second(2.0) + 2.0 / E).abs() < 1e-15);
    }

    #[test]
    fn bump_second_derivative_matches_difference() {
        let g = bump(2.0, 1.0, 1.0).unwrap();
        let h = 1e-5;
        let r = 2.5;
        let fd = (g.value(r + h) - 2.0 * g.value(r) + g.value(r - h)) / (h * h);
        assert!((fd - g.second(r)).abs() <= 1e-6 * g.second(r).abs().max(1e-3), "{fd} vs {}", g.second(r));
        let fd1 = central(|x| g.first(x), r, h);
        assert!((fd1 - g.second(r)).abs() <= 1e-8 * g.second(r).abs());
    }

    #[test]
    fn window_plateau_and_derivatives() {
        let g = windowed_poly(1.0, 5.0, 0.5, vec![0.0, 0.0, 1.0]).unwrap();
        for r in [1.6, 2.0, 3.3, 4.4] {
            let j = g.jet(r);
            assert!((j.value - r * r).abs() < 1e-14);
            assert!((j.first - 2.0 * r).abs() < 1e-13);
            assert!((j.second - 2.0).abs() < 1e-13);
        }
        // the ramp is steep near its foot, so the difference quotient itself
        // carries ~1e-7 truncation error there
        for r in [1.05, 1.2, 1.45, 4.6, 4.9] {
            let j = g.jet(r);
            let fd1 = central(|x| g.value(x), r, 1e-5);
            let fd2 = central(|x| g.first(x), r, 1e-5);
            assert!((fd1 - j.first).abs() <= 1e-6 * j.first.abs().max(1.0), "r={r}");
            assert!((fd2 - j.second).abs() <= 1e-6 * j.second.abs().max(1.0), "r={r}");
        }
        assert_eq!(g.value(1.0), 0.0);
        assert_eq!(g.value(5.0), 0.0);
    }

    #[test]
    fn star_coefficients() {
        let g = bump(2.0, 1.0, 1.0).unwrap();
        let s4 = star(&g, 4).unwrap();
        for r in [1.3, 2.0, 2.7] {
            assert_eq!(s4.eval(r), g.first(r));
        }
        let s6 = star(&g, 6).unwrap();
        assert!((s6.eval(2.0) - 0.5 / E).abs() < 1e-15);
        let s2 = star(&g, 2).unwrap();
        for r in [1.3, 2.0, 2.7] {
            assert!((s2.eval(r) - (g.first(r) - g.value(r) / r)).abs() < 1e-15);
        }
        assert!(star(&g, 1).is_err());
    }

    #[test]
    fn construction_errors() {
        assert!(bump(0.5, 0.5, 1.0).is_err());
        assert!(bump(2.0, 0.0, 1.0).is_err());
        assert!(bump(999.5, 1.0, 1.0).is_err());
        assert!(windowed_poly(1.0, 2.0, 0.6, vec![1.0]).is_err());
        assert!(linear_combination(vec![]).is_err());
        let bad = ParameterRanges {
            center: (2.0, 1.0),
            ..Default::default()
        };
        assert!(random_profile(1, 3, &bad).is_err());
        assert!(random_profile(1, 0, &ParameterRanges::default()).is_err());
    }

    #[test]
    fn random_profile_is_reproducible() {
        let r = ParameterRanges::default();
        let a = random_profile(42, 3, &r).unwrap();
        let b = random_profile(42, 3, &r).unwrap();
        assert_eq!(a, b);
        let c = random_profile(43, 3, &r).unwrap();
        assert_ne!(a, c);
        if let Shape::LinearCombination { components, .. } = a.shape() {
            let hull = components
                .iter()
                .skip(1)
                .fold(components[0].support(), |acc, c| acc.hull(&c.support()));
            assert_eq!(hull, a.support());
        } else {
            panic!("expected a combination");
        }
    }

    #[test]
    fn json_schema_shape() {
        let g = bump(2.0, 1.0, 0.75).unwrap();
        let v: serde_json::Value = serde_json::from_str(&g.to_json().unwrap()).unwrap();
        assert_eq!(v["family"], "bump");
        assert_eq!(v["parameters"]["width"], 1.0);
        assert_eq!(v["support"]["lo"], 1.0);
        let tampered = r#"{"family":"bump","parameters":{"center":2.0,"width":1.0,"amplitude":1.0},"support":{"lo":1.0,"hi":3.5}}"#;
        assert!(RadialProfile::from_json(tampered).is_err());
    }
}
