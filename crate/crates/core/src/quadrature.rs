//! Panel Gauss–Legendre quadrature for weighted integrals on the half-line.
//!
//! Every norm and pairing in this crate has the form `∫ φ(r) r^α dr` over the
//! support of a compactly supported profile. Supports are bounded away from
//! the origin, so negative exponents need no special treatment.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_PANELS: usize = 16;
pub const DEFAULT_NODES_PER_PANEL: usize = 32;

/// An open radial interval `(lo, hi)` with `0 < lo < hi < ∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Deserialize)]
struct RawInterval {
    lo: f64,
    hi: f64,
}

impl TryFrom<RawInterval> for Interval {
    type Error = Error;

    fn try_from(raw: RawInterval) -> Result<Self> {
        Interval::new(raw.lo, raw.hi)
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return invalid(format!("interval ({lo}, {hi}) is not finite"));
        }
        if lo <= 0.0 {
            return invalid(format!("interval ({lo}, {hi}) touches the origin"));
        }
        if lo >= hi {
            return invalid(format!("interval ({lo}, {hi}) is empty or inverted"));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, r: f64) -> bool {
        r > self.lo && r < self.hi
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule over `[a, b]` split into equal panels. No positivity
/// requirement on `a`; used for angular integrals as well as radial ones.
pub fn panel_rule(a: f64, b: f64, panels: usize, nodes_per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(nodes_per_panel);
    let width = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * nodes_per_panel);
    let mut weights = Vec::with_capacity(panels * nodes_per_panel);
    for p in 0..panels {
        let left = a + p as f64 * width;
        let right = if p + 1 == panels { b } else { left + width };
        let half = 0.5 * (right - left);
        let mid = 0.5 * (right + left);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    (nodes, weights)
}

/// A radial quadrature rule: nodes strictly inside `support`, positive weights.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    support: Interval,
    panels: usize,
    nodes_per_panel: usize,
}

pub fn make_rule(support: Interval, panels: usize, nodes_per_panel: usize) -> Result<QuadratureRule> {
    QuadratureRule::with_breakpoints(&[support.lo, support.hi], panels, nodes_per_panel)
}

impl QuadratureRule {
    /// Composite rule over `[breaks[0], breaks.last()]`, with `panels` equal
    /// panels between each pair of consecutive breakpoints. Breakpoints are
    /// sorted and deduplicated first.
    pub fn with_breakpoints(breaks: &[f64], panels: usize, nodes_per_panel: usize) -> Result<Self> {
        if panels < 1 {
            return invalid("quadrature needs at least one panel");
        }
        if nodes_per_panel < 2 {
            return invalid("quadrature needs at least two nodes per panel");
        }
        let mut pts: Vec<f64> = breaks.to_vec();
        if pts.iter().any(|x| !x.is_finite()) {
            return invalid("non-finite quadrature breakpoint");
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        if pts.len() < 2 {
            return invalid("quadrature breakpoints span an empty interval");
        }
        let support = Interval::new(pts[0], pts[pts.len() - 1])?;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for seg in pts.windows(2) {
            let (x, w) = panel_rule(seg[0], seg[1], panels, nodes_per_panel);
            nodes.extend(x);
            weights.extend(w);
        }
        Ok(Self {
            nodes,
            weights,
            support,
            panels: panels * (pts.len() - 1),
            nodes_per_panel,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.nodes_per_panel
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Evaluates `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    /// `∫ f(r) r^α dr`.
    pub fn integrate(&self, alpha: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (k, (&r, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let v = f(r);
            if !v.is_finite() {
                return Err(Error::NonFinite { index: k, radius: r });
            }
            acc += w * v * r.powf(alpha);
        }
        Ok(acc)
    }
}

fn check_len(rule: &QuadratureRule, len: usize) -> Result<()> {
    if len != rule.len() {
        return invalid(format!(
            "sample length {len} does not match rule with {} nodes",
            rule.len()
        ));
    }
    Ok(())
}

/// `Σ_k w_k p_k conj(q_k) r_k^α`.
pub fn weighted_inner(p: &[Complex64], q: &[Complex64], alpha: f64, rule: &QuadratureRule) -> Result<Complex64> {
    check_len(rule, p.len())?;
    check_len(rule, q.len())?;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..rule.len() {
        let (pk, qk) = (p[k], q[k]);
        if !(pk.re.is_finite() && pk.im.is_finite() && qk.re.is_finite() && qk.im.is_finite()) {
            return Err(Error::NonFinite { index: k, radius: rule.nodes[k] });
        }
        let r = rule.nodes[k];
        acc += pk * qk.conj() * (rule.weights[k] * r.powf(alpha));
    }
    Ok(acc)
}

pub fn weighted_norm_sq(p: &[Complex64], alpha: f64, rule: &QuadratureRule) -> Result<f64> {
    let z = weighted_inner(p, p, alpha, rule)?;
    if z.im.abs() > 1e-13 * z.re.abs() {
        return Err(Error::Numeric(format!(
            "norm has imaginary part {} against real part {}",
            z.im, z.re
        )));
    }
    Ok(z.re)
}

/// Real-valued specialisation of [`weighted_inner`].
pub fn weighted_inner_real(p: &[f64], q: &[f64], alpha: f64, rule: &QuadratureRule) -> Result<f64> {
    check_len(rule, p.len())?;
    check_len(rule, q.len())?;
    let mut acc = 0.0;
    for k in 0..rule.len() {
        if !(p[k].is_finite() && q[k].is_finite()) {
            return Err(Error::NonFinite { index: k, radius: rule.nodes[k] });
        }
        let r = rule.nodes[k];
        acc += rule.weights[k] * p[k] * q[k] * r.powf(alpha);
    }
    Ok(acc)
}

pub fn weighted_norm_sq_real(p: &[f64], alpha: f64, rule: &QuadratureRule) -> Result<f64> {
    weighted_inner_real(p, p, alpha, rule)
}
