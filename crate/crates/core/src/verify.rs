//! Executable forms of the inequalities, one spherical-harmonic mode at a
//! time.
//!
//! For `f = g(r) Y(ω)` with `∫_{S^{n-1}} |Y|² = 1` and `-Δ_S Y = λ Y`, every
//! `L²(R^n)` quantity reduces to a weighted half-line integral:
//!
//! ```text
//! ‖Δf‖²             = ∫ |g'' + (n-1)g'/r - λ g/r²|² r^{n-1} dr
//! ‖Δ_r f‖²          = ∫ |g'' + (n-1)g'/r|² r^{n-1} dr
//! ‖Σ L_j² f‖²       = λ² ∫ |g|² r^{n-5} dr
//! Σ ‖L_j f/|x|‖²    = λ ∫ |g|² r^{n-5} dr
//! ⟨-Σ L_j² f_*, f_*⟩ = λ ∫ |g_*|² r^{n-3} dr,   g_* = g' + ((n-4)/2) g/r
//! ```
//!
//! Integrating by parts (compact support, no boundary terms):
//!
//! ```text
//! -Re ∫ (g'' + (n-1)g'/r) ḡ r^{n-3} = ∫ |g'|² r^{n-3} + (n-4) ∫ |g|² r^{n-5}
//!  Re ∫ g' ḡ r^{n-4}                = -((n-4)/2) ∫ |g|² r^{n-5}
//!  Re ∫ (g'' + (n-3)g'/r) ḡ r^{n-3} = -∫ |g'|² r^{n-3}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::profiles::{star, RadialFn, RadialProfile};
use crate::quadrature::{weighted_inner_real, weighted_norm_sq_real, QuadratureRule, DEFAULT_NODES_PER_PANEL, DEFAULT_PANELS};
use crate::radial_ops::{mode_laplacian, radial_laplacian, rellich_constant, shifted_radial_laplacian, ModeContext};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub term_lhs: f64,
    pub term_radial: f64,
    pub term_spherical: f64,
    pub term_hardy: f64,
    pub term_star: f64,
    pub residual: f64,
    pub relative_residual: f64,
}

impl IdentityReport {
    fn from_terms(lhs: f64, radial: f64, spherical: f64, hardy: f64, star: f64) -> Self {
        let residual = lhs - (radial + spherical + hardy + star);
        let relative_residual = if lhs != 0.0 { residual / lhs } else if residual == 0.0 { 0.0 } else { f64::INFINITY };
        Self {
            term_lhs: lhs,
            term_radial: radial,
            term_spherical: spherical,
            term_hardy: hardy,
            term_star: star,
            residual,
            relative_residual,
        }
    }

    /// The five terms in a fixed order: lhs, radial, spherical, hardy, star.
    pub fn terms(&self) -> [f64; 5] {
        [self.term_lhs, self.term_radial, self.term_spherical, self.term_hardy, self.term_star]
    }
}

fn samples(rule: &QuadratureRule, f: &impl RadialFn) -> Vec<f64> {
    rule.sample(|r| f.eval(r))
}

fn values(rule: &QuadratureRule, g: &RadialProfile) -> Vec<f64> {
    rule.sample(|r| g.value(r))
}

fn firsts(rule: &QuadratureRule, g: &RadialProfile) -> Vec<f64> {
    rule.sample(|r| g.first(r))
}

pub fn identity_report(g: &RadialProfile, ctx: ModeContext, rule: &QuadratureRule) -> Result<IdentityReport> {
    let n = ctx.n as f64;
    let lambda = ctx.lambda;
    let lhs = weighted_norm_sq_real(&samples(rule, &mode_laplacian(g, ctx)), n - 1.0, rule)?;
    let radial = weighted_norm_sq_real(&samples(rule, &radial_laplacian(g, ctx.n)), n - 1.0, rule)?;
    let g_weight = weighted_norm_sq_real(&values(rule, g), n - 5.0, rule)?;
    let star_sq = weighted_norm_sq_real(&samples(rule, &star(g, ctx.n)?), n - 3.0, rule)?;
    Ok(IdentityReport::from_terms(
        lhs,
        radial,
        lambda * lambda * g_weight,
        2.0 * ctx.rellich * lambda * g_weight,
        2.0 * lambda * star_sq,
    ))
}

/// `Re⟨Δ_r f, Δ_s f⟩ = -λ Re ∫ (g'' + (n-1)g'/r) ḡ r^{n-3} dr`.
pub fn cross_term(g: &RadialProfile, ctx: ModeContext, rule: &QuadratureRule) -> Result<f64> {
    let pairing = weighted_inner_real(
        &samples(rule, &radial_laplacian(g, ctx.n)),
        &values(rule, g),
        ctx.n as f64 - 3.0,
        rule,
    )?;
    Ok(-ctx.lambda * pairing)
}

/// `λ (∫ |g'|² r^{n-3} + (n-4) ∫ |g|² r^{n-5})`.
pub fn cross_term_closed_form(g: &RadialProfile, ctx: ModeContext, rule: &QuadratureRule) -> Result<f64> {
    let n = ctx.n as f64;
    let d1 = weighted_norm_sq_real(&firsts(rule, g), n - 3.0, rule)?;
    let g_weight = weighted_norm_sq_real(&values(rule, g), n - 5.0, rule)?;
    Ok(ctx.lambda * (d1 + (n - 4.0) * g_weight))
}

/// Quadrature of a dissipativity pairing next to its by-parts value.
///
/// `discrepancy` is relative to `|closed_form_value|` when that is nonzero
/// and relative to `scale` (a Cauchy–Schwarz bound on the pairing)
/// otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipativityReport {
    pub quadrature_value: f64,
    pub closed_form_value: f64,
    pub discrepancy: f64,
    pub scale: f64,
    /// Whether the sign claim applies (`n >= 4`).
    pub bound_applies: bool,
}

impl DissipativityReport {
    fn new(quadrature_value: f64, closed_form_value: f64, scale: f64, bound_applies: bool) -> Self {
        let diff = (quadrature_value - closed_form_value).abs();
        let discrepancy = if closed_form_value != 0.0 {
            diff / closed_form_value.abs()
        } else if scale > 0.0 {
            diff / scale
        } else {
            diff
        };
        Self {
            quadrature_value,
            closed_form_value,
            discrepancy,
            scale,
            bound_applies,
        }
    }

    /// `quadrature_value ≤ 1e-12 · scale`.
    pub fn is_dissipative(&self) -> bool {
        self.quadrature_value <= 1e-12 * self.scale
    }
}

/// `Re ∫ g' ḡ r^{n-4} dr` against `-((n-4)/2) ∫ |g|² r^{n-5} dr`.
pub fn dissipativity_first(g: &RadialProfile, n: usize, rule: &QuadratureRule) -> Result<DissipativityReport> {
    if n < 2 {
        return invalid(format!("dimension {n} must be at least 2"));
    }
    let nf = n as f64;
    let v = values(rule, g);
    let d1 = firsts(rule, g);
    let q = weighted_inner_real(&d1, &v, nf - 4.0, rule)?;
    let g_weight = weighted_norm_sq_real(&v, nf - 5.0, rule)?;
    let d1_weight = weighted_norm_sq_real(&d1, nf - 3.0, rule)?;
    let closed = -0.5 * (nf - 4.0) * g_weight;
    Ok(DissipativityReport::new(q, closed, (g_weight * d1_weight).sqrt(), n >= 4))
}

/// `Re ∫ (g'' + (n-3)g'/r) ḡ r^{n-3} dr` against `-∫ |g'|² r^{n-3} dr`.
pub fn dissipativity_second(g: &RadialProfile, n: usize, rule: &QuadratureRule) -> Result<DissipativityReport> {
    let op = shifted_radial_laplacian(g, n)?;
    let nf = n as f64;
    let v = values(rule, g);
    let lv = samples(rule, &op);
    let q = weighted_inner_real(&lv, &v, nf - 3.0, rule)?;
    let closed = -weighted_norm_sq_real(&firsts(rule, g), nf - 3.0, rule)?;
    let scale = (weighted_norm_sq_real(&lv, nf - 1.0, rule)? * weighted_norm_sq_real(&v, nf - 5.0, rule)?).sqrt();
    Ok(DissipativityReport::new(q, closed, scale, true))
}

/// `Re ∫ g'' ḡ r^{n-3} dr`, the pure second-derivative part of
/// [`dissipativity_second`].
pub fn second_derivative_pairing(g: &RadialProfile, n: usize, rule: &QuadratureRule) -> Result<f64> {
    let d2 = rule.sample(|r| g.second(r));
    weighted_inner_real(&d2, &values(rule, g), n as f64 - 3.0, rule)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RellichCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, `+∞` when `rhs = 0`.
    pub ratio: f64,
}

pub fn rellich_check(g: &RadialProfile, ctx: ModeContext, rule: &QuadratureRule) -> Result<RellichCheck> {
    let nf = ctx.n as f64;
    let lhs = weighted_norm_sq_real(&samples(rule, &mode_laplacian(g, ctx)), nf - 1.0, rule)?;
    let rn = rellich_constant(ctx.n);
    let rhs = rn * rn * weighted_norm_sq_real(&values(rule, g), nf - 5.0, rule)?;
    let ratio = if rhs == 0.0 { f64::INFINITY } else { lhs / rhs };
    Ok(RellichCheck { lhs, rhs, ratio })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub lhs: f64,
    pub radial: f64,
    pub spherical: f64,
    /// `lhs - radial - spherical`, equal to twice the cross term.
    pub slack: f64,
}

pub fn decomposition_check(g: &RadialProfile, ctx: ModeContext, rule: &QuadratureRule) -> Result<Decomposition> {
    let report = identity_report(g, ctx, rule)?;
    Ok(Decomposition {
        lhs: report.term_lhs,
        radial: report.term_radial,
        spherical: report.term_spherical,
        slack: report.term_lhs - report.term_radial - report.term_spherical,
    })
}

/// Panel layout used when a rule has to be built per profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub panels: usize,
    pub nodes_per_panel: usize,
}

impl Default for RuleSpec {
    fn default() -> Self {
        Self {
            panels: DEFAULT_PANELS,
            nodes_per_panel: DEFAULT_NODES_PER_PANEL,
        }
    }
}

impl RuleSpec {
    pub fn rule_for(&self, g: &RadialProfile) -> Result<QuadratureRule> {
        g.rule(self.panels, self.nodes_per_panel)
    }
}

/// Sums per-mode identity reports for `f = Σ_ℓ g_ℓ Y_ℓ`. Distinct degrees
/// are orthogonal on the sphere, so every term is additive.
pub fn multimode_check(modes: &[(RadialProfile, usize)], n: usize, spec: &RuleSpec) -> Result<IdentityReport> {
    if modes.is_empty() {
        return invalid("multimode check needs at least one mode");
    }
    let mut seen: Vec<usize> = modes.iter().map(|(_, l)| *l).collect();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return invalid("multimode check needs distinct degrees");
    }
    let mut sums = [0.0; 5];
    for (g, ell) in modes {
        let rule = spec.rule_for(g)?;
        let report = identity_report(g, ModeContext::new(n, *ell)?, &rule)?;
        for (s, t) in sums.iter_mut().zip(report.terms()) {
            *s += t;
        }
    }
    Ok(IdentityReport::from_terms(sums[0], sums[1], sums[2], sums[3], sums[4]))
}

/// One line of a machine-readable report.
///
/// `asserted = false` marks informational records (for example a sign check
/// outside the dimensions where it is claimed); those always carry
/// `pass = true`. Non-finite values serialize as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub n: usize,
    pub ell: Option<usize>,
    pub seed: Option<u64>,
    pub asserted: bool,
    pub pass: bool,
    pub values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<RadialProfile>,
}

impl CheckRecord {
    pub fn new(check: &str, n: usize, ell: Option<usize>, seed: Option<u64>) -> Self {
        Self {
            check: check.to_string(),
            n,
            ell,
            seed,
            asserted: true,
            pass: true,
            values: BTreeMap::new(),
            profile: None,
        }
    }

    pub fn value(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_string(), v);
        self
    }

    /// Records an asserted condition; an unasserted record always passes.
    pub fn verdict(mut self, asserted: bool, ok: bool) -> Self {
        self.asserted = asserted;
        self.pass = !asserted || ok;
        self
    }

    pub fn with_profile(mut self, g: RadialProfile) -> Self {
        self.profile = Some(g);
        self
    }
}
