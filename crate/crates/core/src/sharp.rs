//! Best constants and the radial/spherical angle.
//!
//! Per mode, the best constant in `‖Δf‖² ≥ C ‖f/|x|²‖²` is computed two
//! independent ways:
//!
//! - [`symbol_constant`]: minimum over `s` of `|m(s)|²` where
//!   `m(s) = -(R_n + λ + s²) + 2is` is what the mode Laplacian multiplies
//!   `r^{(4-n)/2 + is}` by (up to a factor `r^{-2}`);
//! - [`eigen_constant`]: smallest Rayleigh quotient of the discretised
//!   pencil on a truncated log-uniform mesh.
//!
//! Substituting `g(r) = r^{(4-n)/2} h(ln r)` turns both quadratic forms into
//! unweighted integrals in `t = ln r`:
//!
//! ```text
//! ∫ |g|² r^{n-5} dr = ∫ |h|² dt
//! ∫ |Δ_ℓ g|² r^{n-1} dr = ∫ |h'' + 2h' - (R_n + λ) h|² dt
//! ```
//!
//! so the discrete pencil is `(MᵀM, I)` with `M` the three-point stencil of
//! `d²/dt² + 2 d/dt - (R_n + λ)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::profiles::{bump, linear_combination, profile_rng, windowed_poly, RadialProfile, SUPPORT_CEIL, SUPPORT_FLOOR};
use crate::radial_ops::{mode_eigenvalue, rellich_constant, ModeContext};
use crate::simplex::{nelder_mead, SimplexResult};
use crate::verify::{cross_term, identity_report, RuleSpec};

pub const MAX_INVERSE_ITERATIONS: usize = 200;
pub const MAX_RESTARTS: usize = 50;
pub const MIN_SEARCH_BUDGET: usize = 10_000;
/// `(5/8)²`, the spherical-part constant for `n = 3`.
pub const SPHERICAL_CONSTANT_N3: f64 = 0.390625;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Eigen,
    Symbol,
    Search,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo: 1e-4,
            hi: 1e4,
            points: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub n: usize,
    pub ell: Option<usize>,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    pub converged: bool,
    pub oracle_value: Option<f64>,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmin: Option<RadialProfile>,
}

/// `(R_n + λ + s²)² + 4s²`.
pub fn symbol_modulus_sq(n: usize, ell: usize, s: f64) -> f64 {
    let c = rellich_constant(n) + mode_eigenvalue(n, ell);
    let s2 = s * s;
    (c + s2).powi(2) + 4.0 * s2
}

pub fn symbol_constant(n: usize, ell: usize, s_max: f64, s_points: usize) -> Result<ConstantEstimate> {
    if n < 2 {
        return invalid(format!("dimension {n} must be at least 2"));
    }
    if s_points < 1000 {
        return invalid("symbol scan needs at least 1000 points");
    }
    if !(s_max.is_finite() && s_max > 0.0) {
        return invalid("symbol scan needs a positive s_max");
    }
    let step = s_max / (s_points - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for k in 0..s_points {
        let v = symbol_modulus_sq(n, ell, k as f64 * step);
        if v < best.1 {
            best = (k, v);
        }
    }
    // golden-section refinement on the bracketing cell
    let mut a = (best.0.saturating_sub(1)) as f64 * step;
    let mut b = ((best.0 + 1).min(s_points - 1)) as f64 * step;
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut iterations = 0;
    let mut value = best.1;
    while b - a > 1e-14 * b.max(1.0) && iterations < 200 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        let (f1, f2) = (symbol_modulus_sq(n, ell, x1), symbol_modulus_sq(n, ell, x2));
        value = value.min(f1).min(f2);
        if f1 <= f2 {
            b = x2;
        } else {
            a = x1;
        }
        iterations += 1;
    }
    Ok(ConstantEstimate {
        value,
        n,
        ell: Some(ell),
        method: Method::Symbol,
        grid: Some(GridSpec {
            lo: 0.0,
            hi: s_max,
            points: s_points,
        }),
        budget: None,
        converged: true,
        oracle_value: None,
        iterations,
        argmin: None,
    })
}

/// Symmetric pentadiagonal matrix: diagonal and the first two
/// super-diagonals.
#[derive(Clone, Debug)]
struct Penta {
    d0: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

struct Ldl {
    d: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl Penta {
    fn len(&self) -> usize {
        self.d0.len()
    }

    /// `LDLᵀ` of `self - σI` without pivoting.
    fn factor(&self, sigma: f64) -> Ldl {
        let m = self.len();
        let mut d = vec![0.0; m];
        let mut l1 = vec![0.0; m];
        let mut l2 = vec![0.0; m];
        let tiny = 1e-300;
        for i in 0..m {
            if i >= 2 {
                l2[i] = self.d2[i - 2] / d[i - 2];
            }
            if i >= 1 {
                let mut a = self.d1[i - 1];
                if i >= 2 {
                    a -= l2[i] * l1[i - 1] * d[i - 2];
                }
                l1[i] = a / d[i - 1];
            }
            let mut di = self.d0[i] - sigma;
            if i >= 1 {
                di -= l1[i] * l1[i] * d[i - 1];
            }
            if i >= 2 {
                di -= l2[i] * l2[i] * d[i - 2];
            }
            if di == 0.0 {
                di = tiny;
            }
            d[i] = di;
        }
        Ldl { d, l1, l2 }
    }
}

impl Ldl {
    /// Eigenvalues of the factored matrix below the shift (Sylvester).
    fn negative_count(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = b.len();
        let mut y = b.to_vec();
        for i in 0..m {
            if i >= 1 {
                y[i] -= self.l1[i] * y[i - 1];
            }
            if i >= 2 {
                y[i] -= self.l2[i] * y[i - 2];
            }
        }
        for i in 0..m {
            y[i] /= self.d[i];
        }
        for i in (0..m).rev() {
            if i + 1 < m {
                y[i] -= self.l1[i + 1] * y[i + 1];
            }
            if i + 2 < m {
                y[i] -= self.l2[i + 2] * y[i + 2];
            }
        }
        y
    }
}

/// The stencil `M` and the normal matrix `MᵀM` on the interior unknowns.
struct Pencil {
    /// Stencil coefficients on `h_{i-1}, h_i, h_{i+1}`.
    stencil: [f64; 3],
    /// Unknowns `h_2 .. h_{N-3}`; `h_0 = h_1 = h_{N-2} = h_{N-1} = 0`.
    unknowns: usize,
    normal: Penta,
}

impl Pencil {
    fn new(n: usize, ell: usize, grid: &GridSpec) -> Self {
        let c = rellich_constant(n) + mode_eigenvalue(n, ell);
        let dt = (grid.hi.ln() - grid.lo.ln()) / (grid.points - 1) as f64;
        let (a, b, d) = (1.0 / (dt * dt) - 1.0 / dt, -2.0 / (dt * dt) - c, 1.0 / (dt * dt) + 1.0 / dt);
        let m = grid.points - 4;
        // every unknown column sees all three stencil rows, so MᵀM is Toeplitz
        let normal = Penta {
            d0: vec![a * a + b * b + d * d; m],
            d1: vec![b * d + a * b; m.saturating_sub(1)],
            d2: vec![a * d; m.saturating_sub(2)],
        };
        Self {
            stencil: [a, b, d],
            unknowns: m,
            normal,
        }
    }

    /// `‖Mh‖² / ‖h‖²`, evaluated through the stencil rather than `MᵀM`.
    fn rayleigh(&self, h: &[f64]) -> f64 {
        let [a, b, d] = self.stencil;
        let at = |i: isize| -> f64 {
            if i < 0 || i as usize >= self.unknowns {
                0.0
            } else {
                h[i as usize]
            }
        };
        let mut num = 0.0;
        // rows run over every node whose stencil touches an unknown
        for row in -1..=(self.unknowns as isize) {
            let v = a * at(row - 1) + b * at(row) + d * at(row + 1);
            num += v * v;
        }
        let den: f64 = h.iter().map(|x| x * x).sum();
        num / den
    }
}

fn normalise(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in x.iter_mut() {
        *v /= norm;
    }
}

/// Smallest generalized Rayleigh quotient of the clamped log-mesh pencil.
///
/// A few unshifted inverse steps give an upper bound; bisection on the
/// inertia of `MᵀM - σI` then places a shift just below the lowest
/// eigenvalue, and shifted inverse iteration runs from there until two
/// successive quotients agree to `1e-10` relative.
pub fn eigen_constant(n: usize, ell: usize, grid: GridSpec) -> Result<ConstantEstimate> {
    if n < 2 {
        return invalid(format!("dimension {n} must be at least 2"));
    }
    if !(grid.lo >= 1e-6 && grid.hi <= 1e6 && grid.lo < grid.hi) {
        return invalid(format!("grid ({}, {}) outside [1e-6, 1e6]", grid.lo, grid.hi));
    }
    if grid.points < 256 {
        return invalid("eigen grid needs at least 256 points");
    }
    let pencil = Pencil::new(n, ell, &grid);
    let m = pencil.unknowns;
    let mut x: Vec<f64> = (0..m)
        .map(|i| (std::f64::consts::PI * (i + 1) as f64 / (m + 1) as f64).sin())
        .collect();
    normalise(&mut x);

    let base = pencil.normal.factor(0.0);
    let mut iterations = 0;
    let mut rho = pencil.rayleigh(&x);
    for _ in 0..3 {
        x = base.solve(&x);
        normalise(&mut x);
        rho = pencil.rayleigh(&x);
        iterations += 1;
    }

    let (mut lo, mut hi) = (0.0, rho);
    if base.negative_count() == 0 {
        while hi - lo > 1e-7 * hi {
            let mid = 0.5 * (lo + hi);
            if pencil.normal.factor(mid).negative_count() == 0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let shifted = pencil.normal.factor(lo);

    let mut converged = false;
    let mut prev = rho;
    for _ in 0..MAX_INVERSE_ITERATIONS {
        x = shifted.solve(&x);
        normalise(&mut x);
        rho = pencil.rayleigh(&x);
        iterations += 1;
        if (rho - prev).abs() < 1e-10 * rho.abs() {
            converged = true;
            break;
        }
        prev = rho;
    }

    Ok(ConstantEstimate {
        value: rho,
        n,
        ell: Some(ell),
        method: Method::Eigen,
        grid: Some(grid),
        budget: None,
        converged,
        oracle_value: None,
        iterations,
        argmin: None,
    })
}

/// Search family: a windowed polynomial plus one free bump, `SEARCH_PARAMS`
/// reals in all. Amplitudes carry the factor `scale^{(4-n)/2}` so the
/// objective is roughly invariant under dilating the parameters.
///
/// - `ln hi`: right end of the window; the left end sits at the support floor.
/// - `b`: ramp width `hi·ρ(b)`, `ln ρ` logistic in `[ln 1e-5, ln 0.48]`.
/// - `POLY_COEFFS` Bernstein coefficients of the polynomial in `x = r/hi`;
///   the Bernstein basis keeps shape parameters `O(1)` where monomial
///   coefficients of good profiles run into the tens.
/// - `(ln c, b, a)`: bump at `c` of width `c·σ(b)`, `σ` logistic in
///   `[0.01, 0.99]`, amplitude `a·c^{(4-n)/2}`, shifted to stay in range.
///
/// Bump trains spread over decades ripple in `ln r` and stall far above the
/// optimum; a polynomial against a wide window covers the log-spread regime
/// and the bump supplies localized structure.
pub const POLY_COEFFS: usize = 7;
pub const SEARCH_PARAMS: usize = 2 + POLY_COEFFS + 3;
const MIN_WINDOW_END: f64 = 2e-2;

fn logistic(b: f64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) / (1.0 + (-b).exp())
}

pub fn decode_search_profile(params: &[f64], n: usize) -> Result<RadialProfile> {
    if params.len() != SEARCH_PARAMS {
        return invalid(format!("search profiles take {SEARCH_PARAMS} parameters"));
    }
    if params.iter().any(|v| !v.is_finite()) {
        return invalid("non-finite search parameter");
    }
    let power = 0.5 * (4.0 - n as f64);
    let floor = SUPPORT_FLOOR * 1.001;
    let ceil = SUPPORT_CEIL * 0.999;

    let hi = params[0].exp().clamp(MIN_WINDOW_END, ceil);
    let ramp = (hi * logistic(params[1], 1e-5f64.ln(), 0.48f64.ln()).exp()).min(0.49 * (hi - floor));
    let coefficients = bernstein_to_monomial(&params[2..2 + POLY_COEFFS])
        .into_iter()
        .enumerate()
        .map(|(k, a)| a * hi.powf(power - k as f64))
        .collect();
    let window = windowed_poly(floor, hi, ramp, coefficients)?;

    let tail = &params[2 + POLY_COEFFS..];
    let sigma = logistic(tail[1], 0.01, 0.99);
    let c = tail[0].exp().clamp(floor / (1.0 - sigma), ceil / (1.0 + sigma));
    let spike = bump(c, c * sigma, tail[2] * c.powf(power))?;
    linear_combination(vec![(1.0, window), (1.0, spike)])
}

/// Monomial coefficients of `Σ β_k C(d,k) x^k (1-x)^{d-k}`, `d = β.len() - 1`.
fn bernstein_to_monomial(beta: &[f64]) -> Vec<f64> {
    let d = beta.len() - 1;
    let binom = |n: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    let mut out = vec![0.0; d + 1];
    for (k, b) in beta.iter().enumerate() {
        // x^k (1-x)^{d-k} = Σ_j C(d-k, j) (-1)^j x^{k+j}
        for j in 0..=d - k {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            out[k + j] += b * binom(d, k) * binom(d - k, j) * sign;
        }
    }
    out
}

fn random_start(rng: &mut impl Rng) -> Vec<f64> {
    let (lo, hi) = (SUPPORT_FLOOR.ln() + 0.5, SUPPORT_CEIL.ln() - 0.5);
    let mut x = vec![rng.gen_range(MIN_WINDOW_END.ln()..hi), rng.gen_range(-2.0..2.0)];
    x.extend((0..POLY_COEFFS).map(|_| rng.gen_range(-1.0..1.0)));
    x.extend([rng.gen_range(lo..hi), rng.gen_range(-2.0..2.0), rng.gen_range(-0.3..0.3)]);
    x
}

/// Wide window carrying Bernstein samples of `x(1-x)²`, no bump: a
/// deterministic log-spread seed that takes start index 0.
fn spread_start() -> Vec<f64> {
    let mut x = vec![SUPPORT_CEIL.ln() - 0.5, -2.0];
    let d = (POLY_COEFFS - 1) as f64;
    x.extend((0..POLY_COEFFS).map(|k| {
        let t = k as f64 / d;
        4.0 * t * (1.0 - t).powi(2)
    }));
    x.extend([0.0, 0.0, 0.0]);
    x
}

fn search_steps() -> Vec<f64> {
    let mut steps = vec![1.0, 1.0];
    steps.extend([0.5; POLY_COEFFS]);
    steps.extend([1.0, 1.0, 0.3]);
    steps
}

/// Mode terms the searches need.
#[derive(Clone, Copy, Debug)]
struct ModeSample {
    lhs: f64,
    radial: f64,
    spherical: f64,
    cross: f64,
}

fn mode_sample(g: &RadialProfile, ctx: ModeContext, spec: &RuleSpec) -> Result<ModeSample> {
    let rule = spec.rule_for(g)?;
    let rep = identity_report(g, ctx, &rule)?;
    Ok(ModeSample {
        lhs: rep.term_lhs,
        radial: rep.term_radial,
        spherical: rep.term_spherical,
        cross: cross_term(g, ctx, &rule)?,
    })
}

/// Outcome of one search start, merged across starts in index order.
struct StartResult<T> {
    value: f64,
    params: Vec<f64>,
    evaluations: usize,
    tally: T,
}

fn multi_start<T: Send>(
    seed: u64,
    stream_base: u64,
    starts: usize,
    evals_per_start: usize,
    objective: impl Fn(&[f64], &mut T) -> f64 + Sync,
    new_tally: impl Fn() -> T + Sync,
) -> Vec<StartResult<T>> {
    (0..starts)
        .into_par_iter()
        .map(|k| {
            let mut rng = profile_rng(seed, stream_base + k as u64);
            let mut x = if k == 0 { spread_start() } else { random_start(&mut rng) };
            let mut tally = new_tally();
            let mut fx = f64::INFINITY;
            let mut evaluations = 0;
            // restart the simplex at its best vertex until a round stops paying
            while evaluations < evals_per_start {
                let res = nelder_mead(
                    |p| objective(p, &mut tally),
                    &x,
                    &search_steps(),
                    evals_per_start - evaluations,
                    1e-13,
                );
                evaluations += res.evaluations;
                let gained = fx - res.fx;
                if res.fx < fx {
                    x = res.x;
                    fx = res.fx;
                }
                if !(gained > 1e-9 * fx.abs()) {
                    break;
                }
            }
            let res = SimplexResult { x, fx, evaluations };
            StartResult {
                value: res.fx,
                params: res.x,
                evaluations: res.evaluations,
                tally,
            }
        })
        .collect()
}

fn check_search_inputs(ell_set: &[usize], budget: usize) -> Result<()> {
    if ell_set.is_empty() {
        return invalid("search needs at least one degree");
    }
    if ell_set.contains(&0) {
        return invalid("degree 0 has no spherical part; the angle is undefined");
    }
    if budget < MIN_SEARCH_BUDGET {
        return invalid(format!("search budget must be at least {MIN_SEARCH_BUDGET}"));
    }
    Ok(())
}

/// Nelder–Mead in a dozen dimensions needs a few thousand steps to settle.
const EVALS_PER_START: usize = 2000;

fn split_budget(budget: usize, ell_count: usize) -> (usize, usize) {
    let per_ell = budget / ell_count;
    let starts = (per_ell / EVALS_PER_START).clamp(1, MAX_RESTARTS);
    (starts, per_ell / starts)
}

/// Smallest `Re⟨Δ_r f, Δ_s f⟩ / (‖Δ_r f‖ ‖Δ_s f‖)` found over the bump
/// family. The result is an upper bound on the infimum.
pub fn angle_estimate(n: usize, ell_set: &[usize], budget: usize, seed: u64) -> Result<ConstantEstimate> {
    check_search_inputs(ell_set, budget)?;
    let spec = RuleSpec::default();
    let (starts, per_start) = split_budget(budget, ell_set.len());

    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut evaluations = 0;
    for (li, &ell) in ell_set.iter().enumerate() {
        let ctx = ModeContext::new(n, ell)?;
        let objective = |x: &[f64], _: &mut ()| -> f64 {
            let Ok(g) = decode_search_profile(x, n) else { return 2.0 };
            match mode_sample(&g, ctx, &spec) {
                Ok(s) if s.radial > 0.0 && s.spherical > 0.0 => s.cross / (s.radial * s.spherical).sqrt(),
                _ => 2.0,
            }
        };
        let results = multi_start(seed, (li * MAX_RESTARTS) as u64, starts, per_start, objective, || ());
        for r in results {
            evaluations += r.evaluations;
            if best.as_ref().is_none_or(|b| r.value < b.0) {
                best = Some((r.value, ell, r.params));
            }
        }
    }
    let (value, ell, params) = best.expect("at least one start");
    Ok(ConstantEstimate {
        value,
        n,
        ell: Some(ell),
        method: Method::Search,
        grid: None,
        budget: Some(budget),
        converged: value <= 1.0,
        oracle_value: None,
        iterations: evaluations,
        argmin: Some(decode_search_profile(&params, n)?),
    })
}

/// Search outcome for the three-dimensional spherical-part bound, with a
/// tally over every profile evaluated along the way.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalCheck {
    pub estimate: ConstantEstimate,
    pub samples: usize,
    /// Smallest `‖Δf‖² / ‖Δ_s f‖²` seen.
    pub min_ratio: f64,
    /// Smallest `(‖Δf‖² - ‖Δ_r f‖²) / ‖Δf‖²` seen.
    pub min_radial_slack: f64,
    pub spherical_violations: usize,
    pub radial_violations: usize,
}

impl SphericalCheck {
    pub fn passed(&self) -> bool {
        self.spherical_violations == 0 && self.radial_violations == 0
    }
}

#[derive(Clone, Copy)]
struct Tally {
    samples: usize,
    min_ratio: f64,
    min_slack: f64,
    spherical_violations: usize,
    radial_violations: usize,
}

impl Tally {
    fn new() -> Self {
        Self {
            samples: 0,
            min_ratio: f64::INFINITY,
            min_slack: f64::INFINITY,
            spherical_violations: 0,
            radial_violations: 0,
        }
    }

    fn merge(&mut self, o: &Tally) {
        self.samples += o.samples;
        self.min_ratio = self.min_ratio.min(o.min_ratio);
        self.min_slack = self.min_slack.min(o.min_slack);
        self.spherical_violations += o.spherical_violations;
        self.radial_violations += o.radial_violations;
    }
}

/// Minimises `‖Δf‖² / ‖Δ_s f‖²` in three dimensions and checks every sample
/// against `(5/8)²` and against `‖Δf‖² ≥ ‖Δ_r f‖²`, both with `1e-10` slack.
pub fn spherical_constant_check(n: usize, ell_set: &[usize], budget: usize, seed: u64) -> Result<SphericalCheck> {
    if n != 3 {
        return invalid("the spherical-part constant check is specific to n = 3");
    }
    check_search_inputs(ell_set, budget)?;
    let spec = RuleSpec::default();
    let (starts, per_start) = split_budget(budget, ell_set.len());

    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut total = Tally::new();
    let mut evaluations = 0;
    for (li, &ell) in ell_set.iter().enumerate() {
        let ctx = ModeContext::new(n, ell)?;
        let objective = |x: &[f64], tally: &mut Tally| -> f64 {
            let Ok(g) = decode_search_profile(x, n) else { return f64::INFINITY };
            let Ok(s) = mode_sample(&g, ctx, &spec) else { return f64::INFINITY };
            if !(s.spherical > 0.0 && s.lhs > 0.0) {
                return f64::INFINITY;
            }
            let ratio = s.lhs / s.spherical;
            tally.samples += 1;
            tally.min_ratio = tally.min_ratio.min(ratio);
            tally.min_slack = tally.min_slack.min((s.lhs - s.radial) / s.lhs);
            if ratio < SPHERICAL_CONSTANT_N3 - 1e-10 {
                tally.spherical_violations += 1;
            }
            if s.lhs < s.radial - 1e-10 * s.lhs {
                tally.radial_violations += 1;
            }
            ratio
        };
        let results = multi_start(seed, (li * MAX_RESTARTS) as u64, starts, per_start, objective, Tally::new);
        for r in results {
            evaluations += r.evaluations;
            total.merge(&r.tally);
            if best.as_ref().is_none_or(|b| r.value < b.0) {
                best = Some((r.value, ell, r.params));
            }
        }
    }
    let (value, ell, params) = best.expect("at least one start");
    let oracle = ell_set
        .iter()
        .map(|&l| {
            let lam = mode_eigenvalue(n, l);
            symbol_constant(n, l, 10.0, 4001).map(|c| c.value / (lam * lam))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(SphericalCheck {
        estimate: ConstantEstimate {
            value,
            n,
            ell: Some(ell),
            method: Method::Search,
            grid: None,
            budget: Some(budget),
            converged: value.is_finite(),
            oracle_value: Some(oracle),
            iterations: evaluations,
            argmin: Some(decode_search_profile(&params, n)?),
        },
        samples: total.samples,
        min_ratio: total.min_ratio,
        min_radial_slack: total.min_slack,
        spherical_violations: total.spherical_violations,
        radial_violations: total.radial_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_minimum_at_origin() {
        let c = symbol_constant(5, 0, 10.0, 2001).unwrap();
        assert_eq!(c.value, 1.5625);
        assert_eq!(symbol_constant(6, 0, 10.0, 2001).unwrap().value, 9.0);
        assert_eq!(symbol_constant(5, 1, 10.0, 2001).unwrap().value, 27.5625);
        assert_eq!(symbol_constant(3, 0, 10.0, 2001).unwrap().value, 0.5625);
        assert!(symbol_constant(5, 0, 10.0, 999).is_err());
    }

    #[test]
    fn symbol_interior_minimum_is_refined() {
        // n = 2, ℓ = 0: c = -1, so (s² - 1)² + 4s² = (s² + 1)², minimum 1 at s = 0;
        // the grid must still land on it even with a coarse spacing
        let c = symbol_constant(2, 0, 7.3, 1000).unwrap();
        assert!((c.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pentadiagonal_solver() {
        let p = Penta {
            d0: vec![6.0, 7.0, 8.0, 9.0, 10.0],
            d1: vec![1.0, -2.0, 0.5, 1.5],
            d2: vec![0.3, 0.2, -0.4],
        };
        let x = vec![1.0, -2.0, 0.5, 3.0, -1.0];
        let mut b = vec![0.0; 5];
        for i in 0..5 {
            b[i] += p.d0[i] * x[i];
            if i + 1 < 5 {
                b[i] += p.d1[i] * x[i + 1];
                b[i + 1] += p.d1[i] * x[i];
            }
            if i + 2 < 5 {
                b[i] += p.d2[i] * x[i + 2];
                b[i + 2] += p.d2[i] * x[i];
            }
        }
        let f = p.factor(0.0);
        assert_eq!(f.negative_count(), 0);
        let y = f.solve(&b);
        for (a, e) in y.iter().zip(&x) {
            assert!((a - e).abs() < 1e-13);
        }
        assert_eq!(p.factor(1e3).negative_count(), 5);
    }

    #[test]
    fn eigen_input_guards() {
        assert!(eigen_constant(5, 0, GridSpec { lo: 1e-7, hi: 1.0, points: 512 }).is_err());
        assert!(eigen_constant(5, 0, GridSpec { lo: 1e-3, hi: 1e3, points: 100 }).is_err());
    }

    #[test]
    fn decoded_profiles_stay_in_range() {
        for n in [3, 4, 6] {
            let mut p = vec![1.0; SEARCH_PARAMS];
            p[0] = 50.0;
            p[SEARCH_PARAMS - 3] = -50.0;
            p[SEARCH_PARAMS - 2] = 50.0;
            let g = decode_search_profile(&p, n).unwrap();
            assert!(g.support().lo() >= SUPPORT_FLOOR && g.support().hi() <= SUPPORT_CEIL);
        }
        assert!(decode_search_profile(&[1.0, 2.0], 4).is_err());
        let mut bad = vec![0.0; SEARCH_PARAMS];
        bad[3] = f64::NAN;
        assert!(decode_search_profile(&bad, 4).is_err());
    }

    #[test]
    fn bernstein_conversion() {
        // x(1-x) in degree 2: β = (0, 1/2, 0)
        assert_eq!(bernstein_to_monomial(&[0.0, 0.5, 0.0]), vec![0.0, 1.0, -1.0]);
        // partition of unity
        let ones = bernstein_to_monomial(&[1.0; 7]);
        assert!((ones[0] - 1.0).abs() < 1e-12 && ones[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn search_guards() {
        assert!(angle_estimate(4, &[0, 1], 20_000, 1).is_err());
        assert!(angle_estimate(4, &[1], 100, 1).is_err());
        assert!(spherical_constant_check(4, &[1], 20_000, 1).is_err());
    }
}
