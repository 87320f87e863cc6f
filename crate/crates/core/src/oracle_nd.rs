//! Finite-difference cross-check of the mode reduction on tensor grids in
//! three and four dimensions.
//!
//! A mode function `f(x) = g(|x|) z(x_n/|x|)` is sampled on a cube, the
//! operators `Δ`, `∂_r = (x/|x|)·∇`, `L_j = ∂_j - (x_j/|x|) ∂_r` are applied
//! with second-order central differences, and the five terms of the
//! identity
//!
//! ```text
//! ‖Δf‖² = ‖Δ_r f‖² + ‖Σ L_j² f‖² + 2R_n Σ ‖L_j f/|x|‖² + 2⟨-Σ L_j² f_*, f_*⟩,
//! f_* = ∂_r f + ((n-4)/2) f/|x|
//! ```
//!
//! are formed literally as grid sums. Dividing by `∫_{S^{n-1}} z²` puts them
//! on the scale of the one-dimensional values, which assume a unit-norm
//! harmonic.
//!
//! Nodes sit at `x_i = (i - (N-1)/2) h`, `h = 2·extent/(N-1)`, on every axis;
//! values beyond the cube are taken as zero. Axis `n - 1` carries the zonal
//! variable. Storage is row-major with axis 0 slowest.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::harmonics::{zonal, ZonalPolynomial};
use crate::profiles::RadialProfile;
use crate::radial_ops::ModeContext;
use crate::verify::{identity_report, RuleSpec};

pub const MAX_POINTS_3D: usize = 256;
pub const MAX_POINTS_4D: usize = 64;
/// Nodes needed between the support and the cube face: composed first
/// differences reach two neighbours, plus one of slack.
pub const STENCIL_MARGIN: f64 = 3.0;

/// Term labels in identity order.
pub const TERM_NAMES: [&str; 5] = ["lhs", "radial", "spherical", "hardy", "star"];

#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    n: usize,
    extent: f64,
    points: usize,
    h: f64,
    values: Vec<f64>,
}

/// Index arithmetic shared by every stencil.
#[derive(Clone, Copy, Debug)]
struct Grid {
    n: usize,
    points: usize,
    h: f64,
    strides: [usize; 4],
}

impl Grid {
    fn new(n: usize, points: usize, h: f64) -> Self {
        let mut strides = [0; 4];
        let mut s = 1;
        for j in (0..n).rev() {
            strides[j] = s;
            s *= points;
        }
        Self { n, points, h, strides }
    }

    fn len(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    fn coord(&self, idx: usize, j: usize) -> usize {
        (idx / self.strides[j]) % self.points
    }

    fn position(&self, idx: usize) -> [f64; 4] {
        let mid = 0.5 * (self.points as f64 - 1.0);
        let mut x = [0.0; 4];
        for (j, xj) in x.iter_mut().enumerate().take(self.n) {
            *xj = (self.coord(idx, j) as f64 - mid) * self.h;
        }
        x
    }

    fn radius(&self, x: &[f64; 4]) -> f64 {
        x[..self.n].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `x/|x|`, zero at the origin.
    fn direction(&self, x: &[f64; 4]) -> ([f64; 4], f64) {
        let r = self.radius(x);
        let mut w = [0.0; 4];
        if r > 0.0 {
            for j in 0..self.n {
                w[j] = x[j] / r;
            }
        }
        (w, r)
    }

    fn neighbours(&self, v: &[f64], idx: usize, j: usize) -> (f64, f64) {
        let c = self.coord(idx, j);
        let s = self.strides[j];
        let lo = if c > 0 { v[idx - s] } else { 0.0 };
        let hi = if c + 1 < self.points { v[idx + s] } else { 0.0 };
        (lo, hi)
    }

    fn d1(&self, v: &[f64], idx: usize, j: usize) -> f64 {
        let (lo, hi) = self.neighbours(v, idx, j);
        (hi - lo) / (2.0 * self.h)
    }

    fn gradient(&self, v: &[f64], idx: usize) -> [f64; 4] {
        let mut g = [0.0; 4];
        for (j, gj) in g.iter_mut().enumerate().take(self.n) {
            *gj = self.d1(v, idx, j);
        }
        g
    }

    fn laplacian(&self, v: &[f64], idx: usize) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.n {
            let (lo, hi) = self.neighbours(v, idx, j);
            acc += lo - 2.0 * v[idx] + hi;
        }
        acc / (self.h * self.h)
    }

    fn radial_derivative(&self, v: &[f64], idx: usize) -> f64 {
        let (w, _) = self.direction(&self.position(idx));
        let g = self.gradient(v, idx);
        (0..self.n).map(|j| w[j] * g[j]).sum()
    }

    fn angular_derivative(&self, v: &[f64], idx: usize, j: usize) -> f64 {
        let (w, _) = self.direction(&self.position(idx));
        let g = self.gradient(v, idx);
        let dr: f64 = (0..self.n).map(|k| w[k] * g[k]).sum();
        g[j] - w[j] * dr
    }

    fn map(&self, f: impl Fn(usize) -> f64 + Sync + Send) -> Vec<f64> {
        (0..self.len()).into_par_iter().map(f).collect()
    }

    fn sum(&self, f: impl Fn(usize) -> f64 + Sync) -> f64 {
        // fixed chunking keeps the floating-point sum independent of threads
        let chunk = self.points.pow(self.n as u32 - 1);
        let partial: Vec<f64> = (0..self.points)
            .into_par_iter()
            .map(|slab| (slab * chunk..(slab + 1) * chunk).map(&f).sum())
            .collect();
        partial.iter().sum::<f64>() * self.h.powi(self.n as i32)
    }
}

fn check_grid(n: usize, extent: f64, points: usize) -> Result<()> {
    let cap = match n {
        3 => MAX_POINTS_3D,
        4 => MAX_POINTS_4D,
        _ => return invalid(format!("tensor grids support n = 3 or 4, got {n}")),
    };
    if !(4..=cap).contains(&points) {
        return invalid(format!("points per axis must lie in [4, {cap}] for n = {n}, got {points}"));
    }
    if !(extent.is_finite() && extent > 0.0) {
        return invalid("grid half-extent must be positive");
    }
    Ok(())
}

impl TensorField {
    pub fn from_fn(n: usize, extent: f64, points: usize, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Self> {
        check_grid(n, extent, points)?;
        let h = 2.0 * extent / (points - 1) as f64;
        let grid = Grid::new(n, points, h);
        let values = grid.map(|idx| f(&grid.position(idx)[..n]));
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: k,
                radius: grid.radius(&grid.position(k)),
            });
        }
        Ok(Self {
            n,
            extent,
            points,
            h,
            values,
        })
    }

    fn grid(&self) -> Grid {
        Grid::new(self.n, self.points, self.h)
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self { values, ..self.clone() }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Node coordinates of a flat index.
    pub fn position(&self, idx: usize) -> Vec<f64> {
        self.grid().position(idx)[..self.n].to_vec()
    }

    /// Flat index of a multi-index.
    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, c| acc * self.points + c)
    }

    /// `h^n Σ f²`.
    pub fn norm_sq(&self) -> f64 {
        self.grid().sum(|i| self.values[i] * self.values[i])
    }

    /// `h^n Σ f·g`.
    pub fn inner(&self, other: &TensorField) -> Result<f64> {
        if self.n != other.n || self.points != other.points || self.h != other.h {
            return invalid("fields live on different grids");
        }
        Ok(self.grid().sum(|i| self.values[i] * other.values[i]))
    }

    /// Writes `<stem>.bin` (row-major little-endian f64) and `<stem>.json`
    /// (`{n, extent, points}`) into `dir`.
    pub fn dump(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let bin = dir.join(format!("{stem}.bin"));
        let json = dir.join(format!("{stem}.json"));
        let bytes: Vec<u8> = self.values.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&bin, bytes)?;
        let meta = FieldSidecar {
            n: self.n,
            extent: self.extent,
            points: self.points,
        };
        fs::write(&json, serde_json::to_string_pretty(&meta)?)?;
        Ok((bin, json))
    }

    pub fn load(bin: &Path, sidecar: &Path) -> Result<Self> {
        let meta: FieldSidecar = serde_json::from_str(&fs::read_to_string(sidecar)?)?;
        check_grid(meta.n, meta.extent, meta.points)?;
        let bytes = fs::read(bin)?;
        let expected = meta.points.pow(meta.n as u32) * 8;
        if bytes.len() != expected {
            return invalid(format!("field dump holds {} bytes, expected {expected}", bytes.len()));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Self {
            n: meta.n,
            extent: meta.extent,
            points: meta.points,
            h: 2.0 * meta.extent / (meta.points - 1) as f64,
            values,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSidecar {
    pub n: usize,
    pub extent: f64,
    pub points: usize,
}

/// `g(|x|) z(x_n/|x|)` on the grid, zero at the origin.
pub fn sample_mode_function(g: &RadialProfile, z: &ZonalPolynomial, extent: f64, points: usize) -> Result<TensorField> {
    let n = z.dimension();
    check_grid(n, extent, points)?;
    let h = 2.0 * extent / (points - 1) as f64;
    let reach = g.support().hi() + STENCIL_MARGIN * h;
    if reach > extent {
        return invalid(format!(
            "support end {} plus stencil margin {reach:.4} exceeds the half-extent {extent}",
            g.support().hi()
        ));
    }
    TensorField::from_fn(n, extent, points, |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            0.0
        } else {
            g.value(r) * z.eval(x[n - 1] / r)
        }
    })
}

/// `(2n+1)`-point Laplacian.
pub fn fd_laplacian(field: &TensorField) -> TensorField {
    let grid = field.grid();
    field.with_values(grid.map(|i| grid.laplacian(&field.values, i)))
}

/// `(x/|x|)·∇f` with central differences, zero at the origin.
pub fn fd_radial_derivative(field: &TensorField) -> TensorField {
    let grid = field.grid();
    field.with_values(grid.map(|i| grid.radial_derivative(&field.values, i)))
}

/// `L_j f = ∂_j f - (x_j/|x|) ∂_r f`, with nodes of [`origin_mask`] set to 0.
pub fn fd_angular_derivative(field: &TensorField, j: usize) -> Result<TensorField> {
    if j >= field.n {
        return invalid(format!("axis {j} out of range for n = {}", field.n));
    }
    let grid = field.grid();
    let cutoff = 2.0 * field.h;
    Ok(field.with_values(grid.map(|i| {
        if grid.radius(&grid.position(i)) < cutoff {
            0.0
        } else {
            grid.angular_derivative(&field.values, i, j)
        }
    })))
}

/// `∂_r(∂_r f) + (n-1)/|x| ∂_r f`, the radial part of the Laplacian.
pub fn fd_radial_laplacian(field: &TensorField) -> TensorField {
    let d = fd_radial_derivative(field);
    let grid = field.grid();
    let nm1 = field.n as f64 - 1.0;
    field.with_values(grid.map(|i| {
        let (_, r) = grid.direction(&grid.position(i));
        if r == 0.0 {
            0.0
        } else {
            grid.radial_derivative(&d.values, i) + nm1 * d.values[i] / r
        }
    }))
}

/// Flat indices within `2h` of the origin, where `x/|x|` is not resolved.
pub fn origin_mask(field: &TensorField) -> Vec<usize> {
    let grid = field.grid();
    let cutoff = 2.0 * field.h;
    (0..grid.len())
        .filter(|&i| grid.radius(&grid.position(i)) < cutoff)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub n: usize,
    pub ell: usize,
    pub points: usize,
    pub extent: f64,
    pub spacing: f64,
    /// `∫_{S^{n-1}} z²`, the divisor applied to every grid term.
    pub zonal_norm_sq: f64,
    /// Grid terms in [`TERM_NAMES`] order, normalised.
    pub grid: [f64; 5],
    /// One-dimensional quadrature values in the same order.
    pub reference: [f64; 5],
    /// `|grid - reference| / |reference|`, or the absolute gap when the
    /// reference vanishes.
    pub deviation: [f64; 5],
    /// `⟨Δ_r f, Σ L_j² f⟩` on the grid, normalised.
    pub grid_cross: f64,
    /// `(‖Δf‖² - ‖Δ_r f‖² - ‖Δ_s f‖²)/2` from the reference values.
    pub reference_cross: f64,
    /// `h^n Σ f²` normalised, against `∫ g² r^{n-1}`.
    pub grid_norm_sq: f64,
    pub reference_norm_sq: f64,
}

impl ReductionReport {
    pub fn max_deviation(&self) -> f64 {
        self.deviation.iter().cloned().fold(0.0, f64::max)
    }
}

/// Grid versions of the five identity terms and the radial/spherical
/// cross term, all divided by `∫ z²`.
pub fn certify_reduction(g: &RadialProfile, ctx: ModeContext, extent: f64, points: usize) -> Result<ReductionReport> {
    if !(ctx.n == 3 || ctx.n == 4) {
        return invalid(format!("the grid oracle covers n = 3 and 4, got {}", ctx.n));
    }
    let z = zonal(ctx.n, ctx.ell)?;
    let field = sample_mode_function(g, &z, extent, points)?;
    let zn = z.sphere_norm_sq();
    let grid = field.grid();
    let n = ctx.n;
    let f = &field.values;

    let lhs = grid.sum(|i| grid.laplacian(f, i).powi(2));
    let grid_norm = grid.sum(|i| f[i] * f[i]);

    // d = ∂_r f
    let mut d = grid.map(|i| grid.radial_derivative(f, i));
    let radial_at = |d: &[f64], i: usize| -> f64 {
        let (_, r) = grid.direction(&grid.position(i));
        if r == 0.0 {
            0.0
        } else {
            grid.radial_derivative(d, i) + (n as f64 - 1.0) * d[i] / r
        }
    };
    let radial = grid.sum(|i| radial_at(&d, i).powi(2));

    let hardy_sum = grid.sum(|i| {
        let (w, r) = grid.direction(&grid.position(i));
        if r == 0.0 {
            return 0.0;
        }
        let gr = grid.gradient(f, i);
        (0..n).map(|j| (gr[j] - w[j] * d[i]).powi(2)).sum::<f64>() / (r * r)
    });
    let hardy = 2.0 * ctx.rellich * hardy_sum;

    // s = Σ_j L_j(L_j f), accumulated one axis at a time through t
    let mut s = vec![0.0; grid.len()];
    let mut t = vec![0.0; grid.len()];
    for j in 0..n {
        t.par_iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = grid.angular_derivative(f, i, j));
        s.par_iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v += grid.angular_derivative(&t, i, j));
    }
    let spherical = grid.sum(|i| s[i] * s[i]);
    let cross = grid.sum(|i| radial_at(&d, i) * s[i]);
    drop(s);

    // d becomes f_*
    let shift = 0.5 * (n as f64 - 4.0);
    d.par_iter_mut().enumerate().for_each(|(i, v)| {
        let r = grid.radius(&grid.position(i));
        if r > 0.0 {
            *v += shift * f[i] / r;
        }
    });
    let mut star = 0.0;
    for j in 0..n {
        t.par_iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = grid.angular_derivative(&d, i, j));
        star -= grid.sum(|i| grid.angular_derivative(&t, i, j) * d[i]);
    }
    star *= 2.0;

    let rule = RuleSpec::default().rule_for(g)?;
    let rep = identity_report(g, ctx, &rule)?;
    let reference = rep.terms();
    let grid_terms = [lhs / zn, radial / zn, spherical / zn, hardy / zn, star / zn];
    let mut deviation = [0.0; 5];
    for k in 0..5 {
        let gap = (grid_terms[k] - reference[k]).abs();
        deviation[k] = if reference[k] != 0.0 { gap / reference[k].abs() } else { gap };
    }
    let reference_norm_sq = rule.integrate(n as f64 - 1.0, |r| g.value(r).powi(2))?;
    Ok(ReductionReport {
        n,
        ell: ctx.ell,
        points,
        extent,
        spacing: field.h,
        zonal_norm_sq: zn,
        grid: grid_terms,
        reference,
        deviation,
        grid_cross: cross / zn,
        reference_cross: 0.5 * (reference[0] - reference[1] - reference[2]),
        grid_norm_sq: grid_norm / zn,
        reference_norm_sq,
    })
}

/// Observed order per term from a coarse and a fine report:
/// `ln(dev_c/dev_f) / ln(h_c/h_f)`.
pub fn convergence_order(coarse: &ReductionReport, fine: &ReductionReport) -> Result<[f64; 5]> {
    if coarse.n != fine.n || coarse.ell != fine.ell || !(coarse.spacing > fine.spacing) {
        return invalid("convergence order needs matching modes and a finer second grid");
    }
    let ratio = (coarse.spacing / fine.spacing).ln();
    let mut p = [0.0; 5];
    for k in 0..5 {
        p[k] = (coarse.deviation[k] / fine.deviation[k]).ln() / ratio;
    }
    Ok(p)
}

/// Radial data known only at nodes, differentiated by a local least-squares
/// quartic through the `FIT_NODES` nearest samples. Kept out of the core
/// checks so their error budget stays pure quadrature.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledProfile {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

const FIT_NODES: usize = 7;
const FIT_DEGREE: usize = 4;

impl SampledProfile {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < FIT_NODES {
            return invalid(format!("sampled profile needs at least {FIT_NODES} matching nodes and values"));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) || values.iter().any(|v| !v.is_finite()) {
            return invalid("sampled nodes must increase strictly and values be finite");
        }
        Ok(Self { nodes, values })
    }

    /// Samples `g` at `count` evenly spaced nodes across its support.
    pub fn from_profile(g: &RadialProfile, count: usize) -> Result<Self> {
        if count < FIT_NODES {
            return invalid(format!("sampled profile needs at least {FIT_NODES} nodes"));
        }
        let (lo, hi) = (g.support().lo(), g.support().hi());
        let nodes: Vec<f64> = (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect();
        let values = nodes.iter().map(|&r| g.value(r)).collect();
        Self::new(nodes, values)
    }

    /// Value, first and second derivative of the local fit at `r`; zero
    /// outside the sampled range.
    pub fn jet(&self, r: f64) -> (f64, f64, f64) {
        let m = self.nodes.len();
        if !(r >= self.nodes[0] && r <= self.nodes[m - 1]) {
            return (0.0, 0.0, 0.0);
        }
        let k = self.nodes.partition_point(|&x| x < r);
        let start = k.saturating_sub(FIT_NODES / 2).min(m - FIT_NODES);
        let xs = &self.nodes[start..start + FIT_NODES];
        let ys = &self.values[start..start + FIT_NODES];
        // scaled local coordinate keeps the normal equations well conditioned
        let scale = 0.5 * (xs[FIT_NODES - 1] - xs[0]);
        let t = |x: f64| (x - r) / scale;
        let p = FIT_DEGREE + 1;
        let mut ata = [[0.0; FIT_DEGREE + 1]; FIT_DEGREE + 1];
        let mut atb = [0.0; FIT_DEGREE + 1];
        for (&x, &y) in xs.iter().zip(ys) {
            let u = t(x);
            let mut pw = [1.0; FIT_DEGREE + 1];
            for d in 1..p {
                pw[d] = pw[d - 1] * u;
            }
            for a in 0..p {
                atb[a] += pw[a] * y;
                for b in 0..p {
                    ata[a][b] += pw[a] * pw[b];
                }
            }
        }
        let c = solve_small(ata, atb);
        (c[0], c[1] / scale, 2.0 * c[2] / (scale * scale))
    }
}

impl crate::profiles::RadialFn for SampledProfile {
    fn eval(&self, r: f64) -> f64 {
        self.jet(r).0
    }
}

/// Gaussian elimination with partial pivoting on a tiny dense system.
fn solve_small<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> [f64; N] {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap_or(col);
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{bump, windowed_poly};
    use crate::radial_ops::mode_laplacian;
    use crate::profiles::RadialFn;

    /// Wide enough that 64-128 points per axis are in the asymptotic regime.
    fn wide() -> RadialProfile {
        bump(2.5, 2.0, 1.0).unwrap()
    }

    fn interior(field: &TensorField, margin: usize) -> impl Iterator<Item = usize> + '_ {
        let grid = field.grid();
        (0..grid.len()).filter(move |&i| (0..field.n).all(|j| {
            let c = grid.coord(i, j);
            c >= margin && c + margin < field.points
        }))
    }

    #[test]
    fn grid_guards() {
        let g = bump(2.0, 0.8, 1.0).unwrap();
        let z = zonal(3, 1).unwrap();
        assert!(sample_mode_function(&g, &z, 2.9, 64).is_err());
        assert!(sample_mode_function(&g, &z, 3.2, 300).is_err());
        assert!(sample_mode_function(&g, &zonal(4, 1).unwrap(), 3.2, 65).is_err());
        assert!(sample_mode_function(&g, &zonal(5, 1).unwrap(), 3.2, 16).is_err());
        assert!(certify_reduction(&g, ModeContext::new(5, 1).unwrap(), 3.2, 16).is_err());
    }

    #[test]
    fn radial_field_matches_profile_on_axes() {
        let g = bump(2.0, 0.8, 1.0).unwrap();
        let f = sample_mode_function(&g, &zonal(3, 0).unwrap(), 4.0, 33).unwrap();
        // odd point count: the middle node is the origin
        assert_eq!(f.values()[f.index(&[16, 16, 16])], 0.0);
        for k in 0..33 {
            for axis in 0..3 {
                let mut c = [16; 3];
                c[axis] = k;
                let x = f.position(f.index(&c));
                assert_eq!(f.values()[f.index(&c)], g.value(x[axis].abs()));
            }
        }
    }

    #[test]
    fn odd_degree_parity_is_exact() {
        let g = bump(2.0, 0.8, 1.0).unwrap();
        for (n, pts) in [(3, 40), (4, 20)] {
            let f = sample_mode_function(&g, &zonal(n, 3).unwrap(), 4.5, pts).unwrap();
            let stride = 1;
            for i in 0..f.values().len() {
                let c = i % pts;
                let mirror = i - c * stride + (pts - 1 - c) * stride;
                assert_eq!(f.values()[i], -f.values()[mirror]);
            }
        }
    }

    #[test]
    fn grid_norm_matches_quadrature() {
        let g = bump(2.0, 0.8, 1.0).unwrap();
        let rep = certify_reduction(&g, ModeContext::new(3, 2).unwrap(), 3.2, 96).unwrap();
        let rel = (rep.grid_norm_sq - rep.reference_norm_sq).abs() / rep.reference_norm_sq;
        assert!(rel < 0.02, "{rel}");
    }

    #[test]
    fn laplacian_of_quadratic() {
        for n in [3, 4] {
            let pts = if n == 3 { 20 } else { 10 };
            let f = TensorField::from_fn(n, 1.0, pts, |x| x.iter().map(|v| v * v).sum()).unwrap();
            let lap = fd_laplacian(&f);
            for i in interior(&f, 1) {
                assert!((lap.values()[i] - 2.0 * n as f64).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn laplacian_kills_windowed_linear() {
        // x_1 times a radial window that is 1 on 0.5 ≤ |x| ≤ 2
        let w = windowed_poly(0.2, 2.6, 0.3, vec![1.0]).unwrap();
        let f = TensorField::from_fn(3, 3.0, 48, |x| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            x[0] * w.value(r)
        })
        .unwrap();
        let lap = fd_laplacian(&f);
        let grid = f.grid();
        let h = f.spacing();
        for i in 0..grid.len() {
            let r = grid.radius(&grid.position(i));
            if r > 0.5 + 2.0 * h && r < 2.3 - 2.0 * h {
                assert!(lap.values()[i].abs() < 1e-10, "{}", lap.values()[i]);
            }
        }
    }

    fn gaussian(x: &[f64]) -> f64 {
        (-x.iter().map(|v| v * v).sum::<f64>()).exp()
    }

    fn order(coarse: f64, fine: f64, points: (usize, usize)) -> f64 {
        (coarse / fine).ln() / ((points.1 - 1) as f64 / (points.0 - 1) as f64).ln()
    }

    /// Max nodal error of the grid Laplacian of `x₃ e^{-|x|²}` against
    /// `x₃ (4|x|² - 10) e^{-|x|²}`.
    fn gaussian_laplacian_error(points: usize) -> f64 {
        let f = TensorField::from_fn(3, 5.0, points, |x| x[2] * gaussian(x)).unwrap();
        let lap = fd_laplacian(&f);
        (0..lap.values().len()).fold(0.0, |m: f64, i| {
            let x = f.position(i);
            let r2: f64 = x.iter().map(|v| v * v).sum();
            m.max((lap.values()[i] - x[2] * (4.0 * r2 - 10.0) * gaussian(&x)).abs())
        })
    }

    #[test]
    fn laplacian_converges_at_second_order() {
        let p = order(gaussian_laplacian_error(32), gaussian_laplacian_error(64), (32, 64));
        assert!((1.8..2.2).contains(&p), "order {p}");
    }

    /// Relative grid-L² error of the grid Laplacian against the reduced
    /// operator times the zonal factor.
    fn mode_laplacian_error(points: usize) -> f64 {
        let g = wide();
        let z = zonal(3, 1).unwrap();
        let ctx = ModeContext::new(3, 1).unwrap();
        let f = sample_mode_function(&g, &z, 5.0, points).unwrap();
        let lap = fd_laplacian(&f);
        let want = TensorField::from_fn(3, 5.0, points, |x| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            mode_laplacian(&g, ctx).eval(r) * z.eval(x[2] / r)
        })
        .unwrap();
        let diff = lap.with_values(lap.values().iter().zip(want.values()).map(|(a, b)| a - b).collect());
        (diff.norm_sq() / want.norm_sq()).sqrt()
    }

    #[test]
    fn mode_laplacian_matches_reduction() {
        let (c, f) = (mode_laplacian_error(64), mode_laplacian_error(128));
        assert!(f < 0.05, "{f}");
        // the bump edges keep this short of the asymptotic rate
        assert!(order(c, f, (64, 128)) > 1.5, "{c} {f}");
    }

    #[test]
    fn angular_derivatives_of_radial_field_vanish() {
        let worst = |points: usize| {
            let f = TensorField::from_fn(3, 5.0, points, gaussian).unwrap();
            (0..3)
                .map(|j| fd_angular_derivative(&f, j).unwrap())
                .flat_map(|l| l.values().to_vec())
                .fold(0.0f64, |m, v| m.max(v.abs()))
        };
        let (c, f) = (worst(32), worst(64));
        // scale: max |∂_r e^{-r²}| = √(2/e)
        assert!(c < 0.05 * (2.0 / std::f64::consts::E).sqrt(), "{c}");
        assert!(order(c, f, (32, 64)) > 1.8, "{c} {f}");
        let g = bump(2.0, 0.8, 1.0).unwrap();
        let field = sample_mode_function(&g, &zonal(3, 0).unwrap(), 4.5, 24).unwrap();
        assert!(fd_angular_derivative(&field, 3).is_err());
    }

    #[test]
    fn angular_derivatives_are_tangential() {
        let g = bump(2.0, 0.8, 1.0).unwrap();
        let f = sample_mode_function(&g, &zonal(4, 2).unwrap(), 4.5, 24).unwrap();
        let ls: Vec<_> = (0..4).map(|j| fd_angular_derivative(&f, j).unwrap()).collect();
        let scale = ls.iter().flat_map(|l| l.values()).fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..f.values().len() {
            let x = f.position(i);
            let dot: f64 = (0..4).map(|j| x[j] * ls[j].values()[i]).sum();
            // exact up to rounding: x·∇ - |x| ω·∇ = 0
            assert!(dot.abs() < 1e-12 * scale.max(1.0), "{dot}");
        }
        assert!(origin_mask(&f).iter().all(|&i| ls.iter().all(|l| l.values()[i] == 0.0)));
    }

    /// `exp(-2(r - 5/2)²)` and its first two derivatives.
    fn shell(r: f64) -> (f64, f64, f64) {
        let u = r - 2.5;
        let v = (-2.0 * u * u).exp();
        (v, -4.0 * u * v, (16.0 * u * u - 4.0) * v)
    }

    /// Degree-2 zonal field on a Gaussian shell; comparisons stay in
    /// `1 ≤ |x| ≤ 4`, away from the origin where `x/|x|` is unresolved.
    fn shell_field(points: usize) -> (TensorField, ZonalPolynomial) {
        let z = zonal(3, 2).unwrap();
        let f = TensorField::from_fn(3, 5.0, points, |x| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            shell(r).0 * z.eval(x[2] / r)
        })
        .unwrap();
        (f, z)
    }

    fn band_max(f: &TensorField, err: impl Fn(usize) -> f64) -> f64 {
        (0..f.values().len())
            .filter(|&i| {
                let r = f.position(i).iter().map(|v| v * v).sum::<f64>().sqrt();
                (1.0..=4.0).contains(&r)
            })
            .fold(0.0, |m: f64, i| m.max(err(i).abs()))
    }

    #[test]
    fn sphere_part_equals_laplacian_minus_radial_part() {
        let gap = |points: usize| {
            let (f, _) = shell_field(points);
            let lap = fd_laplacian(&f);
            let rad = fd_radial_laplacian(&f);
            let mut s = vec![0.0; f.values().len()];
            for j in 0..3 {
                let l = fd_angular_derivative(&f, j).unwrap();
                let ll = fd_angular_derivative(&l, j).unwrap();
                for (a, b) in s.iter_mut().zip(ll.values()) {
                    *a += b;
                }
            }
            let scale = band_max(&f, |i| lap.values()[i]);
            band_max(&f, |i| lap.values()[i] - rad.values()[i] - s[i]) / scale
        };
        let (c, f) = (gap(48), gap(96));
        assert!(f < 0.06, "{f}");
        assert!(order(c, f, (48, 96)) > 1.8, "{c} {f}");
    }

    #[test]
    fn radial_laplacian_follows_reduction() {
        let err = |points: usize| {
            let (f, z) = shell_field(points);
            let rad = fd_radial_laplacian(&f);
            let want = |i: usize| {
                let x = f.position(i);
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let (_, d1, d2) = shell(r);
                (d2 + 2.0 * d1 / r) * z.eval(x[2] / r)
            };
            band_max(&f, |i| rad.values()[i] - want(i)) / band_max(&f, want)
        };
        let (c, f) = (err(48), err(96));
        assert!(f < 0.06, "{f}");
        assert!(order(c, f, (48, 96)) > 1.8, "{c} {f}");
    }

    #[test]
    fn sampled_profile_derivatives() {
        let g = bump(2.0, 1.0, 1.0).unwrap();
        let s = SampledProfile::from_profile(&g, 801).unwrap();
        for r in [1.5, 2.0, 2.3, 2.6] {
            let (v, d1, d2) = s.jet(r);
            // bump(2, 1, 1) and its derivatives are O(1)
            assert!((v - g.value(r)).abs() < 1e-8);
            assert!((d1 - g.first(r)).abs() < 1e-5, "{d1} {}", g.first(r));
            assert!((d2 - g.second(r)).abs() < 1e-3, "{d2} {}", g.second(r));
        }
        assert_eq!(s.jet(0.5), (0.0, 0.0, 0.0));
        assert!(SampledProfile::new(vec![1.0, 2.0], vec![0.0, 0.0]).is_err());
        assert!(SampledProfile::new((0..8).map(|k| -(k as f64)).collect(), vec![0.0; 8]).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = bump(1.0, 0.5, 1.0).unwrap();
        let f = sample_mode_function(&g, &zonal(3, 1).unwrap(), 4.0, 12).unwrap();
        let (bin, json) = f.dump(dir.path(), "mode").unwrap();
        assert_eq!(fs::metadata(&bin).unwrap().len(), 12 * 12 * 12 * 8);
        let back = TensorField::load(&bin, &json).unwrap();
        assert_eq!(back, f);
        fs::write(&bin, [0u8; 16]).unwrap();
        assert!(TensorField::load(&bin, &json).is_err());
    }
}
