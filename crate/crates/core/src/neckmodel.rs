//! Necks as height-indexed families of cross-sections, and axisymmetric
//! surfaces as generating curves in the `(s, u)` half-plane.
//!
//! Sign conventions: the unit normal points into the enclosed region and the
//! mean curvature is the sum of the principal curvatures, so a cylinder of
//! radius `r` has `H = 1/r` and a sphere of radius `R` has `H = 2/R`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::curve2d::{self, cross, norm, sub, ClosedCurve2D, Point};
use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

/// Anything that can produce a normalized cross-section `γ_s` at an arbitrary
/// height `s`. All sections share one vertex count, indexed by `t = j/n`.
pub trait SectionSource {
    fn vertex_count(&self) -> usize;
    fn section(&self, s: f64) -> Vec<Point>;
    /// Step used for central differences in `s` around `s`.
    fn derivative_step(&self, s: f64) -> f64;
    /// Physical scale: the embedded surface is `size · (γ_s(t), s)`.
    fn size(&self) -> f64 {
        1.0
    }
}

/// Geometry of one cross-section `{x₃ = s}` in physical units.
#[derive(Debug, Clone)]
pub struct SectionGeometry {
    pub height: f64,
    pub points: Vec<Point>,
    pub mean_curvature: Vec<f64>,
    pub grad_x3: Vec<f64>,
    /// Trapezoid arclength weights along the section.
    pub weights: Vec<f64>,
}

impl SectionGeometry {
    /// Coarea density `∫_{section} f / |∇x₃|`.
    pub fn integrate(&self, f: impl Fn(Point, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.points.len() {
            acc += self.weights[i] * f(self.points[i], self.mean_curvature[i]) / self.grad_x3[i];
        }
        acc
    }
}

/// Three-point finite-difference weights for first and second derivatives at
/// `x[at]` on a possibly nonuniform stencil.
fn stencil_weights(x: [f64; 3], at: usize) -> ([f64; 3], [f64; 3]) {
    let x0 = x[at];
    let mut d1 = [0.0; 3];
    let mut d2 = [0.0; 3];
    for k in 0..3 {
        let (a, b) = ((k + 1) % 3, (k + 2) % 3);
        let denom = (x[k] - x[a]) * (x[k] - x[b]);
        // Derivatives of the Lagrange basis polynomial ℓ_k at x0.
        d1[k] = ((x0 - x[a]) + (x0 - x[b])) / denom;
        d2[k] = 2.0 / denom;
    }
    (d1, d2)
}

fn cross3(a: Point3, b: Point3) -> Point3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Mean curvature and `|∇x₃|` from the parametrization derivatives of
/// `F(s, t) = (γ_s(t), s)`.
fn shape_from_derivatives(
    fs: Point3,
    ft: Point3,
    fss: Point3,
    fst: Point3,
    ftt: Point3,
) -> Option<(f64, f64)> {
    let e = dot3(fs, fs);
    let f = dot3(fs, ft);
    let g = dot3(ft, ft);
    let det = e * g - f * f;
    let nrm = cross3(fs, ft);
    let len = dot3(nrm, nrm).sqrt();
    if !(det > 1e-300) || len == 0.0 {
        return None;
    }
    let nu = [nrm[0] / len, nrm[1] / len, nrm[2] / len];
    let l = dot3(fss, nu);
    let m = dot3(fst, nu);
    let n = dot3(ftt, nu);
    let h = (l * g - 2.0 * m * f + n * e) / det;
    let nu3sq = nu[2] * nu[2];
    Some((h, (1.0 - nu3sq).max(0.0).sqrt()))
}

/// Geometry of the middle row of a three-section stencil. `at` selects which
/// of the three heights the derivatives are evaluated at.
fn geometry_from_stencil(
    heights: [f64; 3],
    sections: [&[Point]; 3],
    at: usize,
    size: f64,
) -> Result<SectionGeometry> {
    let n = sections[0].len();
    if sections.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidFamily("sections differ in vertex count".into()));
    }
    let (d1, d2) = stencil_weights(heights, at);
    let dt = 1.0 / n as f64;
    let mid = sections[at];
    let mut h_out = Vec::with_capacity(n);
    let mut g_out = Vec::with_capacity(n);
    let ds_at = |w: &[f64; 3], j: usize| -> Point {
        let mut r = [0.0; 2];
        for k in 0..3 {
            r[0] += w[k] * sections[k][j][0];
            r[1] += w[k] * sections[k][j][1];
        }
        r
    };
    for j in 0..n {
        let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
        let gs = ds_at(&d1, j);
        let gss = ds_at(&d2, j);
        let gsp = ds_at(&d1, jp);
        let gsm = ds_at(&d1, jm);
        let fs = [gs[0], gs[1], 1.0];
        let fss = [gss[0], gss[1], 0.0];
        let ft = [(mid[jp][0] - mid[jm][0]) / (2.0 * dt), (mid[jp][1] - mid[jm][1]) / (2.0 * dt), 0.0];
        let ftt = [
            (mid[jp][0] - 2.0 * mid[j][0] + mid[jm][0]) / (dt * dt),
            (mid[jp][1] - 2.0 * mid[j][1] + mid[jm][1]) / (dt * dt),
            0.0,
        ];
        let fst = [(gsp[0] - gsm[0]) / (2.0 * dt), (gsp[1] - gsm[1]) / (2.0 * dt), 0.0];
        let (h, g) = shape_from_derivatives(fs, ft, fss, fst, ftt).ok_or(Error::DegenerateMetric(at, j))?;
        h_out.push(h / size);
        g_out.push(g);
    }
    let points: Vec<Point> = mid.iter().map(|p| [size * p[0], size * p[1]]).collect();
    let weights = polygon_vertex_weights(&points);
    Ok(SectionGeometry { height: size * heights[at], points, mean_curvature: h_out, grad_x3: g_out, weights })
}

pub(crate) fn polygon_vertex_weights(p: &[Point]) -> Vec<f64> {
    let n = p.len();
    let e: Vec<f64> = (0..n).map(|i| norm(sub(p[(i + 1) % n], p[i]))).collect();
    (0..n).map(|i| 0.5 * (e[i] + e[(i + n - 1) % n])).collect()
}

/// Cross-section geometry of any [`SectionSource`] at height `s` (normalized units).
pub fn section_geometry_at<S: SectionSource + ?Sized>(src: &S, s: f64) -> Result<SectionGeometry> {
    let h = src.derivative_step(s);
    let lo = src.section(s - h);
    let mid = src.section(s);
    let hi = src.section(s + h);
    geometry_from_stencil([s - h, s, s + h], [&lo, &mid, &hi], 1, src.size())
}

/// A neck: convex cross-sections `γ_s` at strictly increasing heights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyRepr", into = "FamilyRepr")]
pub struct CrossSectionFamily {
    s_grid: Vec<f64>,
    curves: Vec<ClosedCurve2D>,
    size: f64,
}

#[derive(Serialize, Deserialize)]
struct FamilyRepr {
    s_grid: Vec<f64>,
    curves: Vec<ClosedCurve2D>,
    size: f64,
}

impl TryFrom<FamilyRepr> for CrossSectionFamily {
    type Error = Error;
    fn try_from(r: FamilyRepr) -> Result<Self> {
        CrossSectionFamily::new(r.s_grid, r.curves, r.size)
    }
}

impl From<CrossSectionFamily> for FamilyRepr {
    fn from(f: CrossSectionFamily) -> Self {
        FamilyRepr { s_grid: f.s_grid, curves: f.curves, size: f.size }
    }
}

pub const MAX_SPACING_RATIO: f64 = 4.0;

impl CrossSectionFamily {
    pub fn new(s_grid: Vec<f64>, curves: Vec<ClosedCurve2D>, size: f64) -> Result<Self> {
        if s_grid.len() != curves.len() {
            return Err(Error::InvalidFamily("height and curve counts differ".into()));
        }
        if s_grid.len() < 3 {
            return Err(Error::InvalidFamily("need at least three heights".into()));
        }
        if !(size > 0.0) {
            return Err(Error::InvalidFamily(format!("size {size} must be positive")));
        }
        if s_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidFamily("heights not strictly increasing".into()));
        }
        for w in s_grid.windows(3) {
            let (a, b) = (w[1] - w[0], w[2] - w[1]);
            if a.max(b) / a.min(b) > MAX_SPACING_RATIO {
                return Err(Error::InvalidFamily(format!("height spacing ratio {} too large", a.max(b) / a.min(b))));
            }
        }
        let n = curves[0].len();
        if curves.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidFamily("sections differ in vertex count".into()));
        }
        for (i, c) in curves.iter().enumerate() {
            if curve2d::curvature(c)?.iter().any(|&k| k <= 0.0) {
                return Err(Error::InvalidFamily(format!("section {i} is not convex")));
            }
        }
        Ok(Self { s_grid, curves, size })
    }

    /// Samples `f(s, t)` on the given heights with `n` vertices per section.
    pub fn from_fn(s_grid: Vec<f64>, n: usize, size: f64, f: impl Fn(f64, f64) -> Point) -> Result<Self> {
        let curves = s_grid
            .iter()
            .map(|&s| ClosedCurve2D::from_fn(n, |t| f(s, t)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(s_grid, curves, size)
    }

    /// Exact product `Γ × [s₀, s₁]` over the given heights.
    pub fn product(s_grid: Vec<f64>, gamma: &ClosedCurve2D, size: f64) -> Result<Self> {
        let curves = vec![gamma.clone(); s_grid.len()];
        Self::new(s_grid, curves, size)
    }

    /// Normalized round cylinder of radius 1 at scale `size`.
    pub fn cylinder(s_grid: Vec<f64>, n: usize, size: f64) -> Result<Self> {
        Self::product(s_grid, &ClosedCurve2D::unit_circle(n), size)
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }

    pub fn curves(&self) -> &[ClosedCurve2D] {
        &self.curves
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn n_heights(&self) -> usize {
        self.s_grid.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.curves[0].len()
    }

    fn check(&self, i_s: usize, i_t: usize) -> Result<()> {
        if i_s >= self.n_heights() || i_t >= self.n_vertices() {
            return Err(Error::IndexOutOfRange(format!("({i_s}, {i_t})")));
        }
        Ok(())
    }

    /// `size · (γ_{s_i}(t_j), s_i)`.
    pub fn surface_point(&self, i_s: usize, i_t: usize) -> Result<Point3> {
        self.check(i_s, i_t)?;
        let p = self.curves[i_s].points()[i_t];
        Ok([self.size * p[0], self.size * p[1], self.size * self.s_grid[i_s]])
    }

    fn stencil(&self, i_s: usize) -> ([f64; 3], [usize; 3], usize) {
        let m = self.n_heights();
        let (k0, at) = if i_s == 0 {
            (0, 0)
        } else if i_s == m - 1 {
            (m - 3, 2)
        } else {
            (i_s - 1, 1)
        };
        ([self.s_grid[k0], self.s_grid[k0 + 1], self.s_grid[k0 + 2]], [k0, k0 + 1, k0 + 2], at)
    }

    /// Geometry of grid section `i_s` from the family's own height stencil
    /// (one-sided at the ends).
    pub fn section_geometry(&self, i_s: usize) -> Result<SectionGeometry> {
        self.check(i_s, 0)?;
        let (h, idx, at) = self.stencil(i_s);
        geometry_from_stencil(
            h,
            [self.curves[idx[0]].points(), self.curves[idx[1]].points(), self.curves[idx[2]].points()],
            at,
            self.size,
        )
        .map_err(|e| match e {
            Error::DegenerateMetric(_, j) => Error::DegenerateMetric(i_s, j),
            e => e,
        })
    }

    pub fn mean_curvature(&self, i_s: usize, i_t: usize) -> Result<f64> {
        self.check(i_s, i_t)?;
        Ok(self.section_geometry(i_s)?.mean_curvature[i_t])
    }

    /// `|∇^N x₃| = √(1 − ν₃²)`.
    pub fn grad_x3_norm(&self, i_s: usize, i_t: usize) -> Result<f64> {
        self.check(i_s, i_t)?;
        Ok(self.section_geometry(i_s)?.grad_x3[i_t])
    }

    /// Total area by the coarea formula and the trapezoid rule in `s`.
    pub fn area(&self) -> Result<f64> {
        let dens = (0..self.n_heights())
            .map(|i| self.section_geometry(i).map(|g| g.integrate(|_, _| 1.0)))
            .collect::<Result<Vec<_>>>()?;
        Ok(trapezoid(&self.s_grid.iter().map(|s| s * self.size).collect::<Vec<_>>(), &dens))
    }

    /// Pointwise mean of the sections, the best-fit product cross-section.
    pub fn reference_curve(&self) -> Result<ClosedCurve2D> {
        let n = self.n_vertices();
        let m = self.n_heights() as f64;
        let mut acc = vec![[0.0; 2]; n];
        for c in &self.curves {
            for (a, p) in acc.iter_mut().zip(c.points()) {
                a[0] += p[0] / m;
                a[1] += p[1] / m;
            }
        }
        ClosedCurve2D::new(acc)
    }

    /// Per-height diagnostics for CSV export.
    pub fn diagnostics(&self) -> Result<Vec<HeightDiagnostics>> {
        (0..self.n_heights())
            .map(|i| {
                let g = self.section_geometry(i)?;
                let radii: Vec<f64> = g.points.iter().map(|p| norm(*p)).collect();
                let fold = |v: &[f64]| {
                    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
                };
                let (h_min, h_max) = fold(&g.mean_curvature);
                let (g_min, g_max) = fold(&g.grad_x3);
                Ok(HeightDiagnostics {
                    s: g.height,
                    mean_radius: radii.iter().sum::<f64>() / radii.len() as f64,
                    h_min,
                    h_max,
                    grad_x3_min: g_min,
                    grad_x3_max: g_max,
                })
            })
            .collect()
    }

    /// Cubic Hermite slope of vertex `j` at grid node `k`.
    fn node_slope(&self, k: usize, j: usize) -> Point {
        let (h, idx, at) = {
            let m = self.n_heights();
            let (k0, at) = if k == 0 {
                (0, 0)
            } else if k == m - 1 {
                (m - 3, 2)
            } else {
                (k - 1, 1)
            };
            ([self.s_grid[k0], self.s_grid[k0 + 1], self.s_grid[k0 + 2]], [k0, k0 + 1, k0 + 2], at)
        };
        let (d1, _) = stencil_weights(h, at);
        let mut r = [0.0; 2];
        for q in 0..3 {
            let p = self.curves[idx[q]].points()[j];
            r[0] += d1[q] * p[0];
            r[1] += d1[q] * p[1];
        }
        r
    }
}

impl SectionSource for CrossSectionFamily {
    fn vertex_count(&self) -> usize {
        self.n_vertices()
    }

    /// Cubic Hermite interpolation between grid heights; exact at the nodes,
    /// clamped to the end sections outside the grid.
    fn section(&self, s: f64) -> Vec<Point> {
        let g = &self.s_grid;
        let last = g.len() - 1;
        if s <= g[0] {
            return self.curves[0].points().to_vec();
        }
        if s >= g[last] {
            return self.curves[last].points().to_vec();
        }
        let k = g.partition_point(|&x| x <= s) - 1;
        if s == g[k] {
            return self.curves[k].points().to_vec();
        }
        let hk = g[k + 1] - g[k];
        let u = (s - g[k]) / hk;
        let (h00, h10, h01, h11) =
            (2.0 * u.powi(3) - 3.0 * u * u + 1.0, u.powi(3) - 2.0 * u * u + u, -2.0 * u.powi(3) + 3.0 * u * u, u.powi(3) - u * u);
        let (a, b) = (self.curves[k].points(), self.curves[k + 1].points());
        (0..a.len())
            .map(|j| {
                let (ma, mb) = (self.node_slope(k, j), self.node_slope(k + 1, j));
                [
                    h00 * a[j][0] + h10 * hk * ma[0] + h01 * b[j][0] + h11 * hk * mb[0],
                    h00 * a[j][1] + h10 * hk * ma[1] + h01 * b[j][1] + h11 * hk * mb[1],
                ]
            })
            .collect()
    }

    fn derivative_step(&self, s: f64) -> f64 {
        let g = &self.s_grid;
        let k = g.partition_point(|&x| x <= s).clamp(1, g.len() - 1);
        0.25 * (g[k] - g[k - 1])
    }

    fn size(&self) -> f64 {
        self.size
    }
}

/// Trapezoid rule on a possibly nonuniform grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct HeightDiagnostics {
    pub s: f64,
    pub mean_radius: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub grad_x3_min: f64,
    pub grad_x3_max: f64,
}

pub fn write_diagnostics_csv<W: Write>(rows: &[HeightDiagnostics], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Neck parameters `(α̂, δ̂, ε, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeckParams {
    pub alpha_hat: f64,
    pub delta_hat: f64,
    pub eps: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NeckCertificate {
    pub alpha_hat: f64,
    pub delta_hat: f64,
    pub eps: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub measured_eps: f64,
    pub min_noncollapsedness: f64,
    pub min_mean_curvature: f64,
    pub pass: bool,
}

/// Discrete C² distance from the family to the product of its mean section
/// with the height interval, plus the noncollapsedness and mean convexity
/// checks.
pub fn certify_neck(family: &CrossSectionFamily, params: &NeckParams) -> NeckCertificate {
    let measured_eps = c2_distance_to_product(family);
    let min_nc = family
        .curves
        .iter()
        .map(|c| curve2d::noncollapsedness_ratio(c).unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min);
    let min_h = (0..family.n_heights())
        .map(|i| {
            family
                .section_geometry(i)
                .map(|g| g.mean_curvature.iter().cloned().fold(f64::INFINITY, f64::min))
                .unwrap_or(f64::NEG_INFINITY)
        })
        .fold(f64::INFINITY, f64::min);
    let pass = measured_eps <= params.eps && min_nc >= 1.0 / (1.0 + params.delta_hat) && min_h > 0.0;
    NeckCertificate {
        alpha_hat: params.alpha_hat,
        delta_hat: params.delta_hat,
        eps: params.eps,
        l: params.l,
        measured_eps,
        min_noncollapsedness: min_nc,
        min_mean_curvature: min_h,
        pass,
    }
}

fn c2_distance_to_product(family: &CrossSectionFamily) -> f64 {
    let n = family.n_vertices();
    let m = family.n_heights();
    let mean = {
        let mut acc = vec![[0.0; 2]; n];
        for c in &family.curves {
            for (a, p) in acc.iter_mut().zip(c.points()) {
                a[0] += p[0] / m as f64;
                a[1] += p[1] / m as f64;
            }
        }
        acc
    };
    let dev: Vec<Vec<Point>> =
        family.curves.iter().map(|c| c.points().iter().zip(&mean).map(|(p, q)| sub(*p, *q)).collect()).collect();
    let dt = 1.0 / n as f64;
    let mut worst: f64 = 0.0;
    for i in 0..m {
        let (h, idx, at) = family.stencil(i);
        let (d1, d2) = stencil_weights(h, at);
        let ds = |w: &[f64; 3], j: usize| -> Point {
            let mut r = [0.0; 2];
            for k in 0..3 {
                r[0] += w[k] * dev[idx[k]][j][0];
                r[1] += w[k] * dev[idx[k]][j][1];
            }
            r
        };
        for j in 0..n {
            let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
            let d = &dev[i];
            let v = d[j];
            let vt = [(d[jp][0] - d[jm][0]) / (2.0 * dt), (d[jp][1] - d[jm][1]) / (2.0 * dt)];
            let vtt = [
                (d[jp][0] - 2.0 * d[j][0] + d[jm][0]) / (dt * dt),
                (d[jp][1] - 2.0 * d[j][1] + d[jm][1]) / (dt * dt),
            ];
            let vs = ds(&d1, j);
            let vss = ds(&d2, j);
            let vsp = ds(&d1, jp);
            let vsm = ds(&d1, jm);
            let vst = [(vsp[0] - vsm[0]) / (2.0 * dt), (vsp[1] - vsm[1]) / (2.0 * dt)];
            let total = norm(v) + norm(vt) + norm(vtt) + norm(vs) + norm(vss) + norm(vst);
            worst = worst.max(total);
        }
    }
    worst
}

/// Profile curve `(s, u)` of an axisymmetric surface, ordered by increasing
/// `s` overall so that the enclosed region lies below the curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneratingRepr", into = "GeneratingRepr")]
pub struct GeneratingCurve {
    nodes: Vec<Point>,
    closed_left: bool,
    closed_right: bool,
}

#[derive(Serialize, Deserialize)]
struct GeneratingRepr {
    nodes: Vec<Point>,
    closed_left: bool,
    closed_right: bool,
}

impl TryFrom<GeneratingRepr> for GeneratingCurve {
    type Error = Error;
    fn try_from(r: GeneratingRepr) -> Result<Self> {
        GeneratingCurve::new(r.nodes, r.closed_left, r.closed_right)
    }
}

impl From<GeneratingCurve> for GeneratingRepr {
    fn from(g: GeneratingCurve) -> Self {
        GeneratingRepr { nodes: g.nodes, closed_left: g.closed_left, closed_right: g.closed_right }
    }
}

/// Minimum `|du/dℓ|` on the segment leaving a pole.
pub const POLE_TRANSVERSALITY: f64 = 0.05;

impl GeneratingCurve {
    pub fn new(nodes: Vec<Point>, closed_left: bool, closed_right: bool) -> Result<Self> {
        let n = nodes.len();
        if n < 3 {
            return Err(Error::InvalidGeneratingCurve("need at least three nodes".into()));
        }
        if nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidGeneratingCurve("non-finite node".into()));
        }
        for (i, p) in nodes.iter().enumerate() {
            let pole = (i == 0 && closed_left) || (i == n - 1 && closed_right);
            if pole {
                if p[1] != 0.0 {
                    return Err(Error::InvalidGeneratingCurve(format!("pole node {i} has u = {}", p[1])));
                }
            } else if !(p[1] > 0.0) {
                return Err(Error::InvalidGeneratingCurve(format!("node {i} has u = {} ≤ 0", p[1])));
            }
        }
        for i in 0..n - 1 {
            if norm(sub(nodes[i + 1], nodes[i])) == 0.0 {
                return Err(Error::InvalidGeneratingCurve(format!("repeated node {i}")));
            }
        }
        let transverse = |a: Point, b: Point| {
            let d = sub(b, a);
            d[1].abs() / norm(d) >= POLE_TRANSVERSALITY
        };
        if closed_left && !transverse(nodes[0], nodes[1]) {
            return Err(Error::InvalidGeneratingCurve("left pole tangent not transverse to axis".into()));
        }
        if closed_right && !transverse(nodes[n - 1], nodes[n - 2]) {
            return Err(Error::InvalidGeneratingCurve("right pole tangent not transverse to axis".into()));
        }
        let monotone = nodes.windows(2).all(|w| w[1][0] > w[0][0]);
        if !monotone && polyline_self_intersects(&nodes) {
            return Err(Error::InvalidGeneratingCurve("profile self-intersects".into()));
        }
        Ok(Self { nodes, closed_left, closed_right })
    }

    /// Profile `u = f(s)` sampled at the given `s` values. Endpoints with
    /// `f = 0` are poles.
    pub fn from_graph(s: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        let nodes: Vec<Point> = s.iter().map(|&x| [x, f(x)]).collect();
        let cl = nodes[0][1] == 0.0;
        let cr = nodes[nodes.len() - 1][1] == 0.0;
        Self::new(nodes, cl, cr)
    }

    /// Sphere of radius `r` centered at `(c, 0)`, sampled uniformly in angle.
    pub fn sphere(n: usize, radius: f64, center: f64) -> Result<Self> {
        let nodes: Vec<Point> = (0..=n)
            .map(|k| {
                let th = std::f64::consts::PI * (1.0 - k as f64 / n as f64);
                let u = if k == 0 || k == n { 0.0 } else { radius * th.sin() };
                [center + radius * th.cos(), u]
            })
            .collect();
        Self::new(nodes, true, true)
    }

    /// Open cylinder `u ≡ r` on `[s0, s1]`.
    pub fn cylinder(n: usize, radius: f64, s0: f64, s1: f64) -> Result<Self> {
        let nodes = (0..=n).map(|k| [s0 + (s1 - s0) * k as f64 / n as f64, radius]).collect();
        Self::new(nodes, false, false)
    }

    /// Cylinder of radius `r` on `[s0, s1]` closed by hemispheres.
    pub fn capsule(radius: f64, s0: f64, s1: f64, spacing: f64) -> Result<Self> {
        let n_cap = ((std::f64::consts::FRAC_PI_2 * radius / spacing).ceil() as usize).max(4);
        let n_mid = (((s1 - s0) / spacing).ceil() as usize).max(2);
        let mut nodes = Vec::new();
        for k in 0..n_cap {
            let th = std::f64::consts::PI - std::f64::consts::FRAC_PI_2 * k as f64 / n_cap as f64;
            let u = if k == 0 { 0.0 } else { radius * th.sin() };
            nodes.push([s0 + radius * th.cos(), u]);
        }
        for k in 0..n_mid {
            nodes.push([s0 + (s1 - s0) * k as f64 / n_mid as f64, radius]);
        }
        for k in 0..=n_cap {
            let th = std::f64::consts::FRAC_PI_2 - std::f64::consts::FRAC_PI_2 * k as f64 / n_cap as f64;
            let u = if k == n_cap { 0.0 } else { radius * th.sin() };
            nodes.push([s1 + radius * th.cos(), u]);
        }
        Self::new(nodes, true, true)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn closed_left(&self) -> bool {
        self.closed_left
    }

    pub fn closed_right(&self) -> bool {
        self.closed_right
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_pole(&self, i: usize) -> bool {
        (i == 0 && self.closed_left) || (i + 1 == self.nodes.len() && self.closed_right)
    }

    /// Neighbors of node `i`, with a ghost reflected across the axis at poles
    /// and point-reflected through the endpoint at open ends.
    pub(crate) fn neighbors(&self, i: usize) -> (Point, Point) {
        let n = self.nodes.len();
        let p = self.nodes[i];
        let prev = if i > 0 {
            self.nodes[i - 1]
        } else if self.closed_left {
            [self.nodes[1][0], -self.nodes[1][1]]
        } else {
            [2.0 * p[0] - self.nodes[1][0], 2.0 * p[1] - self.nodes[1][1]]
        };
        let next = if i + 1 < n {
            self.nodes[i + 1]
        } else if self.closed_right {
            [self.nodes[n - 2][0], -self.nodes[n - 2][1]]
        } else {
            [2.0 * p[0] - self.nodes[n - 2][0], 2.0 * p[1] - self.nodes[n - 2][1]]
        };
        (prev, next)
    }

    /// Signed Menger curvature of the profile at node `i` (counter-clockwise positive).
    pub fn profile_curvature(&self, i: usize) -> f64 {
        let p = self.nodes[i];
        let (a, b) = self.neighbors(i);
        let (da, db, dc) = (sub(p, a), sub(b, p), sub(b, a));
        2.0 * cross(da, db) / (norm(da) * norm(db) * norm(dc))
    }

    /// Unit tangent from the central chord.
    pub fn tangent(&self, i: usize) -> Point {
        let (a, b) = self.neighbors(i);
        let d = sub(b, a);
        let l = norm(d);
        [d[0] / l, d[1] / l]
    }

    /// Outward unit normal in the `(s, u)` plane.
    pub fn outward_normal(&self, i: usize) -> Point {
        let t = self.tangent(i);
        [-t[1], t[0]]
    }

    /// `|∇x₃|` of the surface of revolution: the axial part of the outward normal
    /// is `ν_s`, so the factor is `|ν_u| = |t_s|`.
    pub fn grad_x3(&self, i: usize) -> f64 {
        self.tangent(i)[0].abs()
    }

    pub fn mean_curvatures(&self) -> Vec<f64> {
        (0..self.nodes.len()).map(|i| mean_curvature_axi_unchecked(self, i)).collect()
    }

    /// Surface area `2π ∫ u dℓ` with the exact frustum rule per segment.
    pub fn area(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| std::f64::consts::PI * (w[0][1] + w[1][1]) * norm(sub(w[1], w[0])))
            .sum()
    }

    /// Volume `π ∫ u² ds` (trapezoid-exact for cones).
    pub fn volume(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0][1], w[1][1]);
                std::f64::consts::PI * (w[1][0] - w[0][0]) * (a * a + a * b + b * b) / 3.0
            })
            .sum()
    }

    pub fn s_range(&self) -> (f64, f64) {
        self.nodes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[0]), hi.max(p[0])))
    }

    pub fn max_radius(&self) -> f64 {
        self.nodes.iter().map(|p| p[1]).fold(0.0, f64::max)
    }

    /// Linear interpolation of `u` at axial position `s` along the first
    /// segment that spans it.
    pub fn radius_at(&self, s: f64) -> Option<f64> {
        self.nodes.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            let (lo, hi) = (a[0].min(b[0]), a[0].max(b[0]));
            if s >= lo && s <= hi && hi > lo {
                let u = (s - a[0]) / (b[0] - a[0]);
                Some(a[1] + u * (b[1] - a[1]))
            } else {
                None
            }
        })
    }
}

fn polyline_self_intersects(p: &[Point]) -> bool {
    let n = p.len();
    for i in 0..n - 1 {
        for j in (i + 2)..n - 1 {
            let (a, b, c, d) = (p[i], p[i + 1], p[j], p[j + 1]);
            let d1 = cross(sub(b, a), sub(c, a));
            let d2 = cross(sub(b, a), sub(d, a));
            let d3 = cross(sub(d, c), sub(a, c));
            let d4 = cross(sub(d, c), sub(b, c));
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                return true;
            }
        }
    }
    false
}

fn mean_curvature_axi_unchecked(g: &GeneratingCurve, i: usize) -> f64 {
    let k = g.profile_curvature(i);
    if g.is_pole(i) {
        return -2.0 * k;
    }
    let t = g.tangent(i);
    -k + t[0] / g.nodes[i][1]
}

/// `H = κ_gen + ⟨ν, e_radial⟩/u` at node `i`, or `2κ_gen` at a pole.
pub fn mean_curvature_axi(g: &GeneratingCurve, i: usize) -> Result<f64> {
    if i >= g.len() {
        return Err(Error::IndexOutOfRange(format!("node {i}")));
    }
    if !g.is_pole(i) && g.nodes[i][1] <= 0.0 {
        return Err(Error::InvalidGeneratingCurve(format!("u = 0 at interior node {i}")));
    }
    Ok(mean_curvature_axi_unchecked(g, i))
}

/// A detected neck: center height, radius and the near-cylindrical interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neck {
    pub s_center: f64,
    pub r: f64,
    pub interval: (f64, f64),
}

/// Maximum `|du/dℓ|` for a node to count as part of a tube.
pub const NECK_SLOPE: f64 = 0.5;

/// Among maximal windows of consecutive tube nodes on which
/// `max u ≤ (1 + ε) min u`, returns the thinnest one that is at least
/// `2 L r` long with `r = u(s_center) ∈ [1/(2H₁), 1/H₁]`. Ties go to the
/// leftmost window.
pub fn detect_neck(g: &GeneratingCurve, h1: f64, eps: f64, l: f64) -> Option<Neck> {
    use std::collections::VecDeque;
    let nodes = g.nodes();
    let n = nodes.len();
    let tube: Vec<bool> = (0..n).map(|i| !g.is_pole(i) && g.tangent(i)[1].abs() <= NECK_SLOPE).collect();
    let u = |i: usize| nodes[i][1];
    let mut best: Option<(f64, Neck)> = None;
    let mut start = 0;
    while start < n {
        if !tube[start] {
            start += 1;
            continue;
        }
        let mut end = start;
        while end + 1 < n && tube[end + 1] {
            end += 1;
        }
        // Two pointers over [start, end] with monotone deques for min and max.
        let (mut qmin, mut qmax) = (VecDeque::new(), VecDeque::new());
        let mut j = start;
        qmin.push_back(start);
        qmax.push_back(start);
        let mut prev_j = None;
        for i in start..=end {
            while qmin.front().is_some_and(|&k| k < i) {
                qmin.pop_front();
            }
            while qmax.front().is_some_and(|&k| k < i) {
                qmax.pop_front();
            }
            if j < i {
                j = i;
                qmin.push_back(i);
                qmax.push_back(i);
            }
            while j < end {
                let c = j + 1;
                let lo = u(*qmin.front().unwrap()).min(u(c));
                let hi = u(*qmax.front().unwrap()).max(u(c));
                if hi > lo * (1.0 + eps) {
                    break;
                }
                j = c;
                while qmin.back().is_some_and(|&k| u(k) >= u(c)) {
                    qmin.pop_back();
                }
                qmin.push_back(c);
                while qmax.back().is_some_and(|&k| u(k) <= u(c)) {
                    qmax.pop_back();
                }
                qmax.push_back(c);
            }
            if prev_j == Some(j) {
                continue;
            }
            prev_j = Some(j);
            let (s_lo, s_hi) = (nodes[i][0], nodes[j][0]);
            let s_center = 0.5 * (s_lo + s_hi);
            let Some(r) = g.radius_at(s_center) else { continue };
            let in_range = r >= 1.0 / (2.0 * h1) * (1.0 - 1e-12) && r <= 1.0 / h1 * (1.0 + 1e-12);
            if s_hi - s_lo >= 2.0 * l * r && in_range {
                let thin = u(*qmin.front().unwrap());
                if best.as_ref().is_none_or(|(b, _)| thin < *b) {
                    best = Some((thin, Neck { s_center, r, interval: (s_lo, s_hi) }));
                }
            }
        }
        start = end + 1;
    }
    best.map(|(_, neck)| neck)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn uniform(a: f64, b: f64, m: usize) -> Vec<f64> {
        (0..=m).map(|k| a + (b - a) * k as f64 / m as f64).collect()
    }

    #[test]
    fn cylinder_points_and_curvature() {
        let fam = CrossSectionFamily::cylinder(uniform(-1.0, 1.0, 40), 256, 1.0).unwrap();
        let p = fam.surface_point(7, 33).unwrap();
        assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() < 1e-12);
        for i in [0, 20, 40] {
            let g = fam.section_geometry(i).unwrap();
            for (h, d) in g.mean_curvature.iter().zip(&g.grad_x3) {
                assert!((h - 1.0).abs() < 1e-2);
                assert!((d - 1.0).abs() < 1e-6);
            }
        }
        let half = CrossSectionFamily::cylinder(uniform(-1.0, 1.0, 40), 256, 0.5).unwrap();
        let p = half.surface_point(3, 10).unwrap();
        assert!((p[0] * p[0] + p[1] * p[1] - 0.25).abs() < 1e-12);
        assert!((half.mean_curvature(3, 10).unwrap() - 2.0).abs() < 2e-2);
    }

    #[test]
    fn out_of_range_index() {
        let fam = CrossSectionFamily::cylinder(uniform(-1.0, 1.0, 10), 64, 1.0).unwrap();
        assert!(matches!(fam.surface_point(11, 0), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(fam.mean_curvature(0, 64), Err(Error::IndexOutOfRange(_))));
    }

    fn sphere_family(r: f64, n: usize, m: usize) -> CrossSectionFamily {
        CrossSectionFamily::from_fn(uniform(-0.8 * r, 0.8 * r, m), n, 1.0, |s, t| {
            let rho = (r * r - s * s).sqrt();
            [rho * (TAU * t).cos(), rho * (TAU * t).sin()]
        })
        .unwrap()
    }

    #[test]
    fn sphere_family_curvature_and_normal() {
        let r = 2.0;
        let fam = sphere_family(r, 256, 80);
        for i in 1..80 {
            let h = fam.mean_curvature(i, 5).unwrap();
            assert!((h - 2.0 / r).abs() < 0.02 * 2.0 / r, "i={i} h={h}");
        }
        // Equator and 45° latitude.
        let eq = fam.grad_x3_norm(40, 0).unwrap();
        assert!((eq - 1.0).abs() < 1e-6);
        let fam45 = CrossSectionFamily::from_fn(
            uniform(r / 2f64.sqrt() - 0.05, r / 2f64.sqrt() + 0.05, 2),
            256,
            1.0,
            |s, t| {
                let rho = (r * r - s * s).sqrt();
                [rho * (TAU * t).cos(), rho * (TAU * t).sin()]
            },
        )
        .unwrap();
        let g = fam45.grad_x3_norm(1, 0).unwrap();
        assert!((g - 0.5f64.sqrt()).abs() < 1e-3, "{g}");
    }

    #[test]
    fn family_area_matches_closed_forms() {
        let fam = CrossSectionFamily::cylinder(uniform(0.0, 3.0, 30), 256, 0.7).unwrap();
        let exact = TAU * 0.7 * 3.0 * 0.7;
        assert!(((fam.area().unwrap() - exact) / exact).abs() < 5e-3);
        // Spherical zone between ±0.8R has area 2πR·1.6R.
        let r = 1.5;
        let sph = sphere_family(r, 256, 160);
        let exact = TAU * r * 1.6 * r;
        assert!(((sph.area().unwrap() - exact) / exact).abs() < 5e-3);
    }

    #[test]
    fn axisymmetric_mean_curvature_examples() {
        let cyl = GeneratingCurve::cylinder(50, 0.5, 0.0, 1.0).unwrap();
        for i in 0..cyl.len() {
            assert!((mean_curvature_axi(&cyl, i).unwrap() - 2.0).abs() < 1e-3);
        }
        let sph = GeneratingCurve::sphere(200, 1.0, 0.0).unwrap();
        for i in 0..sph.len() {
            let h = mean_curvature_axi(&sph, i).unwrap();
            assert!((h - 2.0).abs() < 0.02, "i={i} h={h}");
        }
        let s: Vec<f64> = uniform(-1.0, 1.0, 400);
        let cat = GeneratingCurve::from_graph(&s, f64::cosh).unwrap();
        for i in 1..cat.len() - 1 {
            assert!(mean_curvature_axi(&cat, i).unwrap().abs() < 1e-2);
        }
    }

    #[test]
    fn axisymmetric_and_family_curvature_agree() {
        let r = 1.3;
        let fam = sphere_family(r, 256, 80);
        let g = GeneratingCurve::sphere(400, r, 0.0).unwrap();
        let hg = g.mean_curvatures();
        for i in (5..75).step_by(10) {
            let hf = fam.mean_curvature(i, 0).unwrap();
            let s = fam.s_grid()[i];
            let k = g.nodes().iter().enumerate().min_by(|a, b| (a.1[0] - s).abs().total_cmp(&(b.1[0] - s).abs())).unwrap().0;
            assert!(((hf - hg[k]) / hg[k]).abs() < 0.01);
        }
    }

    #[test]
    fn generating_curve_area() {
        let g = GeneratingCurve::sphere(400, 2.0, 1.0).unwrap();
        let exact = 4.0 * PI * 4.0;
        assert!(((g.area() - exact) / exact).abs() < 5e-3);
        let c = GeneratingCurve::cylinder(10, 0.3, 0.0, 2.0).unwrap();
        assert!((c.area() - TAU * 0.3 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn generating_curve_validation() {
        assert!(GeneratingCurve::new(vec![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]], true, true).is_err());
        assert!(GeneratingCurve::new(vec![[0.0, 1.0], [0.5, 1.0], [1.0, 0.0]], false, false).is_err());
        // Tangent along the axis at a pole.
        assert!(GeneratingCurve::new(vec![[0.0, 0.0], [1.0, 0.001], [2.0, 1.0], [3.0, 0.0]], true, true).is_err());
        assert!(matches!(
            mean_curvature_axi(&GeneratingCurve::cylinder(4, 1.0, 0.0, 1.0).unwrap(), 9),
            Err(Error::IndexOutOfRange(_))
        ));
    }

    #[test]
    fn detect_neck_cylinder_and_sphere() {
        let h1 = 10.0;
        let l = 5.0;
        let cyl = GeneratingCurve::cylinder(400, 1.0 / h1, 0.0, 4.0 * l / h1).unwrap();
        let neck = detect_neck(&cyl, h1, 0.01, l).unwrap();
        assert!((neck.r - 1.0 / h1).abs() < 1e-12);
        assert!((neck.s_center - 2.0 * l / h1).abs() < 1e-9);
        let sph = GeneratingCurve::sphere(200, 0.08, 0.0).unwrap();
        assert!(detect_neck(&sph, h1, 0.01, l).is_none());
    }

    fn dumbbell(h1: f64, l: f64) -> GeneratingCurve {
        // Waist 0.6/H₁ flat over length 3L/H₁, smooth shoulders up to 1.5/H₁.
        let w = 0.6 / h1;
        let half = 1.5 * l / h1;
        let s: Vec<f64> = uniform(-3.0 * half, 3.0 * half, 1200);
        let prof = move |x: f64| {
            let d = (x.abs() - half).max(0.0) / half;
            w + 0.9 / h1 * crate::smooth::smooth_step(d)
        };
        let nodes: Vec<Point> = s.iter().map(|&x| [x, prof(x)]).collect();
        GeneratingCurve::new(nodes, false, false).unwrap()
    }

    /// Brute force: every contiguous window of tube nodes containing the
    /// global tube minimum, keep the longest satisfying the ε bound.
    fn neck_oracle(g: &GeneratingCurve, eps: f64) -> (f64, f64) {
        let nodes = g.nodes();
        let n = nodes.len();
        let tube: Vec<bool> = (0..n).map(|i| g.tangent(i)[1].abs() <= NECK_SLOPE).collect();
        let umin = (0..n).filter(|&i| tube[i]).map(|i| nodes[i][1]).fold(f64::INFINITY, f64::min);
        let mut best = (0.0, 0.0, -1.0);
        for i in 0..n {
            for j in i..n {
                let ok = (i..=j).all(|k| tube[k] && nodes[k][1] <= umin * (1.0 + eps));
                let has_min = (i..=j).any(|k| nodes[k][1] == umin);
                if ok && has_min && nodes[j][0] - nodes[i][0] > best.2 {
                    best = (nodes[i][0], nodes[j][0], nodes[j][0] - nodes[i][0]);
                }
            }
        }
        (best.0, best.1)
    }

    #[test]
    fn detect_neck_dumbbell_matches_oracle() {
        let (h1, l) = (10.0, 4.0);
        let g = dumbbell(h1, l);
        let neck = detect_neck(&g, h1, 0.01, l).unwrap();
        assert!((neck.r - 0.6 / h1).abs() < 1e-3 / h1);
        let (a, b) = neck_oracle(&g, 0.01);
        assert!((neck.interval.0 - a).abs() < 1e-12 && (neck.interval.1 - b).abs() < 1e-12);
        assert!(neck.interval.1 - neck.interval.0 >= 3.0 * l / h1 - 1e-9);
    }

    fn perturbed(amplitude: f64) -> CrossSectionFamily {
        CrossSectionFamily::from_fn(uniform(-5.0, 5.0, 100), 128, 1.0, |s, t| {
            let th = TAU * t;
            let r = 1.0 + amplitude * (2.0 * th).cos() * (0.3 * s).sin();
            [r * th.cos(), r * th.sin()]
        })
        .unwrap()
    }

    #[test]
    fn certify_neck_examples() {
        let params = NeckParams { alpha_hat: 0.1, delta_hat: 0.1, eps: 0.05, l: 5.0 };
        let exact = CrossSectionFamily::cylinder(uniform(-5.0, 5.0, 50), 128, 1.0).unwrap();
        let c = certify_neck(&exact, &params);
        assert!(c.measured_eps < 1e-9);
        assert!(c.pass);
        // measured_eps is linear in amplitude for this family.
        let unit = certify_neck(&perturbed(1e-3), &params).measured_eps / 1e-3;
        let fail = certify_neck(&perturbed(2.0 * params.eps / unit), &params);
        assert!(!fail.pass && fail.measured_eps > params.eps);
        let ok = certify_neck(&perturbed(0.5 * params.eps / unit), &params);
        assert!(ok.pass, "{ok:?}");
    }

    #[test]
    fn certify_neck_monotone_in_amplitude() {
        let params = NeckParams { alpha_hat: 0.1, delta_hat: 0.1, eps: 0.05, l: 5.0 };
        let mut prev = -1.0;
        for k in 0..8 {
            let m = certify_neck(&perturbed(k as f64 * 2e-4), &params).measured_eps;
            assert!(m > prev);
            prev = m;
        }
    }

    #[test]
    fn perturbed_neck_points_close_to_cylinder() {
        let eps = 1e-3;
        let fam = perturbed(eps);
        for i in 0..fam.n_heights() {
            for j in 0..fam.n_vertices() {
                let p = fam.surface_point(i, j).unwrap();
                assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() <= eps + 1e-15);
            }
        }
    }

    #[test]
    fn family_json_revalidates() {
        let fam = CrossSectionFamily::cylinder(uniform(0.0, 1.0, 4), 32, 1.0).unwrap();
        let s = serde_json::to_string(&fam).unwrap();
        let back: CrossSectionFamily = serde_json::from_str(&s).unwrap();
        assert_eq!(back, fam);
        let bad = s.replacen("0.25", "0.8", 1);
        assert!(serde_json::from_str::<CrossSectionFamily>(&bad).is_err());
    }

    #[test]
    fn interpolated_section_is_exact_at_nodes() {
        let fam = perturbed(1e-2);
        for k in [0usize, 13, 100] {
            assert_eq!(fam.section(fam.s_grid()[k]), fam.curves()[k].points());
        }
        let g = section_geometry_at(&fam, 0.123).unwrap();
        for h in &g.mean_curvature {
            assert!((h - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn diagnostics_csv_has_header() {
        let fam = CrossSectionFamily::cylinder(uniform(0.0, 1.0, 4), 32, 1.0).unwrap();
        let mut buf = Vec::new();
        write_diagnostics_csv(&fam.diagnostics().unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,mean_radius,h_min,h_max,grad_x3_min,grad_x3_max\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
