//! Weighted Gaussian functionals on curves, cross-sections and surfaces.
//!
//! All quadratures are trapezoid rules on the native grids. The error
//! estimate is the difference to the same rule on the every-other-node
//! subgrid, which bounds the error of the coarse rule and is conservative for
//! the fine one.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::curve2d::{norm, ClosedCurve2D, Point};
use crate::error::{Error, Result};
use crate::neckmodel::{section_geometry_at, CrossSectionFamily, GeneratingCurve, SectionGeometry, SectionSource};

/// A quadrature value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Quadrature {
    type Output = Quadrature;
    fn add(self, o: Quadrature) -> Quadrature {
        Quadrature { value: self.value + o.value, error: self.error + o.error }
    }
}

impl Quadrature {
    pub fn scale(self, k: f64) -> Quadrature {
        Quadrature { value: k * self.value, error: k.abs() * self.error }
    }
}

/// Parameters of a Gaussian weight, normalized or physical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianWeightParams {
    pub tau: f64,
    pub q: Point,
    pub r0: f64,
    #[serde(rename = "H1")]
    pub h1: f64,
}

impl GaussianWeightParams {
    /// In theorem mode: `τ ≥ (5/9) H₁⁻²` and `r₀ ∈ [H₁⁻¹/1000, H₁⁻¹]`; otherwise
    /// only `τ > 0` is required and range violations are logged.
    pub fn validate(&self, theorem_mode: bool) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!("τ = {} must be positive", self.tau)));
        }
        let scale = 1.0 / self.h1;
        let mut problems = Vec::new();
        if self.tau < 5.0 / 9.0 * scale * scale * (1.0 - 1e-12) {
            problems.push(format!("τ = {} below (5/9)H₁⁻²", self.tau));
        }
        if self.r0 < scale / 1000.0 * (1.0 - 1e-12) || self.r0 > scale * (1.0 + 1e-12) {
            problems.push(format!("r₀ = {} outside [H₁⁻¹/1000, H₁⁻¹]", self.r0));
        }
        if problems.is_empty() {
            Ok(())
        } else if theorem_mode {
            Err(Error::InvalidParameter(problems.join("; ")))
        } else {
            for p in problems {
                log::warn!("{p}");
            }
            Ok(())
        }
    }
}

/// Periodic trapezoid of per-vertex values over a closed polygon, with the
/// subgrid error estimate.
fn polygon_quadrature(points: &[Point], values: &[f64]) -> Quadrature {
    let n = points.len();
    let rule = |stride: usize| {
        let m = n / stride;
        let mut acc = 0.0;
        for k in 0..m {
            let i = k * stride;
            let prev = points[((k + m - 1) % m) * stride];
            let next = points[((k + 1) % m) * stride];
            let p = points[i];
            let w = 0.5 * (norm([p[0] - prev[0], p[1] - prev[1]]) + norm([next[0] - p[0], next[1] - p[1]]));
            acc += w * values[i];
        }
        acc
    };
    let fine = rule(1);
    let error = if n % 2 == 0 && n >= 8 { (fine - rule(2)).abs() } else { 0.0 };
    Quadrature { value: fine, error }
}

/// `∫_Γ ψ e^{−|x|²/4τ + ⟨q,x⟩} (10/11 − |x|²/2τ + ⟨q,x⟩)`.
pub fn lemma1_functional(curve: &ClosedCurve2D, psi: &[f64], tau: f64, q: Point) -> Quadrature {
    let values: Vec<f64> = curve
        .points()
        .iter()
        .zip(psi)
        .map(|(x, w)| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            let qx = q[0] * x[0] + q[1] * x[1];
            w * (-r2 / (4.0 * tau) + qx).exp() * (10.0 / 11.0 - r2 / (2.0 * tau) + qx)
        })
        .collect();
    polygon_quadrature(curve.points(), &values)
}

/// `ρ^{10/11} ∫_Γ ψ e^{−ρ²|x|²/4τ + ρ⟨q,x⟩}`.
pub fn lemma2_scaled_integral(curve: &ClosedCurve2D, psi: &[f64], tau: f64, q: Point, rho: f64) -> Quadrature {
    let values: Vec<f64> = curve
        .points()
        .iter()
        .zip(psi)
        .map(|(x, w)| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            let qx = q[0] * x[0] + q[1] * x[1];
            w * (-rho * rho * r2 / (4.0 * tau) + rho * qx).exp()
        })
        .collect();
    polygon_quadrature(curve.points(), &values).scale(rho.powf(10.0 / 11.0))
}

/// `∫_{section} e^{−|x|²/4τ + ⟨q,x⟩ − r₀H} / |∇x₃|` over a cross-section with
/// known geometry.
pub fn cross_section_integral(geom: &SectionGeometry, tau: f64, q: Point, r0: f64) -> Result<Quadrature> {
    let n = geom.points.len();
    if geom.mean_curvature.len() != n || geom.grad_x3.len() != n {
        return Err(Error::InvalidParameter("section geometry is incomplete".into()));
    }
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let x = geom.points[i];
            let r2 = x[0] * x[0] + x[1] * x[1];
            let qx = q[0] * x[0] + q[1] * x[1];
            (-r2 / (4.0 * tau) + qx - r0 * geom.mean_curvature[i]).exp() / geom.grad_x3[i]
        })
        .collect();
    Ok(polygon_quadrature(&geom.points, &values))
}

/// `∫_{section} e^{−|x−p|²/4τ − r₀H} / |∇x₃|`, the coarea density at height `s`.
pub fn section_density(geom: &SectionGeometry, p: [f64; 3], tau: f64, r0: f64) -> Quadrature {
    let dz = geom.height - p[2];
    let axial = (-dz * dz / (4.0 * tau)).exp();
    let values: Vec<f64> = (0..geom.points.len())
        .map(|i| {
            let x = geom.points[i];
            let d2 = (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2);
            axial * (-d2 / (4.0 * tau) - r0 * geom.mean_curvature[i]).exp() / geom.grad_x3[i]
        })
        .collect();
    polygon_quadrature(&geom.points, &values)
}

/// Trapezoid in `s` of per-height quadratures; the error adds the subgrid
/// difference in `s` to the per-section estimates.
fn assemble(heights: &[f64], dens: &[Quadrature]) -> Quadrature {
    let rule = |stride: usize| {
        let idx: Vec<usize> = (0..heights.len()).step_by(stride).collect();
        idx.windows(2).map(|w| 0.5 * (heights[w[1]] - heights[w[0]]) * (dens[w[0]].value + dens[w[1]].value)).sum::<f64>()
    };
    let fine = rule(1);
    let coarse_ok = heights.len() >= 5 && heights.len() % 2 == 1;
    let s_err = if coarse_ok { (fine - rule(2)).abs() } else { 0.0 };
    let sec_err: f64 = heights
        .windows(2)
        .zip(dens.windows(2))
        .map(|(h, d)| 0.5 * (h[1] - h[0]) * (d[0].error + d[1].error))
        .sum();
    Quadrature { value: fine, error: s_err + sec_err }
}

/// Coarea assembly over arbitrary normalized heights of a section source.
pub fn source_weighted_integral<S: SectionSource + ?Sized>(
    src: &S,
    heights: &[f64],
    p: [f64; 3],
    tau: f64,
    r0: f64,
) -> Result<Quadrature> {
    let dens = heights
        .iter()
        .map(|&s| section_geometry_at(src, s).map(|g| section_density(&g, p, tau, r0)))
        .collect::<Result<Vec<_>>>()?;
    let phys: Vec<f64> = heights.iter().map(|s| s * src.size()).collect();
    Ok(assemble(&phys, &dens))
}

/// Surfaces over which `∫ e^{−|x−p|²/4τ − r₀H} dμ` can be evaluated.
pub trait WeightedSurface {
    fn weighted_integral(&self, p: [f64; 3], tau: f64, r0: f64) -> Result<Quadrature>;
}

impl WeightedSurface for CrossSectionFamily {
    fn weighted_integral(&self, p: [f64; 3], tau: f64, r0: f64) -> Result<Quadrature> {
        let dens = (0..self.n_heights())
            .map(|i| self.section_geometry(i).map(|g| section_density(&g, p, tau, r0)))
            .collect::<Result<Vec<_>>>()?;
        let phys: Vec<f64> = self.s_grid().iter().map(|s| s * self.size()).collect();
        Ok(assemble(&phys, &dens))
    }
}

/// `∫_0^{2π} e^{−κ(1 − cos θ)} dθ` by the periodic trapezoid rule, which is
/// spectrally accurate; `κ ≥ 0`.
fn angular_factor(kappa: f64) -> f64 {
    if kappa == 0.0 {
        return TAU;
    }
    let m = 16 + (80.0 * kappa).sqrt().ceil() as usize;
    let h = TAU / m as f64;
    (0..m).map(|k| (-kappa * (1.0 - (k as f64 * h).cos())).exp()).sum::<f64>() * h
}

impl WeightedSurface for GeneratingCurve {
    /// Surface of revolution about the `x₃`-axis; `p` may be off-axis.
    fn weighted_integral(&self, p: [f64; 3], tau: f64, r0: f64) -> Result<Quadrature> {
        let rp = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let h = self.mean_curvatures();
        let nodes = self.nodes();
        let f: Vec<f64> = nodes
            .iter()
            .zip(&h)
            .map(|(x, &hi)| {
                let (s, u) = (x[0], x[1]);
                if u == 0.0 {
                    return 0.0;
                }
                let d2 = (s - p[2]).powi(2) + (u - rp).powi(2);
                let kappa = u * rp / (2.0 * tau);
                u * (-d2 / (4.0 * tau) - r0 * hi).exp() * angular_factor(kappa)
            })
            .collect();
        let rule = |stride: usize| {
            let mut idx: Vec<usize> = (0..nodes.len()).step_by(stride).collect();
            if *idx.last().unwrap() != nodes.len() - 1 {
                idx.push(nodes.len() - 1);
            }
            idx.windows(2)
                .map(|w| {
                    let (a, b) = (nodes[w[0]], nodes[w[1]]);
                    0.5 * norm([b[0] - a[0], b[1] - a[1]]) * (f[w[0]] + f[w[1]])
                })
                .sum::<f64>()
        };
        let fine = rule(1);
        let error = if nodes.len() >= 5 { (fine - rule(2)).abs() } else { 0.0 };
        Ok(Quadrature { value: fine, error })
    }
}

impl WeightedSurface for [GeneratingCurve] {
    fn weighted_integral(&self, p: [f64; 3], tau: f64, r0: f64) -> Result<Quadrature> {
        self.iter().try_fold(Quadrature::default(), |acc, g| Ok(acc + g.weighted_integral(p, tau, r0)?))
    }
}

/// `∫ e^{−|x−p|²/4τ − r₀H} dμ`.
pub fn surface_weighted_integral<S: WeightedSurface + ?Sized>(
    surface: &S,
    p: [f64; 3],
    tau: f64,
    r0: f64,
) -> Result<Quadrature> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("τ = {tau} must be positive")));
    }
    surface.weighted_integral(p, tau, r0)
}

/// `G = ∫ (4π(t₀−t))⁻¹ e^{−|x−p|²/4(t₀−t) − H/(200H₁)} dμ`.
pub fn monotone_quantity<S: WeightedSurface + ?Sized>(
    surface: &S,
    p: [f64; 3],
    t0: f64,
    t: f64,
    h1: f64,
) -> Result<Quadrature> {
    let tau = t0 - t;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("t₀ − t = {tau} must be positive")));
    }
    Ok(surface_weighted_integral(surface, p, tau, 1.0 / (200.0 * h1))?.scale(1.0 / (4.0 * PI * tau)))
}

/// `Θ = ∫ (4πτ)⁻¹ e^{−|x−p|²/4τ} dμ`.
pub fn gaussian_density<S: WeightedSurface + ?Sized>(surface: &S, p: [f64; 3], tau: f64) -> Result<Quadrature> {
    Ok(surface_weighted_integral(surface, p, tau, 0.0)?.scale(1.0 / (4.0 * PI * tau)))
}

/// `√(9π/5) ρ e^{−9ρ²/20 − 1/(200ρ)}`: `G` on the round cylinder of radius
/// `ρ/H₁` at `τ = (5/9)H₁⁻²` with `p` on the axis.
pub fn cylinder_closed_form(rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("ρ = {rho} must be positive")));
    }
    Ok((9.0 * PI / 5.0).sqrt() * rho * (-9.0 * rho * rho / 20.0 - 1.0 / (200.0 * rho)).exp())
}

/// Batch grid for cross-section sweeps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchGrid {
    pub tau: Vec<f64>,
    pub q_radii: Vec<f64>,
    pub q_dirs: usize,
    pub r0: Vec<f64>,
}

impl BatchGrid {
    /// All `q` vectors: the origin once, then each positive radius in
    /// `q_dirs` equally spaced directions.
    pub fn q_vectors(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for &r in &self.q_radii {
            if r == 0.0 {
                out.push([0.0, 0.0]);
                continue;
            }
            for k in 0..self.q_dirs.max(1) {
                let th = TAU * k as f64 / self.q_dirs.max(1) as f64;
                out.push([r * th.cos(), r * th.sin()]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchRow {
    pub tau: f64,
    pub qx: f64,
    pub qy: f64,
    pub r0: f64,
    pub value: f64,
    pub error_estimate: f64,
}

pub fn batch_cross_section(geom: &SectionGeometry, grid: &BatchGrid) -> Result<Vec<BatchRow>> {
    let qs = grid.q_vectors();
    let mut rows = Vec::new();
    for &tau in &grid.tau {
        for q in &qs {
            for &r0 in &grid.r0 {
                let v = cross_section_integral(geom, tau, *q, r0)?;
                rows.push(BatchRow { tau, qx: q[0], qy: q[1], r0, value: v.value, error_estimate: v.error });
            }
        }
    }
    Ok(rows)
}

pub fn write_batch_csv<W: Write>(rows: &[BatchRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neckmodel::CrossSectionFamily;
    use proptest::prelude::*;

    fn circle_closed_form(tau: f64) -> f64 {
        TAU * (-1.0 / (4.0 * tau)).exp() * (10.0 / 11.0 - 1.0 / (2.0 * tau))
    }

    #[test]
    fn lemma1_circle_values() {
        let c = ClosedCurve2D::unit_circle(512);
        let psi = vec![1.0; 512];
        let v = lemma1_functional(&c, &psi, 5.0 / 9.0, [0.0, 0.0]).value;
        let exact = circle_closed_form(5.0 / 9.0);
        assert!((exact - 0.036_42).abs() < 1e-5);
        assert!(((v - exact) / exact).abs() < 1e-4);
        let zero = lemma1_functional(&c, &psi, 11.0 / 20.0, [0.0, 0.0]).value;
        assert!(zero.abs() < 1e-12);
    }

    #[test]
    fn lemma1_sign_follows_tau_threshold() {
        let c = ClosedCurve2D::unit_circle(256);
        let psi = vec![1.0; 256];
        for k in 0..40 {
            let tau = 0.3 + 0.02 * k as f64;
            let v = lemma1_functional(&c, &psi, tau, [0.0, 0.0]).value;
            let sign = 10.0 / 11.0 - 1.0 / (2.0 * tau);
            if sign.abs() > 1e-9 {
                assert_eq!(v > 0.0, sign > 0.0, "τ = {tau}");
            }
        }
    }

    /// Adaptive Simpson on the exact circle parametrization.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
    }

    #[test]
    fn lemma1_large_q_matches_adaptive_quadrature() {
        let (tau, q) = (1.0, [50.0, 0.0]);
        let exact = adaptive_simpson(
            &|th: f64| {
                let (x, y) = (th.cos(), th.sin());
                let qx = q[0] * x + q[1] * y;
                // Rescaled by e^{−|q|} to keep the tolerance meaningful.
                (-1.0 / (4.0 * tau) + qx - 50.0).exp() * (10.0 / 11.0 - 1.0 / (2.0 * tau) + qx)
            },
            0.0,
            TAU,
            1e-12,
        ) * 50f64.exp();
        let c = ClosedCurve2D::unit_circle(2048);
        let v = lemma1_functional(&c, &vec![1.0; 2048], tau, q);
        assert!(v.value > 0.0);
        // The polygon is inscribed, so its arclength and radii are short by O(n⁻²).
        assert!(((v.value - exact) / exact).abs() < 2e-4, "{} vs {exact}", v.value);
        let coarse = lemma1_functional(&ClosedCurve2D::unit_circle(1024), &vec![1.0; 1024], tau, q);
        assert!(((coarse.value - v.value) / v.value).abs() < 1e-3);
    }

    fn unit_cylinder_section(n: usize) -> SectionGeometry {
        let grid: Vec<f64> = (0..=10).map(|k| -0.25 + 0.05 * k as f64).collect();
        CrossSectionFamily::cylinder(grid, n, 1.0).unwrap().section_geometry(5).unwrap()
    }

    #[test]
    fn cross_section_cylinder_values() {
        let g = unit_cylinder_section(512);
        let perim = 2.0 * 512.0 * (PI / 512.0).sin();
        let base = perim * (-0.25f64).exp();
        let v0 = cross_section_integral(&g, 1.0, [0.0, 0.0], 0.0).unwrap().value;
        assert!((v0 - base).abs() < 1e-9 * base);
        assert!((v0 - TAU * (-0.25f64).exp()).abs() < 1e-4);
        let v1 = cross_section_integral(&g, 1.0, [0.0, 0.0], 1.0).unwrap().value;
        assert!((v1 / v0 - (-1.0f64).exp()).abs() < 1e-2 * (-1.0f64).exp());
        let dil = SectionGeometry {
            points: g.points.iter().map(|p| [0.9 * p[0], 0.9 * p[1]]).collect(),
            weights: g.weights.iter().map(|w| 0.9 * w).collect(),
            ..g.clone()
        };
        let vd = cross_section_integral(&dil, 1.0, [0.0, 0.0], 0.0).unwrap().value;
        assert!((vd - 0.9 * perim * (-0.81f64 / 4.0).exp()).abs() < 1e-12);
        let broken = SectionGeometry { grad_x3: vec![], ..g };
        assert!(cross_section_integral(&broken, 1.0, [0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn sphere_weighted_integral_and_density() {
        let r = 1.3;
        let sph = GeneratingCurve::sphere(800, r, 0.0).unwrap();
        for tau in [0.2, 1.0, 3.0] {
            let v = surface_weighted_integral(&sph, [0.0; 3], tau, 0.0).unwrap().value;
            let exact = 4.0 * PI * r * r * (-r * r / (4.0 * tau)).exp();
            assert!(((v - exact) / exact).abs() < 5e-3);
        }
        let d = gaussian_density(&sph, [0.0; 3], r * r).unwrap().value;
        assert!((d - (-0.25f64).exp()).abs() < 5e-3);
        // Maximum over τ of (R²/τ)e^{−R²/4τ} is 4/e at τ = R²/4.
        let (tau_star, neg) =
            crate::curve2d::golden_min(&|t: f64| -gaussian_density(&sph, [0.0; 3], t).unwrap().value, 0.05, 2.0, 1e-8);
        assert!((-neg - 4.0 / std::f64::consts::E).abs() < 5e-3 * 4.0 / std::f64::consts::E);
        assert!((tau_star - r * r / 4.0).abs() < 0.02);
        let m = monotone_quantity(&sph, [0.0; 3], 1.0, 0.0, 1e12).unwrap().value;
        let exact = r * r * (-r * r / 4.0f64).exp();
        assert!(((m - exact) / exact).abs() < 5e-3);
    }

    #[test]
    fn truncated_cylinder_and_plane() {
        for (r, tau) in [(0.5f64, 1.0f64), (0.1, 0.01), (1.0, 0.3)] {
            let half = 10.0 * f64::sqrt(tau);
            let cyl = GeneratingCurve::cylinder(4000, r, -half, half).unwrap();
            let v = surface_weighted_integral(&cyl, [0.0; 3], tau, 0.0).unwrap().value;
            let exact = TAU * r * (4.0 * PI * tau).sqrt() * (-r * r / (4.0 * tau)).exp();
            assert!(((v - exact) / exact).abs() < 1e-2);
        }
        let tau = 0.7;
        let rmax = 10.0 * f64::sqrt(tau);
        let nodes: Vec<Point> = (0..=2000).map(|k| [0.0, rmax * k as f64 / 2000.0]).collect();
        let disk = GeneratingCurve::new(nodes, true, false).unwrap();
        let d = gaussian_density(&disk, [0.0; 3], tau).unwrap().value;
        assert!((d - 1.0).abs() < 1e-3);
    }

    #[test]
    fn empty_surface_is_zero() {
        let none: Vec<GeneratingCurve> = Vec::new();
        assert_eq!(monotone_quantity(none.as_slice(), [0.0; 3], 1.0, 0.5, 10.0).unwrap().value, 0.0);
        assert!(monotone_quantity(none.as_slice(), [0.0; 3], 1.0, 1.0, 10.0).is_err());
    }

    #[test]
    fn cylinder_closed_form_values() {
        assert!((cylinder_closed_form(0.5).unwrap() - 1.051_913_719_024_721_1).abs() < 1e-14);
        assert!((cylinder_closed_form(1.0).unwrap() - 1.508_714_970_167_925_8).abs() < 1e-14);
        assert!(cylinder_closed_form(0.0).is_err());
        for rho in [0.5, 0.75, 1.0] {
            let h1 = 10.0;
            let r = rho / h1;
            let tau: f64 = 5.0 / 9.0 / (h1 * h1);
            let half = 10.0 * tau.sqrt();
            let cyl = GeneratingCurve::cylinder(4000, r, -half, half).unwrap();
            let g = monotone_quantity(&cyl, [0.0; 3], tau, 0.0, h1).unwrap().value;
            let exact = cylinder_closed_form(rho).unwrap();
            assert!(((g - exact) / exact).abs() < 1e-2);
        }
    }

    #[test]
    fn family_and_generating_paths_agree() {
        let r = 1.0;
        let m = 160;
        let grid: Vec<f64> = (0..=m).map(|k| -0.8 * r + 1.6 * r * k as f64 / m as f64).collect();
        let fam = CrossSectionFamily::from_fn(grid, 256, 1.0, |s, t| {
            let rho = (r * r - s * s).sqrt();
            [rho * (TAU * t).cos(), rho * (TAU * t).sin()]
        })
        .unwrap();
        let th0 = (0.8f64).acos();
        let nodes: Vec<Point> = (0..=800)
            .map(|k| {
                let th = PI - th0 - (PI - 2.0 * th0) * k as f64 / 800.0;
                [r * th.cos(), r * th.sin()]
            })
            .collect();
        let zone = GeneratingCurve::new(nodes, false, false).unwrap();
        for (p, tau, r0) in [([0.0, 0.0, 0.0], 0.5, 0.0), ([0.3, 0.0, 0.2], 1.0, 0.1), ([0.0, 0.5, -0.3], 0.2, 0.01)] {
            let a = surface_weighted_integral(&fam, p, tau, r0).unwrap().value;
            let b = surface_weighted_integral(&zone, p, tau, r0).unwrap().value;
            assert!(((a - b) / b).abs() < 1e-2, "{a} vs {b}");
        }
    }

    #[test]
    fn quadrature_converges_under_refinement() {
        let r = 0.7;
        for (coarse, fine) in [(400, 800), (800, 1600)] {
            let a = GeneratingCurve::sphere(coarse, r, 0.0).unwrap();
            let b = GeneratingCurve::sphere(fine, r, 0.0).unwrap();
            let va = surface_weighted_integral(&a, [0.1, 0.0, 0.2], 0.3, 0.01).unwrap().value;
            let vb = surface_weighted_integral(&b, [0.1, 0.0, 0.2], 0.3, 0.01).unwrap().value;
            assert!(((va - vb) / vb).abs() < 2e-3);
        }
    }

    #[test]
    fn batch_grid_csv() {
        let g = unit_cylinder_section(64);
        let grid = BatchGrid { tau: vec![1.0, 2.0], q_radii: vec![0.0, 1.0], q_dirs: 4, r0: vec![0.001] };
        let rows = batch_cross_section(&g, &grid).unwrap();
        assert_eq!(rows.len(), 2 * 5);
        let mut buf = Vec::new();
        write_batch_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("tau,qx,qy,r0,value,error_estimate\n"));
    }

    #[test]
    fn theorem_mode_validation() {
        let ok = GaussianWeightParams { tau: 5.0 / 9.0, q: [0.0, 0.0], r0: 0.01, h1: 1.0 };
        assert!(ok.validate(true).is_ok());
        let low = GaussianWeightParams { tau: 0.5, ..ok };
        assert!(low.validate(true).is_err());
        assert!(low.validate(false).is_ok());
        assert!(GaussianWeightParams { tau: 0.0, ..ok }.validate(false).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn translation_covariance(dx in -2.0f64..2.0, dy in -2.0f64..2.0, px in -0.5f64..0.5, tau in 0.1f64..2.0, phi in 0.0f64..6.28) {
            let sec = unit_cylinder_section(128);
            let (c, s) = (phi.cos(), phi.sin());
            let p = [px, 0.2, 0.0];
            let moved = SectionGeometry {
                points: sec.points.iter().map(|x| [c * x[0] - s * x[1] + dx, s * x[0] + c * x[1] + dy]).collect(),
                ..sec.clone()
            };
            let p_moved = [c * p[0] - s * p[1] + dx, s * p[0] + c * p[1] + dy, p[2]];
            let a = section_density(&sec, p, tau, 0.1).value;
            let b = section_density(&moved, p_moved, tau, 0.1).value;
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));

            let sph = GeneratingCurve::sphere(200, 0.8, 0.0).unwrap();
            let shifted = GeneratingCurve::sphere(200, 0.8, dx).unwrap();
            let u = surface_weighted_integral(&sph, [0.0, 0.0, 0.1], tau, 0.05).unwrap().value;
            let v = surface_weighted_integral(&shifted, [0.0, 0.0, 0.1 + dx], tau, 0.05).unwrap().value;
            prop_assert!((u - v).abs() <= 1e-9 * u.max(1.0));
        }

        #[test]
        fn scaling_law(lambda in 0.2f64..5.0, tau in 0.1f64..2.0) {
            let a = GeneratingCurve::sphere(300, 1.0, 0.0).unwrap();
            let b = GeneratingCurve::sphere(300, lambda, 0.0).unwrap();
            let p = [0.2, 0.0, 0.3];
            let pl = [0.2 * lambda, 0.0, 0.3 * lambda];
            let ia = surface_weighted_integral(&a, p, tau, 0.05).unwrap().value;
            let ib = surface_weighted_integral(&b, pl, lambda * lambda * tau, 0.05 * lambda).unwrap().value;
            prop_assert!((ib - lambda * lambda * ia).abs() <= 1e-9 * ib);
            let da = gaussian_density(&a, p, tau).unwrap().value;
            let db = gaussian_density(&b, pl, lambda * lambda * tau).unwrap().value;
            prop_assert!((da - db).abs() <= 1e-9 * da);
        }
    }
}
