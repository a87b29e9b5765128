//! Λ-surgery on a neck: dilation profile, cutoff, smoothed absolute value,
//! cap profile, the piecewise modified immersion, and its axisymmetric
//! specialization on generating curves.
//!
//! Normalized neck coordinates: the neck has size 1, the modification occupies
//! `s ∈ (0, b]` with `b = Λ + 2Λ^{1/4}`, and the cap tip sits at `s = b`.

use serde::{Deserialize, Serialize};

use crate::curve2d::{center_of_mass, norm, ClosedCurve2D, Homotopy, Point};
use crate::error::{Error, Result};
use crate::neckmodel::{CrossSectionFamily, GeneratingCurve, Neck, NeckParams, SectionSource};
use crate::smooth::smooth_step;

/// `ρ(s) = 1 − e^{−4Λ/s}` for `s > 0`.
pub fn rho(s: f64, lambda: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("ρ needs s > 0, got {s}")));
    }
    Ok(rho_ext(s, lambda))
}

/// `ρ` continued by its limit 1 at `s ≤ 0`.
fn rho_ext(s: f64, lambda: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else {
        -(-4.0 * lambda / s).exp_m1()
    }
}

/// Smooth cutoff: 1 on `(−∞, 1]`, 0 on `[2, ∞)`, decreasing in between.
pub fn cutoff_chi(z: f64) -> f64 {
    1.0 - smooth_step(z - 1.0)
}

const PHI_WIDTH: f64 = 0.01;
const PHI_C: f64 = 315.0 / 256.0;

/// `|z|` mollified by the even bump `η(y) ∝ (1 − (100y)²)⁴` on `[−1/100, 1/100]`.
pub fn smooth_abs_phi(z: f64) -> f64 {
    // Evaluated at |z| so evenness holds bitwise.
    let w = z.abs() / PHI_WIDTH;
    if w >= 1.0 {
        return z.abs();
    }
    let w2 = w * w;
    // K(w) = ∫_{-1}^{w} k, M(w) = ∫_{-1}^{w} v k(v) dv for k = c(1 − v²)⁴.
    let k = 0.5 + PHI_C * w * (1.0 + w2 * (-4.0 / 3.0 + w2 * (6.0 / 5.0 + w2 * (-4.0 / 7.0 + w2 / 9.0))));
    let m = -PHI_C * (1.0 - w2).powi(5) / 10.0;
    PHI_WIDTH * (w * (2.0 * k - 1.0) - 2.0 * m)
}

/// `a = 1 − e^{−4} + (1/3)(1 − e^{−4})² Λ^{−1/4}`.
pub fn cap_a(lambda: f64) -> f64 {
    let c = -(-4.0f64).exp_m1();
    c + c * c / 3.0 * lambda.powf(-0.25)
}

/// `a < 1`, the condition for theorem-grade verification.
pub fn cap_a_admissible(lambda: f64) -> bool {
    cap_a(lambda) < 1.0
}

/// The unique `Λ` with `a(Λ) = 1`.
pub fn cap_a_threshold() -> f64 {
    let e = (-4.0f64).exp();
    let c = 1.0 - e;
    (c * c / (3.0 * e)).powi(4)
}

/// `b = Λ + 2Λ^{1/4}`.
pub fn cap_b(lambda: f64) -> f64 {
    lambda + 2.0 * lambda.powf(0.25)
}

fn cap_v(s: f64, lambda: f64) -> f64 {
    let a = cap_a(lambda);
    let b = cap_b(lambda);
    let q = lambda.powf(0.25);
    let x = (b - s).max(0.0);
    let bb = a * (x / (a + x)).sqrt();
    if s >= lambda + q {
        return 2.0 * bb;
    }
    let aa = rho_ext(s, lambda);
    aa + bb - smooth_abs_phi(q * (aa - bb)) / q
}

/// Cap diameter `v_Λ(s)` on `[Λ, b]`; the cap cross-section has radius `v_Λ/2`.
pub fn cap_profile_v(s: f64, params: &SurgeryParams) -> Result<f64> {
    let (lo, hi) = (params.lambda, params.b());
    let tol = 1e-12 * hi;
    if !(s >= lo - tol && s <= hi + tol) {
        return Err(Error::InvalidParameter(format!("cap profile needs s ∈ [{lo}, {hi}], got {s}")));
    }
    Ok(cap_v(s.clamp(lo, hi), params.lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct SurgeryParams {
    pub alpha_hat: f64,
    pub delta_hat: f64,
    pub eps: f64,
    pub l: f64,
    pub lambda: f64,
    pub h1: f64,
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    alpha_hat: f64,
    delta_hat: f64,
    eps: f64,
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "Lambda")]
    lambda: f64,
    #[serde(rename = "H1")]
    h1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
}

impl TryFrom<ParamsRepr> for SurgeryParams {
    type Error = Error;
    fn try_from(r: ParamsRepr) -> Result<Self> {
        let p = SurgeryParams::new(r.alpha_hat, r.delta_hat, r.eps, r.l, r.lambda, r.h1)?;
        for (name, given, derived) in [("a", r.a, p.a()), ("b", r.b, p.b())] {
            if let Some(g) = given {
                if (g - derived).abs() > 1e-9 * derived.abs().max(1.0) {
                    return Err(Error::Config(format!("{name} = {g} disagrees with derived value {derived}")));
                }
            }
        }
        Ok(p)
    }
}

impl From<SurgeryParams> for ParamsRepr {
    fn from(p: SurgeryParams) -> Self {
        ParamsRepr {
            alpha_hat: p.alpha_hat,
            delta_hat: p.delta_hat,
            eps: p.eps,
            l: p.l,
            lambda: p.lambda,
            h1: p.h1,
            a: Some(p.a()),
            b: Some(p.b()),
        }
    }
}

impl SurgeryParams {
    pub fn new(alpha_hat: f64, delta_hat: f64, eps: f64, l: f64, lambda: f64, h1: f64) -> Result<Self> {
        let positive = [("alpha_hat", alpha_hat), ("delta_hat", delta_hat), ("eps", eps), ("Lambda", lambda), ("H1", h1)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        let need = cap_b(lambda) + 2.0;
        if !(l >= need) {
            return Err(Error::InvalidParameter(format!("L = {l} < Λ + 2Λ^(1/4) + 2 = {need}")));
        }
        Ok(Self { alpha_hat, delta_hat, eps, l, lambda, h1 })
    }

    pub fn a(&self) -> f64 {
        cap_a(self.lambda)
    }

    pub fn b(&self) -> f64 {
        cap_b(self.lambda)
    }

    /// `Λ^{1/4}`.
    pub fn quarter(&self) -> f64 {
        self.lambda.powf(0.25)
    }

    pub fn a_admissible(&self) -> bool {
        cap_a_admissible(self.lambda)
    }

    pub fn neck_params(&self) -> NeckParams {
        NeckParams { alpha_hat: self.alpha_hat, delta_hat: self.delta_hat, eps: self.eps, l: self.l }
    }
}

/// Which piece of the modified immersion a height belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Identity,
    Dilation,
    Blend,
    Homotopy,
    Cap,
}

impl SurgeryParams {
    pub fn branch(&self, s: f64) -> Branch {
        let q = self.quarter();
        if s <= 0.0 {
            Branch::Identity
        } else if s <= q {
            Branch::Dilation
        } else if s <= 2.0 * q {
            Branch::Blend
        } else if s <= self.lambda {
            Branch::Homotopy
        } else {
            Branch::Cap
        }
    }
}

/// C⁰ and C¹ mismatch between adjacent branches at a breakpoint.
#[derive(Debug, Clone, Serialize)]
pub struct JoinDiagnostic {
    pub at: f64,
    pub left: Branch,
    pub right: Branch,
    pub c0: f64,
    pub c1: f64,
}

/// `Ñ`: the surgically modified neck, evaluable at any height in
/// `[s_min, b)` and sampled on a graded grid.
#[derive(Debug, Clone)]
pub struct ModifiedNeck {
    original: CrossSectionFamily,
    modified: CrossSectionFamily,
    joins: Vec<JoinDiagnostic>,
    params: SurgeryParams,
    homotopy: Homotopy,
    reference: Vec<Point>,
}

/// Smallest distance from the last sampled cap section to the tip.
pub const TIP_GAP: f64 = 1e-6;

impl ModifiedNeck {
    pub fn original(&self) -> &CrossSectionFamily {
        &self.original
    }

    pub fn modified(&self) -> &CrossSectionFamily {
        &self.modified
    }

    pub fn joins(&self) -> &[JoinDiagnostic] {
        &self.joins
    }

    pub fn params(&self) -> &SurgeryParams {
        &self.params
    }

    pub fn tip(&self) -> f64 {
        self.params.b()
    }

    /// Section of the given branch formula at `s`, continued past the
    /// branch's own interval where the formula makes sense.
    fn branch_section(&self, branch: Branch, s: f64) -> Vec<Point> {
        let p = &self.params;
        let scale = |c: &[Point], k: f64| c.iter().map(|x| [k * x[0], k * x[1]]).collect::<Vec<_>>();
        match branch {
            Branch::Identity => self.original.section(s),
            Branch::Dilation => scale(&self.original.section(s), rho_ext(s, p.lambda)),
            Branch::Blend => {
                let chi = cutoff_chi(s / p.quarter());
                let g = self.original.section(s);
                let k = rho_ext(s, p.lambda);
                g.iter()
                    .zip(&self.reference)
                    .map(|(x, y)| [k * (chi * x[0] + (1.0 - chi) * y[0]), k * (chi * x[1] + (1.0 - chi) * y[1])])
                    .collect()
            }
            Branch::Homotopy => scale(&self.homotopy.slice(s / p.lambda), rho_ext(s, p.lambda)),
            Branch::Cap => {
                let r = 0.5 * cap_v(s.min(p.b()), p.lambda);
                circle_points(self.original.n_vertices(), r)
            }
        }
    }
}

fn circle_points(n: usize, r: f64) -> Vec<Point> {
    (0..n)
        .map(|j| {
            let th = std::f64::consts::TAU * j as f64 / n as f64;
            [r * th.cos(), r * th.sin()]
        })
        .collect()
}

impl SectionSource for ModifiedNeck {
    fn vertex_count(&self) -> usize {
        self.original.n_vertices()
    }

    fn section(&self, s: f64) -> Vec<Point> {
        self.branch_section(self.params.branch(s), s)
    }

    fn derivative_step(&self, s: f64) -> f64 {
        let q = self.params.quarter();
        if s <= 2.0 * q {
            self.original.derivative_step(s)
        } else {
            (0.01 * (self.params.b() - s)).clamp(f64::MIN_POSITIVE, 0.01)
        }
    }
}

impl Serialize for ModifiedNeck {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            #[serde(flatten)]
            family: &'a CrossSectionFamily,
            joins: &'a [JoinDiagnostic],
        }
        View { family: &self.modified, joins: &self.joins }.serialize(ser)
    }
}

/// Heights from `start` (exclusive) with steps bounded by `step(s)` and
/// growing by at most `GROWTH` per node, stopping once `stop(s)` holds.
fn graded_heights(start: f64, h0: f64, step: impl Fn(f64) -> f64, stop: impl Fn(f64) -> bool) -> Vec<f64> {
    const GROWTH: f64 = 1.5;
    let mut out = Vec::new();
    let (mut s, mut h) = (start, h0);
    loop {
        h = (h * GROWTH).min(step(s));
        s += h;
        out.push(s);
        if stop(s) {
            return out;
        }
    }
}

/// Builds `Ñ` from a size-1 neck `N`, using `homotopy` (built from the mean
/// section of `N`) on `(2Λ^{1/4}, Λ]`.
pub fn build_modified_neck(
    neck: &CrossSectionFamily,
    params: &SurgeryParams,
    homotopy: &Homotopy,
) -> Result<ModifiedNeck> {
    if neck.size() != 1.0 {
        return Err(Error::InvalidParameter(format!("neck must be normalized, size = {}", neck.size())));
    }
    let reference = neck.reference_curve()?;
    let n = neck.n_vertices();
    if homotopy.input().len() != n {
        return Err(Error::Mismatch(format!("homotopy has {} vertices, neck has {n}", homotopy.input().len())));
    }
    let dev = homotopy
        .input()
        .points()
        .iter()
        .zip(reference.points())
        .map(|(a, b)| norm([a[0] - b[0], a[1] - b[1]]))
        .fold(0.0, f64::max);
    if dev > 1e-9 {
        return Err(Error::Mismatch(format!("homotopy input differs from the mean section by {dev}")));
    }
    let com = center_of_mass(&reference);
    if norm(com) > 1e-6 {
        return Err(Error::InvalidParameter(format!("mean section not centered: center of mass {com:?}")));
    }
    let q = params.quarter();
    let grid = neck.s_grid();
    if !(grid[0] < 0.0 && grid[grid.len() - 1] >= 2.0 * q) {
        return Err(Error::InvalidParameter(format!("neck heights must cover [0, {}]", 2.0 * q)));
    }

    let mut mn = ModifiedNeck {
        original: neck.clone(),
        modified: neck.clone(),
        joins: Vec::new(),
        params: *params,
        homotopy: homotopy.clone(),
        reference: reference.points().to_vec(),
    };

    let mut heights: Vec<f64> = grid.iter().copied().filter(|&s| s <= 2.0 * q).collect();
    let m = heights.len();
    let h_last = heights[m - 1] - heights[m - 2];
    let (lambda, b) = (params.lambda, params.b());
    let h_max = (lambda / 400.0).max(h_last);
    heights.extend(graded_heights(heights[m - 1], h_last, |s| h_max.min((b - s) / 4.0), |s| b - s <= TIP_GAP));

    let curves = heights
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            if s <= 0.0 {
                Ok(neck.curves()[i].clone())
            } else {
                ClosedCurve2D::new(mn.section(s))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    mn.modified = CrossSectionFamily::new(heights, curves, 1.0)?;
    mn.joins = measure_joins(&mn);
    Ok(mn)
}

fn measure_joins(mn: &ModifiedNeck) -> Vec<JoinDiagnostic> {
    let p = &mn.params;
    let q = p.quarter();
    let h = 1e-6;
    let dist = |a: &[Point], b: &[Point]| a.iter().zip(b).map(|(x, y)| norm([x[0] - y[0], x[1] - y[1]])).fold(0.0, f64::max);
    [
        (0.0, Branch::Identity, Branch::Dilation),
        (q, Branch::Dilation, Branch::Blend),
        (2.0 * q, Branch::Blend, Branch::Homotopy),
        (p.lambda, Branch::Homotopy, Branch::Cap),
    ]
    .into_iter()
    .map(|(at, left, right)| {
        let l0 = mn.branch_section(left, at);
        let r0 = mn.branch_section(right, at);
        let lm = mn.branch_section(left, at - h);
        let rp = mn.branch_section(right, at + h);
        let c1 = l0
            .iter()
            .zip(&lm)
            .zip(r0.iter().zip(&rp))
            .map(|((a0, am), (b0, bp))| {
                let dl = [(a0[0] - am[0]) / h, (a0[1] - am[1]) / h];
                let dr = [(bp[0] - b0[0]) / h, (bp[1] - b0[1]) / h];
                norm([dl[0] - dr[0], dl[1] - dr[1]])
            })
            .fold(0.0, f64::max);
        JoinDiagnostic { at, left, right, c0: dist(&l0, &r0), c1 }
    })
    .collect()
}

/// Radius profile of the modified half, `σ ↦ R(σ)` in normalized units, for
/// an axisymmetric neck whose normalized radius is `u(σ)` and whose mean
/// section is the unit circle.
fn axi_radius(sigma: f64, u: &dyn Fn(f64) -> f64, p: &SurgeryParams) -> f64 {
    match p.branch(sigma) {
        Branch::Identity => u(sigma),
        Branch::Dilation => rho_ext(sigma, p.lambda) * u(sigma),
        Branch::Blend => {
            let chi = cutoff_chi(sigma / p.quarter());
            rho_ext(sigma, p.lambda) * (chi * u(sigma) + (1.0 - chi))
        }
        Branch::Homotopy => rho_ext(sigma, p.lambda),
        Branch::Cap => 0.5 * cap_v(sigma.min(p.b()), p.lambda),
    }
}

/// Cap polyline from `σ = 0` to the pole at `σ = b`, physical units, with
/// nodes equally spaced in arclength at roughly `spacing`.
fn cap_polyline(origin: f64, dir: f64, r: f64, u: &dyn Fn(f64) -> f64, p: &SurgeryParams, spacing: f64) -> Vec<Point> {
    let b = p.b();
    let ds = (spacing / r / 4.0).max(b / 1e6);
    let mut sig: Vec<f64> = (0..=((b / ds).ceil() as usize)).map(|k| (k as f64 * ds).min(b)).collect();
    let mut x = TIP_GAP;
    while x < (b - p.lambda).min(1.0) {
        sig.push(b - x);
        x *= 1.2;
    }
    sig.sort_by(f64::total_cmp);
    sig.dedup();
    let dense: Vec<Point> = sig
        .iter()
        .map(|&t| {
            let rad = if t >= b { 0.0 } else { r * axi_radius(t, u, p) };
            [origin + dir * r * t, rad]
        })
        .collect();
    resample_by_arclength(&dense, spacing)
}

fn resample_by_arclength(p: &[Point], spacing: f64) -> Vec<Point> {
    let mut cum = vec![0.0];
    for w in p.windows(2) {
        cum.push(cum[cum.len() - 1] + norm([w[1][0] - w[0][0], w[1][1] - w[0][1]]));
    }
    let total = cum[cum.len() - 1];
    let m = ((total / spacing).ceil() as usize).max(2);
    let mut out = Vec::with_capacity(m + 1);
    let mut k = 0;
    for i in 0..=m {
        let target = total * i as f64 / m as f64;
        if i == m {
            out.push(p[p.len() - 1]);
            break;
        }
        while k + 2 < cum.len() && cum[k + 1] < target {
            k += 1;
        }
        let seg = cum[k + 1] - cum[k];
        let u = if seg > 0.0 { ((target - cum[k]) / seg).clamp(0.0, 1.0) } else { 0.0 };
        out.push([p[k][0] + u * (p[k + 1][0] - p[k][0]), p[k][1] + u * (p[k + 1][1] - p[k][1])]);
    }
    out
}

/// Performs surgery on the detected neck of `g`, returning the two capped
/// pieces (left, right).
///
/// The left cap's normalized origin sits at `s_center − r(L − 1)` and its tip
/// at `s_center − r(L − 1 − b)`; the right piece is the mirror image. The
/// tube between the two tips is removed.
pub fn apply_surgery_axi(g: &GeneratingCurve, neck: &Neck, params: &SurgeryParams) -> Result<Vec<GeneratingCurve>> {
    let r = neck.r;
    let (lo, hi) = (0.5 / params.h1, 1.0 / params.h1);
    if !(r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12)) {
        return Err(Error::Surgery(format!("neck radius {r} outside [{lo}, {hi}]")));
    }
    let d = r * (params.l - 1.0);
    let (s_left, s_right) = (neck.s_center - d, neck.s_center + d);
    if neck.interval.0 > s_left || neck.interval.1 < s_right {
        return Err(Error::Surgery(format!(
            "neck interval [{}, {}] does not contain [{s_left}, {s_right}]",
            neck.interval.0, neck.interval.1
        )));
    }
    let nodes = g.nodes();
    let in_neck = |p: &Point| p[0] >= neck.interval.0 && p[0] <= neck.interval.1;
    let crossing = |x: f64| {
        (0..nodes.len() - 1)
            .find(|&k| in_neck(&nodes[k]) && in_neck(&nodes[k + 1]) && nodes[k][0] < x && x <= nodes[k + 1][0])
            .ok_or_else(|| Error::Surgery(format!("no profile segment crosses s = {x}")))
    };
    let k_left = crossing(s_left)?;
    let k_right = crossing(s_right)?;
    let spacing = {
        let e = |k: usize| norm([nodes[k + 1][0] - nodes[k][0], nodes[k + 1][1] - nodes[k][1]]);
        0.5 * (e(k_left) + e(k_right))
    };
    let radius = |s: f64| g.radius_at(s).unwrap_or(r) / r;

    let u_left = |sigma: f64| radius(s_left + r * sigma);
    let cap_l = cap_polyline(s_left, 1.0, r, &u_left, params, spacing);
    let mut left: Vec<Point> = nodes[..=k_left].to_vec();
    left.extend(trim_duplicate(&left, cap_l));
    let u_right = |sigma: f64| radius(s_right - r * sigma);
    let mut cap_r = cap_polyline(s_right, -1.0, r, &u_right, params, spacing);
    cap_r.reverse();
    let tail = nodes[k_right + 1..].to_vec();
    let mut right = cap_r;
    right.extend(trim_duplicate(&right, tail));

    Ok(vec![
        GeneratingCurve::new(left, g.closed_left(), true)?,
        GeneratingCurve::new(right, true, g.closed_right())?,
    ])
}

fn trim_duplicate(head: &[Point], mut tail: Vec<Point>) -> Vec<Point> {
    if let (Some(a), Some(b)) = (head.last(), tail.first()) {
        if norm([a[0] - b[0], a[1] - b[1]]) < 1e-12 {
            tail.remove(0);
        }
    }
    tail
}

/// Detects a neck with the given parameters and performs surgery on it.
pub fn surgery_on_detected(g: &GeneratingCurve, params: &SurgeryParams) -> Result<(Neck, Vec<GeneratingCurve>)> {
    let neck = crate::neckmodel::detect_neck(g, params.h1, params.eps, params.l)
        .ok_or_else(|| Error::Surgery("no neck detected".into()))?;
    let pieces = apply_surgery_axi(g, &neck, params)?;
    Ok((neck, pieces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve2d::build_homotopy;
    use crate::neckmodel::{mean_curvature_axi, section_geometry_at};
    use std::f64::consts::TAU;

    fn params(lambda: f64) -> SurgeryParams {
        SurgeryParams::new(0.1, 0.1, 0.05, cap_b(lambda) + 2.0, lambda, 10.0).unwrap()
    }

    #[test]
    fn rho_values() {
        let lam = 7.0;
        assert!((rho(lam, lam).unwrap() - 0.981_684_361_111_265_8).abs() < 1e-15);
        assert!((rho(2.0 * lam, lam).unwrap() - 0.864_664_716_763_387_3).abs() < 1e-15);
        assert_eq!(rho(1e-3 * lam, lam).unwrap(), 1.0);
        assert!(rho(0.0, lam).is_err());
        assert!(rho(-1.0, lam).is_err());
    }

    #[test]
    fn chi_values() {
        assert_eq!(cutoff_chi(0.5), 1.0);
        assert_eq!(cutoff_chi(1.0), 1.0);
        assert_eq!(cutoff_chi(3.0), 0.0);
        assert!((cutoff_chi(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 0..=200 {
            let c = cutoff_chi(1.0 + k as f64 / 200.0);
            assert!(c <= prev);
            prev = c;
        }
    }

    /// `∫ |z − y| η(y) dy` by composite Simpson on the bump support.
    fn phi_quadrature(z: f64) -> f64 {
        let m = 20_000;
        let h = 2.0 * PHI_WIDTH / m as f64;
        let eta = |y: f64| {
            let w = y / PHI_WIDTH;
            (1.0 - w * w).powi(4)
        };
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..=m {
            let y = -PHI_WIDTH + k as f64 * h;
            let wgt = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            num += wgt * (z - y).abs() * eta(y);
            den += wgt * eta(y);
        }
        num / den
    }

    #[test]
    fn phi_values() {
        assert_eq!(smooth_abs_phi(0.5), 0.5);
        assert_eq!(smooth_abs_phi(-0.02), 0.02);
        let p0 = smooth_abs_phi(0.0);
        assert!(p0 > 0.0 && p0 <= 0.01);
        assert!((p0 - 315.0 / 128_000.0).abs() < 1e-17);
        for z in [0.0, 0.001, -0.0037, 0.0062, 0.0099] {
            assert!((smooth_abs_phi(z) - phi_quadrature(z)).abs() < 1e-9, "z={z}");
        }
    }

    #[test]
    fn phi_even_convex_and_c1_at_edge() {
        let h = 1e-5;
        for k in -300..=300 {
            let z = k as f64 * 5e-5;
            assert_eq!(smooth_abs_phi(z), smooth_abs_phi(-z));
            let second = smooth_abs_phi(z + h) - 2.0 * smooth_abs_phi(z) + smooth_abs_phi(z - h);
            assert!(second >= -1e-15, "z={z}");
            assert!(smooth_abs_phi(z) >= z.abs());
        }
        let e = PHI_WIDTH;
        let d_in = (smooth_abs_phi(e) - smooth_abs_phi(e - 1e-7)) / 1e-7;
        assert!((d_in - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cap_a_values_and_threshold() {
        assert!((cap_a(1e5) - 0.999_748_717_391_275_1).abs() < 1e-13);
        assert!(cap_a_admissible(1e5));
        assert!((cap_a(1e30) - 0.981_684_361_111_265_8).abs() < 1e-7);
        // Bisection for a(Λ) = 1.
        let (mut lo, mut hi) = (1e4, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cap_a(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = cap_a_threshold();
        assert!((root - 0.5 * (lo + hi)).abs() < 1e-6 * root);
        assert!((root - 94_624.080_247_645_53).abs() < 1e-6);
        assert!(!cap_a_admissible(root * 0.999) && cap_a_admissible(root * 1.001));
    }

    #[test]
    fn cap_profile_endpoints() {
        let p = params(1e5);
        assert_eq!(cap_profile_v(p.b(), &p).unwrap(), 0.0);
        let v = cap_profile_v(p.lambda, &p).unwrap();
        assert!((v - 2.0 * 0.981_684_361_111_265_8).abs() < 1e-12);
        let s = p.lambda + p.quarter();
        let x = p.b() - s;
        let left = {
            let a = rho_ext(s, p.lambda);
            let bb = p.a() * (x / (p.a() + x)).sqrt();
            a + bb - smooth_abs_phi(p.quarter() * (a - bb)) / p.quarter()
        };
        assert!((left - cap_profile_v(s, &p).unwrap()).abs() <= 1e-12);
        assert!(cap_profile_v(p.lambda - 1.0, &p).is_err());
        assert!(cap_profile_v(p.b() + 1.0, &p).is_err());
    }

    #[test]
    fn cap_profile_smooth_min_identity() {
        let p = params(1e5);
        let q = p.quarter();
        let mut checked = 0;
        for k in 0..=20_000 {
            let s = p.lambda + q * k as f64 / 20_000.0;
            let a = rho_ext(s, p.lambda);
            let x = p.b() - s;
            let bb = p.a() * (x / (p.a() + x)).sqrt();
            if q * (a - bb).abs() >= PHI_WIDTH {
                assert!((cap_profile_v(s, &p).unwrap() - 2.0 * a.min(bb)).abs() < 1e-12);
                checked += 1;
            }
        }
        assert!(checked > 15_000);
    }

    #[test]
    fn cap_profile_c1_and_monotone() {
        let p = params(1e5);
        let q = p.quarter();
        let h = 1e-5;
        let v = |s: f64| cap_profile_v(s, &p).unwrap();
        for k in 1..2000 {
            let s = p.lambda + (q + 1.0) * k as f64 / 2000.0;
            let jump = ((v(s + h) - v(s)) - (v(s) - v(s - h))) / h;
            assert!(jump.abs() <= 1e-6, "s - Λ = {}: {jump}", s - p.lambda);
        }
        let mut prev = v(p.lambda + q);
        for k in 1..=1000 {
            let s = p.lambda + q + (p.b() - p.lambda - q) * k as f64 / 1000.0;
            let cur = v(s);
            assert!(cur < prev);
            prev = cur;
        }
    }

    fn cylinder_neck(p: &SurgeryParams, n: usize, h: f64) -> CrossSectionFamily {
        let m = (2.0 * (p.l - 1.0) / h).round() as usize;
        let grid: Vec<f64> = (0..=m).map(|k| -(p.l - 1.0) + k as f64 * h).collect();
        CrossSectionFamily::cylinder(grid, n, 1.0).unwrap()
    }

    fn perturbed_neck(p: &SurgeryParams, n: usize, h: f64, eps: f64) -> CrossSectionFamily {
        let m = (2.0 * (p.l - 1.0) / h).round() as usize;
        let grid: Vec<f64> = (0..=m).map(|k| -(p.l - 1.0) + k as f64 * h).collect();
        CrossSectionFamily::from_fn(grid, n, 1.0, |s, t| {
            let th = TAU * t;
            let r = 1.0 + eps * ((2.0 * th).cos() * (0.2 * s).sin() + 0.5 * (3.0 * th + 0.1 * s).cos());
            [r * th.cos(), r * th.sin()]
        })
        .unwrap()
    }

    fn modified(neck: &CrossSectionFamily, p: &SurgeryParams) -> ModifiedNeck {
        let h = build_homotopy(&neck.reference_curve().unwrap(), p.delta_hat).unwrap();
        build_modified_neck(neck, p, &h).unwrap()
    }

    #[test]
    fn cylinder_modified_sections_are_circles() {
        let p = params(16.0);
        let neck = cylinder_neck(&p, 64, 0.25);
        let mn = modified(&neck, &p);
        for (s, c) in mn.modified().s_grid().iter().zip(mn.modified().curves()) {
            let expect = if *s <= 0.0 {
                1.0
            } else if *s <= p.lambda {
                rho(*s, p.lambda).unwrap()
            } else {
                0.5 * cap_profile_v(*s, &p).unwrap()
            };
            for x in c.points() {
                assert!((norm(*x) - expect).abs() < 1e-9, "s={s}");
            }
        }
        for j in mn.joins() {
            assert!(j.c0 <= 1e-9, "{j:?}");
        }
        assert!(mn.tip() - mn.modified().s_grid().last().unwrap() <= TIP_GAP);
    }

    #[test]
    fn identity_and_dilation_regions() {
        let p = params(16.0);
        let neck = perturbed_neck(&p, 64, 0.25, 1e-4);
        let mn = modified(&neck, &p);
        let q = p.quarter();
        for (i, (&s, c)) in mn.modified().s_grid().iter().zip(mn.modified().curves()).enumerate() {
            if s <= 0.0 {
                assert_eq!(c, &neck.curves()[i]);
            } else if s <= q {
                let k = rho(s, p.lambda).unwrap();
                for (x, y) in c.points().iter().zip(neck.curves()[i].points()) {
                    assert!((x[0] - k * y[0]).abs() <= 1e-12 && (x[1] - k * y[1]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn axially_symmetric_beyond_half_lambda() {
        let p = params(16.0);
        let neck = perturbed_neck(&p, 64, 0.25, 1e-4);
        let mn = modified(&neck, &p);
        for (&s, c) in mn.modified().s_grid().iter().zip(mn.modified().curves()) {
            if s >= p.lambda / 2.0 && s <= p.lambda {
                let k = rho(s, p.lambda).unwrap();
                for (j, x) in c.points().iter().enumerate() {
                    let th = TAU * j as f64 / 64.0;
                    assert!((x[0] - k * th.cos()).abs() < 1e-9 && (x[1] - k * th.sin()).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn modified_lies_inside_original() {
        let p = params(16.0);
        let neck = perturbed_neck(&p, 64, 0.25, 1e-4);
        let mn = modified(&neck, &p);
        for (&s, c) in mn.modified().s_grid().iter().zip(mn.modified().curves()) {
            if s <= 0.0 {
                continue;
            }
            let orig = neck.section(s.min(*neck.s_grid().last().unwrap()));
            let max_r = orig.iter().map(|x| norm(*x)).fold(0.0, f64::max);
            let bound = rho_ext(s.min(p.lambda), p.lambda) * max_r.max(1.0);
            for x in c.points() {
                assert!(norm(*x) <= bound + 1e-9, "s={s}");
            }
        }
    }

    #[test]
    fn cap_mean_curvature_and_tip_normal() {
        let p = params(16.0);
        let mn = modified(&cylinder_neck(&p, 128, 0.25), &p);
        let a = p.a();
        for k in 0..40 {
            let s = p.lambda + p.quarter() + (p.b() - p.lambda - p.quarter()) * (k as f64 + 0.5) / 40.0;
            let g = section_geometry_at(&mn, s).unwrap();
            for h in &g.mean_curvature {
                assert!(*h >= (1.0 / a) * 0.98, "s={s} H={h}");
            }
        }
        let near = section_geometry_at(&mn, p.b() - 1e-6).unwrap();
        assert!(near.grad_x3.iter().all(|&g| g < 2e-3));
        let mid = section_geometry_at(&mn, p.b() - 1e-2).unwrap();
        assert!(mid.grad_x3[0] > near.grad_x3[0]);
    }

    #[test]
    fn equivariant_under_axial_rotation() {
        let p = params(16.0);
        let n = 64;
        let neck = perturbed_neck(&p, n, 0.25, 1e-4);
        let k = 5;
        let rot = |x: Point| {
            let th = TAU * k as f64 / n as f64;
            [th.cos() * x[0] - th.sin() * x[1], th.sin() * x[0] + th.cos() * x[1]]
        };
        // Rotate and shift labels so vertex j of the rotated curve is R x_{j−k}.
        let relabel = |c: &ClosedCurve2D| {
            let pts = c.points();
            ClosedCurve2D::new((0..n).map(|j| rot(pts[(j + n - k) % n])).collect()).unwrap()
        };
        let rotated =
            CrossSectionFamily::new(neck.s_grid().to_vec(), neck.curves().iter().map(relabel).collect(), 1.0).unwrap();
        let a = modified(&neck, &p);
        let b = modified(&rotated, &p);
        assert_eq!(a.modified().s_grid(), b.modified().s_grid());
        for (ca, cb) in a.modified().curves().iter().zip(b.modified().curves()) {
            let ra = relabel(ca);
            for (x, y) in ra.points().iter().zip(cb.points()) {
                assert!(norm([x[0] - y[0], x[1] - y[1]]) < 1e-9);
            }
        }
    }

    #[test]
    fn homotopy_mismatch_is_rejected() {
        let p = params(16.0);
        let neck = perturbed_neck(&p, 64, 0.25, 1e-3);
        let other = build_homotopy(&ClosedCurve2D::unit_circle(64), p.delta_hat).unwrap();
        assert!(matches!(build_modified_neck(&neck, &p, &other), Err(Error::Mismatch(_))));
        let wrong_n = build_homotopy(&ClosedCurve2D::unit_circle(32), p.delta_hat).unwrap();
        assert!(matches!(build_modified_neck(&neck, &p, &wrong_n), Err(Error::Mismatch(_))));
    }

    #[test]
    fn params_validation_and_json() {
        assert!(SurgeryParams::new(0.1, 0.1, 0.05, 20.0, 16.0, 10.0).is_err());
        assert!(SurgeryParams::new(0.1, 0.1, 0.05, 30.0, -1.0, 10.0).is_err());
        let p = params(16.0);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"Lambda\"") && s.contains("\"a\""));
        assert_eq!(serde_json::from_str::<SurgeryParams>(&s).unwrap(), p);
        let bad = s.replace(&format!("\"b\":{}", p.b()), "\"b\":1.0");
        assert!(serde_json::from_str::<SurgeryParams>(&bad).is_err());
    }

    fn long_cylinder(r: f64, p: &SurgeryParams) -> GeneratingCurve {
        let half = r * (p.l + 4.0);
        GeneratingCurve::cylinder(2000, r, -half, half).unwrap()
    }

    #[test]
    fn axi_surgery_on_cylinder() {
        let p = params(16.0);
        let r = 0.08;
        let g = long_cylinder(r, &p);
        let (neck, pieces) = surgery_on_detected(&g, &p).unwrap();
        assert!((neck.r - r).abs() < 1e-12);
        assert_eq!(pieces.len(), 2);
        assert!(pieces[0].closed_right() && pieces[1].closed_left());
        let bound = 1.0 / (p.a() * r) * 0.98;
        for (idx, piece) in pieces.iter().enumerate() {
            let tip = if idx == 0 { piece.nodes().last().unwrap()[0] } else { piece.nodes()[0][0] };
            for i in 0..piece.len() {
                let from_tip = (piece.nodes()[i][0] - tip).abs() / r;
                if from_tip <= p.b() - p.lambda - p.quarter() {
                    let h = mean_curvature_axi(piece, i).unwrap();
                    assert!(h >= bound, "piece {idx} node {i}: H = {h}, bound {bound}");
                }
            }
        }
        let deficit = g.area() - pieces.iter().map(|c| c.area()).sum::<f64>();
        assert!(deficit >= 0.1 * p.l * r * r, "{deficit}");
    }

    #[test]
    fn axi_surgery_mirror_symmetry() {
        let p = params(16.0);
        let g = long_cylinder(0.08, &p);
        let (_, pieces) = surgery_on_detected(&g, &p).unwrap();
        let (l, r) = (pieces[0].nodes(), pieces[1].nodes());
        assert_eq!(l.len(), r.len());
        for (a, b) in l.iter().zip(r.iter().rev()) {
            assert!((a[0] + b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn axi_surgery_preconditions() {
        let p = params(16.0);
        let sphere = GeneratingCurve::sphere(200, 0.08, 0.0).unwrap();
        assert!(matches!(surgery_on_detected(&sphere, &p), Err(Error::Surgery(_))));
        let g = long_cylinder(0.08, &p);
        let short = Neck { s_center: 0.0, r: 0.08, interval: (-0.5, 0.5) };
        assert!(apply_surgery_axi(&g, &short, &p).is_err());
        let thin = Neck { s_center: 0.0, r: 0.01, interval: (-10.0, 10.0) };
        assert!(apply_surgery_axi(&g, &thin, &p).is_err());
    }
}
