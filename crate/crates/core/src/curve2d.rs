//! Discrete simple closed planar curves.
//!
//! A [`ClosedCurve2D`] is a cyclic polyline sampled at an implicit uniform
//! parameter `t = j/n`. The module supplies the pieces the neck model and the
//! surgery construction need: discrete curvature, center of mass,
//! noncollapsedness, C¹ distance to the unit circle, curve shortening flow and
//! the homotopy that deforms a near-circular cross-section into the round one.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smooth::smooth_step;

pub type Point = [f64; 2];

pub const MIN_VERTICES: usize = 32;
pub const MAX_EDGE_RATIO: f64 = 4.0;

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Simple, positively oriented closed polygon with quasi-uniform sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Point>", try_from = "Vec<Point>")]
pub struct ClosedCurve2D {
    points: Vec<Point>,
}

impl From<ClosedCurve2D> for Vec<Point> {
    fn from(c: ClosedCurve2D) -> Self {
        c.points
    }
}

impl TryFrom<Vec<Point>> for ClosedCurve2D {
    type Error = Error;

    fn try_from(points: Vec<Point>) -> Result<Self> {
        Self::new(points)
    }
}

impl ClosedCurve2D {
    /// Validates and wraps a vertex list.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        if n < MIN_VERTICES {
            return Err(Error::InvalidCurve(format!("{n} vertices, need at least {MIN_VERTICES}")));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidCurve("non-finite vertex".into()));
        }
        let lens: Vec<f64> = (0..n).map(|i| norm(sub(points[(i + 1) % n], points[i]))).collect();
        if let Some(i) = lens.iter().position(|&l| l <= 0.0) {
            return Err(Error::DegenerateEdge(i));
        }
        for i in 0..n {
            let (a, b) = (lens[i], lens[(i + 1) % n]);
            if a.max(b) / a.min(b) > MAX_EDGE_RATIO {
                return Err(Error::InvalidCurve(format!(
                    "edge length ratio {} at vertex {} exceeds {MAX_EDGE_RATIO}",
                    a.max(b) / a.min(b),
                    (i + 1) % n
                )));
            }
        }
        let turning = total_turning(&points);
        if (turning - TAU).abs() > 1e-6 {
            return Err(Error::InvalidCurve(format!("total turning {turning}, expected 2π")));
        }
        let convex = (0..n).all(|i| {
            let prev = points[(i + n - 1) % n];
            let next = points[(i + 1) % n];
            cross(sub(points[i], prev), sub(next, points[i])) > 0.0
        });
        // A locally convex polygon with total turning 2π is simple.
        if !convex && self_intersects(&points) {
            return Err(Error::InvalidCurve("polygon self-intersects".into()));
        }
        Ok(Self { points })
    }

    /// `(cos 2πj/n, sin 2πj/n)` scaled and translated.
    pub fn circle(n: usize, radius: f64, center: Point) -> Result<Self> {
        Self::from_fn(n, |t| {
            let th = TAU * t;
            [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
        })
    }

    /// The sampled unit circle `(cos 2πt, sin 2πt)`.
    pub fn unit_circle(n: usize) -> Self {
        Self::circle(n, 1.0, [0.0, 0.0]).expect("unit circle is valid")
    }

    pub fn ellipse(n: usize, a: f64, b: f64, center: Point) -> Result<Self> {
        Self::from_fn(n, |t| {
            let th = TAU * t;
            [center[0] + a * th.cos(), center[1] + b * th.sin()]
        })
    }

    /// Samples `f(j/n)` for `j = 0..n`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Point) -> Result<Self> {
        Self::new((0..n).map(|j| f(j as f64 / n as f64)).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Result<Self> {
        Self::new(self.points.iter().map(|&p| f(p)).collect())
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|i| norm(sub(self.points[(i + 1) % n], self.points[i]))).collect()
    }

    pub fn min_edge(&self) -> f64 {
        self.edge_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn perimeter(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    /// Signed shoelace area (positive for counter-clockwise curves).
    pub fn area(&self) -> f64 {
        polygon_area(&self.points)
    }

    /// `L² / (4πA)`, equal to 1 for a round circle.
    pub fn isoperimetric_ratio(&self) -> f64 {
        let l = self.perimeter();
        l * l / (4.0 * PI * self.area())
    }

    /// Trapezoid arclength weights: half the two adjacent edge lengths.
    pub fn vertex_weights(&self) -> Vec<f64> {
        let e = self.edge_lengths();
        let n = e.len();
        (0..n).map(|i| 0.5 * (e[i] + e[(i + n - 1) % n])).collect()
    }

    /// Unit tangent at each vertex from the central chord.
    pub fn tangents(&self) -> Vec<Point> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let d = sub(self.points[(i + 1) % n], self.points[(i + n - 1) % n]);
                let l = norm(d);
                [d[0] / l, d[1] / l]
            })
            .collect()
    }

    /// Unit inward normal (left of the tangent for a positively oriented curve).
    pub fn inward_normals(&self) -> Vec<Point> {
        self.tangents().into_iter().map(|t| [-t[1], t[0]]).collect()
    }
}

fn total_turning(points: &[Point]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let a = sub(points[i], points[(i + n - 1) % n]);
            let b = sub(points[(i + 1) % n], points[i]);
            cross(a, b).atan2(dot(a, b))
        })
        .sum()
}

pub(crate) fn polygon_area(points: &[Point]) -> f64 {
    let n = points.len();
    0.5 * (0..n).map(|i| cross(points[i], points[(i + 1) % n])).sum::<f64>()
}

fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(sub(p2, p1), sub(q1, p1));
    let d2 = cross(sub(p2, p1), sub(q2, p1));
    let d3 = cross(sub(q2, q1), sub(p1, q1));
    let d4 = cross(sub(q2, q1), sub(p2, q1));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn self_intersects(points: &[Point]) -> bool {
    let n = points.len();
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(a, b, points[j], points[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

/// Signed Menger curvature at every vertex: `2·(a × b) / (|a||b||a + b|)`.
pub fn curvature(curve: &ClosedCurve2D) -> Result<Vec<f64>> {
    let p = curve.points();
    let n = p.len();
    (0..n)
        .map(|i| {
            let a = sub(p[i], p[(i + n - 1) % n]);
            let b = sub(p[(i + 1) % n], p[i]);
            let c = sub(p[(i + 1) % n], p[(i + n - 1) % n]);
            let denom = norm(a) * norm(b) * norm(c);
            if denom == 0.0 {
                return Err(Error::DegenerateEdge(i));
            }
            Ok(2.0 * cross(a, b) / denom)
        })
        .collect()
}

/// Arclength-weighted barycenter of the polygon.
pub fn center_of_mass(curve: &ClosedCurve2D) -> Point {
    let p = curve.points();
    let n = p.len();
    let (mut sx, mut sy, mut sl) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b) = (p[i], p[(i + 1) % n]);
        let l = norm(sub(b, a));
        sx += 0.5 * (a[0] + b[0]) * l;
        sy += 0.5 * (a[1] + b[1]) * l;
        sl += l;
    }
    [sx / sl, sy / sl]
}

/// `min_i r_i κ_i`, where `r_i` is the radius of the largest disk touching the
/// curve at vertex `i` from the inside and containing no other vertex.
pub fn noncollapsedness_ratio(curve: &ClosedCurve2D) -> Result<f64> {
    let kappa = curvature(curve)?;
    if kappa.iter().any(|&k| k <= 0.0) {
        return Err(Error::NonconvexCurve);
    }
    let p = curve.points();
    let normals = curve.inward_normals();
    let mut ratio = f64::INFINITY;
    for i in 0..p.len() {
        let mut r = f64::INFINITY;
        for (j, &q) in p.iter().enumerate() {
            if j == i {
                continue;
            }
            let d = sub(q, p[i]);
            let h = dot(d, normals[i]);
            if h > 0.0 {
                r = r.min(dot(d, d) / (2.0 * h));
            }
        }
        ratio = ratio.min(r * kappa[i]);
    }
    Ok(ratio)
}

/// Sup-norm C¹ distance to the unit circle after recentering, under the best
/// rotation of the circle's parametrization. Positions are matched by
/// normalized arclength; tangents are unit vectors.
pub fn c1_distance_to_unit_circle(curve: &ClosedCurve2D) -> f64 {
    let com = center_of_mass(curve);
    let p: Vec<Point> = curve.points().iter().map(|&x| sub(x, com)).collect();
    let n = p.len();
    let edges = curve.edge_lengths();
    let total: f64 = edges.iter().sum();
    let mut sigma = Vec::with_capacity(n);
    let mut acc = 0.0;
    for e in &edges {
        sigma.push(acc / total);
        acc += e;
    }
    let tangents = curve.tangents();

    let dist = |phi: f64| -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let th = TAU * sigma[i] + phi;
            let (s, c) = th.sin_cos();
            let dp = norm(sub(p[i], [c, s]));
            let dt = norm(sub(tangents[i], [-s, c]));
            worst = worst.max(dp + dt);
        }
        worst
    };

    let (mut sc, mut ss) = (0.0, 0.0);
    for i in 0..n {
        let th = TAU * sigma[i];
        let e = [th.cos(), th.sin()];
        sc += dot(e, p[i]);
        ss += cross(e, p[i]);
    }
    let phi0 = ss.atan2(sc);
    let (phi, d) = golden_min(&dist, phi0 - 0.05, phi0 + 0.05, 1e-13);
    let d0 = dist(phi0);
    let _ = phi;
    d.min(d0)
}

/// Golden-section search for a minimum of a unimodal function on `[a, b]`.
pub fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Largest stable explicit CSF step for the current sampling.
pub fn csf_dt_limit(curve: &ClosedCurve2D) -> f64 {
    0.25 * curve.min_edge().powi(2)
}

/// One explicit Euler step of curve shortening flow, `x ← x + κ N dt`.
///
/// Vertices are redistributed to uniform arclength (vertex 0 fixed) when the
/// edge-length ratio drifts above 1.5.
pub fn csf_step(curve: &ClosedCurve2D, dt: f64) -> Result<ClosedCurve2D> {
    if dt == 0.0 {
        return Ok(curve.clone());
    }
    let limit = csf_dt_limit(curve);
    if !(dt > 0.0) || dt > limit {
        return Err(Error::TimestepTooLarge { dt, limit });
    }
    let kappa = curvature(curve)?;
    if kappa.iter().any(|&k| k <= 0.0) {
        return Err(Error::NonconvexCurve);
    }
    let p = curve.points();
    let n = p.len();
    let moved: Vec<Point> = (0..n)
        .map(|i| {
            let nrm = {
                let d = sub(p[(i + 1) % n], p[(i + n - 1) % n]);
                let l = norm(d);
                [-d[1] / l, d[0] / l]
            };
            [p[i][0] + kappa[i] * nrm[0] * dt, p[i][1] + kappa[i] * nrm[1] * dt]
        })
        .collect();
    let lens: Vec<f64> = (0..n).map(|i| norm(sub(moved[(i + 1) % n], moved[i]))).collect();
    let ratio = lens.iter().cloned().fold(0.0, f64::max) / lens.iter().cloned().fold(f64::INFINITY, f64::min);
    let out = if ratio > 1.5 { resample_uniform(&moved) } else { moved };
    ClosedCurve2D::new(out)
}

/// Runs CSF for total time `t`, splitting into steps no larger than `dt_max`
/// and no larger than 90% of the stability limit.
pub fn csf_evolve(curve: &ClosedCurve2D, t: f64, dt_max: f64) -> Result<ClosedCurve2D> {
    let mut c = curve.clone();
    let mut elapsed = 0.0;
    while elapsed < t {
        let dt = dt_max.min(0.9 * csf_dt_limit(&c)).min(t - elapsed);
        c = csf_step(&c, dt)?;
        elapsed += dt;
    }
    Ok(c)
}

/// Periodic Catmull-Rom resampling at uniform arclength, keeping vertex 0.
pub(crate) fn resample_uniform(p: &[Point]) -> Vec<Point> {
    let n = p.len();
    let lens: Vec<f64> = (0..n).map(|i| norm(sub(p[(i + 1) % n], p[i]))).collect();
    let total: f64 = lens.iter().sum();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for l in &lens {
        cum.push(cum.last().unwrap() + l);
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for j in 0..n {
        let target = total * j as f64 / n as f64;
        while seg + 1 < n && cum[seg + 1] <= target {
            seg += 1;
        }
        let u = (target - cum[seg]) / lens[seg];
        let p0 = p[(seg + n - 1) % n];
        let p1 = p[seg];
        let p2 = p[(seg + 1) % n];
        let p3 = p[(seg + 2) % n];
        out.push(catmull_rom(p0, p1, p2, p3, u));
    }
    out
}

fn catmull_rom(p0: Point, p1: Point, p2: Point, p3: Point, u: f64) -> Point {
    let u2 = u * u;
    let u3 = u2 * u;
    let mut r = [0.0; 2];
    for k in 0..2 {
        r[k] = 0.5
            * (2.0 * p1[k]
                + (-p0[k] + p2[k]) * u
                + (2.0 * p0[k] - 5.0 * p1[k] + 4.0 * p2[k] - p3[k]) * u2
                + (-p0[k] + 3.0 * p1[k] - 3.0 * p2[k] + p3[k]) * u3);
    }
    r
}

/// Deformation `γ̃_r` of a near-circular curve into the sampled unit circle.
///
/// `r ≤ 1/4` gives the input, `r ≥ 1/2` gives the unit circle, and in between
/// the input is run by area-preserving curve shortening flow for time
/// `σ(x)·T` and blended towards the circle with weight `σ(x)`, `x = 4r − 1`.
#[derive(Debug, Clone, Serialize)]
pub struct Homotopy {
    pub r_grid: Vec<f64>,
    pub curves: Vec<ClosedCurve2D>,
    pub omega: f64,
    #[serde(skip)]
    input: ClosedCurve2D,
    #[serde(skip)]
    flow_times: Vec<f64>,
    #[serde(skip)]
    flow_states: Vec<Vec<Point>>,
    #[serde(skip)]
    circle: Vec<Point>,
}

pub const HOMOTOPY_GRID: usize = 64;
const HOMOTOPY_FLOW_STATES: usize = 64;

impl Homotopy {
    pub fn input(&self) -> &ClosedCurve2D {
        &self.input
    }

    /// Evaluates `γ̃_r` at an arbitrary `r ∈ [0, 1]`.
    pub fn slice(&self, r: f64) -> Vec<Point> {
        if r <= 0.25 {
            return self.input.points().to_vec();
        }
        if r >= 0.5 {
            return self.circle.clone();
        }
        let w = smooth_step(4.0 * r - 1.0);
        let flowed = self.flow_at(w * self.flow_times.last().copied().unwrap_or(0.0));
        let com0 = center_of_mass(&self.input);
        let com = centroid_by_length(&flowed);
        let k = (self.input.area() / polygon_area(&flowed)).sqrt();
        flowed
            .iter()
            .zip(&self.circle)
            .map(|(&x, &c)| {
                let y = [com0[0] + k * (x[0] - com[0]), com0[1] + k * (x[1] - com[1])];
                [(1.0 - w) * y[0] + w * c[0], (1.0 - w) * y[1] + w * c[1]]
            })
            .collect()
    }

    fn flow_at(&self, t: f64) -> Vec<Point> {
        let times = &self.flow_times;
        if times.len() == 1 || t <= 0.0 {
            return self.flow_states[0].clone();
        }
        let last = times.len() - 1;
        if t >= times[last] {
            return self.flow_states[last].clone();
        }
        let k = times.partition_point(|&x| x <= t).saturating_sub(1).min(last - 1);
        let u = (t - times[k]) / (times[k + 1] - times[k]);
        self.flow_states[k]
            .iter()
            .zip(&self.flow_states[k + 1])
            .map(|(a, b)| [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])])
            .collect()
    }
}

fn centroid_by_length(p: &[Point]) -> Point {
    let n = p.len();
    let (mut sx, mut sy, mut sl) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b) = (p[i], p[(i + 1) % n]);
        let l = norm(sub(b, a));
        sx += 0.5 * (a[0] + b[0]) * l;
        sy += 0.5 * (a[1] + b[1]) * l;
        sl += l;
    }
    [sx / sl, sy / sl]
}

/// Builds the homotopy from `curve` to the unit circle and records the
/// measured `ω = sup |∂_r γ̃| + |∂²_{rt} γ̃| + |∂²_{rr} γ̃|`.
pub fn build_homotopy(curve: &ClosedCurve2D, delta_hat: f64) -> Result<Homotopy> {
    let threshold = 1.0 / (1.0 + delta_hat);
    let ratio = noncollapsedness_ratio(curve).map_err(|e| Error::NotDeltaClose(e.to_string()))?;
    if ratio < threshold {
        return Err(Error::NotDeltaClose(format!("noncollapsedness {ratio} < {threshold}")));
    }
    let dist = c1_distance_to_unit_circle(curve);
    if dist > delta_hat {
        return Err(Error::NotDeltaClose(format!("C¹ distance {dist} > {delta_hat}")));
    }
    let n = curve.len();

    // Area-preserving normalization is applied per slice; the raw flow is stored.
    let total_time = 0.05 * curve.area() / PI;
    let mut flow_times = vec![0.0];
    let mut flow_states = vec![curve.points().to_vec()];
    let mut state = curve.clone();
    for k in 1..=HOMOTOPY_FLOW_STATES {
        let dt = total_time / HOMOTOPY_FLOW_STATES as f64;
        state = csf_evolve(&state, dt, f64::INFINITY)?;
        flow_times.push(dt * k as f64);
        flow_states.push(state.points().to_vec());
    }

    let mut h = Homotopy {
        r_grid: Vec::new(),
        curves: Vec::new(),
        omega: 0.0,
        input: curve.clone(),
        flow_times,
        flow_states,
        circle: ClosedCurve2D::unit_circle(n).into_points(),
    };

    let m = HOMOTOPY_GRID;
    let r_grid: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
    let mut curves = Vec::with_capacity(m + 1);
    for &r in &r_grid {
        let c = ClosedCurve2D::new(h.slice(r))?;
        let nc = noncollapsedness_ratio(&c)?;
        if nc < threshold - 1e-6 {
            return Err(Error::Numerical(format!(
                "homotopy slice r = {r} has noncollapsedness {nc} < {threshold}"
            )));
        }
        curves.push(c);
    }
    h.omega = measure_omega(&r_grid, &curves);
    h.r_grid = r_grid;
    h.curves = curves;
    Ok(h)
}

fn measure_omega(r_grid: &[f64], curves: &[ClosedCurve2D]) -> f64 {
    let m = r_grid.len();
    let n = curves[0].len();
    let dr = r_grid[1] - r_grid[0];
    let dt = 1.0 / n as f64;
    let mut omega: f64 = 0.0;
    for k in 1..m - 1 {
        let (a, b, c) = (curves[k - 1].points(), curves[k].points(), curves[k + 1].points());
        let d_r = |j: usize| -> Point { [(c[j][0] - a[j][0]) / (2.0 * dr), (c[j][1] - a[j][1]) / (2.0 * dr)] };
        for j in 0..n {
            let drj = d_r(j);
            let drr = [
                (c[j][0] - 2.0 * b[j][0] + a[j][0]) / (dr * dr),
                (c[j][1] - 2.0 * b[j][1] + a[j][1]) / (dr * dr),
            ];
            let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
            let drt = sub(d_r(jp), d_r(jm));
            let drt = [drt[0] / (2.0 * dt), drt[1] / (2.0 * dt)];
            omega = omega.max(norm(drj) + norm(drt) + norm(drr));
        }
    }
    omega
}
