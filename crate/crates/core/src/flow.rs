//! Axisymmetric mean curvature flow with surgery.
//!
//! Each component is a generating curve. One step solves
//! `(I − dt·D_ℓℓ) X⁺ = X + dt·R(X)`, where `D_ℓℓ` is the three-point second
//! difference in arclength and `R = −(t_s/u)·n_out` is the rotational part of
//! `−H·n_out`, taken explicitly. Poles move along the axis with speed `H = 2κ`;
//! open ends are reflective (fixed `s`, zero `du/dℓ`).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::curve2d::{norm, Point};
use crate::error::{Error, Result};
use crate::gaussfunc::{gaussian_density, monotone_quantity};
use crate::neckmodel::{detect_neck, GeneratingCurve, Neck};
use crate::smooth::smooth_step;
use crate::surgery::{apply_surgery_axi, SurgeryParams};

/// Numerical controls shared by the stepper, regridding and trigger logic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowNumerics {
    /// Largest node spacing.
    pub h_base: f64,
    /// Node spacing is at most `curvature_resolution / |H|`.
    pub curvature_resolution: f64,
    /// `dt ≤ dt_spacing_factor · h_min²`.
    pub dt_spacing_factor: f64,
    /// `dt ≤ dt_curvature_factor / H_max²`.
    pub dt_curvature_factor: f64,
    /// A detected neck is cut once `H_max ≥ trigger_h_factor · H₁` ...
    pub trigger_h_factor: f64,
    /// ... or once its radius is `≤ 1/(trigger_radius_factor · H₁)`.
    pub trigger_radius_factor: f64,
    /// Above `hard_cap_factor · H₁` a component without a neck must be a round point.
    pub hard_cap_factor: f64,
    pub max_steps: usize,
}

impl Default for FlowNumerics {
    fn default() -> Self {
        Self {
            h_base: 0.02,
            curvature_resolution: 0.1,
            dt_spacing_factor: 0.2,
            dt_curvature_factor: 0.005,
            trigger_h_factor: 10.0,
            trigger_radius_factor: 1.8,
            hard_cap_factor: 50.0,
            max_steps: 2_000_000,
        }
    }
}

/// Solves a tridiagonal system in place (Thomas algorithm). `a` is the
/// subdiagonal (`a[0]` unused), `c` the superdiagonal (`c[n−1]` unused).
fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) {
    let n = d.len();
    let mut cp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    d[0] /= b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = if i + 1 < n { c[i] / m } else { 0.0 };
        d[i] = (d[i] - a[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}

fn dist(a: Point, b: Point) -> f64 {
    norm([b[0] - a[0], b[1] - a[1]])
}

/// One semi-implicit step of length `dt`.
pub fn mcf_step(g: &GeneratingCurve, dt: f64) -> Result<GeneratingCurve> {
    if dt == 0.0 {
        return Ok(g.clone());
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt = {dt}")));
    }
    let x = g.nodes();
    let n = x.len();
    let h = g.mean_curvatures();
    let mut sys_s = (vec![0.0; n], vec![1.0; n], vec![0.0; n], vec![0.0; n]);
    let mut sys_u = (vec![0.0; n], vec![1.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let p = x[i];
        if g.is_pole(i) {
            let inward = if i == 0 { 1.0 } else { -1.0 };
            sys_s.3[i] = p[0] + dt * h[i] * inward;
            sys_u.3[i] = 0.0;
            continue;
        }
        if i == 0 || i == n - 1 {
            let j = if i == 0 { 1 } else { n - 2 };
            let hh = dist(p, x[j]);
            let w = 2.0 / (hh * hh);
            sys_s.3[i] = p[0];
            sys_u.1[i] = 1.0 + dt * w;
            if i == 0 {
                sys_u.2[i] = -dt * w;
            } else {
                sys_u.0[i] = -dt * w;
            }
            sys_u.3[i] = p[1] - dt / p[1];
            continue;
        }
        let (hm, hp) = (dist(x[i - 1], p), dist(p, x[i + 1]));
        let wm = 2.0 / (hm * (hm + hp));
        let wp = 2.0 / (hp * (hm + hp));
        let t = g.tangent(i);
        let nout = [-t[1], t[0]];
        let rot = -t[0] / p[1];
        for (sys, k) in [(&mut sys_s, 0usize), (&mut sys_u, 1usize)] {
            sys.0[i] = -dt * wm;
            sys.1[i] = 1.0 + dt * (wm + wp);
            sys.2[i] = -dt * wp;
            sys.3[i] = p[k] + dt * rot * nout[k];
        }
    }
    let (a, b, c, mut s_new) = sys_s;
    solve_tridiagonal(&a, &b, &c, &mut s_new);
    let (a, b, c, mut u_new) = sys_u;
    solve_tridiagonal(&a, &b, &c, &mut u_new);
    let nodes: Vec<Point> = (0..n)
        .map(|i| [s_new[i], if g.is_pole(i) { 0.0 } else { u_new[i] }])
        .collect();
    if nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::Numerical("non-finite node after step".into()));
    }
    GeneratingCurve::new(nodes, g.closed_left(), g.closed_right())
        .map_err(|e| Error::Numerical(format!("step produced an invalid profile: {e}")))
}

/// Largest stable step for `g` under `num`.
pub fn stable_dt(g: &GeneratingCurve, num: &FlowNumerics) -> f64 {
    let h_min = g.nodes().windows(2).map(|w| dist(w[0], w[1])).fold(f64::INFINITY, f64::min);
    let h_max = g.mean_curvatures().iter().map(|h| h.abs()).fold(0.0, f64::max);
    let by_h = if h_max > 0.0 { num.dt_curvature_factor / (h_max * h_max) } else { f64::INFINITY };
    (num.dt_spacing_factor * h_min * h_min).min(by_h)
}

/// Local target spacing at each node.
fn target_spacing(g: &GeneratingCurve, num: &FlowNumerics) -> Vec<f64> {
    let h = g.mean_curvatures();
    let mut dens: Vec<f64> = (0..g.len())
        .map(|i| {
            let curv = h[i].abs().max(g.profile_curvature(i).abs());
            (1.0 / num.h_base).max(curv / num.curvature_resolution)
        })
        .collect();
    for _ in 0..3 {
        let prev = dens.clone();
        for i in 0..dens.len() {
            let (l, r) = (prev[i.saturating_sub(1)], prev[(i + 1).min(dens.len() - 1)]);
            dens[i] = prev[i].max(0.25 * (l + 2.0 * prev[i] + r));
        }
    }
    dens.iter().map(|d| 1.0 / d).collect()
}

/// True when some edge is far from its target spacing.
pub fn needs_regrid(g: &GeneratingCurve, num: &FlowNumerics) -> bool {
    let target = target_spacing(g, num);
    g.nodes().windows(2).enumerate().any(|(i, w)| {
        let t = target[i].min(target[i + 1]);
        let e = dist(w[0], w[1]);
        e > 1.6 * t || e < 0.4 * t
    })
}

/// Resamples `g` equidistributing the curvature-based node density; endpoints
/// are kept exactly and interior points come from cubic Hermite
/// interpolation in arclength.
pub fn redistribute(g: &GeneratingCurve, num: &FlowNumerics) -> Result<GeneratingCurve> {
    let x = g.nodes();
    let n = x.len();
    let mut ell = vec![0.0; n];
    for i in 1..n {
        ell[i] = ell[i - 1] + dist(x[i - 1], x[i]);
    }
    let dens: Vec<f64> = target_spacing(g, num).iter().map(|h| 1.0 / h).collect();
    let mut mass = vec![0.0; n];
    for i in 1..n {
        mass[i] = mass[i - 1] + 0.5 * (dens[i - 1] + dens[i]) * (ell[i] - ell[i - 1]);
    }
    let total = mass[n - 1];
    let m = (total.ceil() as usize).max(8);
    let slopes: Vec<Point> = (0..n)
        .map(|i| {
            let (a, b) = g.neighbors(i);
            let (hm, hp) = (dist(a, x[i]), dist(x[i], b));
            let mut r = [0.0; 2];
            for k in 0..2 {
                r[k] = ((b[k] - x[i][k]) / hp * hm + (x[i][k] - a[k]) / hm * hp) / (hm + hp);
            }
            r
        })
        .collect();
    let mut out = Vec::with_capacity(m + 1);
    out.push(x[0]);
    let mut k = 0;
    for j in 1..m {
        let target = total * j as f64 / m as f64;
        while k + 2 < n && mass[k + 1] < target {
            k += 1;
        }
        let seg_mass = mass[k + 1] - mass[k];
        let frac = if seg_mass > 0.0 { ((target - mass[k]) / seg_mass).clamp(0.0, 1.0) } else { 0.0 };
        let hk = ell[k + 1] - ell[k];
        let u = frac;
        let (h00, h10, h01, h11) =
            (2.0 * u.powi(3) - 3.0 * u * u + 1.0, u.powi(3) - 2.0 * u * u + u, -2.0 * u.powi(3) + 3.0 * u * u, u.powi(3) - u * u);
        let mut p = [0.0; 2];
        for c in 0..2 {
            p[c] = h00 * x[k][c] + h10 * hk * slopes[k][c] + h01 * x[k + 1][c] + h11 * hk * slopes[k + 1][c];
        }
        out.push(p);
    }
    out.push(x[n - 1]);
    GeneratingCurve::new(out, g.closed_left(), g.closed_right())
        .map_err(|e| Error::Numerical(format!("regridding produced an invalid profile: {e}")))
}

/// Outcome of a component whose curvature exceeded the hard cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extinction {
    RoundPoint,
    NeckSingular,
    Unresolved,
}

/// Relaxed relative variation for neck recognition at a pinch.
pub const PINCH_EPS: f64 = 0.25;

/// Round point: closed at both ends, convex profile, length at most twice the
/// diameter. Neck-singular: a short neck around the thinnest tube node.
pub fn classify_extinction(g: &GeneratingCurve) -> Extinction {
    let (s0, s1) = g.s_range();
    let convex = (0..g.len()).all(|i| g.profile_curvature(i) < 0.0);
    let aspect = (s1 - s0) / (2.0 * g.max_radius());
    if g.closed_left() && g.closed_right() && convex && aspect <= 2.0 {
        return Extinction::RoundPoint;
    }
    if let Some(u_min) = thinnest_tube(g).filter(|&u| u > 0.0) {
        if detect_neck(g, 1.0 / (u_min * (1.0 + PINCH_EPS)), PINCH_EPS, 1.0).is_some() {
            return Extinction::NeckSingular;
        }
    }
    Extinction::Unresolved
}

/// Initial profiles available from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialShape {
    Sphere { radius: f64 },
    /// Cylinder of the given radius and tube length closed by hemispheres.
    Capsule { radius: f64, length: f64 },
    /// Open cylinder with reflective ends.
    Cylinder { radius: f64, length: f64 },
    /// Two spheres of radius `bulb` centered at `±separation/2`, joined by a
    /// tube of radius `waist`.
    Dumbbell { bulb: f64, waist: f64, separation: f64 },
}

impl InitialShape {
    pub fn build(&self, num: &FlowNumerics) -> Result<GeneratingCurve> {
        let g = match *self {
            InitialShape::Sphere { radius } => {
                let h = num.h_base.min(num.curvature_resolution * radius / 2.0);
                let n = ((std::f64::consts::PI * radius / h).ceil() as usize).max(16);
                GeneratingCurve::sphere(n, radius, 0.0)?
            }
            InitialShape::Capsule { radius, length } => {
                let h = num.h_base.min(num.curvature_resolution * radius / 2.0);
                GeneratingCurve::capsule(radius, -0.5 * length, 0.5 * length, h)?
            }
            InitialShape::Cylinder { radius, length } => {
                let h = num.h_base.min(num.curvature_resolution * radius);
                let n = ((length / h).ceil() as usize).max(4);
                GeneratingCurve::cylinder(n, radius, -0.5 * length, 0.5 * length)?
            }
            InitialShape::Dumbbell { bulb, waist, separation } => dumbbell(bulb, waist, separation, num)?,
        };
        redistribute(&g, num)
    }
}

fn dumbbell(bulb: f64, waist: f64, separation: f64, num: &FlowNumerics) -> Result<GeneratingCurve> {
    let c = 0.5 * separation;
    if !(waist > 0.0 && waist < bulb && c >= bulb) {
        return Err(Error::Config("dumbbell needs 0 < waist < bulb ≤ separation/2".into()));
    }
    // Tube for |s| ≤ c − bulb, smooth ramp up to the equator at |s| = c, sphere beyond.
    let profile = |s: f64| {
        let x = s.abs();
        if x >= c {
            (bulb * bulb - (x - c).powi(2)).max(0.0).sqrt()
        } else {
            waist + (bulb - waist) * smooth_step((x - (c - bulb)) / bulb)
        }
    };
    let h = num.h_base.min(num.curvature_resolution * waist);
    let total = 2.0 * (c + bulb);
    let m = ((total / h).ceil() as usize).max(64);
    // Angle-uniform sampling on the outer caps keeps the poles transverse.
    let mut nodes = Vec::new();
    let k_cap = ((std::f64::consts::FRAC_PI_2 * bulb / h).ceil() as usize).max(8);
    for k in 0..k_cap {
        let th = std::f64::consts::PI - std::f64::consts::FRAC_PI_2 * k as f64 / k_cap as f64;
        nodes.push([-c + bulb * th.cos(), if k == 0 { 0.0 } else { bulb * th.sin() }]);
    }
    let m_mid = ((2.0 * c / total) * m as f64).ceil() as usize;
    for k in 0..m_mid {
        let s = -c + 2.0 * c * k as f64 / m_mid as f64;
        nodes.push([s, profile(s)]);
    }
    for k in 0..=k_cap {
        let th = std::f64::consts::FRAC_PI_2 - std::f64::consts::FRAC_PI_2 * k as f64 / k_cap as f64;
        nodes.push([c + bulb * th.cos(), if k == k_cap { 0.0 } else { bulb * th.sin() }]);
    }
    GeneratingCurve::new(nodes, true, true)
}

/// A probe point and reference time for `G` and `Θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub p: [f64; 3],
    pub t0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowState {
    pub t: f64,
    pub components: Vec<GeneratingCurve>,
    pub ids: Vec<usize>,
    pub extinct_ids: Vec<usize>,
}

impl FlowState {
    pub fn new(components: Vec<GeneratingCurve>) -> Self {
        let ids = (0..components.len()).collect();
        Self { t: 0.0, components, ids, extinct_ids: Vec::new() }
    }

    pub fn area(&self) -> f64 {
        self.components.iter().map(|c| c.area()).sum()
    }

    pub fn h_max(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.mean_curvatures())
            .fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.mean_curvatures())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SurgeryEvent {
    pub t_surgery: f64,
    pub s_center: f64,
    pub r: f64,
    pub interval: (f64, f64),
    pub parent: usize,
    pub children: Vec<usize>,
    pub pre_area: f64,
    pub post_area: f64,
    /// Index of the pre-surgery snapshot; the post-surgery one follows it.
    pub snapshot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotKind {
    Regular,
    PreSurgery,
    PostSurgery,
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub kind: SnapshotKind,
    pub state: FlowState,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub area: f64,
    pub h_max: f64,
    pub n_components: usize,
    /// `G` per probe; NaN where `t ≥ t₀`.
    pub g: Vec<f64>,
    /// `Θ` per probe; NaN where `t ≥ t₀`.
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowTrajectory {
    pub snapshots: Vec<Snapshot>,
    pub events: Vec<SurgeryEvent>,
    pub series: Vec<SeriesRow>,
    pub probes: Vec<Probe>,
    pub h1: f64,
}

impl FlowTrajectory {
    /// CSV with columns `t, area, H_max, n_components, G_0.., Theta_0..`.
    pub fn write_series_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string(), "area".into(), "H_max".into(), "n_components".into()];
        header.extend((0..self.probes.len()).map(|i| format!("G_{i}")));
        header.extend((0..self.probes.len()).map(|i| format!("Theta_{i}")));
        wr.write_record(&header)?;
        for r in &self.series {
            let mut rec = vec![r.t.to_string(), r.area.to_string(), r.h_max.to_string(), r.n_components.to_string()];
            rec.extend(r.g.iter().map(|v| v.to_string()));
            rec.extend(r.theta.iter().map(|v| v.to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn series_row(state: &FlowState, probes: &[Probe], h1: f64) -> Result<SeriesRow> {
    let mut g = Vec::with_capacity(probes.len());
    let mut theta = Vec::with_capacity(probes.len());
    for pr in probes {
        let tau = pr.t0 - state.t;
        if tau > 0.0 {
            g.push(monotone_quantity(state.components.as_slice(), pr.p, pr.t0, state.t, h1)?.value);
            theta.push(gaussian_density(state.components.as_slice(), pr.p, tau)?.value);
        } else {
            g.push(f64::NAN);
            theta.push(f64::NAN);
        }
    }
    Ok(SeriesRow {
        t: state.t,
        area: state.area(),
        h_max: state.h_max(),
        n_components: state.components.len(),
        g,
        theta,
    })
}

/// Radius of the thinnest tube-like node (|du/dℓ| small), if any.
fn thinnest_tube(g: &GeneratingCurve) -> Option<f64> {
    (0..g.len())
        .filter(|&i| !g.is_pole(i) && g.tangent(i)[1].abs() <= crate::neckmodel::NECK_SLOPE)
        .map(|i| g.nodes()[i][1])
        .min_by(f64::total_cmp)
}

/// Options for [`run_with_surgery`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub t_end: f64,
    pub snapshot_dt: f64,
    #[serde(default)]
    pub numerics: FlowNumerics,
}

/// Evolves all components to `t_end`, performing surgery on detected necks
/// and recording `G` and `Θ` at each probe.
pub fn run_with_surgery(
    initial: FlowState,
    params: &SurgeryParams,
    probes: &[Probe],
    opts: &RunOptions,
) -> Result<FlowTrajectory> {
    let num = &opts.numerics;
    let h1 = params.h1;
    if !params.a_admissible() {
        log::warn!("Λ = {} gives a = {} ≥ 1; simulation-grade surgery", params.lambda, params.a());
    }
    for (i, c) in initial.components.iter().enumerate() {
        let hmin = c.mean_curvatures().iter().cloned().fold(f64::INFINITY, f64::min);
        if !(hmin > 0.0) {
            return Err(Error::InvalidParameter(format!("component {i} is not mean convex (min H = {hmin})")));
        }
    }
    let mut state = initial;
    let mut next_id = state.ids.iter().max().map_or(0, |m| m + 1);
    let mut traj = FlowTrajectory { snapshots: Vec::new(), events: Vec::new(), series: Vec::new(), probes: probes.to_vec(), h1 };
    let record = |traj: &mut FlowTrajectory, state: &FlowState, kind: SnapshotKind| -> Result<()> {
        traj.series.push(series_row(state, probes, h1)?);
        traj.snapshots.push(Snapshot { kind, state: state.clone() });
        Ok(())
    };
    record(&mut traj, &state, SnapshotKind::Regular)?;
    let mut next_snap = state.t + opts.snapshot_dt;
    let mut steps = 0usize;
    while state.t < opts.t_end && !state.components.is_empty() {
        steps += 1;
        if steps > num.max_steps {
            return Err(Error::Numerical(format!("exceeded {} steps at t = {}", num.max_steps, state.t)));
        }
        let mut dt = state.components.iter().map(|c| stable_dt(c, num)).fold(f64::INFINITY, f64::min);
        dt = dt.min(next_snap - state.t).min(opts.t_end - state.t);
        let mut stepped = Vec::with_capacity(state.components.len());
        for c in &state.components {
            let mut g = mcf_step(c, dt).map_err(|e| match e {
                Error::Numerical(_) => Error::SingularWithoutNeck(state.t),
                e => e,
            })?;
            if needs_regrid(&g, num) {
                g = redistribute(&g, num)?;
            }
            stepped.push(g);
        }
        state.components = stepped;
        state.t += dt;
        let snap_due = state.t >= next_snap - 1e-12 * opts.snapshot_dt || state.t >= opts.t_end;

        let mut event_here = false;
        let mut k = 0;
        while k < state.components.len() {
            let g = &state.components[k];
            let h_max = g.mean_curvatures().iter().cloned().fold(0.0, f64::max);
            let neck: Option<Neck> = detect_neck(g, h1, params.eps, params.l).filter(|nk| {
                h_max >= num.trigger_h_factor * h1 || nk.r <= 1.0 / (num.trigger_radius_factor * h1)
            });
            if let Some(neck) = neck {
                let pieces = apply_surgery_axi(g, &neck, params)?;
                let pre_area = state.area();
                let snapshot = traj.snapshots.len();
                record(&mut traj, &state, SnapshotKind::PreSurgery)?;
                let parent = state.ids[k];
                let children: Vec<usize> = (0..pieces.len()).map(|j| next_id + j).collect();
                next_id += pieces.len();
                let n_new = pieces.len();
                state.components.splice(k..=k, pieces);
                state.ids.splice(k..=k, children.iter().copied());
                let post_area = state.area();
                record(&mut traj, &state, SnapshotKind::PostSurgery)?;
                log::info!("surgery at t = {} on component {parent}: r = {}, s = {}", state.t, neck.r, neck.s_center);
                traj.events.push(SurgeryEvent {
                    t_surgery: state.t,
                    s_center: neck.s_center,
                    r: neck.r,
                    interval: neck.interval,
                    parent,
                    children,
                    pre_area,
                    post_area,
                    snapshot,
                });
                event_here = true;
                k += n_new;
                continue;
            }
            if h_max >= num.hard_cap_factor * h1 {
                match classify_extinction(g) {
                    Extinction::RoundPoint => {
                        log::info!("component {} extinct at t = {}", state.ids[k], state.t);
                        state.extinct_ids.push(state.ids[k]);
                        state.components.remove(k);
                        state.ids.remove(k);
                        continue;
                    }
                    other => {
                        return Err(Error::NoNeckAtBlowup(format!(
                            "component {} at t = {} classified {other:?}",
                            state.ids[k], state.t
                        )))
                    }
                }
            }
            k += 1;
        }
        if snap_due {
            if !event_here {
                record(&mut traj, &state, SnapshotKind::Regular)?;
            }
            while next_snap <= state.t + 1e-12 * opts.snapshot_dt {
                next_snap += opts.snapshot_dt;
            }
        }
    }
    if traj.snapshots.last().is_some_and(|s| s.state.t < state.t) {
        record(&mut traj, &state, SnapshotKind::Regular)?;
    }
    Ok(traj)
}

/// True if no two component profiles cross.
pub fn components_disjoint(components: &[GeneratingCurve]) -> bool {
    for i in 0..components.len() {
        for j in i + 1..components.len() {
            let (a0, a1) = components[i].s_range();
            let (b0, b1) = components[j].s_range();
            if a1 < b0 || b1 < a0 {
                continue;
            }
            if profiles_cross(components[i].nodes(), components[j].nodes()) {
                return false;
            }
        }
    }
    true
}

fn profiles_cross(p: &[Point], q: &[Point]) -> bool {
    let cr = |o: Point, a: Point, b: Point| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    for a in p.windows(2) {
        for b in q.windows(2) {
            let d1 = cr(a[0], a[1], b[0]);
            let d2 = cr(a[0], a[1], b[1]);
            let d3 = cr(b[0], b[1], a[0]);
            let d4 = cr(b[0], b[1], a[1]);
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                return true;
            }
        }
    }
    false
}
