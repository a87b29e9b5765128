//! Batch front-end: one subcommand per mode, JSON configs in, JSON reports
//! and CSV tables out. Every file is written to a temporary sibling and
//! renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{run_with_surgery, FlowNumerics, FlowState, FlowTrajectory, InitialShape, Probe, RunOptions};
use crate::neckmodel::{section_geometry_at, CrossSectionFamily, SectionSource};
use crate::surgery::{cap_b, ModifiedNeck, SurgeryParams};
use crate::verify::{
    check_corollary_constants, check_density_after_surgery, check_flow_monotonicity, check_integrated_surgery_inequality,
    check_lemma1, check_lemma2_scaling, check_per_height_inequality, check_scalar_inequalities, cylinder_neck_pair,
    theorem_params, CheckReport, CurveSample, IntegratedGrid, SurgeryGrid, TauQGrid,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mcfs", version, about = "Mean curvature flow with surgery: verification sweeps and simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Static inequality sweeps; writes one JSON report per check.
    VerifyStatic(CommonArgs),
    /// Flow with surgery; writes the series CSV, events and reports.
    Simulate(CommonArgs),
    /// Builds N and Ñ and writes per-height geometry tables.
    SurgeryDemo(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON configuration; defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Refuse parameters outside the theorem's admissible range.
    #[arg(long, action = ArgAction::Set)]
    pub theorem_mode: Option<bool>,
    /// Worker threads for parallel sweeps.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub theorem_mode: bool,
    pub sample: CurveSample,
    pub lemma_grid: TauQGrid,
    pub rhos: Vec<f64>,
    pub surgery_grid: SurgeryGrid,
    /// Defaults to [`IntegratedGrid::default_for`] at the configured `Λ`.
    pub integrated_grid: Option<IntegratedGrid>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            theorem_mode: true,
            sample: CurveSample::default(),
            lemma_grid: TauQGrid::lemma_default(),
            rhos: (1..=10).map(|k| 0.1 * k as f64).collect(),
            surgery_grid: SurgeryGrid::default(),
            integrated_grid: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgeryConfig {
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub eps: f64,
    pub delta_hat: f64,
    #[serde(default = "default_alpha_hat")]
    pub alpha_hat: f64,
}

fn default_alpha_hat() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub initial: InitialShape,
    #[serde(rename = "H1")]
    pub h1: f64,
    pub surgery: SurgeryConfig,
    pub t_end: f64,
    pub snapshot_dt: f64,
    pub probes: Vec<Probe>,
    #[serde(default)]
    pub numerics: FlowNumerics,
    #[serde(default)]
    pub theorem_mode: bool,
    #[serde(default = "default_monotonicity_tolerance")]
    pub monotonicity_tolerance: f64,
    #[serde(default)]
    pub dump_snapshots: bool,
}

fn default_monotonicity_tolerance() -> f64 {
    1e-2
}

impl Default for SimulateConfig {
    /// The capsule scenario: one surgery on a tube of radius 0.06 at `H₁ = 10`.
    fn default() -> Self {
        Self {
            initial: InitialShape::Capsule { radius: 0.06, length: 6.0 },
            h1: 10.0,
            surgery: SurgeryConfig { lambda: 16.0, l: 26.0, eps: 0.02, delta_hat: 0.1, alpha_hat: 0.1 },
            t_end: 1e-3,
            snapshot_dt: 2e-5,
            probes: vec![
                Probe { p: [0.0, 0.0, 0.0], t0: 0.006 },
                Probe { p: [0.0, 0.0, 0.0], t0: 0.01 },
                Probe { p: [0.0, 0.0, 1.0], t0: 0.006 },
                Probe { p: [0.03, 0.0, 0.5], t0: 0.008 },
                Probe { p: [0.0, 0.0, 1.5], t0: 0.006 },
            ],
            numerics: FlowNumerics { h_base: 0.006, ..FlowNumerics::default() },
            theorem_mode: false,
            monotonicity_tolerance: 1e-2,
            dump_snapshots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub n_vertices: usize,
    /// Defaults to `b + 2`.
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub theorem_mode: bool,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self { lambda: 1e5, n_vertices: 64, l: None, theorem_mode: true }
    }
}

/// Maps an error to its exit code: configuration and I/O problems are usage
/// errors, everything raised while computing is numerical.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::InvalidParameter(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn load_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("output directory {}: {e}", dir.display())))?;
    let probe = dir.join(format!(".write-test-{}", std::process::id()));
    fs::write(&probe, b"").map_err(|e| Error::Config(format!("output directory {} is not writable: {e}", dir.display())))?;
    fs::remove_file(&probe)?;
    Ok(())
}

fn summarize(reports: &[&CheckReport]) -> bool {
    let mut ok = true;
    for r in reports {
        println!("{:<32} {} min_slack = {:e}", r.check, if r.pass { "PASS" } else { "FAIL" }, r.min_slack);
        ok &= r.pass;
    }
    ok
}

pub fn run_verify_static(args: &CommonArgs) -> Result<bool> {
    let mut cfg: VerifyConfig = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.sample.seed = seed;
    }
    if let Some(tm) = args.theorem_mode {
        cfg.theorem_mode = tm;
    }
    prepare_out(&args.out)?;
    let params = theorem_params(cfg.surgery_grid.lambda)?;
    if !params.a_admissible() {
        let msg = format!("Λ = {} gives a = {} ≥ 1", params.lambda, params.a());
        if cfg.theorem_mode {
            return Err(Error::Config(format!("{msg}; theorem mode requires a < 1")));
        }
        log::warn!("{msg}");
    }
    let reports = vec![
        check_scalar_inequalities(),
        check_corollary_constants(),
        check_lemma1(&cfg.sample, &cfg.lemma_grid)?,
        check_lemma2_scaling(&cfg.sample, &cfg.lemma_grid, &cfg.rhos)?,
    ];
    let (n, nt) = cylinder_neck_pair(&params, cfg.surgery_grid.n_vertices)?;
    let integrated = cfg.integrated_grid.clone().unwrap_or_else(|| IntegratedGrid::default_for(&params));
    let mut reports = reports;
    reports.push(check_per_height_inequality(&n, &nt, &cfg.surgery_grid)?);
    reports.push(check_integrated_surgery_inequality(&n, &nt, &integrated)?);
    for r in &reports {
        write_json(&args.out.join(format!("{}.json", r.check)), r)?;
    }
    Ok(summarize(&reports.iter().collect::<Vec<_>>()))
}

/// Runs the configured flow and returns the trajectory with its reports.
pub fn simulate(cfg: &SimulateConfig) -> Result<(FlowTrajectory, Vec<CheckReport>, Vec<CheckReport>)> {
    let s = &cfg.surgery;
    let params = SurgeryParams::new(s.alpha_hat, s.delta_hat, s.eps, s.l, s.lambda, cfg.h1)?;
    if !params.a_admissible() && cfg.theorem_mode {
        return Err(Error::Config(format!(
            "Λ = {} gives a = {} ≥ 1; theorem mode requires a < 1",
            params.lambda,
            params.a()
        )));
    }
    if !(cfg.t_end > 0.0 && cfg.snapshot_dt > 0.0) {
        return Err(Error::Config("t_end and snapshot_dt must be positive".into()));
    }
    if let Some(p) = cfg.probes.iter().find(|p| !(p.t0 > 0.0)) {
        return Err(Error::Config(format!("probe t0 = {} must be positive", p.t0)));
    }
    let g = cfg.initial.build(&cfg.numerics)?;
    let opts = RunOptions { t_end: cfg.t_end, snapshot_dt: cfg.snapshot_dt, numerics: cfg.numerics };
    let traj = run_with_surgery(FlowState::new(vec![g]), &params, &cfg.probes, &opts)?;
    let mono = (0..cfg.probes.len())
        .map(|i| check_flow_monotonicity(&traj, i, cfg.monotonicity_tolerance))
        .collect::<Result<Vec<_>>>()?;
    let density = (0..traj.events.len()).map(|e| check_density_after_surgery(&traj, e)).collect::<Result<Vec<_>>>()?;
    Ok((traj, mono, density))
}

pub fn run_simulate(args: &CommonArgs) -> Result<bool> {
    let mut cfg: SimulateConfig = load_config(args.config.as_deref())?;
    if let Some(tm) = args.theorem_mode {
        cfg.theorem_mode = tm;
    }
    prepare_out(&args.out)?;
    let (traj, mono, density) = simulate(&cfg)?;
    let mut csv = Vec::new();
    traj.write_series_csv(&mut csv)?;
    write_atomic(&args.out.join("series.csv"), &csv)?;
    write_json(&args.out.join("events.json"), &traj.events)?;
    write_json(&args.out.join("flow_monotonicity.json"), &mono)?;
    if !density.is_empty() {
        write_json(&args.out.join("density_after_surgery.json"), &density)?;
    }
    if cfg.dump_snapshots {
        write_json(&args.out.join("snapshots.json"), &traj.snapshots)?;
    }
    println!("{} snapshots, {} surgery events", traj.snapshots.len(), traj.events.len());
    let all: Vec<&CheckReport> = mono.iter().chain(&density).collect();
    Ok(summarize(&all))
}

/// One row per height: mean radius, mean `H` and mean `|∇x₃|` over the section.
fn geometry_table<S: SectionSource + ?Sized>(src: &S, heights: &[f64]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s", "radius", "H", "grad_x3"])?;
    for &s in heights {
        let g = section_geometry_at(src, s)?;
        let m = g.points.len() as f64;
        let radius = g.points.iter().map(|p| p[0].hypot(p[1])).sum::<f64>() / m;
        let h = g.mean_curvature.iter().sum::<f64>() / m;
        let grad = g.grad_x3.iter().sum::<f64>() / m;
        w.write_record([s.to_string(), radius.to_string(), h.to_string(), grad.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::Numerical(e.to_string()))
}

/// Builds the exact-cylinder neck and its modification at the configured `Λ`.
pub fn surgery_demo(cfg: &DemoConfig) -> Result<(CrossSectionFamily, ModifiedNeck)> {
    let l = cfg.l.unwrap_or(cap_b(cfg.lambda) + 2.0);
    let params = SurgeryParams::new(0.1, 0.1, 0.05, l, cfg.lambda, 1.0)?;
    if !params.a_admissible() {
        let msg = format!("Λ = {} gives a = {} ≥ 1: the cap bound H̃ ≥ 1/a is vacuous", cfg.lambda, params.a());
        if cfg.theorem_mode {
            return Err(Error::Config(format!("{msg}; rerun with --theorem-mode false")));
        }
        log::warn!("{msg}");
    }
    cylinder_neck_pair(&params, cfg.n_vertices)
}

pub fn run_surgery_demo(args: &CommonArgs) -> Result<bool> {
    let mut cfg: DemoConfig = load_config(args.config.as_deref())?;
    if let Some(tm) = args.theorem_mode {
        cfg.theorem_mode = tm;
    }
    prepare_out(&args.out)?;
    let (n, nt) = surgery_demo(&cfg)?;
    let heights: Vec<f64> = nt.modified().s_grid().to_vec();
    write_atomic(&args.out.join("original.csv"), &geometry_table(&n, &heights)?)?;
    write_atomic(&args.out.join("modified.csv"), &geometry_table(&nt, &heights)?)?;
    write_json(&args.out.join("joins.json"), nt.joins())?;
    let worst = nt.joins().iter().map(|j| j.c0).fold(0.0, f64::max);
    println!("{} heights; worst C0 join mismatch {worst:e}", heights.len());
    Ok(true)
}

/// Parses `args`, runs the selected mode and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let common = match &cli.command {
        Command::VerifyStatic(a) | Command::Simulate(a) | Command::SurgeryDemo(a) => a,
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    let result = match &cli.command {
        Command::VerifyStatic(a) => run_verify_static(a),
        Command::Simulate(a) => run_simulate(a),
        Command::SurgeryDemo(a) => run_surgery_demo(a),
    };
    match result {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
