//! Subcommand execution and artifact emission.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{parse_config, Format, RunConfig};
use super::output::{num, to_json, write_atomic, Csv};
use super::svg::{render_svg, Marker, Scene};
use crate::error::Error;
use crate::fields::Family;
use crate::geometry::{self, Point};
use crate::horizon::{
    bounding_separatrix, build_horizon, no_escape_check, starting_arcs, Corner, HorizonCurve, HorizonSegment, Seed,
    Tracer,
};
use crate::metric::{HoleKind, ModelParams, PolarPoint};
use crate::ode::{Direction, Trajectory};
use crate::tangency::{find_tangential_points, jacobian_at, CriticalKind, CriticalPointInfo};
use crate::verify::{run_verify, VerifyOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Ergosphere,
    Tangential,
    Portrait,
    Horizon,
    Verify,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(Error),
    Io(String),
    VerifyFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(m) => write!(f, "output error: {m}"),
            CliError::VerifyFailed => f.write_str("verification failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numerical(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Files produced by one run, in the order they were written.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

impl Artifacts {
    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        write_atomic(&self.dir, name, contents.as_bytes())
            .map_err(|e| CliError::Io(format!("{}: {e}", self.dir.join(name).display())))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    build: BuildInfo,
    subcommand: Subcommand,
    config: &'a RunConfig,
    artifacts: &'a [String],
}

#[derive(Debug, Serialize)]
struct BuildInfo {
    profile: &'static str,
    target_arch: &'static str,
    target_os: &'static str,
}

impl BuildInfo {
    fn current() -> Self {
        Self {
            profile: if cfg!(debug_assertions) { "debug" } else { "release" },
            target_arch: std::env::consts::ARCH,
            target_os: std::env::consts::OS,
        }
    }
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::Config(e.0))
}

/// Runs one subcommand. `out` overrides `output.directory` from the config.
pub fn run(cmd: Subcommand, config_path: &Path, out: Option<&Path>) -> CliResult<Artifacts> {
    let cfg = load_config(config_path)?;
    run_with_config(cmd, &cfg, out)
}

pub fn run_with_config(cmd: Subcommand, cfg: &RunConfig, out: Option<&Path>) -> CliResult<Artifacts> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    let mut art = Artifacts { dir, files: Vec::new() };
    let outcome = match cmd {
        Subcommand::Ergosphere => ergosphere(cfg, &mut art),
        Subcommand::Tangential => tangential(cfg, &mut art),
        Subcommand::Portrait => portrait(cfg, &mut art),
        Subcommand::Horizon => horizon(cfg, &mut art),
        Subcommand::Verify => verify(cfg, &mut art),
    };
    // the manifest is written even when verification fails
    if matches!(outcome, Ok(()) | Err(CliError::VerifyFailed)) {
        let mut files = art.files.clone();
        files.push("manifest.json".into());
        let manifest = Manifest {
            tool: "ergohorizon",
            version: env!("CARGO_PKG_VERSION"),
            build: BuildInfo::current(),
            subcommand: cmd,
            config: cfg,
            artifacts: &files,
        };
        art.write("manifest.json", &to_json(&manifest))?;
    }
    outcome.map(|()| art)
}

fn ergosphere_points(model: &ModelParams, n: usize) -> CliResult<Vec<(f64, f64)>> {
    (0..n)
        .map(|k| {
            let theta = TAU * k as f64 / n as f64;
            Ok((theta, model.ergosphere_radius(theta)?))
        })
        .collect()
}

fn ergosphere_cartesian(model: &ModelParams, n: usize) -> CliResult<Vec<Point>> {
    Ok(ergosphere_points(model, n)?
        .into_iter()
        .map(|(theta, r)| PolarPoint { r, theta }.to_cartesian())
        .collect())
}

fn ergosphere(cfg: &RunConfig, art: &mut Artifacts) -> CliResult<()> {
    let pts = ergosphere_points(&cfg.model, cfg.sampling.ergosphere_points)?;
    if cfg.output.wants(Format::Csv) {
        let mut csv = Csv::new(&["theta", "r"]);
        for (theta, r) in &pts {
            csv.row(&[num(*theta), num(*r)]);
        }
        art.write("ergo.csv", &csv.into_string())?;
    }
    if cfg.output.wants(Format::Svg) {
        let scene = Scene {
            title: "ergosphere".into(),
            ergosphere: ergosphere_cartesian(&cfg.model, cfg.sampling.ergosphere_points)?,
            ..Scene::default()
        };
        art.write("ergo.svg", &render_svg(&scene))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyLinearization {
    pub jacobian: [[f64; 2]; 2],
    pub det: f64,
    pub trace: f64,
    pub discriminant: f64,
    pub kind: CriticalKind,
}

impl From<&CriticalPointInfo> for FamilyLinearization {
    fn from(c: &CriticalPointInfo) -> Self {
        Self { jacobian: c.jacobian, det: c.det, trace: c.trace, discriminant: c.discriminant, kind: c.kind }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentialEntry {
    pub theta: f64,
    pub r: f64,
    /// Classification of the `Plus` linearization; both families agree on it.
    pub kind: CriticalKind,
    pub plus: FamilyLinearization,
    pub minus: FamilyLinearization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentialDoc {
    pub model: ModelParams,
    pub characteristic: bool,
    pub degenerate: Vec<f64>,
    pub points: Vec<TangentialEntry>,
}

pub fn tangential_doc(model: &ModelParams) -> crate::Result<TangentialDoc> {
    let report = find_tangential_points(model)?;
    let points = report
        .points
        .iter()
        .map(|&th| {
            let p = jacobian_at(model, th, Family::Plus)?;
            let m = jacobian_at(model, th, Family::Minus)?;
            if p.kind != m.kind {
                log::warn!("families classify the tangential point at {th} differently");
            }
            Ok(TangentialEntry { theta: th, r: p.r_star, kind: p.kind, plus: (&p).into(), minus: (&m).into() })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(TangentialDoc { model: *model, characteristic: report.characteristic, degenerate: report.degenerate, points })
}

fn tangential(cfg: &RunConfig, art: &mut Artifacts) -> CliResult<()> {
    let doc = tangential_doc(&cfg.model)?;
    if cfg.output.wants(Format::Json) {
        art.write("tangential.json", &to_json(&doc))?;
    }
    Ok(())
}

fn markers(doc: &TangentialDoc) -> Vec<Marker> {
    doc.points
        .iter()
        .map(|e| Marker {
            point: PolarPoint { r: e.r, theta: e.theta }.to_cartesian(),
            label: format!("{} at theta={:.6}", e.kind.as_str(), e.theta),
        })
        .collect()
}

/// Forward trajectories of one family from a grid of seeds.
///
/// Seeds sit just inside the ergosphere on the arcs where the family enters.
/// For a characteristic ergosphere they are placed at `0.9 r0(θ)` instead.
pub fn portrait_trajectories(tracer: &Tracer, family: Family, n: usize) -> crate::Result<Vec<Trajectory>> {
    let model = *tracer.model();
    let t = tracer.config().seed_offset;
    let seeds: Vec<Seed> = if find_tangential_points(&model)?.characteristic {
        (0..n)
            .map(|k| {
                let theta = TAU * (k as f64 + 0.5) / n as f64;
                Ok(Seed::Polar(PolarPoint { r: 0.9 * model.ergosphere_radius(theta)?, theta }))
            })
            .collect::<crate::Result<_>>()?
    } else {
        let arcs = starting_arcs(&model, family)?;
        let total: f64 = arcs.iter().map(|a| a.1 - a.0).sum();
        let mut seeds = Vec::new();
        for (a, b) in arcs {
            let m = ((n as f64 * (b - a) / total).round() as usize).max(1);
            seeds.extend((0..m).map(|k| Seed::Sqrt { t, theta: a + (b - a) * (k as f64 + 0.5) / m as f64 }));
        }
        seeds
    };
    use rayon::prelude::*;
    seeds.into_par_iter().map(|s| tracer.trace(s, family, Direction::Forward)).collect()
}

/// The same curve run in the opposite time direction.
fn time_reversed(mut tr: Trajectory) -> Trajectory {
    tr.samples.reverse();
    for s in &mut tr.samples {
        s.x0 = -s.x0;
        s.dr = -s.dr;
        s.dtheta = -s.dtheta;
    }
    tr
}

fn portrait(cfg: &RunConfig, art: &mut Artifacts) -> CliResult<()> {
    let model = cfg.model;
    // v -> -v keeps both direction fields and flips only the time orientation,
    // so white-hole trajectories are traced in the reversed flow
    let white = model.singularity_coefficients()?.kind() == HoleKind::WhiteHole;
    let frame = if white { model.reversed() } else { model };
    let orient = |tr: Trajectory| if white { time_reversed(tr) } else { tr };
    let tracer = Tracer::new(&frame, &cfg.horizon)?;
    let tang = tangential_doc(&model)?;
    let mut scene = Scene {
        title: "phase portrait".into(),
        ergosphere: ergosphere_cartesian(&model, cfg.sampling.ergosphere_points)?,
        critical_points: markers(&tang),
        ..Scene::default()
    };
    for fam in Family::BOTH {
        let trajs: Vec<Trajectory> =
            portrait_trajectories(&tracer, fam, cfg.sampling.portrait_seeds)?.into_iter().map(orient).collect();
        if cfg.output.wants(Format::Csv) {
            let mut csv = Csv::new(&["family", "x0", "r", "theta", "rho"]);
            for tr in &trajs {
                for s in &tr.samples {
                    let rho = model.rho(s.r, s.theta);
                    csv.row(&[fam.as_str().to_string(), num(s.x0), num(s.r), num(s.theta), num(rho)]);
                }
            }
            art.write(&format!("portrait_{}.csv", fam.as_str()), &csv.into_string())?;
        }
        scene.trajectories.extend(trajs.iter().map(Trajectory::cartesian));
    }
    if !tang.characteristic {
        for fam in Family::BOTH {
            scene.separatrices.push(bounding_separatrix(&tracer, fam)?.trajectory.cartesian());
        }
    }
    if cfg.output.wants(Format::Svg) {
        art.write("portrait.svg", &render_svg(&scene))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonChecks {
    pub no_escape_max: f64,
    pub closed_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixDoc {
    pub family: Family,
    pub shooting_theta: Option<f64>,
    pub manifold_theta: Option<f64>,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalDoc {
    pub theta: f64,
    pub r: f64,
    pub family: Family,
    pub kind: CriticalKind,
}

/// Contents of `horizon.json`; enough to redraw `horizon.svg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonDoc {
    pub kind: HoleKind,
    pub corners: Vec<Corner>,
    pub segments: Vec<HorizonSegment>,
    pub checks: HorizonChecks,
    pub separatrices: Vec<SeparatrixDoc>,
    pub ergosphere: Vec<Point>,
    pub critical_points: Vec<CriticalDoc>,
}

impl HorizonDoc {
    pub fn new(h: &HorizonCurve, no_escape_max: f64, ergosphere: Vec<Point>) -> Self {
        Self {
            kind: h.kind,
            corners: h.corners.clone(),
            segments: h.segments.clone(),
            checks: HorizonChecks { no_escape_max, closed_gap: h.closed_gap },
            separatrices: h
                .separatrices
                .iter()
                .map(|s| SeparatrixDoc {
                    family: s.family,
                    shooting_theta: s.shooting_theta,
                    manifold_theta: s.manifold_theta,
                    points: s.trajectory.cartesian(),
                })
                .collect(),
            ergosphere,
            critical_points: h
                .critical_points
                .iter()
                .map(|c| CriticalDoc { theta: c.theta_star, r: c.r_star, family: c.family, kind: c.kind })
                .collect(),
        }
    }

    pub fn scene(&self) -> Scene {
        let mut outline: Vec<Point> = Vec::new();
        for seg in &self.segments {
            let skip = usize::from(!outline.is_empty());
            outline.extend(seg.points.iter().skip(skip));
        }
        // one marker per tangential point, however many families report it
        let mut critical_points: Vec<Marker> = Vec::new();
        for c in &self.critical_points {
            let point = PolarPoint { r: c.r, theta: c.theta }.to_cartesian();
            if critical_points.iter().all(|m| geometry::dist(m.point, point) > 1e-9) {
                critical_points.push(Marker { point, label: format!("{} at theta={:.6}", c.kind.as_str(), c.theta) });
            }
        }
        Scene {
            title: format!("{} horizon", if self.kind == HoleKind::BlackHole { "black hole" } else { "white hole" }),
            ergosphere: self.ergosphere.clone(),
            trajectories: Vec::new(),
            separatrices: self.separatrices.iter().map(|s| s.points.clone()).collect(),
            horizon: Some(outline),
            critical_points,
            corners: self.corners.iter().map(Corner::position).collect(),
        }
    }
}

pub fn horizon_doc(cfg: &RunConfig) -> crate::Result<HorizonDoc> {
    let h = build_horizon(&cfg.model, &cfg.horizon)?;
    let ne = no_escape_check(&cfg.model, &h, cfg.sampling.no_escape_samples)?;
    let ergo: Vec<Point> = (0..cfg.sampling.ergosphere_points)
        .map(|k| {
            let theta = TAU * k as f64 / cfg.sampling.ergosphere_points as f64;
            Ok(PolarPoint { r: cfg.model.ergosphere_radius(theta)?, theta }.to_cartesian())
        })
        .collect::<crate::Result<_>>()?;
    Ok(HorizonDoc::new(&h, ne.max_violation, ergo))
}

fn horizon(cfg: &RunConfig, art: &mut Artifacts) -> CliResult<()> {
    let doc = horizon_doc(cfg)?;
    if cfg.output.wants(Format::Json) {
        art.write("horizon.json", &to_json(&doc))?;
    }
    if cfg.output.wants(Format::Svg) {
        art.write("horizon.svg", &render_svg(&doc.scene()))?;
    }
    Ok(())
}

fn verify(cfg: &RunConfig, art: &mut Artifacts) -> CliResult<()> {
    let opts = VerifyOptions {
        horizon: cfg.horizon,
        no_escape_samples: cfg.sampling.no_escape_samples,
        tolerances: cfg.verify_tolerances.clone(),
        ..VerifyOptions::default()
    };
    let report = run_verify(&cfg.model, &opts)?;
    for c in &report.checks {
        log::info!("{:<28} {:>12.3e} <= {:<10.1e} {}", c.name, c.value, c.tolerance, if c.pass { "ok" } else { "FAIL" });
    }
    if cfg.output.wants(Format::Json) {
        art.write("verify.json", &to_json(&report))?;
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}
