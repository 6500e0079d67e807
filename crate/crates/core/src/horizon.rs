//! Trajectory fates, separatrices and event-horizon assembly.
//!
//! For a black hole (`b1 < 0`) let `Ω±` be the set of points whose `±`
//! trajectory falls into the singularity. Each `Ω±` is bounded by one
//! separatrix and an arc of the ergosphere, and the horizon is the boundary of
//! `Ω+ ∩ Ω−`. Trajectories are monotone in `θ`, so both boundaries are radial
//! graphs `R±(θ)` and the horizon is `min(R+, R−)`; a corner appears where the
//! two graphs cross transversally.
//!
//! Trajectories are traced in a hybrid chart: polar coordinates away from the
//! ergosphere and the square-root chart `(t, θ)` in a band next to it, where
//! the polar equations degenerate.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{invert_rho, polar_speed, rhs_polar, sqrtchart_at, Family};
use crate::geometry::{self, Point};
use crate::metric::{HoleKind, ModelParams, PolarPoint};
use crate::ode::{
    integrate, Chart, Crossing, Direction, EventSpec, IntegratorConfig, Solution, Stop, Trajectory, TrajectorySample,
};
use crate::tangency::{find_tangential_points, jacobian_at, CriticalKind, CriticalPointInfo};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fate", rename_all = "snake_case")]
pub enum Fate {
    FellIn,
    /// Reached the ergosphere at angle `theta`. For backward traces this is
    /// where the trajectory started.
    Exited { theta: f64 },
    ConvergedToCritical { theta: f64 },
    ClosedOrbit,
    Undetermined,
}

impl Fate {
    pub fn label(&self) -> &'static str {
        match self {
            Fate::FellIn => "fell_in",
            Fate::Exited { .. } => "exited",
            Fate::ConvergedToCritical { .. } => "converged_to_critical",
            Fate::ClosedOrbit => "closed_orbit",
            Fate::Undetermined => "undetermined",
        }
    }

    fn same_class(&self, other: &Fate) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonConfig {
    pub integrator: IntegratorConfig,
    /// Inner radius as a fraction of `min r0(θ)`.
    pub inner_radius_factor: f64,
    /// `t` at which shooting seeds are placed on the ergosphere.
    pub seed_offset: f64,
    /// Distance from a saddle, relative to `r0`, at which its manifolds are seeded.
    pub saddle_offset: f64,
    pub bisection_tol: f64,
    pub corner_angle_min_deg: f64,
    pub recurrence_radius: f64,
    pub recurrence_arclength_factor: f64,
    pub slow_speed: f64,
    pub critical_radius: f64,
    /// Seeds per starting arc used to bracket the shooting root.
    pub fate_scan_points: usize,
    /// Total number of vertices of the assembled horizon.
    pub horizon_points: usize,
}

impl Default for HorizonConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            inner_radius_factor: 0.05,
            seed_offset: 1e-6,
            saddle_offset: 1e-7,
            bisection_tol: 1e-10,
            corner_angle_min_deg: 5.0,
            recurrence_radius: 1e-6,
            recurrence_arclength_factor: 10.0,
            slow_speed: 1e-9,
            critical_radius: 1e-4,
            fate_scan_points: 64,
            horizon_points: 2048,
        }
    }
}

impl HorizonConfig {
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        let positive = [
            ("inner_radius_factor", self.inner_radius_factor),
            ("seed_offset", self.seed_offset),
            ("saddle_offset", self.saddle_offset),
            ("bisection_tol", self.bisection_tol),
            ("corner_angle_min_deg", self.corner_angle_min_deg),
            ("recurrence_radius", self.recurrence_radius),
            ("recurrence_arclength_factor", self.recurrence_arclength_factor),
            ("slow_speed", self.slow_speed),
            ("critical_radius", self.critical_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.inner_radius_factor >= 1.0 {
            return Err(Error::InvalidConfig("inner_radius_factor must be below 1".into()));
        }
        if self.fate_scan_points < 4 || self.horizon_points < 16 {
            return Err(Error::InvalidConfig("fate_scan_points >= 4 and horizon_points >= 16 required".into()));
        }
        Ok(())
    }
}

/// Starting point of a trace, in whichever chart is convenient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Seed {
    Polar(PolarPoint),
    /// Square-root chart `t = √(A² + B² − r²)`.
    Sqrt { t: f64, theta: f64 },
}

/// Shared, precomputed data for tracing many trajectories of one model.
#[derive(Debug, Clone)]
pub struct Tracer {
    model: ModelParams,
    cfg: HorizonConfig,
    inner_radius: f64,
    t_switch: f64,
    criticals: Vec<Point>,
}

enum Segment {
    Polar([f64; 2]),
    Sqrt([f64; 2]),
}

impl Tracer {
    pub fn new(model: &ModelParams, cfg: &HorizonConfig) -> Result<Self> {
        cfg.validate()?;
        let n = 360;
        let mut r_min = f64::INFINITY;
        let mut t_valid = f64::INFINITY;
        for k in 0..n {
            let th = TAU * k as f64 / n as f64;
            let r0 = model.ergosphere_radius(th)?;
            r_min = r_min.min(r0);
            t_valid = t_valid.min(monotone_band(model, th, r0));
        }
        let report = find_tangential_points(model)?;
        let criticals = report
            .points
            .iter()
            .map(|&th| Ok(PolarPoint { r: model.ergosphere_radius(th)?, theta: th }.to_cartesian()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model: *model,
            cfg: *cfg,
            inner_radius: cfg.inner_radius_factor * r_min,
            t_switch: (0.25 * t_valid).min(0.5),
            criticals,
        })
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn config(&self) -> &HorizonConfig {
        &self.cfg
    }

    fn near_critical(&self, p: Point) -> f64 {
        self.criticals.iter().map(|&c| geometry::dist(p, c)).fold(f64::INFINITY, f64::min)
    }

    fn sqrt_state(&self, y: &[f64; 2], family: Family) -> Result<(f64, [f64; 2], [f64; 2])> {
        let [t, theta] = *y;
        let r = invert_rho(&self.model, t * t, theta)?;
        let flow = self.model.flow(r, theta);
        let (sq, polar) = sqrtchart_at(&flow, r, theta, t, family)?;
        Ok((r, sq, polar))
    }

    /// Integrates from `seed` until a terminal condition and returns the
    /// trajectory in polar form, ordered by increasing `x0`.
    pub fn trace(&self, seed: Seed, family: Family, direction: Direction) -> Result<Trajectory> {
        let model = self.model;
        let ts = self.t_switch;
        let mut seg = match seed {
            Seed::Polar(p) => {
                p.check()?;
                let rho = model.rho(p.r, p.theta);
                if rho < ts * ts {
                    Segment::Sqrt([rho.max(0.0).sqrt(), p.theta])
                } else {
                    Segment::Polar([p.r, p.theta])
                }
            }
            Seed::Sqrt { t, theta } => {
                if t > 2.0 * ts {
                    Segment::Polar([invert_rho(&model, t * t, theta)?, theta])
                } else {
                    Segment::Sqrt([t, theta])
                }
            }
        };
        let mut samples: Vec<TrajectorySample> = Vec::new();
        let mut charts = (false, false);
        let mut x_off = 0.0;
        let mut budget = self.cfg.integrator.x0_max;
        let (slow, crit) = (self.cfg.slow_speed, self.cfg.critical_radius);
        let fate = loop {
            let icfg = IntegratorConfig { x0_max: budget, ..self.cfg.integrator };
            match seg {
                Segment::Polar(y0) => {
                    charts.0 = true;
                    let rhs = |y: &[f64; 2]| rhs_polar(&model, PolarPoint { r: y[0], theta: y[1] }.checked()?, family);
                    let events = [
                        EventSpec::new(|y: &[f64; 2]| y[0] - self.inner_radius, Crossing::Falling, true),
                        EventSpec::new(|y: &[f64; 2]| model.rho(y[0], y[1]) - ts * ts, Crossing::Falling, true),
                    ];
                    let sol = integrate(rhs, y0, direction, &icfg, &events)?;
                    append(&mut samples, &sol, x_off, |s| {
                        Ok(TrajectorySample { x0: s.x0, r: s.y[0], theta: s.y[1], dr: s.dy[0], dtheta: s.dy[1] })
                    })?;
                    let last = *sol.last();
                    x_off += last.x0;
                    budget -= last.x0.abs();
                    match sol.stop {
                        Stop::Event(0) => break Fate::FellIn,
                        Stop::Event(_) => {
                            let t = model.rho(last.y[0], last.y[1]).max(0.0).sqrt();
                            seg = Segment::Sqrt([t, last.y[1]]);
                        }
                        Stop::Budget => break Fate::Undetermined,
                    }
                }
                Segment::Sqrt(y0) => {
                    charts.1 = true;
                    let rhs = |y: &[f64; 2]| Ok(self.sqrt_state(y, family)?.1);
                    let slow_guard = |y: &[f64; 2]| match self.sqrt_state(y, family) {
                        Ok((r, _, polar)) => {
                            let p = PolarPoint { r, theta: y[1] }.to_cartesian();
                            (polar_speed(r, polar) / slow).max(self.near_critical(p) / crit) - 1.0
                        }
                        Err(_) => 1.0,
                    };
                    let events = [
                        EventSpec::new(|y: &[f64; 2]| y[0], Crossing::Falling, true),
                        EventSpec::new(|y: &[f64; 2]| y[0] - 2.0 * ts, Crossing::Rising, true),
                        EventSpec::new(slow_guard, Crossing::Falling, true),
                    ];
                    let sol = integrate(rhs, y0, direction, &icfg, &events)?;
                    append(&mut samples, &sol, x_off, |s| {
                        let (r, _, polar) = self.sqrt_state(&s.y, family)?;
                        Ok(TrajectorySample { x0: s.x0, r, theta: s.y[1], dr: polar[0], dtheta: polar[1] })
                    })?;
                    let last = *sol.last();
                    x_off += last.x0;
                    budget -= last.x0.abs();
                    match sol.stop {
                        Stop::Event(0) => break Fate::Exited { theta: last.y[1] },
                        Stop::Event(1) => {
                            let r = invert_rho(&model, last.y[0] * last.y[0], last.y[1])?;
                            seg = Segment::Polar([r, last.y[1]]);
                        }
                        Stop::Event(_) => {
                            let p = samples.last().unwrap();
                            let th = self.closest_critical_angle(p.cartesian());
                            break Fate::ConvergedToCritical { theta: th };
                        }
                        Stop::Budget => break Fate::Undetermined,
                    }
                }
            }
        };
        let fate = if fate == Fate::Undetermined && self.recurrent(&samples) { Fate::ClosedOrbit } else { fate };
        if direction == Direction::Backward {
            samples.reverse();
        }
        let chart = match charts {
            (true, true) => Chart::Mixed,
            (true, false) => Chart::Polar,
            _ => Chart::Sqrt,
        };
        Ok(Trajectory { family, chart, samples, termination: fate })
    }

    fn closest_critical_angle(&self, p: Point) -> f64 {
        self.criticals
            .iter()
            .min_by(|a, b| geometry::dist(p, **a).total_cmp(&geometry::dist(p, **b)))
            .map(|c| c[1].atan2(c[0]).rem_euclid(TAU))
            .unwrap_or(f64::NAN)
    }

    /// Forward fate of the trajectory from `seed`. Integration failures are
    /// reported as `Undetermined` and logged.
    pub fn fate(&self, seed: Seed, family: Family) -> Fate {
        match self.trace(seed, family, Direction::Forward) {
            Ok(tr) => tr.termination,
            Err(e) => {
                log::warn!("fate of {seed:?} ({family}) undetermined: {e}");
                Fate::Undetermined
            }
        }
    }

    /// Poincaré-section recurrence: two successive crossings of the ray
    /// through the final point, in the same direction, closer than the
    /// recurrence radius.
    fn recurrent(&self, samples: &[TrajectorySample]) -> bool {
        let Some(last) = samples.last() else { return false };
        let th_ref = last.theta;
        let mut hits: Vec<(f64, f64)> = Vec::new(); // (cumulative arclength, radius)
        let mut arc = 0.0;
        for w in samples.windows(2) {
            let (a, b) = (w[0], w[1]);
            arc += geometry::dist(a.cartesian(), b.cartesian());
            let ka = ((a.theta - th_ref) / TAU).floor();
            let kb = ((b.theta - th_ref) / TAU).floor();
            if ka != kb && b.dtheta.signum() == last.dtheta.signum() {
                let target = th_ref + TAU * ka.max(kb);
                let s = (target - a.theta) / (b.theta - a.theta);
                hits.push((arc, a.r + s * (b.r - a.r)));
            }
        }
        let min_arc = self.cfg.recurrence_arclength_factor * self.cfg.recurrence_radius;
        hits.windows(2)
            .any(|w| (w[1].1 - w[0].1).abs() < self.cfg.recurrence_radius && w[1].0 - w[0].0 >= min_arc)
    }
}

fn append(
    out: &mut Vec<TrajectorySample>,
    sol: &Solution<2>,
    x_off: f64,
    conv: impl Fn(&crate::ode::Sample<2>) -> Result<TrajectorySample>,
) -> Result<()> {
    let skip = usize::from(!out.is_empty());
    for s in sol.samples.iter().skip(skip) {
        let mut ts = conv(s)?;
        ts.x0 += x_off;
        out.push(ts);
    }
    Ok(())
}

/// `√ρ` at the point where `ρ` stops decreasing monotonically inward from the ergosphere.
fn monotone_band(model: &ModelParams, theta: f64, r0: f64) -> f64 {
    let n = 400;
    let mut best = 0.0f64;
    for k in (0..n).rev() {
        let r = r0 * k as f64 / n as f64;
        if r <= 0.0 {
            break;
        }
        if model.rho_grad(r, theta).0 >= 0.0 {
            break;
        }
        best = model.rho(r, theta);
    }
    best.max(0.0).sqrt()
}

/// Forward fate of a trajectory started at an interior point.
pub fn classify_fate(model: &ModelParams, start: PolarPoint, family: Family, cfg: &HorizonConfig) -> Result<Fate> {
    let tracer = Tracer::new(model, cfg)?;
    if model.rho(start.r, start.theta) <= 0.0 {
        return Err(Error::OutsideErgoregion { r: start.r, theta: start.theta, rho: model.rho(start.r, start.theta) });
    }
    Ok(tracer.fate(Seed::Polar(start), family))
}

/// Initial `dt/dx0` at an ergosphere point; positive where trajectories enter the ergoregion.
fn entry_speed(model: &ModelParams, theta: f64, family: Family) -> Result<f64> {
    let r = model.ergosphere_radius(theta)?;
    let flow = model.flow(r, theta);
    Ok(sqrtchart_at(&flow, r, theta, 0.0, family)?.0[0])
}

/// Arcs `(a, b)`, `a < b`, between consecutive tangential points on which
/// trajectories of `family` enter the ergoregion.
pub fn starting_arcs(model: &ModelParams, family: Family) -> Result<Vec<(f64, f64)>> {
    let report = find_tangential_points(model)?;
    if report.characteristic {
        return Err(Error::CharacteristicErgosphere);
    }
    let pts = &report.points;
    let mut arcs = Vec::new();
    for k in 0..pts.len() {
        let a = pts[k];
        let b = if k + 1 < pts.len() { pts[k + 1] } else { pts[0] + TAU };
        if entry_speed(model, 0.5 * (a + b), family)? > 0.0 {
            arcs.push((a, b));
        }
    }
    if pts.is_empty() && entry_speed(model, 0.0, family)? > 0.0 {
        arcs.push((0.0, TAU));
    }
    Ok(arcs)
}

/// Fates of `n` seeds spread uniformly over the interior of the starting arc.
pub fn fate_scan(tracer: &Tracer, arc: (f64, f64), family: Family, n: usize) -> Vec<(f64, Fate)> {
    let thetas = (0..n).map(|k| arc.0 + (arc.1 - arc.0) * (k as f64 + 0.5) / n as f64).collect();
    scan_at(tracer, thetas, family)
}

const END_SEEDS: u32 = 24;

/// [`fate_scan`] plus seeds clustered geometrically towards both arc ends,
/// where exit windows next to a tangential point can be narrower than the
/// uniform spacing.
pub fn fate_scan_refined(tracer: &Tracer, arc: (f64, f64), family: Family, n: usize) -> Vec<(f64, Fate)> {
    let span = arc.1 - arc.0;
    let mut thetas: Vec<f64> = (0..n).map(|k| arc.0 + span * (k as f64 + 0.5) / n as f64).collect();
    let first_gap = 0.5 * span / n as f64;
    for j in 1..=END_SEEDS {
        let d = first_gap * 0.5f64.powi(j as i32);
        thetas.push(arc.0 + d);
        thetas.push(arc.1 - d);
    }
    thetas.sort_by(f64::total_cmp);
    scan_at(tracer, thetas, family)
}

fn scan_at(tracer: &Tracer, thetas: Vec<f64>, family: Family) -> Vec<(f64, Fate)> {
    let t = tracer.cfg.seed_offset;
    thetas.into_par_iter().map(|th| (th, tracer.fate(Seed::Sqrt { t, theta: th }, family))).collect()
}

/// Angles where consecutive scan entries switch between `FellIn` and `Exited`.
pub fn fate_transitions(scan: &[(f64, Fate)]) -> Vec<(usize, usize)> {
    let decisive: Vec<usize> = (0..scan.len())
        .filter(|&k| matches!(scan[k].1, Fate::FellIn | Fate::Exited { .. }))
        .collect();
    decisive
        .windows(2)
        .filter(|w| !scan[w[0]].1.same_class(&scan[w[1]].1))
        .map(|w| (w[0], w[1]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub family: Family,
    /// Boundary between seeds that fall in and seeds that exit.
    pub theta: f64,
    /// Trajectory from the seed just on the falling-in side of the root.
    pub trajectory: Trajectory,
}

/// Locates the fate boundary on the starting arc by bisection on the seed angle.
pub fn shoot(tracer: &Tracer, family: Family) -> Result<ShootingResult> {
    let arcs = starting_arcs(&tracer.model, family)?;
    let n = tracer.cfg.fate_scan_points;
    for arc in arcs {
        let scan = fate_scan_refined(tracer, arc, family, n);
        let trans = fate_transitions(&scan);
        if trans.len() > 1 {
            log::warn!("{} fate transitions on the {family} starting arc; using the first", trans.len());
        }
        let Some(&(i, j)) = trans.first() else { continue };
        let (mut lo, mut hi) = (scan[i].0, scan[j].0);
        let (f_lo, f_hi) = (scan[i].1, scan[j].1);
        let t = tracer.cfg.seed_offset;
        while hi - lo > tracer.cfg.bisection_tol {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let f = tracer.fate(Seed::Sqrt { t, theta: mid }, family);
            if f.same_class(&f_lo) {
                lo = mid;
            } else if f.same_class(&f_hi) {
                hi = mid;
            } else {
                lo = mid;
                hi = mid;
            }
        }
        let inside = if f_lo == Fate::FellIn { lo } else { hi };
        let trajectory = tracer.trace(Seed::Sqrt { t, theta: inside }, family, Direction::Forward)?;
        return Ok(ShootingResult { family, theta: 0.5 * (lo + hi), trajectory });
    }
    Err(Error::Separatrix(format!("no fate change on the {family} starting arc")))
}

/// Branch of the stable manifold of a saddle that lies inside the ergoregion,
/// traced backward to the ergosphere and returned in forward-time order. The
/// saddle itself is appended as the final sample.
pub fn saddle_stable_branch(tracer: &Tracer, critical: &CriticalPointInfo) -> Result<Trajectory> {
    if critical.kind != CriticalKind::Saddle {
        return Err(Error::Separatrix("stable branch requested for a non-saddle".into()));
    }
    let pairs = critical.eigenpairs().ok_or_else(|| Error::Separatrix("saddle without real eigenvectors".into()))?;
    let (_, mut v) = *pairs
        .iter()
        .find(|(l, _)| *l < 0.0)
        .ok_or_else(|| Error::Separatrix("saddle without a stable direction".into()))?;
    if v[0] < 0.0 {
        v = [-v[0], -v[1]];
    }
    let d = tracer.cfg.saddle_offset * critical.r_star;
    let seed = Seed::Sqrt { t: d * v[0], theta: critical.theta_star + d * v[1] };
    let mut tr = tracer.trace(seed, critical.family, Direction::Backward)?;
    let last = *tr.last();
    tr.samples.push(TrajectorySample {
        x0: last.x0 + 1.0,
        r: critical.r_star,
        theta: critical.theta_star,
        dr: 0.0,
        dtheta: 0.0,
    });
    // the trace ran backward, so its termination describes the start
    tr.termination = Fate::ConvergedToCritical { theta: critical.theta_star.rem_euclid(TAU) };
    Ok(tr)
}

/// Separatrix of `family` through the given critical point.
///
/// A saddle yields its stable branch inside the ergoregion; a spiral or node
/// yields the shooting boundary on the starting arc of `family`.
pub fn trace_separatrix(
    model: &ModelParams,
    critical: &CriticalPointInfo,
    family: Family,
    cfg: &HorizonConfig,
) -> Result<Trajectory> {
    let tracer = Tracer::new(model, cfg)?;
    match critical.kind {
        CriticalKind::Saddle => {
            let info = if critical.family == family { *critical } else { jacobian_at(model, critical.theta_star, family)? };
            saddle_stable_branch(&tracer, &info)
        }
        CriticalKind::Degenerate => Err(Error::DegenerateTangency(critical.theta_star)),
        _ => Ok(shoot(&tracer, family)?.trajectory),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separatrix {
    pub family: Family,
    pub trajectory: Trajectory,
    /// Root of the fate bisection on the starting arc. `None` when no seed
    /// on the arc changes fate, as happens when the separatrix leaves a node.
    pub shooting_theta: Option<f64>,
    /// Where the separatrix meets the ergosphere, when it ends at a saddle.
    pub manifold_theta: Option<f64>,
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Angular agreement at which a saddle branch and a shooting root are taken
/// to be the same separatrix.
const MANIFOLD_MATCH: f64 = 1e-6;

/// Boundary of `Ω±` inside the ergoregion for one family.
///
/// The shooting root on the starting arc is located first. When its
/// trajectory passes near a saddle, the saddle's stable branch replaces it and
/// the two are cross-checked. When no seed changes fate, the stable branch of
/// the saddle is used on its own.
pub fn bounding_separatrix(tracer: &Tracer, family: Family) -> Result<Separatrix> {
    let model = tracer.model;
    let report = find_tangential_points(&model)?;
    let saddles = report
        .points
        .iter()
        .map(|&th| jacobian_at(&model, th, family))
        .filter(|i| !matches!(i, Ok(info) if info.kind != CriticalKind::Saddle))
        .collect::<Result<Vec<_>>>()?;
    let shot = match shoot(tracer, family) {
        Ok(s) => s,
        Err(Error::Separatrix(msg)) if !saddles.is_empty() => {
            log::info!("{family}: {msg}; using the saddle stable branch");
            let branch = saddle_stable_branch(tracer, &saddles[0])?;
            let start = branch.first().theta;
            return Ok(Separatrix { family, trajectory: branch, shooting_theta: None, manifold_theta: Some(start) });
        }
        Err(e) => return Err(e),
    };
    let near = tracer.cfg.critical_radius.max(1e-3) * 10.0;
    for info in &saddles {
        let c = info.point().to_cartesian();
        let dmin = shot
            .trajectory
            .samples
            .iter()
            .map(|s| geometry::dist(s.cartesian(), c))
            .fold(f64::INFINITY, f64::min);
        let branch = saddle_stable_branch(tracer, info)?;
        let start = branch.first().theta;
        let gap = angle_gap(start, shot.theta);
        if dmin > near * info.r_star && gap > MANIFOLD_MATCH {
            continue;
        }
        if gap > MANIFOLD_MATCH {
            log::warn!("{family} separatrix: manifold start {start} and shooting root {} differ by {gap:e}", shot.theta);
        }
        return Ok(Separatrix { family, trajectory: branch, shooting_theta: Some(shot.theta), manifold_theta: Some(start) });
    }
    Ok(Separatrix { family, trajectory: shot.trajectory, shooting_theta: Some(shot.theta), manifold_theta: None })
}

/// A separatrix written as a radial graph `r(θ)` over an unwrapped angle interval.
#[derive(Debug, Clone)]
struct RadialGraph {
    theta: Vec<f64>,
    r: Vec<f64>,
    drdth: Vec<f64>,
}

impl RadialGraph {
    fn new(model: &ModelParams, tr: &Trajectory) -> Result<Self> {
        let mut pts: Vec<(f64, f64, f64)> = Vec::with_capacity(tr.samples.len());
        for s in &tr.samples {
            let slope = if s.dtheta.abs() > 1e-300 && (s.dr != 0.0 || s.dtheta != 0.0) {
                s.dr / s.dtheta
            } else {
                ergosphere_slope(model, s.theta)?
            };
            pts.push((s.theta, s.r, slope));
        }
        if pts.len() < 2 {
            return Err(Error::Horizon("separatrix has fewer than two samples".into()));
        }
        if pts[0].0 > pts[pts.len() - 1].0 {
            pts.reverse();
        }
        // keep a strictly increasing angle sequence
        let mut out = RadialGraph { theta: vec![], r: vec![], drdth: vec![] };
        for (th, r, d) in pts {
            if out.theta.last().is_some_and(|&l| th <= l) {
                continue;
            }
            out.theta.push(th);
            out.r.push(r);
            out.drdth.push(d);
        }
        if out.span() >= TAU {
            return Err(Error::Horizon("separatrix winds more than once around O".into()));
        }
        Ok(out)
    }

    fn span(&self) -> f64 {
        self.theta[self.theta.len() - 1] - self.theta[0]
    }

    /// `(r, dr/dθ)` if `theta` (mod 2π) falls inside the graph's interval.
    fn eval(&self, theta: f64) -> Option<(f64, f64)> {
        let lo = self.theta[0];
        let th = lo + (theta - lo).rem_euclid(TAU);
        let hi = self.theta[self.theta.len() - 1];
        if th > hi {
            return None;
        }
        let i = self.theta.partition_point(|&x| x <= th).clamp(1, self.theta.len() - 1);
        let (a, b) = (i - 1, i);
        let h = self.theta[b] - self.theta[a];
        let s = (th - self.theta[a]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let r = (2.0 * s3 - 3.0 * s2 + 1.0) * self.r[a]
            + (s3 - 2.0 * s2 + s) * h * self.drdth[a]
            + (-2.0 * s3 + 3.0 * s2) * self.r[b]
            + (s3 - s2) * h * self.drdth[b];
        let d = (6.0 * s2 - 6.0 * s) / h * self.r[a]
            + (3.0 * s2 - 4.0 * s + 1.0) * self.drdth[a]
            + (-6.0 * s2 + 6.0 * s) / h * self.r[b]
            + (3.0 * s2 - 2.0 * s) * self.drdth[b];
        Some((r, d))
    }
}

/// `dr0/dθ` of the ergosphere by implicit differentiation.
fn ergosphere_slope(model: &ModelParams, theta: f64) -> Result<f64> {
    let r0 = model.ergosphere_radius(theta)?;
    let (gr, gt) = model.rho_grad(r0, theta);
    Ok(-gt / gr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub r: f64,
    pub theta: f64,
    /// Interior angle in degrees.
    pub angle_deg: f64,
}

impl Corner {
    pub fn position(&self) -> Point {
        PolarPoint { r: self.r, theta: self.theta }.to_cartesian()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSegment {
    /// `None` for arcs of a characteristic ergosphere.
    pub family: Option<Family>,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonCurve {
    pub kind: HoleKind,
    /// Counter-clockwise; each segment starts where the previous one ends.
    pub segments: Vec<HorizonSegment>,
    pub corners: Vec<Corner>,
    pub closed: bool,
    pub closed_gap: f64,
    pub separatrices: Vec<Separatrix>,
    pub critical_points: Vec<CriticalPointInfo>,
}

impl HorizonCurve {
    /// All vertices once, without repeating shared segment endpoints or the closing point.
    pub fn polygon(&self) -> Vec<Point> {
        let mut out: Vec<Point> = Vec::new();
        for seg in &self.segments {
            let skip = usize::from(!out.is_empty());
            out.extend(seg.points.iter().skip(skip));
        }
        if out.len() > 1 && geometry::dist(out[0], *out.last().unwrap()) <= 1e-8 {
            out.pop();
        }
        out
    }

    pub fn vertex_count(&self) -> usize {
        self.polygon().len()
    }
}

/// Builds the event horizon enclosing the singularity.
///
/// White holes are handled by reversing the flow, which maps them onto black
/// holes with the same geometry.
pub fn build_horizon(model: &ModelParams, cfg: &HorizonConfig) -> Result<HorizonCurve> {
    cfg.validate()?;
    let coeffs = model.singularity_coefficients()?;
    match coeffs.kind() {
        HoleKind::BlackHole => build_black_hole(model, cfg),
        HoleKind::WhiteHole => {
            let mut h = build_black_hole(&model.reversed(), cfg)?;
            h.kind = HoleKind::WhiteHole;
            Ok(h)
        }
    }
}

fn build_black_hole(model: &ModelParams, cfg: &HorizonConfig) -> Result<HorizonCurve> {
    let report = find_tangential_points(model)?;
    if report.characteristic {
        return characteristic_horizon(model);
    }
    let tracer = Tracer::new(model, cfg)?;
    let (plus, minus) = rayon::join(
        || bounding_separatrix(&tracer, Family::Plus),
        || bounding_separatrix(&tracer, Family::Minus),
    );
    let (plus, minus) = (plus?, minus?);
    let critical_points = Family::BOTH
        .iter()
        .flat_map(|&f| report.points.iter().map(move |&th| (f, th)))
        .map(|(f, th)| jacobian_at(model, th, f))
        .collect::<Result<Vec<_>>>()?;
    let graphs = [RadialGraph::new(model, &plus.trajectory)?, RadialGraph::new(model, &minus.trajectory)?];
    let mut curve = assemble(model, cfg, &graphs, &report.points, &[&plus.trajectory, &minus.trajectory])?;
    curve.separatrices = vec![plus, minus];
    curve.critical_points = critical_points;
    Ok(curve)
}

/// Horizon of a model whose whole ergosphere is characteristic: the ergosphere itself.
fn characteristic_horizon(model: &ModelParams) -> Result<HorizonCurve> {
    let n = 360;
    let mut points = (0..n)
        .map(|k| {
            let th = TAU * k as f64 / n as f64;
            Ok(PolarPoint { r: model.ergosphere_radius(th)?, theta: th }.to_cartesian())
        })
        .collect::<Result<Vec<Point>>>()?;
    points.push(points[0]);
    Ok(HorizonCurve {
        kind: HoleKind::BlackHole,
        segments: vec![HorizonSegment { family: None, points }],
        corners: vec![],
        closed: true,
        closed_gap: 0.0,
        separatrices: vec![],
        critical_points: vec![],
    })
}

/// Which boundary is innermost at `theta`: `Some(Plus)`, `Some(Minus)` or `None` for the ergosphere.
fn inner_family(model: &ModelParams, graphs: &[RadialGraph; 2], theta: f64) -> Result<(Option<Family>, f64, f64)> {
    let r0 = model.ergosphere_radius(theta)?;
    let rp = graphs[0].eval(theta).map_or(r0, |v| v.0.min(r0));
    let rm = graphs[1].eval(theta).map_or(r0, |v| v.0.min(r0));
    let d = rp - rm;
    let fam = if d < 0.0 {
        Some(Family::Plus)
    } else if d > 0.0 {
        Some(Family::Minus)
    } else {
        None
    };
    Ok((fam, rp, rm))
}

fn boundary_at(model: &ModelParams, graphs: &[RadialGraph; 2], family: Option<Family>, theta: f64) -> Result<(f64, f64)> {
    let g = match family {
        Some(Family::Plus) => graphs[0].eval(theta),
        Some(Family::Minus) => graphs[1].eval(theta),
        None => None,
    };
    match g {
        Some(v) => Ok(v),
        None => Ok((model.ergosphere_radius(theta)?, ergosphere_slope(model, theta)?)),
    }
}

fn tangent(r: f64, drdth: f64, theta: f64) -> Point {
    let (s, c) = theta.sin_cos();
    [drdth * c - r * s, drdth * s + r * c]
}

fn assemble(
    model: &ModelParams,
    cfg: &HorizonConfig,
    graphs: &[RadialGraph; 2],
    tangential: &[f64],
    separatrices: &[&Trajectory; 2],
) -> Result<HorizonCurve> {
    // label scan
    let m = 4096;
    let grid: Vec<f64> = (0..=m).map(|k| TAU * k as f64 / m as f64).collect();
    let labels = grid
        .iter()
        .map(|&th| Ok(inner_family(model, graphs, th)?.0))
        .collect::<Result<Vec<_>>>()?;
    let mut breaks: Vec<f64> = Vec::new();
    for k in 0..m {
        if labels[k] == labels[k + 1] {
            continue;
        }
        let (mut lo, mut hi) = (grid[k], grid[k + 1]);
        let l_lo = labels[k];
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if inner_family(model, graphs, mid)?.0 == l_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut b = 0.5 * (lo + hi);
        // separatrices ending at a tangential point switch exactly there
        if let Some(&t) = tangential.iter().find(|&&t| angle_gap(t, b) < 1e-6) {
            b = t;
        }
        breaks.push(b.rem_euclid(TAU));
    }
    // transversal crossings of the two separatrices, as a cross-check
    let polylines: Vec<Vec<Point>> = separatrices.iter().map(|t| t.cartesian()).collect();
    for x in geometry::polyline_intersections(&polylines[0], &polylines[1]) {
        let th = x.point[1].atan2(x.point[0]).rem_euclid(TAU);
        if !breaks.iter().any(|&b| angle_gap(b, th) < 1e-4) {
            log::warn!("separatrix crossing at theta={th} does not match any horizon switch");
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| angle_gap(*a, *b) < 1e-12);

    let n_total = cfg.horizon_points;
    let mut segments = Vec::new();
    let mut corners = Vec::new();
    if breaks.is_empty() {
        let fam = inner_family(model, graphs, 0.0)?.0;
        let pts = sample_boundary(model, graphs, fam, 0.0, TAU, n_total + 1)?;
        segments.push(HorizonSegment { family: fam, points: pts });
    } else {
        let nb = breaks.len();
        for k in 0..nb {
            let a = breaks[k];
            let b = if k + 1 < nb { breaks[k + 1] } else { breaks[0] + TAU };
            let fam = inner_family(model, graphs, 0.5 * (a + b))?.0;
            let n = ((n_total as f64 * (b - a) / TAU).round() as usize).max(2);
            segments.push(HorizonSegment { family: fam, points: sample_boundary(model, graphs, fam, a, b, n + 1)? });
        }
        for k in 0..nb {
            let prev = segments[(k + nb - 1) % nb].family;
            let next = segments[k].family;
            let th = breaks[k];
            let (r_in, d_in) = boundary_at(model, graphs, prev, th)?;
            let (_, d_out) = boundary_at(model, graphs, next, th)?;
            let turn = geometry::angle_between(tangent(r_in, d_in, th), tangent(r_in, d_out, th)).to_degrees();
            if turn > cfg.corner_angle_min_deg {
                corners.push(Corner { r: r_in, theta: th, angle_deg: 180.0 - turn });
            }
        }
    }
    // close exactly
    let first = segments[0].points[0];
    let last_seg = segments.last_mut().unwrap();
    let gap = geometry::dist(first, *last_seg.points.last().unwrap());
    if gap > 1e-6 {
        return Err(Error::Horizon(format!("horizon does not close (gap {gap:e})")));
    }
    *last_seg.points.last_mut().unwrap() = first;
    let curve = HorizonCurve {
        kind: HoleKind::BlackHole,
        segments,
        corners,
        closed: true,
        closed_gap: gap,
        separatrices: vec![],
        critical_points: vec![],
    };
    let poly = curve.polygon();
    if geometry::winding_number(&poly, [0.0, 0.0]) != 1 {
        return Err(Error::Horizon("horizon does not wind once around O".into()));
    }
    Ok(curve)
}

fn sample_boundary(
    model: &ModelParams,
    graphs: &[RadialGraph; 2],
    family: Option<Family>,
    a: f64,
    b: f64,
    n: usize,
) -> Result<Vec<Point>> {
    (0..n)
        .map(|k| {
            let th = if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 };
            let (r, _) = boundary_at(model, graphs, family, th)?;
            let r = r.min(model.ergosphere_radius(th)?);
            Ok(PolarPoint { r, theta: th }.to_cartesian())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoEscapeReport {
    /// Largest `v·ν + 1` over the samples and one-sided corner normals.
    pub max_violation: f64,
    pub samples: usize,
}

/// Checks `v·ν ≤ −1` (no escape for unit sound speed) at arclength-uniform
/// points of the horizon, with `ν` the outward normal of the polyline.
///
/// For a white hole the check is made on the reversed flow, for which the
/// horizon is a black-hole horizon.
pub fn no_escape_check(model: &ModelParams, horizon: &HorizonCurve, n_samples: usize) -> Result<NoEscapeReport> {
    if !horizon.closed {
        return Err(Error::Horizon("no-escape check needs a closed horizon".into()));
    }
    let flow_model = match horizon.kind {
        HoleKind::BlackHole => *model,
        HoleKind::WhiteHole => model.reversed(),
    };
    let poly = horizon.polygon();
    let n = poly.len();
    let mut cum = vec![0.0];
    for k in 0..n {
        cum.push(cum[k] + geometry::dist(poly[k], poly[(k + 1) % n]));
    }
    let total = cum[n];
    let corner_pos: Vec<Point> = horizon.corners.iter().map(Corner::position).collect();
    let mean_edge = total / n as f64;
    let excluded = |p: Point| corner_pos.iter().any(|&c| geometry::dist(p, c) < 3.0 * mean_edge);
    let vertex_tangent = |k: usize| {
        let (a, b) = (poly[(k + n - 1) % n], poly[(k + 1) % n]);
        [b[0] - a[0], b[1] - a[1]]
    };
    let s_at = |p: Point, t: Point| -> Result<f64> {
        let len = t[0].hypot(t[1]);
        let nu = [t[1] / len, -t[0] / len];
        let v = flow_model.velocity(PolarPoint::from_cartesian(p[0], p[1])?)?;
        Ok(v[0] * nu[0] + v[1] * nu[1] + 1.0)
    };
    let mut worst = f64::NEG_INFINITY;
    let mut used = 0;
    let mut j = 0;
    for i in 0..n_samples {
        let target = total * i as f64 / n_samples as f64;
        while cum[j + 1] < target {
            j += 1;
        }
        let w = (target - cum[j]) / (cum[j + 1] - cum[j]);
        let (a, b) = (poly[j], poly[(j + 1) % n]);
        let p = [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])];
        if excluded(p) {
            continue;
        }
        let (ta, tb) = (vertex_tangent(j), vertex_tangent((j + 1) % n));
        let t = [ta[0] + w * (tb[0] - ta[0]), ta[1] + w * (tb[1] - ta[1])];
        worst = worst.max(s_at(p, t)?);
        used += 1;
    }
    for &c in &corner_pos {
        let k = (0..n)
            .min_by(|&a, &b| geometry::dist(poly[a], c).total_cmp(&geometry::dist(poly[b], c)))
            .unwrap();
        let incoming = one_sided_tangent(c, poly[(k + n - 1) % n], poly[(k + n - 2) % n]);
        let outgoing = one_sided_tangent(c, poly[(k + 1) % n], poly[(k + 2) % n]);
        for t in [[-incoming[0], -incoming[1]], outgoing] {
            worst = worst.max(s_at(c, t)?);
        }
    }
    Ok(NoEscapeReport { max_violation: worst, samples: used })
}

/// Second-order one-sided tangent at `p0` pointing towards `p1`, from the
/// quadratic through `p0, p1, p2` parameterized by chord length.
fn one_sided_tangent(p0: Point, p1: Point, p2: Point) -> Point {
    let s1 = geometry::dist(p0, p1);
    let s2 = s1 + geometry::dist(p1, p2);
    let (c0, c1, c2) = (-(s1 + s2) / (s1 * s2), s2 / (s1 * (s2 - s1)), -s1 / (s2 * (s2 - s1)));
    [c0 * p0[0] + c1 * p1[0] + c2 * p2[0], c0 * p0[1] + c1 * p1[1] + c2 * p2[1]]
}

/// `v·ν + 1` at an ergosphere point with `ν` the outward ergosphere normal.
pub fn ergosphere_escape_margin(model: &ModelParams, theta: f64) -> Result<f64> {
    let r = model.ergosphere_radius(theta)?;
    let (gr, gt) = model.rho_grad(r, theta);
    let (s, c) = theta.sin_cos();
    // ∇ρ in Cartesian; ρ decreases outward
    let g = [gr * c - gt * s / r, gr * s + gt * c / r];
    let len = g[0].hypot(g[1]);
    let nu = [-g[0] / len, -g[1] / len];
    let v = model.velocity(PolarPoint { r, theta })?;
    Ok(v[0] * nu[0] + v[1] * nu[1] + 1.0)
}

/// Radii where the ray at angle `theta` crosses the horizon, ascending.
pub fn ray_crossing(horizon: &HorizonCurve, theta: f64) -> Vec<f64> {
    geometry::ray_crossings(&horizon.polygon(), theta)
}

/// Horizon vertices reflected by `θ ↦ π − θ`.
pub fn mirrored(poly: &[Point]) -> Vec<Point> {
    poly.iter().map(|p| [-p[0], p[1]]).collect()
}

/// Closed polyline with the first vertex repeated at the end.
pub fn closed_polyline(h: &HorizonCurve) -> Vec<Point> {
    let mut p = h.polygon();
    p.push(p[0]);
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn canonical() -> ModelParams {
        ModelParams::new(-2.0, 0.3).unwrap()
    }

    #[test]
    fn deep_interior_falls_in() {
        let cfg = HorizonConfig::default();
        for fam in Family::BOTH {
            let f = classify_fate(&canonical(), PolarPoint::new(0.3, 1.0).unwrap(), fam, &cfg).unwrap();
            assert_eq!(f, Fate::FellIn);
        }
    }

    #[test]
    fn minus_near_ergosphere_exits() {
        let m = canonical();
        let r = invert_rho(&m, 1e-6, 0.0).unwrap();
        let f = classify_fate(&m, PolarPoint::new(r, 0.0).unwrap(), Family::Minus, &HorizonConfig::default()).unwrap();
        match f {
            Fate::Exited { theta } => assert!(theta > 0.0 && theta < 0.1, "{theta}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn radial_model_falls_in() {
        let m = ModelParams::radial_allowed(-2.0, 0.0).unwrap();
        let cfg = HorizonConfig::default();
        for (r, th) in [(1.0, 0.0), (1.9, 2.0), (0.5, -1.0)] {
            for fam in Family::BOTH {
                assert_eq!(classify_fate(&m, PolarPoint::new(r, th).unwrap(), fam, &cfg).unwrap(), Fate::FellIn);
            }
        }
    }

    #[test]
    fn outside_start_rejected() {
        let r = classify_fate(&canonical(), PolarPoint::new(5.0, 0.0).unwrap(), Family::Plus, &HorizonConfig::default());
        assert!(matches!(r, Err(Error::OutsideErgoregion { .. })));
    }

    #[test]
    fn radial_horizon_is_circle() {
        let m = ModelParams::radial_allowed(-2.0, 0.0).unwrap();
        let h = build_horizon(&m, &HorizonConfig::default()).unwrap();
        assert!(h.corners.is_empty());
        assert_eq!(h.segments.len(), 1);
        assert_eq!(h.segments[0].points.len(), 361);
        for p in &h.segments[0].points {
            assert!((p[0].hypot(p[1]) - 2.0).abs() < 1e-12);
        }
        for th in [0.0, 1.0, -2.5] {
            let rs = ray_crossing(&h, th);
            assert_eq!(rs.len(), 1);
            assert!((rs[0] - 2.0).abs() < 1e-3);
        }
        let rep = no_escape_check(&m, &h, 64).unwrap();
        assert!(rep.max_violation.abs() < 1e-3);
    }

    #[test]
    fn negative_control_escapes() {
        assert!(ergosphere_escape_margin(&canonical(), 0.0).unwrap() > 0.1);
    }

    #[test]
    fn starting_arc_of_plus() {
        let arcs = starting_arcs(&canonical(), Family::Plus).unwrap();
        assert_eq!(arcs.len(), 1);
        let (a, b) = arcs[0];
        assert!((a - 1.5 * PI).abs() < 1e-9 && (b - 2.5 * PI).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        let bad = HorizonConfig { seed_offset: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(HorizonConfig::default().validate().is_ok());
    }
}
