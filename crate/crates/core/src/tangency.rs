//! Tangential points of the ergosphere and the local dynamics around them.
//!
//! A tangential point is a zero of `θ ↦ Q(r0(θ), θ)`. In the square-root
//! chart `(t, θ)` it is an equilibrium of the geodesic flow, and its
//! linearization decides whether nearby trajectories behave like a saddle, a
//! node or a spiral.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{invert_rho, q_at, rhs_sqrtchart, sqrtchart_at, Family};
use crate::metric::{ModelParams, PolarPoint};
use crate::ode::{integrate, Crossing, Direction, EventSpec, IntegratorConfig};
use crate::roots;

pub type Matrix2 = [[f64; 2]; 2];

const SCAN_POINTS: usize = 2048;
const ROOT_TOL: f64 = 1e-12;
const ZERO_Q: f64 = 1e-10;
pub const CLASSIFY_TOL: f64 = 1e-9;
pub const JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Saddle,
    UnstableNode,
    StableNode,
    UnstableSpiral,
    StableSpiral,
    Degenerate,
}

impl CriticalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CriticalKind::Saddle => "saddle",
            CriticalKind::UnstableNode => "unstable_node",
            CriticalKind::StableNode => "stable_node",
            CriticalKind::UnstableSpiral => "unstable_spiral",
            CriticalKind::StableSpiral => "stable_spiral",
            CriticalKind::Degenerate => "degenerate",
        }
    }

    pub fn is_spiral(self) -> bool {
        matches!(self, CriticalKind::UnstableSpiral | CriticalKind::StableSpiral)
    }

    pub fn is_node(self) -> bool {
        matches!(self, CriticalKind::UnstableNode | CriticalKind::StableNode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointInfo {
    pub theta_star: f64,
    /// Ergosphere radius at `theta_star`.
    pub r_star: f64,
    pub family: Family,
    pub jacobian: Matrix2,
    pub det: f64,
    pub trace: f64,
    pub discriminant: f64,
    pub kind: CriticalKind,
}

impl CriticalPointInfo {
    fn from_jacobian(theta_star: f64, r_star: f64, family: Family, jacobian: Matrix2) -> Self {
        let (det, trace, discriminant) = invariants(&jacobian);
        Self {
            theta_star,
            r_star,
            family,
            jacobian,
            det,
            trace,
            discriminant,
            kind: classify(det, trace, discriminant),
        }
    }

    /// Real eigenpairs `(λ, v)` with unit `v`, or `None` for complex eigenvalues.
    pub fn eigenpairs(&self) -> Option<[(f64, [f64; 2]); 2]> {
        if self.discriminant < 0.0 {
            return None;
        }
        let sq = self.discriminant.sqrt();
        let [[a, b], [c, d]] = self.jacobian;
        let pair = |lam: f64| {
            let v1 = [b, lam - a];
            let v2 = [lam - d, c];
            let v = if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) { v1 } else { v2 };
            let n = v[0].hypot(v[1]);
            (lam, [v[0] / n, v[1] / n])
        };
        let (l1, l2) = (0.5 * (self.trace + sq), 0.5 * (self.trace - sq));
        let out = [pair(l1), pair(l2)];
        out.iter().all(|(_, v)| v[0].is_finite() && v[1].is_finite()).then_some(out)
    }

    pub fn point(&self) -> PolarPoint {
        PolarPoint { r: self.r_star, theta: self.theta_star }
    }
}

/// `(det, trace, trace² − 4 det)`.
pub fn invariants(m: &Matrix2) -> (f64, f64, f64) {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let tr = m[0][0] + m[1][1];
    (det, tr, tr * tr - 4.0 * det)
}

pub fn classify(det: f64, trace: f64, discriminant: f64) -> CriticalKind {
    let tol = CLASSIFY_TOL;
    if det < -tol {
        CriticalKind::Saddle
    } else if det > tol && discriminant >= tol {
        if trace > 0.0 {
            CriticalKind::UnstableNode
        } else {
            CriticalKind::StableNode
        }
    } else if det > tol && discriminant <= -tol {
        if trace > 0.0 {
            CriticalKind::UnstableSpiral
        } else {
            CriticalKind::StableSpiral
        }
    } else {
        CriticalKind::Degenerate
    }
}

pub fn classify_critical_point(info: &CriticalPointInfo) -> CriticalKind {
    classify(info.det, info.trace, info.discriminant)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangencyReport {
    /// Transversal zeros of `Q` on the ergosphere, ascending in `[0, 2π)`.
    pub points: Vec<f64>,
    /// Angles where `|Q|` touches zero without changing sign.
    pub degenerate: Vec<f64>,
    /// `Q` vanishes identically: every ergosphere point is tangential.
    pub characteristic: bool,
}

/// `Q` along the ergosphere as a function of the angle.
pub fn q_on_ergosphere(model: &ModelParams, theta: f64) -> Result<f64> {
    let r = model.ergosphere_radius(theta)?;
    q_at(model, PolarPoint { r, theta })
}

pub fn find_tangential_points(model: &ModelParams) -> Result<TangencyReport> {
    let n = SCAN_POINTS;
    let thetas: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
    let qs = thetas
        .iter()
        .map(|&th| q_on_ergosphere(model, th))
        .collect::<Result<Vec<f64>>>()?;
    let scale = qs.iter().fold(0.0f64, |m, q| m.max(q.abs()));
    let q_scale = model.a0 * model.a0;
    if scale <= ZERO_Q * q_scale.max(1.0) {
        return Ok(TangencyReport { points: vec![], degenerate: vec![], characteristic: true });
    }
    let g = |th: f64| q_on_ergosphere(model, th).unwrap_or(f64::NAN);
    let mut points = Vec::new();
    let mut degenerate = Vec::new();
    for k in 0..n {
        let (q0, q1) = (qs[k], qs[(k + 1) % n]);
        let (a, b) = (thetas[k], if k + 1 == n { TAU } else { thetas[k + 1] });
        if q0 == 0.0 {
            let qm = qs[(k + n - 1) % n];
            if qm * q1 < 0.0 {
                points.push(a);
            } else {
                degenerate.push(a);
            }
            continue;
        }
        if q0 * q1 < 0.0 {
            if let Some((lo, hi)) = roots::bisect(g, a, b, ROOT_TOL) {
                let root = roots::secant_polish(g, lo, hi);
                points.push(root.rem_euclid(TAU));
            }
            continue;
        }
        // touching zero between samples: local minimum of |Q| without sign change
        let qm = qs[(k + n - 1) % n];
        if q0.abs() < ZERO_Q * scale && q0.abs() <= qm.abs() && q0.abs() <= q1.abs() {
            degenerate.push(a);
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
    Ok(TangencyReport { points, degenerate, characteristic: false })
}

fn sqrt_rhs(model: &ModelParams, t: f64, theta: f64, family: Family) -> Result<[f64; 2]> {
    rhs_sqrtchart(model, [t, theta], family)
}

/// Jacobian of a planar field at `(0, θ*)`: one-sided in `t`, central in `θ`,
/// both Richardson-refined.
fn fd_jacobian(f: impl Fn(f64, f64) -> Result<[f64; 2]>, theta: f64, h: f64) -> Result<Matrix2> {
    let f0 = f(0.0, theta)?;
    let dt = |h: f64| -> Result<[f64; 2]> {
        let fh = f(h, theta)?;
        Ok([(fh[0] - f0[0]) / h, (fh[1] - f0[1]) / h])
    };
    let dth = |h: f64| -> Result<[f64; 2]> {
        let (p, m) = (f(0.0, theta + h)?, f(0.0, theta - h)?);
        Ok([(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h)])
    };
    let (t1, t2) = (dt(h)?, dt(0.5 * h)?);
    let (a1, a2) = (dth(h)?, dth(0.5 * h)?);
    let col_t = [2.0 * t2[0] - t1[0], 2.0 * t2[1] - t1[1]];
    let col_th = [(4.0 * a2[0] - a1[0]) / 3.0, (4.0 * a2[1] - a1[1]) / 3.0];
    Ok([[col_t[0], col_th[0]], [col_t[1], col_th[1]]])
}

pub fn jacobian_at(model: &ModelParams, theta_star: f64, family: Family) -> Result<CriticalPointInfo> {
    jacobian_with_step(model, theta_star, family, JACOBIAN_STEP)
}

pub fn jacobian_with_step(model: &ModelParams, theta_star: f64, family: Family, h: f64) -> Result<CriticalPointInfo> {
    let r_star = model.ergosphere_radius(theta_star)?;
    let jac = fd_jacobian(|t, th| sqrt_rhs(model, t, th, family), theta_star, h)?;
    Ok(CriticalPointInfo::from_jacobian(theta_star, r_star, family, jac))
}

/// Linearization in the chart `(τ, θ)` with `τ = √(A² + B² − r²) / r`, the
/// square root of `|v|² − 1`. Used to confirm that the classification does not
/// depend on the chart.
pub fn jacobian_delta_chart(model: &ModelParams, theta_star: f64, family: Family, h: f64) -> Result<Matrix2> {
    fd_jacobian(|tau, th| delta_chart_rhs(model, tau, th, family), theta_star, h)
}

fn delta_chart_rhs(model: &ModelParams, tau: f64, theta: f64, family: Family) -> Result<[f64; 2]> {
    // solve A² + B² − r²(1 + τ²) = 0 by Newton from the ergosphere
    let k = 1.0 + tau * tau;
    let mut r = model.ergosphere_radius(theta)?;
    let mut ok = false;
    for _ in 0..50 {
        let fl = model.flow(r, theta);
        let g = fl.a * fl.a + fl.b * fl.b - k * r * r;
        let d = 2.0 * (fl.a * fl.a_r + fl.b * fl.b_r - k * r);
        let step = g / d;
        r -= step;
        if step.abs() <= 1e-14 * r {
            ok = true;
            break;
        }
    }
    if !ok || r <= 0.0 {
        return Err(Error::ChartInversion { rho: tau * tau, theta });
    }
    let t = tau * r;
    let flow = model.flow(r, theta);
    let (sq, polar) = sqrtchart_at(&flow, r, theta, t, family)?;
    Ok([sq[0] / r - t * polar[0] / (r * r), sq[1]])
}

/// Analytic linearization of the example model at `θ = ±π/2`.
pub fn closed_form_jacobian(model: &ModelParams, theta_star: f64, family: Family) -> Option<Matrix2> {
    let (a0, e, s) = (model.a0, model.eps, family.sign());
    let th = theta_star.rem_euclid(TAU);
    if (th - PI / 2.0).abs() < 1e-9 {
        let p = 1.0 + e;
        Some([[-p * p / a0, -s * 2.0 * e * p], [-s * p * p / (a0 * a0), 0.0]])
    } else if (th - 1.5 * PI).abs() < 1e-9 {
        let m = 1.0 - e;
        Some([[-m * m / a0, s * 2.0 * e * m], [-s * m * m / (a0 * a0), 0.0]])
    } else {
        None
    }
}

/// Classified tangential points for one family, ordered by angle.
pub fn critical_points(model: &ModelParams, family: Family) -> Result<Vec<CriticalPointInfo>> {
    let report = find_tangential_points(model)?;
    if report.characteristic {
        return Err(Error::CharacteristicErgosphere);
    }
    report.points.iter().map(|&th| jacobian_at(model, th, family)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSample {
    /// `|θ − θ0|`.
    pub offset: f64,
    /// `√(|v|² − 1)` along the trajectory.
    pub tau: f64,
    pub a1: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub theta0: f64,
    pub family: Family,
    pub g_thetatheta0: f64,
    pub a_theta0: f64,
    /// Observed `dτ/d|θ − θ0|` at the tangential point.
    pub tau_slope0: f64,
    /// Least-squares slope of `log residual` against `log |θ − θ0|`.
    pub fitted_slope: f64,
    pub samples: Vec<LemmaSample>,
}

const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// `g^{θθ}` on the ergosphere, `B²/r0⁴ − 1/r0²`.
fn g_thetatheta_on_ergosphere(model: &ModelParams, theta: f64) -> Result<f64> {
    let r = model.ergosphere_radius(theta)?;
    let b = model.flow(r, theta).b;
    Ok(b * b / r.powi(4) - 1.0 / (r * r))
}

fn a1_integral(model: &ModelParams, theta0: f64, theta: f64) -> Result<f64> {
    let (mid, half) = (0.5 * (theta0 + theta), 0.5 * (theta - theta0));
    let mut sum = 0.0;
    for (x, w) in GL5_X.iter().zip(GL5_W) {
        sum += w * (-0.5 / g_thetatheta_on_ergosphere(model, mid + half * x)?);
    }
    Ok(sum * half)
}

/// Compares the trajectory leaving the tangential point `theta0` with the
/// leading-order profile `a1(θ) = ∫ −1/(2 g^{θθ}(0, θ')) dθ'`.
///
/// The trajectory is the invariant manifold of the linearization whose branch
/// lies on the `θ > θ0` side for `Plus` and the `θ < θ0` side for `Minus`;
/// it is seeded `1e−3 · span.0` away from the equilibrium. Distances are
/// measured in the `√(|v|² − 1)` chart.
pub fn lemma21_profile(model: &ModelParams, theta0: f64, family: Family, span: (f64, f64)) -> Result<LemmaReport> {
    let (lo, hi) = span;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidConfig("lemma span must satisfy 0 < lo < hi".into()));
    }
    let info = jacobian_at(model, theta0, family)?;
    if info.kind == CriticalKind::Degenerate {
        return Err(Error::DegenerateTangency(theta0));
    }
    let side = family.sign();
    let pairs = info.eigenpairs().ok_or(Error::DegenerateTangency(theta0))?;
    let (lam, v) = pairs
        .iter()
        .map(|&(l, v)| if v[0] < 0.0 { (l, [-v[0], -v[1]]) } else { (l, v) })
        .find(|(_, v)| v[1] * side > 0.0)
        .ok_or_else(|| Error::Separatrix(format!("no invariant branch on the requested side of {theta0}")))?;
    let delta = 1e-3 * lo;
    let y0 = [delta * v[0], theta0 + delta * v[1]];
    let dir = if lam > 0.0 { Direction::Forward } else { Direction::Backward };
    let cfg = IntegratorConfig { rel_tol: 1e-12, abs_tol: 1e-15, max_step: 0.05, min_step: 1e-14, x0_max: 1e4 };
    let stop = [EventSpec::new(move |y: &[f64; 2]| (y[1] - theta0) * side - 1.05 * hi, Crossing::Rising, true)];
    let sol = integrate(|y| rhs_sqrtchart(model, *y, family), y0, dir, &cfg, &stop)?;
    if sol.events.is_empty() {
        return Err(Error::Separatrix("profile trajectory did not leave the tangential point".into()));
    }
    let x_end = sol.last().x0;

    let g0 = g_thetatheta_on_ergosphere(model, theta0)?;
    let n = 25;
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let u = lo * (hi / lo).powf(k as f64 / (n - 1) as f64);
        let target = theta0 + side * u;
        let (xa, xb) = roots::bisect(
            |x| sol.dense(x).map_or(f64::NAN, |y| (y[1] - target) * side),
            0.0,
            x_end,
            1e-13,
        )
        .ok_or_else(|| Error::Separatrix("profile does not reach the sample angle".into()))?;
        let y = sol.dense(0.5 * (xa + xb)).unwrap();
        let r = invert_rho(model, y[0] * y[0], y[1])?;
        let tau = y[0] / r;
        let a1 = a1_integral(model, theta0, target)?;
        samples.push(LemmaSample { offset: u, tau, a1, residual: (tau - side * a1).abs() });
    }
    let fitted_slope = loglog_slope(&samples);
    Ok(LemmaReport {
        theta0,
        family,
        g_thetatheta0: g0,
        a_theta0: -0.5 / g0,
        tau_slope0: samples[0].tau / samples[0].offset,
        fitted_slope,
        samples,
    })
}

fn loglog_slope(samples: &[LemmaSample]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.residual > 0.0)
        .map(|s| (s.offset.ln(), s.residual.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn canonical() -> ModelParams {
        ModelParams::new(-2.0, 0.3).unwrap()
    }

    #[test]
    fn canonical_tangential_points() {
        let rep = find_tangential_points(&canonical()).unwrap();
        assert!(!rep.characteristic);
        assert_eq!(rep.points.len(), 2);
        assert!((rep.points[0] - FRAC_PI_2).abs() < 1e-10);
        assert!((rep.points[1] - 1.5 * PI).abs() < 1e-10);
    }

    #[test]
    fn radial_model_is_characteristic() {
        let m = ModelParams::radial_allowed(-2.0, 0.0).unwrap();
        let rep = find_tangential_points(&m).unwrap();
        assert!(rep.characteristic && rep.points.is_empty());
        assert_eq!(critical_points(&m, Family::Plus).unwrap_err(), Error::CharacteristicErgosphere);
    }

    #[test]
    fn saddle_matrix() {
        let info = jacobian_at(&canonical(), FRAC_PI_2, Family::Plus).unwrap();
        let expect = [[0.845, -0.78], [-0.4225, 0.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((info.jacobian[i][j] - expect[i][j]).abs() < 1e-6, "{:?}", info.jacobian);
            }
        }
        assert!((info.det + 0.32955).abs() < 1e-6);
        assert_eq!(info.kind, CriticalKind::Saddle);
    }

    #[test]
    fn spiral_invariants() {
        for fam in Family::BOTH {
            let info = jacobian_at(&canonical(), 1.5 * PI, fam).unwrap();
            assert!((info.trace - 0.245).abs() < 1e-6);
            assert!((info.det - 0.05145).abs() < 1e-6);
            assert!((info.discriminant + 0.145775).abs() < 1e-6);
            assert_eq!(info.kind, CriticalKind::UnstableSpiral);
        }
    }

    #[test]
    fn node_below_threshold() {
        let m = ModelParams::new(-2.0, 0.05).unwrap();
        let info = jacobian_at(&m, 1.5 * PI, Family::Plus).unwrap();
        // (1 − ε)³(1 − 9ε)/A0²
        assert!((info.discriminant - 0.95f64.powi(3) * 0.55 / 4.0).abs() < 1e-6);
        assert_eq!(info.kind, CriticalKind::UnstableNode);
    }

    #[test]
    fn classify_thresholds() {
        assert_eq!(classify(-0.32955, 0.845, 1.0), CriticalKind::Saddle);
        assert_eq!(classify(0.1, 1.0, 0.6), CriticalKind::UnstableNode);
        assert_eq!(classify(0.1, -1.0, 0.6), CriticalKind::StableNode);
        assert_eq!(classify(0.1, -0.1, -0.39), CriticalKind::StableSpiral);
        assert_eq!(classify(1e-12, 1.0, 1.0), CriticalKind::Degenerate);
    }

    #[test]
    fn saddle_eigenvectors() {
        let info = jacobian_at(&canonical(), FRAC_PI_2, Family::Plus).unwrap();
        let pairs = info.eigenpairs().unwrap();
        assert!((pairs[0].0 - 1.1353).abs() < 1e-3 && (pairs[1].0 + 0.2903).abs() < 1e-3);
        for (lam, v) in pairs {
            let j = info.jacobian;
            let jv = [j[0][0] * v[0] + j[0][1] * v[1], j[1][0] * v[0] + j[1][1] * v[1]];
            assert!((jv[0] - lam * v[0]).abs() < 1e-8 && (jv[1] - lam * v[1]).abs() < 1e-8);
        }
        let spiral = jacobian_at(&canonical(), 1.5 * PI, Family::Plus).unwrap();
        assert!(spiral.eigenpairs().is_none());
    }

    #[test]
    fn delta_chart_preserves_invariants() {
        let m = canonical();
        for th in [FRAC_PI_2, 1.5 * PI] {
            let a = jacobian_at(&m, th, Family::Minus).unwrap();
            let b = jacobian_delta_chart(&m, th, Family::Minus, JACOBIAN_STEP).unwrap();
            let (det, tr, _) = invariants(&b);
            assert!((det - a.det).abs() < 1e-6 && (tr - a.trace).abs() < 1e-6);
        }
    }

    #[test]
    fn lemma_coefficients() {
        let rep = lemma21_profile(&canonical(), FRAC_PI_2, Family::Plus, (1e-4, 1e-2)).unwrap();
        assert!((rep.g_thetatheta0 + 0.4225).abs() < 1e-12);
        assert!((rep.a_theta0 - 1.183_432_0).abs() < 1e-7);
        assert!(rep.samples.iter().all(|s| s.tau > 0.0));
    }
}
