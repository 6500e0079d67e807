//! Characteristic direction fields and the zero-energy null-geodesic systems.
//!
//! Inside the ergoregion the characteristic quadratic form has two real null
//! directions. Their integral curves are the `Plus` and `Minus` families. The
//! right-hand sides are offered in three charts:
//!
//! * polar `(r, θ)`;
//! * the ergosphere chart `(ρ, θ)` with `ρ = A² + B² − r²`;
//! * the square-root chart `(t, θ)` with `t = √ρ`, in which the flow is smooth
//!   across the ergosphere and tangential points become ordinary equilibria.
//!
//! In the two ergosphere charts `r` is recovered from `(ρ, θ)` by Newton
//! iteration seeded at `r0(θ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{FlowComponents, ModelParams, PolarPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Plus,
    Minus,
}

impl Family {
    pub const BOTH: [Family; 2] = [Family::Plus, Family::Minus];

    /// `+1` for `Plus`, `−1` for `Minus`: the upper sign of every `±` in the field formulas.
    pub fn sign(self) -> f64 {
        match self {
            Family::Plus => 1.0,
            Family::Minus => -1.0,
        }
    }

    pub fn other(self) -> Family {
        match self {
            Family::Plus => Family::Minus,
            Family::Minus => Family::Plus,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Plus => "plus",
            Family::Minus => "minus",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Polar components `(f1, f2)` of the field annihilating the characteristic covector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionPair {
    pub f1: f64,
    pub f2: f64,
    pub family: Family,
}

impl DirectionPair {
    /// Characteristic covector `(ξ_r, ξ_θ) = (f2, −f1)`.
    pub fn covector(&self) -> [f64; 2] {
        [self.f2, -self.f1]
    }
}

const RHO_SLACK: f64 = 1e-12;
const ROUNDOFF_ULPS: f64 = 16.0;
const B1_MIN: f64 = 1e-12;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

/// Square root of `ρ`, tolerating round-off just outside the ergosphere.
fn sqrt_rho(model: &ModelParams, r: f64, theta: f64) -> Result<f64> {
    let rho = model.rho(r, theta);
    if rho < -RHO_SLACK * r * r {
        return Err(Error::OutsideErgoregion { r, theta, rho });
    }
    // values inside the cancellation noise of A² + B² − r² are zero
    let f = model.flow(r, theta);
    let noise = ROUNDOFF_ULPS * f64::EPSILON * (f.a * f.a + f.b * f.b + r * r);
    Ok(if rho <= noise { 0.0 } else { rho.sqrt() })
}

fn b1(flow: &FlowComponents, r: f64, t: f64, family: Family) -> f64 {
    -flow.a * r + family.sign() * flow.b * t
}

fn checked_b1(flow: &FlowComponents, r: f64, theta: f64, t: f64, family: Family) -> Result<f64> {
    let b = b1(flow, r, t, family);
    if b.abs() < B1_MIN || !b.is_finite() {
        return Err(Error::DegenerateDenominator { r, theta, b1: b });
    }
    Ok(b)
}

pub fn f_field(model: &ModelParams, p: PolarPoint, family: Family) -> Result<DirectionPair> {
    let flow = model.flow_at(p)?;
    let t = sqrt_rho(model, p.r, p.theta)?;
    let r = p.r;
    Ok(DirectionPair {
        f1: flow.a * flow.b / r - family.sign() * t,
        f2: flow.b * flow.b / (r * r) - 1.0,
        family,
    })
}

/// `(dr/dx0, dθ/dx0)` in polar coordinates.
pub fn rhs_polar(model: &ModelParams, p: PolarPoint, family: Family) -> Result<[f64; 2]> {
    let flow = model.flow_at(p)?;
    let t = sqrt_rho(model, p.r, p.theta)?;
    polar_from_t(&flow, p.r, p.theta, t, family)
}

/// Polar right-hand side written with `t = √ρ` as an explicit argument.
///
/// The expressions are polynomial in `t`, so they stay meaningful for the small
/// negative `t` that the square-root chart produces when a trajectory crosses
/// the ergosphere.
fn polar_from_t(flow: &FlowComponents, r: f64, theta: f64, t: f64, family: Family) -> Result<[f64; 2]> {
    let s = family.sign();
    let den = checked_b1(flow, r, theta, t, family)?;
    let f1 = flow.a * flow.b / r - s * t;
    let f2 = flow.b * flow.b / (r * r) - 1.0;
    Ok([s * f1 * t / den, s * f2 * t / den])
}

/// Tangency function `Q = (AA_θ + BB_θ)(B²/r² − 1) + (AA_r + BB_r − r)AB/r`.
pub fn q_at(model: &ModelParams, p: PolarPoint) -> Result<f64> {
    let flow = model.flow_at(p)?;
    Ok(q_value(&flow, p.r))
}

fn q_value(f: &FlowComponents, r: f64) -> f64 {
    (f.a * f.a_theta + f.b * f.b_theta) * (f.b * f.b / (r * r) - 1.0)
        + (f.a * f.a_r + f.b * f.b_r - r) * f.a * f.b / r
}

/// Solves `ρ(r, θ) = rho` for `r` by Newton iteration seeded at `r0(θ)`.
///
/// `rho` may be slightly negative; the iteration then moves outward past the
/// ergosphere, which is what the square-root chart needs for `t < 0`.
pub fn invert_rho(model: &ModelParams, rho: f64, theta: f64) -> Result<f64> {
    let mut r = model.ergosphere_radius(theta)?;
    for _ in 0..NEWTON_MAX_ITER {
        let g = model.rho(r, theta) - rho;
        let (d, _) = model.rho_grad(r, theta);
        if d >= 0.0 || !d.is_finite() {
            break;
        }
        let step = g / d;
        r -= step;
        if r <= 0.0 {
            break;
        }
        if step.abs() <= NEWTON_TOL * r.max(1.0) {
            return Ok(r);
        }
    }
    Err(Error::ChartInversion { rho, theta })
}

/// `(dρ/dx0, dθ/dx0)` in the ergosphere chart.
pub fn rhs_ergochart(model: &ModelParams, rho_theta: [f64; 2], family: Family) -> Result<[f64; 2]> {
    let [rho, theta] = rho_theta;
    if rho < 0.0 {
        return Err(Error::OutsideErgoregion { r: f64::NAN, theta, rho });
    }
    let r = invert_rho(model, rho, theta)?;
    let flow = model.flow(r, theta);
    let t = rho.sqrt();
    let s = family.sign();
    let den = checked_b1(&flow, r, theta, t, family)?;
    let q = q_value(&flow, r);
    let radial = r - flow.a * flow.a_r - flow.b * flow.b_r;
    let f2 = flow.b * flow.b / (r * r) - 1.0;
    Ok([(2.0 * s * q * t + 2.0 * radial * rho) / den, s * f2 * t / den])
}

/// `(dt/dx0, dθ/dx0)` in the square-root chart. Smooth through `t = 0`.
pub fn rhs_sqrtchart(model: &ModelParams, t_theta: [f64; 2], family: Family) -> Result<[f64; 2]> {
    let [t, theta] = t_theta;
    let r = invert_rho(model, t * t, theta)?;
    let flow = model.flow(r, theta);
    Ok(sqrtchart_at(&flow, r, theta, t, family)?.0)
}

/// Square-root chart right-hand side at a point whose radius is already known.
/// Also returns the polar right-hand side at the same point.
pub(crate) fn sqrtchart_at(
    flow: &FlowComponents,
    r: f64,
    theta: f64,
    t: f64,
    family: Family,
) -> Result<([f64; 2], [f64; 2])> {
    let s = family.sign();
    let den = checked_b1(flow, r, theta, t, family)?;
    let q = q_value(flow, r);
    let radial = r - flow.a * flow.a_r - flow.b * flow.b_r;
    let f1 = flow.a * flow.b / r - s * t;
    let f2 = flow.b * flow.b / (r * r) - 1.0;
    Ok((
        [(s * q + radial * t) / den, s * f2 * t / den],
        [s * f1 * t / den, s * f2 * t / den],
    ))
}

/// Slope `dρ/dθ` of a trajectory in the ergosphere chart.
pub fn drho_dtheta(model: &ModelParams, rho_theta: [f64; 2], family: Family) -> Result<f64> {
    let [rho, theta] = rho_theta;
    if rho < 0.0 {
        return Err(Error::OutsideErgoregion { r: f64::NAN, theta, rho });
    }
    let r = invert_rho(model, rho, theta)?;
    let flow = model.flow(r, theta);
    let f2 = flow.b * flow.b / (r * r) - 1.0;
    let radial = flow.a * flow.a_r + flow.b * flow.b_r - r;
    Ok((2.0 * q_value(&flow, r) - family.sign() * 2.0 * radial * rho.sqrt()) / f2)
}

/// Global form of `f±`, valid on the whole ergoregion up to removable singularities.
pub fn f_field_global(model: &ModelParams, p: PolarPoint, family: Family) -> Result<DirectionPair> {
    let flow = model.flow_at(p)?;
    let t = sqrt_rho(model, p.r, p.theta)?;
    let (r, s) = (p.r, family.sign());
    let f2 = flow.b - s * r;
    let f1 = (flow.a * flow.a - r * r) * f2 / (flow.a * flow.b / r + s * t);
    Ok(DirectionPair { f1, f2, family })
}

/// Polar speed `|dx/dx0|` (Euclidean) for a polar right-hand side at radius `r`.
pub(crate) fn polar_speed(r: f64, d: [f64; 2]) -> f64 {
    d[0].hypot(r * d[1])
}
