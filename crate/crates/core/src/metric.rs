//! Acoustic metric of a stationary planar potential flow.
//!
//! The flow is written in polar form `v = (A/r) r̂ + (B/r) θ̂` with sound speed
//! and density both fixed to one. Everything in this module is a pure function
//! of the model and the evaluation point.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

/// Flow families understood by the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Potential `ψ = A0 log r + eps r sin θ`: a draining sink plus a uniform stream.
    AcousticLogVortex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoleKind {
    BlackHole,
    WhiteHole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub a0: f64,
    pub eps: f64,
    pub allow_radial: bool,
}

impl ModelParams {
    pub fn new(a0: f64, eps: f64) -> Result<Self> {
        Self::with_kind(ModelKind::AcousticLogVortex, a0, eps, false)
    }

    /// Same as [`ModelParams::new`] but accepts `eps == 0` (purely radial flow).
    pub fn radial_allowed(a0: f64, eps: f64) -> Result<Self> {
        Self::with_kind(ModelKind::AcousticLogVortex, a0, eps, true)
    }

    pub fn with_kind(kind: ModelKind, a0: f64, eps: f64, allow_radial: bool) -> Result<Self> {
        if !a0.is_finite() || a0 == 0.0 {
            return Err(Error::InvalidModel("A0 must be nonzero".into()));
        }
        if !eps.is_finite() || eps.abs() >= 1.0 {
            return Err(Error::InvalidModel("eps must lie in (-1, 1)".into()));
        }
        if eps == 0.0 && !allow_radial {
            return Err(Error::InvalidModel(
                "eps must be nonzero unless allow_radial is set".into(),
            ));
        }
        if a0.abs() <= 1.0 {
            log::warn!("|A0| = {} is outside the studied regime |A0| > 1", a0.abs());
        }
        Ok(Self {
            kind,
            a0,
            eps,
            allow_radial,
        })
    }

    /// The model with the flow reversed, `v -> -v`.
    pub fn reversed(&self) -> Self {
        Self {
            a0: -self.a0,
            eps: -self.eps,
            ..*self
        }
    }

    pub fn flow_at(&self, p: PolarPoint) -> Result<FlowComponents> {
        p.check()?;
        Ok(self.flow(p.r, p.theta))
    }

    /// Flow multipliers without the `r > 0` check; `r = 0` yields the limit values.
    pub(crate) fn flow(&self, r: f64, theta: f64) -> FlowComponents {
        match self.kind {
            ModelKind::AcousticLogVortex => {
                let (s, c) = theta.sin_cos();
                let e = self.eps;
                FlowComponents {
                    a: self.a0 + e * r * s,
                    b: e * r * c,
                    a_r: e * s,
                    a_theta: e * r * c,
                    b_r: e * c,
                    b_theta: -e * r * s,
                }
            }
        }
    }

    /// `A² + B² − r²`: positive inside the ergoregion, zero on the ergosphere.
    pub fn ergo_fn(&self, p: PolarPoint) -> Result<f64> {
        p.check()?;
        Ok(self.rho(p.r, p.theta))
    }

    pub(crate) fn rho(&self, r: f64, theta: f64) -> f64 {
        let f = self.flow(r, theta);
        f.a * f.a + f.b * f.b - r * r
    }

    /// Partial derivatives of `A² + B² − r²` with respect to `r` and `θ`.
    pub fn rho_grad(&self, r: f64, theta: f64) -> (f64, f64) {
        let f = self.flow(r, theta);
        (
            2.0 * (f.a * f.a_r + f.b * f.b_r - r),
            2.0 * (f.a * f.a_theta + f.b * f.b_theta),
        )
    }

    pub fn inverse_metric_at(&self, p: PolarPoint) -> Result<InverseMetricComponents> {
        let f = self.flow_at(p)?;
        let r = p.r;
        Ok(InverseMetricComponents {
            g00: 1.0,
            g0r: f.a / r,
            g0theta: f.b / (r * r),
            grr: f.a * f.a / (r * r) - 1.0,
            grtheta: f.a * f.b / (r * r * r),
            gthetatheta: f.b * f.b / (r * r * r * r) - 1.0 / (r * r),
        })
    }

    /// Cartesian flow velocity `(v1, v2)`.
    pub fn velocity(&self, p: PolarPoint) -> Result<[f64; 2]> {
        let f = self.flow_at(p)?;
        let (s, c) = p.theta.sin_cos();
        let vr = f.a / p.r;
        let vt = f.b / p.r;
        Ok([vr * c - vt * s, vr * s + vt * c])
    }

    /// Contravariant metric in the Cartesian frame `(x0, x1, x2)`.
    pub fn inverse_metric_cartesian(&self, p: PolarPoint) -> Result<[[f64; 3]; 3]> {
        let v = self.velocity(p)?;
        Ok([
            [1.0, v[0], v[1]],
            [v[0], v[0] * v[0] - 1.0, v[0] * v[1]],
            [v[1], v[0] * v[1], v[1] * v[1] - 1.0],
        ])
    }

    pub fn lower_metric_at(&self, p: PolarPoint) -> Result<LowerMetricComponents> {
        let v = self.velocity(p)?;
        Ok(LowerMetricComponents {
            h00: 1.0 - (v[0] * v[0] + v[1] * v[1]),
            h0x: v[0],
            h0y: v[1],
            hxx: -1.0,
            hxy: 0.0,
            hyy: -1.0,
        })
    }

    /// `g¹¹g²² − (g¹²)²` from the Cartesian inverse metric; negative in the ergoregion.
    pub fn delta_cartesian(&self, p: PolarPoint) -> Result<f64> {
        let g = self.inverse_metric_cartesian(p)?;
        Ok(g[1][1] * g[2][2] - g[1][2] * g[1][2])
    }

    /// Radius `r0(θ)` of the ergosphere along the ray at angle `theta`.
    ///
    /// Bracketed bisection on `ergo_fn` followed by a secant polish. Near `r = 0`
    /// the function tends to `A0² > 0`, so the bracket is grown outward until the
    /// sign flips.
    pub fn ergosphere_radius(&self, theta: f64) -> Result<f64> {
        let f = |r: f64| self.rho(r, theta);
        let lo = 1e-9 * self.a0.abs();
        if f(lo) <= 0.0 {
            return Err(Error::NoErgosphere(theta));
        }
        let mut hi = 2.0 * self.a0.abs();
        while f(hi) > 0.0 {
            hi *= 2.0;
            if hi > 1e9 * self.a0.abs() {
                return Err(Error::NoErgosphere(theta));
            }
        }
        let (a, b) = roots::bisect(f, lo, hi, 1e-13 * hi).ok_or(Error::NoErgosphere(theta))?;
        Ok(roots::secant_polish(f, a, b))
    }

    /// Quadratic-root form of `r0(θ)`, valid for [`ModelKind::AcousticLogVortex`].
    pub fn ergosphere_radius_closed_form(&self, theta: f64) -> f64 {
        let (a0, e) = (self.a0, self.eps);
        let s = theta.sin();
        let disc = a0 * a0 * e * e * s * s + a0 * a0 * (1.0 - e * e);
        (a0 * e * s + disc.sqrt()) / (1.0 - e * e)
    }

    pub fn singularity_coefficients(&self) -> Result<SingularityCoefficients> {
        let coeffs = SingularityCoefficients { model: *self };
        let b1_0 = coeffs.b1(0.0);
        for k in 0..720 {
            let b1 = coeffs.b1(2.0 * PI * k as f64 / 720.0);
            if b1 == 0.0 || b1.signum() != b1_0.signum() {
                return Err(Error::SingularityViolated(b1));
            }
        }
        Ok(coeffs)
    }
}

/// Limits `b1(θ) = lim A`, `b2(θ) = lim B` of the flow multipliers at the singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityCoefficients {
    model: ModelParams,
}

impl SingularityCoefficients {
    pub fn b1(&self, theta: f64) -> f64 {
        self.model.flow(0.0, theta).a
    }

    pub fn b2(&self, theta: f64) -> f64 {
        self.model.flow(0.0, theta).b
    }

    pub fn kind(&self) -> HoleKind {
        if self.b1(0.0) < 0.0 {
            HoleKind::BlackHole
        } else {
            HoleKind::WhiteHole
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        let p = Self { r, theta };
        p.check()?;
        Ok(p)
    }

    pub fn from_cartesian(x: f64, y: f64) -> Result<Self> {
        Self::new(x.hypot(y), y.atan2(x))
    }

    pub(crate) fn checked(self) -> Result<Self> {
        self.check()?;
        Ok(self)
    }

    pub fn to_cartesian(self) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [self.r * c, self.r * s]
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.r > 0.0 && self.r.is_finite() {
            Ok(())
        } else {
            Err(Error::NonPositiveRadius(self.r))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowComponents {
    pub a: f64,
    pub b: f64,
    pub a_r: f64,
    pub a_theta: f64,
    pub b_r: f64,
    pub b_theta: f64,
}

/// Contravariant metric components in the `(x0, r, θ)` frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseMetricComponents {
    pub g00: f64,
    pub g0r: f64,
    pub g0theta: f64,
    pub grr: f64,
    pub grtheta: f64,
    pub gthetatheta: f64,
}

impl InverseMetricComponents {
    /// Determinant of the spatial block; `−ρ/r⁴` for the acoustic metric.
    pub fn spatial_det(&self) -> f64 {
        self.grr * self.gthetatheta - self.grtheta * self.grtheta
    }
}

/// Covariant metric components in the Cartesian frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerMetricComponents {
    pub h00: f64,
    pub h0x: f64,
    pub h0y: f64,
    pub hxx: f64,
    pub hxy: f64,
    pub hyy: f64,
}

impl LowerMetricComponents {
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.h00, self.h0x, self.h0y],
            [self.h0x, self.hxx, self.hxy],
            [self.h0y, self.hxy, self.hyy],
        ]
    }
}
