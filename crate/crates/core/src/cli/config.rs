//! Run configuration: strict JSON parsing, validation and default tracking.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::horizon::HorizonConfig;
use crate::metric::{ModelKind, ModelParams};
use crate::ode::IntegratorConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    integrator: Option<RawIntegrator>,
    horizon: Option<RawHorizon>,
    sampling: Option<RawSampling>,
    output: Option<RawOutput>,
    verify: Option<RawVerify>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: Option<ModelKind>,
    #[serde(rename = "A0")]
    a0: f64,
    eps: f64,
    allow_radial: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    max_step: Option<f64>,
    min_step: Option<f64>,
    x0_max: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHorizon {
    inner_radius_factor: Option<f64>,
    seed_offset: Option<f64>,
    saddle_offset: Option<f64>,
    bisection_tol: Option<f64>,
    corner_angle_min_deg: Option<f64>,
    recurrence_radius: Option<f64>,
    recurrence_arclength_factor: Option<f64>,
    slow_speed: Option<f64>,
    critical_radius: Option<f64>,
    fate_scan_points: Option<usize>,
    horizon_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    ergosphere_points: Option<usize>,
    portrait_seeds: Option<usize>,
    no_escape_samples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<String>,
    formats: Option<Vec<Format>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    tolerances: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub ergosphere_points: usize,
    /// Seeds per family on the ergosphere for the phase portrait.
    pub portrait_seeds: usize,
    pub no_escape_samples: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { ergosphere_points: 720, portrait_seeds: 48, no_escape_samples: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<Format>,
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelParams,
    pub integrator: IntegratorConfig,
    pub horizon: HorizonConfig,
    pub sampling: SamplingConfig,
    pub output: OutputConfig,
    /// Overrides of verification tolerances by check name.
    pub verify_tolerances: BTreeMap<String, f64>,
    /// Dotted keys that were filled from defaults.
    pub defaults_applied: Vec<String>,
}

struct Defaults(Vec<String>);

impl Defaults {
    fn take<T>(&mut self, key: &str, v: Option<T>, default: T) -> T {
        v.unwrap_or_else(|| {
            self.0.push(key.to_string());
            default
        })
    }
}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Parses and validates a JSON configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path.is_empty() || path == "." {
            err(format!("config: {inner}"))
        } else {
            err(format!("config key {path}: {inner}"))
        }
    })?;
    let mut d = Defaults(Vec::new());

    let m = raw.model;
    if !m.a0.is_finite() || m.a0 == 0.0 {
        return Err(err("model.A0 must be nonzero"));
    }
    if !m.eps.is_finite() || m.eps.abs() >= 1.0 {
        return Err(err("model.eps must lie in (-1, 1)"));
    }
    let kind = d.take("model.kind", m.kind, ModelKind::AcousticLogVortex);
    let allow_radial = d.take("model.allow_radial", m.allow_radial, false);
    if m.eps == 0.0 && !allow_radial {
        return Err(err("model.eps must be nonzero unless model.allow_radial is true"));
    }
    let model = ModelParams::with_kind(kind, m.a0, m.eps, allow_radial).map_err(|e| err(format!("model: {e}")))?;

    let di = IntegratorConfig::default();
    let ri = raw.integrator.unwrap_or(RawIntegrator {
        rel_tol: None,
        abs_tol: None,
        max_step: None,
        min_step: None,
        x0_max: None,
    });
    let integrator = IntegratorConfig {
        rel_tol: d.take("integrator.rel_tol", ri.rel_tol, di.rel_tol),
        abs_tol: d.take("integrator.abs_tol", ri.abs_tol, di.abs_tol),
        max_step: d.take("integrator.max_step", ri.max_step, di.max_step),
        min_step: d.take("integrator.min_step", ri.min_step, di.min_step),
        x0_max: d.take("integrator.x0_max", ri.x0_max, di.x0_max),
    };
    integrator.validate().map_err(|e| err(format!("integrator: {e}")))?;

    let dh = HorizonConfig::default();
    let rh = raw.horizon.unwrap_or(RawHorizon {
        inner_radius_factor: None,
        seed_offset: None,
        saddle_offset: None,
        bisection_tol: None,
        corner_angle_min_deg: None,
        recurrence_radius: None,
        recurrence_arclength_factor: None,
        slow_speed: None,
        critical_radius: None,
        fate_scan_points: None,
        horizon_points: None,
    });
    let horizon = HorizonConfig {
        integrator,
        inner_radius_factor: d.take("horizon.inner_radius_factor", rh.inner_radius_factor, dh.inner_radius_factor),
        seed_offset: d.take("horizon.seed_offset", rh.seed_offset, dh.seed_offset),
        saddle_offset: d.take("horizon.saddle_offset", rh.saddle_offset, dh.saddle_offset),
        bisection_tol: d.take("horizon.bisection_tol", rh.bisection_tol, dh.bisection_tol),
        corner_angle_min_deg: d.take("horizon.corner_angle_min_deg", rh.corner_angle_min_deg, dh.corner_angle_min_deg),
        recurrence_radius: d.take("horizon.recurrence_radius", rh.recurrence_radius, dh.recurrence_radius),
        recurrence_arclength_factor: d.take(
            "horizon.recurrence_arclength_factor",
            rh.recurrence_arclength_factor,
            dh.recurrence_arclength_factor,
        ),
        slow_speed: d.take("horizon.slow_speed", rh.slow_speed, dh.slow_speed),
        critical_radius: d.take("horizon.critical_radius", rh.critical_radius, dh.critical_radius),
        fate_scan_points: d.take("horizon.fate_scan_points", rh.fate_scan_points, dh.fate_scan_points),
        horizon_points: d.take("horizon.horizon_points", rh.horizon_points, dh.horizon_points),
    };
    horizon.validate().map_err(|e| err(format!("horizon: {e}")))?;

    let ds = SamplingConfig::default();
    let rs = raw.sampling.unwrap_or(RawSampling { ergosphere_points: None, portrait_seeds: None, no_escape_samples: None });
    let sampling = SamplingConfig {
        ergosphere_points: d.take("sampling.ergosphere_points", rs.ergosphere_points, ds.ergosphere_points),
        portrait_seeds: d.take("sampling.portrait_seeds", rs.portrait_seeds, ds.portrait_seeds),
        no_escape_samples: d.take("sampling.no_escape_samples", rs.no_escape_samples, ds.no_escape_samples),
    };
    if sampling.ergosphere_points < 3 || sampling.portrait_seeds == 0 || sampling.no_escape_samples < 8 {
        return Err(err(
            "sampling: ergosphere_points >= 3, portrait_seeds >= 1 and no_escape_samples >= 8 required",
        ));
    }

    let ro = raw.output.unwrap_or(RawOutput { directory: None, formats: None });
    let mut formats = d.take("output.formats", ro.formats, vec![Format::Csv, Format::Json, Format::Svg]);
    formats.sort();
    formats.dedup();
    let output = OutputConfig { directory: d.take("output.directory", ro.directory, ".".to_string()), formats };

    let verify_tolerances = raw.verify.and_then(|v| v.tolerances).unwrap_or_default();
    for (name, v) in &verify_tolerances {
        if !crate::verify::CHECK_NAMES.contains(&name.as_str()) {
            return Err(err(format!("verify.tolerances.{name}: unknown check")));
        }
        if !(v.is_finite() && *v >= 0.0) {
            return Err(err(format!("verify.tolerances.{name} must be a non-negative number")));
        }
    }

    Ok(RunConfig {
        model,
        integrator,
        horizon,
        sampling,
        output,
        verify_tolerances,
        defaults_applied: d.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(r#"{"model":{"kind":"acoustic_log_vortex","A0":-2.0,"eps":0.3}}"#).unwrap();
        assert_eq!(c.model, ModelParams::new(-2.0, 0.3).unwrap());
        assert_eq!(c.integrator, IntegratorConfig::default());
        assert!(c.defaults_applied.contains(&"integrator.rel_tol".to_string()));
        assert!(!c.defaults_applied.contains(&"model.kind".to_string()));
        assert_eq!(c.output.formats, vec![Format::Csv, Format::Json, Format::Svg]);
    }

    #[test]
    fn zero_a0_rejected() {
        let e = parse_config(r#"{"model":{"A0":0.0,"eps":0.3}}"#).unwrap_err();
        assert_eq!(e.0, "model.A0 must be nonzero");
    }

    #[test]
    fn eps_out_of_range() {
        let e = parse_config(r#"{"model":{"A0":-2.0,"eps":1.5}}"#).unwrap_err();
        assert_eq!(e.0, "model.eps must lie in (-1, 1)");
    }

    #[test]
    fn unknown_key_reports_path() {
        let e = parse_config(r#"{"model":{"A0":-2.0,"eps":0.3},"horizon":{"bogus":1}}"#).unwrap_err();
        assert!(e.0.contains("horizon") && e.0.contains("bogus"), "{}", e.0);
    }

    #[test]
    fn syntax_error() {
        assert!(parse_config("{").is_err());
    }

    #[test]
    fn radial_needs_flag() {
        assert!(parse_config(r#"{"model":{"A0":-2.0,"eps":0.0}}"#).is_err());
        assert!(parse_config(r#"{"model":{"A0":-2.0,"eps":0.0,"allow_radial":true}}"#).is_ok());
    }

    #[test]
    fn bad_tolerances() {
        let e = parse_config(r#"{"model":{"A0":-2.0,"eps":0.3},"integrator":{"rel_tol":1e-12,"abs_tol":1e-9}}"#);
        assert!(e.is_err());
        let e = parse_config(r#"{"model":{"A0":-2.0,"eps":0.3},"verify":{"tolerances":{"nope":1.0}}}"#);
        assert!(e.unwrap_err().0.contains("nope"));
    }
}
