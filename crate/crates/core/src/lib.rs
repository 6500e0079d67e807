//! Ergospheres, zero-energy null geodesics and event horizons of planar
//! acoustic metrics.
//!
//! The crate is organised bottom-up: [`metric`] evaluates the model,
//! [`fields`] provides the characteristic direction fields, [`ode`]
//! integrates them, [`tangency`] analyses the tangential points of the
//! ergosphere and [`horizon`] assembles the event horizon. [`cli`] and
//! [`verify`] drive the command-line tool.

pub mod cli;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod horizon;
pub mod metric;
pub mod ode;
pub mod roots;
pub mod tangency;
pub mod verify;

pub use error::{Error, Result};
pub use fields::{DirectionPair, Family};
pub use horizon::{build_horizon, classify_fate, Fate, HorizonConfig, HorizonCurve};
pub use metric::{HoleKind, ModelKind, ModelParams, PolarPoint};
pub use ode::{integrate, IntegratorConfig, Trajectory};
pub use tangency::{find_tangential_points, jacobian_at, CriticalKind, CriticalPointInfo};
