use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("point (r={r}, theta={theta}) lies outside the ergoregion (rho={rho:e})")]
    OutsideErgoregion { r: f64, theta: f64, rho: f64 },

    #[error("no ergosphere crossing along the ray theta={0}")]
    NoErgosphere(f64),

    #[error("singularity coefficient b1 vanishes or changes sign (b1={0} at some angle)")]
    SingularityViolated(f64),

    #[error("geodesic denominator b1={b1:e} is degenerate at (r={r}, theta={theta})")]
    DegenerateDenominator { r: f64, theta: f64, b1: f64 },

    #[error("chart inversion r(rho={rho:e}, theta={theta}) did not converge")]
    ChartInversion { rho: f64, theta: f64 },

    #[error("step size fell below the minimum {min_step:e} at x0={x0}")]
    StepFailure { x0: f64, min_step: f64 },

    #[error("right-hand side is not finite at x0={0}")]
    NonFiniteRhs(f64),

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate trajectory: {0}")]
    DegenerateTrajectory(String),

    #[error("the ergosphere is characteristic; there are no isolated tangential points")]
    CharacteristicErgosphere,

    #[error("tangential point at theta={0} is degenerate")]
    DegenerateTangency(f64),

    #[error("separatrix tracing failed: {0}")]
    Separatrix(String),

    #[error("horizon assembly failed: {0}")]
    Horizon(String),
}
