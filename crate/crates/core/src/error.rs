use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("time {t} lies outside the validity window [{t_min}, {t_max}]")]
    OutOfWindow { t: f64, t_min: f64, t_max: f64 },

    #[error("mass must be strictly positive, got M({t}) = {value}")]
    NonpositiveMass { t: f64, value: f64 },

    #[error("invalid time-function descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("integration exceeded {max_steps} steps (reached t = {t})")]
    StepLimitExceeded { t: f64, max_steps: usize },

    #[error("step size underflow at t = {t}, state = {state:?}")]
    StepUnderflow { t: f64, state: Vec<f64> },

    #[error("non-finite right-hand side at t = {t}, state = {state:?}")]
    NonFiniteRhs { t: f64, state: Vec<f64> },

    #[error("state norm {norm:e} exceeded the blow-up bound at t = {t}")]
    BlowUp { t: f64, norm: f64 },

    #[error("integration stopped by caller guard at t = {t}, state = {state:?}")]
    GuardTriggered { t: f64, state: Vec<f64> },

    #[error("rho collapsed below the floor {floor:e} at t = {t} (rho = {rho:e})")]
    RhoCollapse { t: f64, rho: f64, floor: f64 },

    #[error("Omega_1^2 = {value} is not positive; closed-form rho is unavailable")]
    NonpositiveOmega1Sq { value: f64 },

    #[error("z-grid spacing {spacing:e} is coarser than the required {required:e}")]
    ResolutionTooCoarse { spacing: f64, required: f64 },

    #[error("|z| = {z} exceeds the tabulated range z_max = {z_max}")]
    OutOfRange { z: f64, z_max: f64 },

    #[error("frame does not vanish at the boundary: relative magnitude {magnitude:e} at t = {t}")]
    BoundaryLeak { magnitude: f64, t: f64 },

    #[error("adaptive quadrature failed to reach tolerance {tol:e} (estimate {estimate:e})")]
    QuadratureFailure { tol: f64, estimate: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),
}
