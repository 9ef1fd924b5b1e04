//! Rigid-body attitude stabilization toolkit.
//!
//! The crate simulates a fully actuated rigid body under two almost-globally
//! stabilizing feedback laws, one driven by the quaternion attitude error and
//! one by a weighted rotation-matrix error. Both laws lose control authority
//! on a thin set of 180-degree attitude errors: the proportional term vanishes
//! there even though the attitude error is maximal. The `pseudo` module
//! restores authority by substituting a nearby synthetic error target whenever
//! the measured error enters a configurable band around that set.
//!
//! Layout:
//! - [`algebra`]: quaternions, rotation matrices, axis-angle, hat/vee maps
//! - [`dynamics`]: Euler rigid-body dynamics and fixed-step integration
//! - [`error_kinematics`]: attitude/angular-velocity error functions
//! - [`control`]: the two feedback moment laws and their Lyapunov functions
//! - [`pseudo`]: stall-region detection and pseudo-target substitution
//! - [`sim`]: scenario runner, Monte Carlo driver, error-norm sweep, CSV logs
//! - [`scenario`]: TOML scenario files and built-in presets
//!
//! Conventions, used everywhere without further comment: quaternions are unit
//! with scalar part first, `R` maps body coordinates to inertial coordinates,
//! angular velocity is expressed in the body frame, and SI units (s, rad,
//! rad/s, kg m^2, N m) are implied.

pub mod algebra;
pub mod control;
pub mod dynamics;
pub mod error_kinematics;
pub mod pseudo;
pub mod scenario;
pub mod sim;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Input to `vee` had a symmetric residual above tolerance.
    #[error("matrix is not skew-symmetric (symmetric residual {residual:.3e})")]
    NotSkew { residual: f64 },
    /// A state was handed to a projection too far outside its manifold to be
    /// trusted; projection would hide a real divergence.
    #[error("state is {violation:.3e} away from its constraint manifold, beyond the 1e-3 repair limit")]
    TooFarFromManifold { violation: f64 },
    /// NaN or infinity appeared in the integrated state.
    #[error("non-finite state component after integration step {step}")]
    NonFiniteState { step: u64 },
    /// A constructor rejected its arguments.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Scenario file could not be parsed or validated.
    #[error("scenario: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
