//! Euler rigid-body dynamics with fixed-step integration.
//!
//! The state carries the attitude twice, as a unit quaternion and as a
//! rotation matrix, and propagates both through the same angular velocity so
//! either feedback law can run without conversions. The integrator works on
//! the raw (unconstrained) coordinates and projects back onto the manifolds
//! afterwards; the two copies are required to agree to `1e-6` at all times.

use nalgebra::Cholesky;

use crate::algebra::{hat, Mat3, Quaternion, RotationMatrix, Vec3};
use crate::{Error, Result};

/// Attitude copies must never disagree by more than this.
pub const CONSISTENCY_LIMIT: f64 = 1e-6;

/// Symmetric positive definite inertia tensor, inverted once on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inertia {
    j: Mat3,
    j_inv: Mat3,
}

impl Inertia {
    pub fn new(j: Mat3) -> Result<Self> {
        if !j.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter("inertia entries must be finite".into()));
        }
        if (j - j.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidParameter("inertia tensor must be symmetric".into()));
        }
        if Cholesky::new(j).is_none() {
            return Err(Error::InvalidParameter("inertia tensor must be positive definite".into()));
        }
        let j_inv = j
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("inertia tensor is singular".into()))?;
        Ok(Self { j, j_inv })
    }

    pub fn from_principal(j1: f64, j2: f64, j3: f64) -> Result<Self> {
        Self::new(Mat3::from_diagonal(&Vec3::new(j1, j2, j3)))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.j
    }

    pub fn inverse(&self) -> &Mat3 {
        &self.j_inv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Attitude projection cadence in steps; 1 projects after every step.
    pub renormalize_every: u64,
}

impl IntegratorConfig {
    pub fn new(dt: f64, scheme: Scheme, renormalize_every: u64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if renormalize_every == 0 {
            return Err(Error::InvalidParameter("renormalize_every must be at least 1".into()));
        }
        Ok(Self { dt, scheme, renormalize_every })
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: 1e-3, scheme: Scheme::Rk4, renormalize_every: 1 }
    }
}

/// Full rigid-body state: attitude (twice) plus body-frame angular velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub q: Quaternion,
    pub r: RotationMatrix,
    pub omega: Vec3,
}

impl BodyState {
    /// Builds a consistent state, deriving the matrix copy from `q`.
    pub fn new(q: Quaternion, omega: Vec3) -> Self {
        Self { q, r: q.to_rotation_matrix(), omega }
    }

    /// Accepts independently supplied attitude copies if they agree.
    pub fn from_parts(q: Quaternion, r: RotationMatrix, omega: Vec3) -> Result<Self> {
        let s = Self { q, r, omega };
        let gap = s.attitude_consistency();
        if gap > CONSISTENCY_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "quaternion and matrix attitudes disagree by {gap:.3e}"
            )));
        }
        Ok(s)
    }

    /// Largest entry of `R(q) - R`.
    pub fn attitude_consistency(&self) -> f64 {
        (self.q.to_rotation_matrix().matrix() - self.r.matrix()).amax()
    }
}

/// Rotational kinetic energy, conserved under torque-free motion.
pub fn kinetic_energy(s: &BodyState, inertia: &Inertia) -> f64 {
    0.5 * s.omega.dot(&(inertia.matrix() * s.omega))
}

/// Angular momentum resolved in the inertial frame, conserved under
/// torque-free motion.
pub fn inertial_momentum(s: &BodyState, inertia: &Inertia) -> Vec3 {
    s.r.rotate(&(inertia.matrix() * s.omega))
}

/// Unconstrained coordinates the integrator stages work on.
#[derive(Clone, Copy)]
struct RawState {
    q0: f64,
    qv: Vec3,
    r: Mat3,
    omega: Vec3,
}

impl RawState {
    fn from_body(s: &BodyState) -> Self {
        Self { q0: s.q.scalar(), qv: s.q.vector(), r: *s.r.matrix(), omega: s.omega }
    }

    fn saxpy(&self, scale: f64, d: &RawDerivative) -> Self {
        Self {
            q0: self.q0 + scale * d.dq0,
            qv: self.qv + scale * d.dqv,
            r: self.r + scale * d.dr,
            omega: self.omega + scale * d.domega,
        }
    }

    fn is_finite(&self) -> bool {
        self.q0.is_finite()
            && self.qv.iter().all(|c| c.is_finite())
            && self.r.iter().all(|c| c.is_finite())
            && self.omega.iter().all(|c| c.is_finite())
    }
}

#[derive(Clone, Copy)]
struct RawDerivative {
    dq0: f64,
    dqv: Vec3,
    dr: Mat3,
    domega: Vec3,
}

/// Right-hand side: quaternion and matrix kinematics driven by the same
/// angular velocity, and Euler's equation for its rate.
fn derivative(s: &RawState, moment: &Vec3, inertia: &Inertia) -> RawDerivative {
    let (dq0, dqv) = Quaternion::raw_kinematics(s.q0, &s.qv, &s.omega);
    let dr = s.r * hat(&s.omega);
    let gyro = s.omega.cross(&(inertia.matrix() * s.omega));
    let domega = inertia.inverse() * (moment - gyro);
    RawDerivative { dq0, dqv, dr, domega }
}

/// Advances one step under a moment held constant across the step. The
/// attitude copies are projected back onto their manifolds when `step_index`
/// hits the configured cadence; `step_index` only selects that cadence and
/// tags the error on a non-finite result.
pub fn step(
    s: &BodyState,
    moment: &Vec3,
    inertia: &Inertia,
    cfg: &IntegratorConfig,
    step_index: u64,
) -> Result<BodyState> {
    let y0 = RawState::from_body(s);
    let h = cfg.dt;
    let y1 = match cfg.scheme {
        Scheme::Euler => {
            let k1 = derivative(&y0, moment, inertia);
            y0.saxpy(h, &k1)
        }
        Scheme::Rk4 => {
            let k1 = derivative(&y0, moment, inertia);
            let k2 = derivative(&y0.saxpy(0.5 * h, &k1), moment, inertia);
            let k3 = derivative(&y0.saxpy(0.5 * h, &k2), moment, inertia);
            let k4 = derivative(&y0.saxpy(h, &k3), moment, inertia);
            let mut y = y0;
            y.q0 += h / 6.0 * (k1.dq0 + 2.0 * k2.dq0 + 2.0 * k3.dq0 + k4.dq0);
            y.qv += h / 6.0 * (k1.dqv + 2.0 * k2.dqv + 2.0 * k3.dqv + k4.dqv);
            y.r += h / 6.0 * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr);
            y.omega += h / 6.0 * (k1.domega + 2.0 * k2.domega + 2.0 * k3.domega + k4.domega);
            y
        }
    };

    if !y1.is_finite() {
        return Err(Error::NonFiniteState { step: step_index });
    }

    // Off-cadence steps keep raw coordinates; per-step drift is a few ulps
    // and the cadence step repairs it (or rejects a real runaway).
    let project_now = (step_index + 1).is_multiple_of(cfg.renormalize_every);
    let (q, r) = if project_now {
        (Quaternion::project(y1.q0, y1.qv)?, RotationMatrix::project(y1.r)?)
    } else {
        (Quaternion::from_raw_unchecked(y1.q0, y1.qv), RotationMatrix::from_raw_unchecked(y1.r))
    };

    let out = BodyState { q, r, omega: y1.omega };
    debug_assert!(out.attitude_consistency() <= CONSISTENCY_LIMIT);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{orthogonality_violation, AxisAngle};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn test_inertia() -> Inertia {
        Inertia::from_principal(0.0125, 0.0125, 0.025).unwrap()
    }

    fn cfg(dt: f64) -> IntegratorConfig {
        IntegratorConfig::new(dt, Scheme::Rk4, 1).unwrap()
    }

    #[test]
    fn inertia_rejects_bad_tensors() {
        let asym = Mat3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(Inertia::new(asym).is_err());
        assert!(Inertia::from_principal(1.0, -1.0, 1.0).is_err());
        assert!(Inertia::from_principal(1.0, 0.0, 1.0).is_err());
        assert!(Inertia::from_principal(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn integrator_config_rejects_bad_values() {
        assert!(IntegratorConfig::new(0.0, Scheme::Rk4, 1).is_err());
        assert!(IntegratorConfig::new(-1e-3, Scheme::Rk4, 1).is_err());
        assert!(IntegratorConfig::new(1e-3, Scheme::Rk4, 0).is_err());
    }

    #[test]
    fn rest_state_is_a_fixed_point() {
        let q = Quaternion::from_axis_angle(&AxisAngle::new(Vec3::new(1.0, 0.5, -0.2), 1.1).unwrap());
        let s = BodyState::new(q, Vec3::zeros());
        let next = step(&s, &Vec3::zeros(), &test_inertia(), &cfg(1e-3), 0).unwrap();
        assert_eq!(next.q.as_array(), s.q.as_array());
        assert_eq!(next.r.matrix(), s.r.matrix());
        assert_eq!(next.omega, s.omega);
    }

    #[test]
    fn principal_axis_spin_advances_attitude_at_the_spin_rate() {
        let inertia = test_inertia();
        let c = cfg(1e-3);
        let mut s = BodyState::new(Quaternion::identity(), Vec3::new(0.0, 0.0, FRAC_PI_2));
        for i in 0..1000 {
            s = step(&s, &Vec3::zeros(), &inertia, &c, i).unwrap();
        }
        let expected = Quaternion::from_axis_angle(&AxisAngle::new(Vec3::z(), FRAC_PI_2).unwrap());
        assert_relative_eq!(s.q.scalar(), expected.scalar(), epsilon = 1e-6);
        assert_relative_eq!(s.q.vector(), expected.vector(), epsilon = 1e-6);
        assert_relative_eq!(
            *s.r.matrix(),
            *expected.to_rotation_matrix().matrix(),
            epsilon = 1e-6
        );
        // Spin about a principal axis leaves the rate untouched.
        assert_relative_eq!(s.omega, Vec3::new(0.0, 0.0, FRAC_PI_2), epsilon = 1e-9);
    }

    #[test]
    fn torque_free_tumble_conserves_energy_and_momentum() {
        let inertia = test_inertia();
        let c = cfg(1e-3);
        let mut s = BodyState::new(
            Quaternion::from_axis_angle(&AxisAngle::new(Vec3::new(0.2, -1.0, 0.4), 0.9).unwrap()),
            Vec3::new(0.7, -0.5, 0.3),
        );
        let ke0 = kinetic_energy(&s, &inertia);
        let h0 = inertial_momentum(&s, &inertia);
        for i in 0..10_000 {
            s = step(&s, &Vec3::zeros(), &inertia, &c, i).unwrap();
            assert!(s.attitude_consistency() <= 1e-6, "copies diverged at step {i}");
        }
        let ke = kinetic_energy(&s, &inertia);
        let h = inertial_momentum(&s, &inertia);
        assert!((ke - ke0).abs() / ke0 < 1e-6, "energy drift {}", (ke - ke0) / ke0);
        assert!((h - h0).norm() / h0.norm() < 1e-6, "momentum drift {}", (h - h0).norm() / h0.norm());
    }

    #[test]
    fn rk4_terminal_error_falls_sixteenfold_per_dt_halving() {
        let inertia = test_inertia();
        let omega0 = Vec3::new(1.0, 2.0, 3.0);
        let start = BodyState::new(Quaternion::identity(), omega0);
        let run = |dt: f64| -> BodyState {
            let c = cfg(dt);
            let n = (2.0 / dt).round() as u64;
            let mut s = start;
            for i in 0..n {
                s = step(&s, &Vec3::zeros(), &inertia, &c, i).unwrap();
            }
            s
        };
        let reference = run(1e-5);
        let err = |s: &BodyState| -> f64 {
            (s.omega - reference.omega).norm() + (s.r.matrix() - reference.r.matrix()).amax()
        };
        let coarse = err(&run(4e-3));
        let fine = err(&run(2e-3));
        let factor = coarse / fine;
        assert!(
            (8.0..=32.0).contains(&factor),
            "expected fourth-order error decay, got factor {factor} (coarse {coarse}, fine {fine})"
        );
    }

    #[test]
    fn euler_scheme_is_first_order() {
        let inertia = test_inertia();
        let omega0 = Vec3::new(1.0, 2.0, 3.0);
        let start = BodyState::new(Quaternion::identity(), omega0);
        let run = |dt: f64| -> BodyState {
            let c = IntegratorConfig::new(dt, Scheme::Euler, 1).unwrap();
            let n = (1.0 / dt).round() as u64;
            let mut s = start;
            for i in 0..n {
                s = step(&s, &Vec3::zeros(), &inertia, &c, i).unwrap();
            }
            s
        };
        let reference = {
            let c = cfg(1e-5);
            let mut s = start;
            for i in 0..100_000 {
                s = step(&s, &Vec3::zeros(), &inertia, &c, i).unwrap();
            }
            s
        };
        let coarse = (run(2e-4).omega - reference.omega).norm();
        let fine = (run(1e-4).omega - reference.omega).norm();
        let factor = coarse / fine;
        assert!((1.5..=3.0).contains(&factor), "expected first-order decay, got {factor}");
    }

    #[test]
    fn huge_moment_reports_non_finite_state_with_step_index() {
        let s = BodyState::new(Quaternion::identity(), Vec3::zeros());
        let m = Vec3::new(1e308, 0.0, 0.0);
        match step(&s, &m, &test_inertia(), &cfg(1e-3), 41) {
            Err(Error::NonFiniteState { step }) => assert_eq!(step, 41),
            other => panic!("expected NonFiniteState, got {other:?}"),
        }
    }

    #[test]
    fn relaxed_projection_cadence_still_bounds_drift() {
        let inertia = test_inertia();
        let c = IntegratorConfig::new(1e-3, Scheme::Rk4, 10).unwrap();
        let mut s = BodyState::new(Quaternion::identity(), Vec3::new(0.6, -0.2, 0.9));
        for i in 0..5_000 {
            s = step(&s, &Vec3::zeros(), &inertia, &c, i).unwrap();
        }
        assert!((s.q.norm() - 1.0).abs() < 1e-9);
        assert!(orthogonality_violation(s.r.matrix()) < 1e-9);
    }

    #[test]
    fn inconsistent_parts_are_rejected() {
        let q = Quaternion::identity();
        let r = RotationMatrix::from_axis_angle(&AxisAngle::new(Vec3::z(), 0.01).unwrap());
        assert!(BodyState::from_parts(q, r, Vec3::zeros()).is_err());
    }
}
