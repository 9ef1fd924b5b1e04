//! The two feedback moment laws and their Lyapunov diagnostics.
//!
//! Both laws share the same structure: a proportional term on an attitude
//! error, damping on the angular-velocity error, gyroscopic cancellation, and
//! feed-forward of the desired motion. They differ only in the proportional
//! term, `-k_q q_e0 q_ev` for the quaternion law and `-k_r e_R` for the
//! matrix law. The proportional error can be overridden by the caller; that
//! is the hook the pseudo-target module uses, and it leaves every other term
//! untouched so the nominal laws are byte-identical with and without
//! substitution. The overridden quantity is only the attitude error: damping
//! and feed-forward always come from the supplied state.

use crate::algebra::{Quaternion, RotationMatrix, Vec3};
use crate::dynamics::{BodyState, Inertia};
use crate::error_kinematics::{attitude_error_vector, omega_error, psi, quat_error, WeightMatrix};
use crate::{Error, Result};

/// Proportional and damping gains for both laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    pub k_q: f64,
    pub k_omega_q: f64,
    pub k_r: f64,
    pub k_omega_r: f64,
}

impl ControllerGains {
    pub fn new(k_q: f64, k_omega_q: f64, k_r: f64, k_omega_r: f64) -> Result<Self> {
        for (name, v) in [
            ("k_q", k_q),
            ("k_omega_q", k_omega_q),
            ("k_r", k_r),
            ("k_omega_r", k_omega_r),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!("gain {name} must be positive, got {v}")));
            }
        }
        Ok(Self { k_q, k_omega_q, k_r, k_omega_r })
    }
}

/// Attitude command: either hold a fixed attitude or spin at a constant rate
/// about a body-fixed axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesiredTrajectory {
    Setpoint { attitude: Quaternion },
    Spin { attitude0: Quaternion, axis: Vec3, rate: f64 },
}

/// Desired motion sampled at one instant.
#[derive(Debug, Clone, Copy)]
pub struct DesiredSample {
    pub q_d: Quaternion,
    pub r_d: RotationMatrix,
    pub omega_d: Vec3,
    pub omega_d_dot: Vec3,
}

impl DesiredTrajectory {
    pub fn setpoint(attitude: Quaternion) -> Self {
        Self::Setpoint { attitude }
    }

    pub fn spin(attitude0: Quaternion, axis: Vec3, rate: f64) -> Result<Self> {
        if !rate.is_finite() {
            return Err(Error::InvalidParameter("spin rate must be finite".into()));
        }
        let norm = axis.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::InvalidParameter("spin axis has zero length".into()));
        }
        Ok(Self::Spin { attitude0, axis: axis / norm, rate })
    }

    pub fn sample(&self, t: f64) -> DesiredSample {
        match self {
            Self::Setpoint { attitude } => DesiredSample {
                q_d: *attitude,
                r_d: attitude.to_rotation_matrix(),
                omega_d: Vec3::zeros(),
                omega_d_dot: Vec3::zeros(),
            },
            Self::Spin { attitude0, axis, rate } => {
                // Body-fixed spin axis: right-multiply by the accumulated turn.
                let q_d = attitude0.multiply(&Quaternion::exp_map(&(axis * (rate * t))));
                DesiredSample {
                    q_d,
                    r_d: q_d.to_rotation_matrix(),
                    omega_d: axis * *rate,
                    omega_d_dot: Vec3::zeros(),
                }
            }
        }
    }
}

/// Terms shared by both laws: damping, gyroscopic cancellation, feed-forward.
fn common_terms(s: &BodyState, d: &DesiredSample, k_omega: f64, inertia: &Inertia) -> Vec3 {
    let rt_rd = s.r.transpose() * d.r_d.matrix();
    let omega_d_body = rt_rd * d.omega_d;
    let e_w = s.omega - omega_d_body;
    let j = inertia.matrix();
    -k_omega * e_w + s.omega.cross(&(j * s.omega)) - j * e_w.cross(&omega_d_body)
        + j * (rt_rd * d.omega_d_dot)
}

/// Quaternion feedback law: `-k_q q_e0 q_ev` plus the common terms. The
/// proportional term is even in `q_e`, so either cover of the same attitude
/// commands the same moment.
pub fn moment_quaternion(
    s: &BodyState,
    traj: &DesiredTrajectory,
    t: f64,
    gains: &ControllerGains,
    inertia: &Inertia,
    q_e_override: Option<&Quaternion>,
) -> Vec3 {
    let d = traj.sample(t);
    let q_e = match q_e_override {
        Some(q) => *q,
        None => quat_error(&d.q_d, &s.q),
    };
    -gains.k_q * q_e.scalar() * q_e.vector() + common_terms(s, &d, gains.k_omega_q, inertia)
}

/// Matrix feedback law: `-k_r e_R` plus the common terms.
pub fn moment_rotation(
    s: &BodyState,
    traj: &DesiredTrajectory,
    t: f64,
    gains: &ControllerGains,
    weights: &WeightMatrix,
    inertia: &Inertia,
    e_r_override: Option<&Vec3>,
) -> Vec3 {
    let d = traj.sample(t);
    let e_r = match e_r_override {
        Some(e) => *e,
        None => attitude_error_vector(&s.r, &d.r_d, weights),
    };
    -gains.k_r * e_r + common_terms(s, &d, gains.k_omega_r, inertia)
}

/// Energy-like certificate for the quaternion law:
/// `k_q (1 - q_e0^2) + 0.5 e_w^T J e_w`.
pub fn lyapunov_quaternion(
    s: &BodyState,
    traj: &DesiredTrajectory,
    t: f64,
    gains: &ControllerGains,
    inertia: &Inertia,
) -> f64 {
    let d = traj.sample(t);
    let q_e = quat_error(&d.q_d, &s.q);
    let e_w = omega_error(&s.omega, &s.r, &d.r_d, &d.omega_d);
    gains.k_q * (1.0 - q_e.scalar() * q_e.scalar()) + 0.5 * e_w.dot(&(inertia.matrix() * e_w))
}

/// Energy-like certificate for the matrix law:
/// `k_r psi + 0.5 e_w^T J e_w`.
pub fn lyapunov_rotation(
    s: &BodyState,
    traj: &DesiredTrajectory,
    t: f64,
    gains: &ControllerGains,
    weights: &WeightMatrix,
    inertia: &Inertia,
) -> f64 {
    let d = traj.sample(t);
    let e_w = omega_error(&s.omega, &s.r, &d.r_d, &d.omega_d);
    gains.k_r * psi(&s.r, &d.r_d, weights) + 0.5 * e_w.dot(&(inertia.matrix() * e_w))
}

/// `J` times the angular-velocity-error rate under the supplied moment,
/// assembled from Euler's equation and the error kinematics.
fn j_e_omega_dot(s: &BodyState, d: &DesiredSample, moment: &Vec3, inertia: &Inertia) -> Vec3 {
    let rt_rd = s.r.transpose() * d.r_d.matrix();
    let omega_d_body = rt_rd * d.omega_d;
    let e_w = s.omega - omega_d_body;
    let j = inertia.matrix();
    -s.omega.cross(&(j * s.omega)) + moment + j * e_w.cross(&omega_d_body)
        - j * (rt_rd * d.omega_d_dot)
}

/// Residual of the closed-loop identity
/// `J e_w_dot = -k_omega_q e_w - k_q q_e0 q_ev` under the un-overridden
/// quaternion law; zero up to rounding when the law is wired correctly.
pub fn closed_loop_residual_quaternion(
    s: &BodyState,
    traj: &DesiredTrajectory,
    t: f64,
    gains: &ControllerGains,
    inertia: &Inertia,
) -> Vec3 {
    let d = traj.sample(t);
    let m = moment_quaternion(s, traj, t, gains, inertia, None);
    let q_e = quat_error(&d.q_d, &s.q);
    let e_w = omega_error(&s.omega, &s.r, &d.r_d, &d.omega_d);
    j_e_omega_dot(s, &d, &m, inertia)
        + gains.k_omega_q * e_w
        + gains.k_q * q_e.scalar() * q_e.vector()
}

/// Residual of `J e_w_dot = -k_omega_r e_w - k_r e_R` under the matrix law.
pub fn closed_loop_residual_rotation(
    s: &BodyState,
    traj: &DesiredTrajectory,
    t: f64,
    gains: &ControllerGains,
    weights: &WeightMatrix,
    inertia: &Inertia,
) -> Vec3 {
    let d = traj.sample(t);
    let m = moment_rotation(s, traj, t, gains, weights, inertia, None);
    let e_r = attitude_error_vector(&s.r, &d.r_d, weights);
    let e_w = omega_error(&s.omega, &s.r, &d.r_d, &d.omega_d);
    j_e_omega_dot(s, &d, &m, inertia) + gains.k_omega_r * e_w + gains.k_r * e_r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AxisAngle;
    use crate::dynamics::{step, IntegratorConfig, Scheme};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn gains() -> ControllerGains {
        ControllerGains::new(10.0, 1.5, 5.0, 2.1).unwrap()
    }

    fn weights() -> WeightMatrix {
        WeightMatrix::new(1.0, 2.0, 3.0).unwrap()
    }

    fn inertia() -> Inertia {
        Inertia::from_principal(0.0125, 0.0125, 0.025).unwrap()
    }

    #[test]
    fn gains_must_be_positive() {
        assert!(ControllerGains::new(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(ControllerGains::new(-1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ControllerGains::new(1.0, f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn quaternion_law_at_a_quarter_turn_is_frozen() {
        // Error [sqrt2/2, 0, 0, sqrt2/2] at rest: proportional term only,
        // -k_q * 0.5 about e3.
        let q = Quaternion::from_axis_angle(&AxisAngle::new(Vec3::z(), FRAC_PI_2).unwrap());
        let s = BodyState::new(q, Vec3::zeros());
        let traj = DesiredTrajectory::setpoint(Quaternion::identity());
        let m = moment_quaternion(&s, &traj, 0.0, &gains(), &inertia(), None);
        assert_relative_eq!(m, Vec3::new(0.0, 0.0, -5.0), epsilon = 1e-12);
    }

    #[test]
    fn matrix_law_at_a_quarter_turn_is_frozen() {
        // e_R = [0, 0, 1.5] for K = diag(1,2,3), so the moment is -k_r * 1.5.
        let q = Quaternion::from_axis_angle(&AxisAngle::new(Vec3::z(), FRAC_PI_2).unwrap());
        let s = BodyState::new(q, Vec3::zeros());
        let traj = DesiredTrajectory::setpoint(Quaternion::identity());
        let m = moment_rotation(&s, &traj, 0.0, &gains(), &weights(), &inertia(), None);
        assert_relative_eq!(m, Vec3::new(0.0, 0.0, -7.5), epsilon = 1e-12);
    }

    #[test]
    fn both_laws_stall_at_rest_on_every_half_turn() {
        let traj = DesiredTrajectory::setpoint(Quaternion::identity());
        for axis in [Vec3::x(), Vec3::y(), Vec3::z()] {
            let q = Quaternion::from_axis_angle(&AxisAngle::new(axis, PI).unwrap());
            let s = BodyState::new(q, Vec3::zeros());
            let mq = moment_quaternion(&s, &traj, 0.0, &gains(), &inertia(), None);
            let mr = moment_rotation(&s, &traj, 0.0, &gains(), &weights(), &inertia(), None);
            assert!(mq.norm() <= 1e-12, "quaternion law acted: {mq:?}");
            assert!(mr.norm() <= 1e-12, "matrix law acted: {mr:?}");
        }
        // The target itself is also torque-free.
        let s = BodyState::new(Quaternion::identity(), Vec3::zeros());
        assert_eq!(moment_quaternion(&s, &traj, 0.0, &gains(), &inertia(), None), Vec3::zeros());
    }

    #[test]
    fn either_cover_of_the_error_commands_the_same_moment() {
        let q = Quaternion::from_axis_angle(&AxisAngle::new(Vec3::new(0.4, -1.0, 0.3), 2.2).unwrap());
        let s = BodyState::new(q, Vec3::new(0.1, 0.05, -0.2));
        let traj = DesiredTrajectory::setpoint(
            Quaternion::from_axis_angle(&AxisAngle::new(Vec3::new(1.0, 0.2, 0.1), 0.7).unwrap()),
        );
        let d = traj.sample(0.0);
        let q_e = quat_error(&d.q_d, &s.q);
        let m_plus = moment_quaternion(&s, &traj, 0.0, &gains(), &inertia(), Some(&q_e));
        let m_minus = moment_quaternion(&s, &traj, 0.0, &gains(), &inertia(), Some(&(-q_e)));
        assert_eq!(m_plus, m_minus);
    }

    #[test]
    fn lyapunov_values_at_a_half_turn_are_frozen() {
        let q = Quaternion::new(0.0, Vec3::z()).unwrap();
        let s = BodyState::new(q, Vec3::zeros());
        let traj = DesiredTrajectory::setpoint(Quaternion::identity());
        assert_relative_eq!(lyapunov_quaternion(&s, &traj, 0.0, &gains(), &inertia()), 10.0, epsilon = 1e-12);
        assert_relative_eq!(
            lyapunov_rotation(&s, &traj, 0.0, &gains(), &weights(), &inertia()),
            15.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn lyapunov_includes_the_kinetic_term() {
        let w = Vec3::new(0.3, 0.0, 0.4);
        let s = BodyState::new(Quaternion::identity(), w);
        let traj = DesiredTrajectory::setpoint(Quaternion::identity());
        let expected = 0.5 * (0.0125 * 0.09 + 0.025 * 0.16);
        assert_relative_eq!(lyapunov_quaternion(&s, &traj, 0.0, &gains(), &inertia()), expected, epsilon = 1e-15);
    }

    #[test]
    fn closed_loop_residuals_cancel_for_both_laws() {
        let traj = DesiredTrajectory::spin(
            Quaternion::from_axis_angle(&AxisAngle::new(Vec3::new(0.2, 0.9, -0.5), 1.8).unwrap()),
            Vec3::new(0.0, 1.0, 1.0),
            0.6,
        )
        .unwrap();
        let q = Quaternion::from_axis_angle(&AxisAngle::new(Vec3::new(-0.6, 0.1, 1.0), 2.6).unwrap());
        let s = BodyState::new(q, Vec3::new(0.4, -0.7, 0.25));
        for t in [0.0, 0.37, 2.9] {
            let rq = closed_loop_residual_quaternion(&s, &traj, t, &gains(), &inertia());
            let rr = closed_loop_residual_rotation(&s, &traj, t, &gains(), &weights(), &inertia());
            assert!(rq.norm() <= 1e-12, "quaternion residual {rq:?} at t={t}");
            assert!(rr.norm() <= 1e-12, "matrix residual {rr:?} at t={t}");
        }
    }

    #[test]
    fn residual_with_override_equals_the_proportional_mismatch() {
        let traj = DesiredTrajectory::setpoint(Quaternion::identity());
        let q = Quaternion::new(0.0, Vec3::z()).unwrap();
        let s = BodyState::new(q, Vec3::new(0.05, 0.0, -0.02));
        let d = traj.sample(0.0);
        let q_e = quat_error(&d.q_d, &s.q);
        let substitute = Quaternion::new(
            std::f64::consts::FRAC_1_SQRT_2,
            Vec3::z() * std::f64::consts::FRAC_1_SQRT_2,
        )
        .unwrap();
        let g = gains();
        let m = moment_quaternion(&s, &traj, 0.0, &g, &inertia(), Some(&substitute));
        let e_w = omega_error(&s.omega, &s.r, &d.r_d, &d.omega_d);
        let j_dew = super::j_e_omega_dot(&s, &d, &m, &inertia());
        let residual = j_dew + g.k_omega_q * e_w + g.k_q * q_e.scalar() * q_e.vector();
        let expected = g.k_q
            * (q_e.scalar() * q_e.vector() - substitute.scalar() * substitute.vector());
        assert_relative_eq!(residual, expected, epsilon = 1e-12);
    }

    #[test]
    fn spin_trajectory_matches_its_own_kinematics() {
        let traj = DesiredTrajectory::spin(
            Quaternion::from_axis_angle(&AxisAngle::new(Vec3::new(1.0, -0.3, 0.2), 0.9).unwrap()),
            Vec3::new(1.0, 2.0, 2.0),
            0.7,
        )
        .unwrap();
        let h = 1e-5;
        for t in [0.0, 0.8, 3.1] {
            let d = traj.sample(t);
            let plus = traj.sample(t + h);
            let minus = traj.sample(t - h);
            let fd = (plus.r_d.matrix() - minus.r_d.matrix()) / (2.0 * h);
            let analytic = d.r_d.matrix() * crate::algebra::hat(&d.omega_d);
            assert!((fd - analytic).amax() < 1e-4, "kinematics mismatch at t={t}");
        }
    }

    #[test]
    fn feed_forward_holds_a_tracking_body_on_the_spin() {
        // Start exactly on a spin trajectory; the law must keep the error at
        // rounding level without any transient.
        let traj = DesiredTrajectory::spin(Quaternion::identity(), Vec3::new(0.3, -1.0, 0.5), 0.9).unwrap();
        let inertia = inertia();
        let g = gains();
        let d0 = traj.sample(0.0);
        let mut s = BodyState::new(d0.q_d, d0.omega_d);
        let cfg = IntegratorConfig::new(1e-3, Scheme::Rk4, 1).unwrap();
        for i in 0..1000 {
            let t = i as f64 * cfg.dt;
            let m = moment_quaternion(&s, &traj, t, &g, &inertia, None);
            s = step(&s, &m, &inertia, &cfg, i).unwrap();
        }
        let d = traj.sample(1.0);
        let q_e = quat_error(&d.q_d, &s.q);
        assert!(1.0 - q_e.scalar().abs() < 1e-9, "attitude error {}", 1.0 - q_e.scalar().abs());
        let e_w = omega_error(&s.omega, &s.r, &d.r_d, &d.omega_d);
        assert!(e_w.norm() < 1e-6, "rate error {}", e_w.norm());
    }
}
