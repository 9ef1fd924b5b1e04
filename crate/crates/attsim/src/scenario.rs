//! TOML scenario files and canned demonstration presets.
//!
//! Every key is optional; omitted keys fall back to the stock demonstration
//! setup (rest-to-half-turn slew of a small rigid body). Unknown keys are
//! rejected so typos fail loudly instead of silently running the defaults.

use serde::Deserialize;

use crate::algebra::{AxisAngle, Mat3, Quaternion, Vec3};
use crate::control::{ControllerGains, DesiredTrajectory};
use crate::dynamics::{BodyState, Inertia, IntegratorConfig, Scheme};
use crate::error_kinematics::WeightMatrix;
use crate::pseudo::{PseudoConfig, SignPolicy};
use crate::sim::{NoiseConfig, Representation, Scenario};
use crate::{Error, Result};

/// Stock setup shared by the presets and used for every omitted key: rest at
/// the identity, commanded half turn about the third body axis, gains sized
/// for a palm-sized rigid body.
fn stock() -> Scenario {
    Scenario {
        representation: Representation::Quaternion,
        initial: BodyState::new(Quaternion::identity(), Vec3::zeros()),
        desired: DesiredTrajectory::setpoint(
            Quaternion::new(0.0, Vec3::z()).expect("unit by construction"),
        ),
        inertia: Inertia::from_principal(0.0125, 0.0125, 0.025).expect("positive definite"),
        gains: ControllerGains::new(10.0, 1.5, 5.0, 2.1).expect("positive gains"),
        weights: WeightMatrix::new(1.0, 2.0, 3.0).expect("strictly increasing"),
        pseudo: PseudoConfig::default(),
        noise: NoiseConfig::disabled(),
        integrator: IntegratorConfig::default(),
        duration: 20.0,
        seed: 7,
    }
}

/// Canned runs mirroring the toolkit's three demonstration plots: scalar
/// error history under the quaternion law, the attitude error function under
/// the rotation-matrix law, and the error-vector norm for the same run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
}

impl Preset {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            "fig4" => Ok(Preset::Fig4),
            other => Err(Error::Scenario(format!(
                "unknown preset {other:?}, expected fig2, fig3, or fig4"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        }
    }

    pub fn scenario(&self) -> Scenario {
        let mut sc = stock();
        // Fig2 exercises the quaternion law; the other two plot rotation
        // matrix quantities from one identical run.
        if !matches!(self, Preset::Fig2) {
            sc.representation = Representation::So3;
        }
        sc
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    representation: Option<String>,
    duration: Option<f64>,
    seed: Option<u64>,
    initial: Option<InitialSection>,
    desired: Option<DesiredSection>,
    inertia: Option<InertiaSection>,
    gains: Option<GainsSection>,
    weights: Option<WeightsSection>,
    pseudo: Option<PseudoSection>,
    noise: Option<NoiseSection>,
    integrator: Option<IntegratorSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    attitude_axis: Option<[f64; 3]>,
    attitude_angle_deg: Option<f64>,
    attitude_quat: Option<[f64; 4]>,
    omega: Option<[f64; 3]>,
    /// Extra rotation applied on top of the attitude, for nudging a run off
    /// an exact stall point. Defaults to none; the axis defaults to e1.
    offset_angle_deg: Option<f64>,
    offset_axis: Option<[f64; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesiredSection {
    kind: Option<String>,
    attitude_axis: Option<[f64; 3]>,
    attitude_angle_deg: Option<f64>,
    attitude_quat: Option<[f64; 4]>,
    spin_axis: Option<[f64; 3]>,
    /// Body-frame spin rate in rad/s.
    spin_rate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InertiaSection {
    diag: Option<[f64; 3]>,
    matrix: Option<[[f64; 3]; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainsSection {
    k_q: Option<f64>,
    k_omega_q: Option<f64>,
    k_r: Option<f64>,
    k_omega_r: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsSection {
    k: Option<[f64; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PseudoSection {
    enabled: Option<bool>,
    epsilon: Option<f64>,
    sign_policy: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseSection {
    enabled: Option<bool>,
    sigma_attitude: Option<f64>,
    sigma_omega: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegratorSection {
    dt: Option<f64>,
    scheme: Option<String>,
    renormalize_every: Option<u64>,
}

pub fn parse_representation(name: &str) -> Result<Representation> {
    match name {
        "quaternion" | "quat" => Ok(Representation::Quaternion),
        "so3" => Ok(Representation::So3),
        other => Err(Error::Scenario(format!(
            "unknown representation {other:?}, expected \"quaternion\" or \"so3\""
        ))),
    }
}

fn parse_scheme(name: &str) -> Result<Scheme> {
    match name {
        "rk4" => Ok(Scheme::Rk4),
        "euler" => Ok(Scheme::Euler),
        other => {
            Err(Error::Scenario(format!("unknown scheme {other:?}, expected \"rk4\" or \"euler\"")))
        }
    }
}

fn parse_sign_policy(name: &str) -> Result<SignPolicy> {
    match name {
        "plus" => Ok(SignPolicy::Plus),
        "sign_of_scalar" => Ok(SignPolicy::SignOfScalar),
        other => Err(Error::Scenario(format!(
            "unknown sign_policy {other:?}, expected \"plus\" or \"sign_of_scalar\""
        ))),
    }
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// Resolves the axis/angle and quaternion spellings of an attitude, which
/// are mutually exclusive. `None` means the caller keeps its default.
fn attitude_override(
    axis: Option<[f64; 3]>,
    angle_deg: Option<f64>,
    quat: Option<[f64; 4]>,
    section: &str,
) -> Result<Option<Quaternion>> {
    if quat.is_some() && (axis.is_some() || angle_deg.is_some()) {
        return Err(Error::Scenario(format!(
            "[{section}] sets both attitude_quat and attitude_axis/attitude_angle_deg; pick one"
        )));
    }
    if let Some(q) = quat {
        return Quaternion::new(q[0], Vec3::new(q[1], q[2], q[3])).map(Some);
    }
    match (axis, angle_deg) {
        (None, None) => Ok(None),
        (Some(axis), Some(angle)) => {
            let aa = AxisAngle::new(vec3(axis), angle.to_radians())?;
            Ok(Some(Quaternion::from_axis_angle(&aa)))
        }
        _ => Err(Error::Scenario(format!(
            "[{section}] needs attitude_axis and attitude_angle_deg together"
        ))),
    }
}

/// Parses scenario TOML, filling omitted keys from the stock setup.
pub fn from_toml_str(text: &str) -> Result<Scenario> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
    let mut sc = stock();

    if let Some(rep) = &file.representation {
        sc.representation = parse_representation(rep)?;
    }
    if let Some(duration) = file.duration {
        sc.duration = duration;
    }
    if let Some(seed) = file.seed {
        sc.seed = seed;
    }

    if let Some(initial) = &file.initial {
        let attitude = attitude_override(
            initial.attitude_axis,
            initial.attitude_angle_deg,
            initial.attitude_quat,
            "initial",
        )?
        .unwrap_or(sc.initial.q);
        let omega = initial.omega.map(vec3).unwrap_or(sc.initial.omega);
        sc.initial = BodyState::new(attitude, omega);
        if initial.offset_axis.is_some() && initial.offset_angle_deg.is_none() {
            return Err(Error::Scenario(
                "[initial] offset_axis does nothing without offset_angle_deg".into(),
            ));
        }
        if let Some(angle) = initial.offset_angle_deg {
            let axis = initial.offset_axis.map(vec3).unwrap_or_else(Vec3::x);
            sc.offset_initial(axis, angle.to_radians())?;
        }
    }

    if let Some(desired) = &file.desired {
        let attitude = attitude_override(
            desired.attitude_axis,
            desired.attitude_angle_deg,
            desired.attitude_quat,
            "desired",
        )?;
        match desired.kind.as_deref().unwrap_or("setpoint") {
            "setpoint" => {
                if desired.spin_axis.is_some() || desired.spin_rate.is_some() {
                    return Err(Error::Scenario(
                        "[desired] spin_axis/spin_rate require kind = \"spin\"".into(),
                    ));
                }
                if let Some(q) = attitude {
                    sc.desired = DesiredTrajectory::setpoint(q);
                }
            }
            "spin" => {
                let rate = desired.spin_rate.ok_or_else(|| {
                    Error::Scenario("[desired] kind = \"spin\" needs spin_rate (rad/s)".into())
                })?;
                let axis = desired.spin_axis.map(vec3).unwrap_or_else(Vec3::z);
                let attitude0 = attitude.unwrap_or_else(Quaternion::identity);
                sc.desired = DesiredTrajectory::spin(attitude0, axis, rate)?;
            }
            other => {
                return Err(Error::Scenario(format!(
                    "unknown desired kind {other:?}, expected \"setpoint\" or \"spin\""
                )));
            }
        }
    }

    if let Some(inertia) = &file.inertia {
        sc.inertia = match (inertia.diag, inertia.matrix) {
            (Some(_), Some(_)) => {
                return Err(Error::Scenario("[inertia] sets both diag and matrix; pick one".into()));
            }
            (Some(d), None) => Inertia::from_principal(d[0], d[1], d[2])?,
            (None, Some(m)) => Inertia::new(Mat3::new(
                m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
            ))?,
            (None, None) => sc.inertia,
        };
    }

    if let Some(gains) = &file.gains {
        sc.gains = ControllerGains::new(
            gains.k_q.unwrap_or(sc.gains.k_q),
            gains.k_omega_q.unwrap_or(sc.gains.k_omega_q),
            gains.k_r.unwrap_or(sc.gains.k_r),
            gains.k_omega_r.unwrap_or(sc.gains.k_omega_r),
        )?;
    }

    if let Some(weights) = &file.weights {
        if let Some(k) = weights.k {
            sc.weights = WeightMatrix::new(k[0], k[1], k[2])?;
        }
    }

    if let Some(pseudo) = &file.pseudo {
        let policy = match &pseudo.sign_policy {
            Some(name) => parse_sign_policy(name)?,
            None => sc.pseudo.sign_policy,
        };
        sc.pseudo = PseudoConfig::new(
            pseudo.enabled.unwrap_or(sc.pseudo.enabled),
            pseudo.epsilon.unwrap_or(sc.pseudo.epsilon()),
            policy,
        )?;
    }

    if let Some(noise) = &file.noise {
        sc.noise = NoiseConfig::new(
            noise.enabled.unwrap_or(sc.noise.enabled),
            noise.sigma_attitude.unwrap_or(sc.noise.sigma_attitude),
            noise.sigma_omega.unwrap_or(sc.noise.sigma_omega),
        )?;
    }

    if let Some(integrator) = &file.integrator {
        let scheme = match &integrator.scheme {
            Some(name) => parse_scheme(name)?,
            None => sc.integrator.scheme,
        };
        sc.integrator = IntegratorConfig::new(
            integrator.dt.unwrap_or(sc.integrator.dt),
            scheme,
            integrator.renormalize_every.unwrap_or(sc.integrator.renormalize_every),
        )?;
    }

    sc.validate()?;
    Ok(sc)
}
