//! Quaternions, rotation matrices, and the so(3) hat/vee maps.
//!
//! [`Quaternion`] and [`RotationMatrix`] are newtypes that stay on their
//! manifolds: every constructor either produces a unit quaternion (resp. a
//! proper orthogonal matrix) or returns an error. Raw post-integration
//! coordinates re-enter the types through [`Quaternion::project`] and
//! [`RotationMatrix::project`], which repair drift up to `1e-3` and refuse
//! anything worse.

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Largest constraint violation the projections will repair silently.
pub const PROJECTION_LIMIT: f64 = 1e-3;
/// Violations below this are left untouched so equilibrium states stay
/// bit-identical across steps.
const PROJECTION_SKIP: f64 = 1e-15;
/// Symmetric residual allowed by [`vee`].
pub const SKEW_TOLERANCE: f64 = 1e-6;

/// Skew-symmetric matrix of `v`, so that `hat(v) * w == v.cross(&w)`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. The symmetric part of `m` is discarded after checking
/// that its largest entry stays below [`SKEW_TOLERANCE`].
pub fn vee(m: &Mat3) -> Result<Vec3> {
    let sym = 0.5 * (m + m.transpose());
    let residual = sym.amax();
    if residual > SKEW_TOLERANCE {
        return Err(Error::NotSkew { residual });
    }
    Ok(Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    ))
}

/// Rotation by `angle` about a unit `axis`, canonicalized so the stored angle
/// lies in `[0, pi]` (negative or reflex inputs flip the axis instead).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    axis: Vec3,
    angle: f64,
}

impl AxisAngle {
    pub fn new(axis: Vec3, angle: f64) -> Result<Self> {
        if !axis.iter().all(|c| c.is_finite()) || !angle.is_finite() {
            return Err(Error::InvalidParameter(
                "axis-angle components must be finite".into(),
            ));
        }
        let norm = axis.norm();
        if norm < 1e-12 {
            return Err(Error::InvalidParameter("rotation axis has zero length".into()));
        }
        let mut axis = axis / norm;
        // Reduce into (-pi, pi], then fold the sign into the axis.
        let mut angle = angle.rem_euclid(std::f64::consts::TAU);
        if angle > std::f64::consts::PI {
            angle = std::f64::consts::TAU - angle;
            axis = -axis;
        }
        Ok(Self { axis, angle })
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }
}

/// Unit quaternion, scalar part first. `q` and `-q` encode the same rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    q0: f64,
    qv: Vec3,
}

impl Quaternion {
    pub const fn identity() -> Self {
        Self { q0: 1.0, qv: Vec3::new(0.0, 0.0, 0.0) }
    }

    /// Builds from raw components, accepting at most `1e-3` of norm drift.
    pub fn new(q0: f64, qv: Vec3) -> Result<Self> {
        Self::project(q0, qv)
    }

    /// Renormalizes raw coordinates back onto the unit sphere. The result
    /// moves by exactly the norm violation, and inputs already unit to
    /// machine precision pass through bit-identical.
    pub fn project(q0: f64, qv: Vec3) -> Result<Self> {
        let norm_sq = q0 * q0 + qv.norm_squared();
        if !norm_sq.is_finite() {
            return Err(Error::TooFarFromManifold { violation: f64::INFINITY });
        }
        let norm = norm_sq.sqrt();
        let violation = (norm - 1.0).abs();
        if violation > PROJECTION_LIMIT {
            return Err(Error::TooFarFromManifold { violation });
        }
        if violation < PROJECTION_SKIP {
            return Ok(Self { q0, qv });
        }
        Ok(Self { q0: q0 / norm, qv: qv / norm })
    }

    /// Integrator-only escape hatch for off-cadence steps whose drift is a
    /// few ulps; anything user-facing goes through [`Quaternion::project`].
    pub(crate) fn from_raw_unchecked(q0: f64, qv: Vec3) -> Self {
        Self { q0, qv }
    }

    pub fn from_axis_angle(aa: &AxisAngle) -> Self {
        let half = 0.5 * aa.angle();
        Self { q0: half.cos(), qv: half.sin() * aa.axis() }
    }

    /// Exponential map: `v` is a rotation vector whose norm is the angle.
    /// Safe at the origin, where it returns the identity.
    pub fn exp_map(v: &Vec3) -> Self {
        let angle = v.norm();
        let half = 0.5 * angle;
        // sin(x)/x expanded near zero; half < 1e-6 keeps the error below 1e-25.
        let k = if angle < 1e-6 { 0.5 - half * half / 12.0 } else { half.sin() / angle };
        Self { q0: half.cos(), qv: k * v }
    }

    pub fn scalar(&self) -> f64 {
        self.q0
    }

    pub fn vector(&self) -> Vec3 {
        self.qv
    }

    pub fn conjugate(&self) -> Self {
        Self { q0: self.q0, qv: -self.qv }
    }

    pub fn norm(&self) -> f64 {
        (self.q0 * self.q0 + self.qv.norm_squared()).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.q0 * other.q0 + self.qv.dot(&other.qv)
    }

    /// Hamilton product. Output norm drifts by one rounding step per call;
    /// it is renormalized only when the accumulated drift exceeds `1e-12` so
    /// that exact inputs (signs flipped, identities) stay bit-stable.
    pub fn multiply(&self, rhs: &Self) -> Self {
        let q0 = self.q0 * rhs.q0 - self.qv.dot(&rhs.qv);
        let qv = self.q0 * rhs.qv + rhs.q0 * self.qv + self.qv.cross(&rhs.qv);
        let norm_sq = q0 * q0 + qv.norm_squared();
        if (norm_sq - 1.0).abs() > 2e-12 {
            let inv = norm_sq.sqrt().recip();
            Self { q0: q0 * inv, qv: qv * inv }
        } else {
            Self { q0, qv }
        }
    }

    /// Body-frame kinematics applied to raw coordinates: `0.5 * q x [0, w]`.
    /// Exposed for the integrator, which works outside the unit constraint.
    pub fn raw_kinematics(q0: f64, qv: &Vec3, omega: &Vec3) -> (f64, Vec3) {
        let dq0 = -0.5 * qv.dot(omega);
        let dqv = 0.5 * (q0 * omega + qv.cross(omega));
        (dq0, dqv)
    }

    /// Direction cosine matrix mapping body to inertial coordinates.
    pub fn to_rotation_matrix(&self) -> RotationMatrix {
        let q0 = self.q0;
        let qv = self.qv;
        let m = (q0 * q0 - qv.norm_squared()) * Mat3::identity()
            + 2.0 * qv * qv.transpose()
            + 2.0 * q0 * hat(&qv);
        RotationMatrix(m)
    }

    /// Rotation angle in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        2.0 * self.q0.abs().min(1.0).acos()
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.q0, self.qv.x, self.qv.y, self.qv.z]
    }
}

impl std::ops::Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, rhs: Quaternion) -> Quaternion {
        self.multiply(&rhs)
    }
}

impl std::ops::Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion { q0: -self.q0, qv: -self.qv }
    }
}

/// Proper orthogonal 3x3 matrix (determinant +1), body to inertial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Accepts a matrix within `1e-3` of orthogonality and projects it onto
    /// the rotation group. Reflections (determinant near -1) are rejected.
    pub fn project(m: Mat3) -> Result<Self> {
        if !m.iter().all(|c| c.is_finite()) {
            return Err(Error::TooFarFromManifold { violation: f64::INFINITY });
        }
        let violation = orthogonality_violation(&m);
        if violation > PROJECTION_LIMIT {
            return Err(Error::TooFarFromManifold { violation });
        }
        if m.determinant() < 0.0 {
            return Err(Error::TooFarFromManifold { violation: 2.0 });
        }
        if violation < PROJECTION_SKIP {
            return Ok(Self(m));
        }
        // Newton iteration for the orthogonal polar factor, quadratically
        // convergent from anywhere within the repair limit.
        let mut x = m;
        for _ in 0..8 {
            let inv_t = match x.try_inverse() {
                Some(inv) => inv.transpose(),
                None => return Err(Error::TooFarFromManifold { violation }),
            };
            x = 0.5 * (x + inv_t);
            if orthogonality_violation(&x) < 1e-14 {
                break;
            }
        }
        Ok(Self(x))
    }

    pub fn from_matrix(m: Mat3) -> Result<Self> {
        Self::project(m)
    }

    /// Same escape hatch as [`Quaternion::from_raw_unchecked`].
    pub(crate) fn from_raw_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    /// Rodrigues formula.
    pub fn from_axis_angle(aa: &AxisAngle) -> Self {
        let k = hat(&aa.axis());
        let m = Mat3::identity() + aa.angle().sin() * k + (1.0 - aa.angle().cos()) * (k * k);
        Self(m)
    }

    pub fn from_quaternion(q: &Quaternion) -> Self {
        q.to_rotation_matrix()
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Mat3 {
        self.0.transpose()
    }

    /// Inertial-frame image of a body-frame vector.
    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }
}

impl std::ops::Mul for RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

pub fn orthogonality_violation(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).amax()
}
