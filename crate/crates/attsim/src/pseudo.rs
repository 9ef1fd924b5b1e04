//! Stall-region detection and pseudo-target substitution.
//!
//! Both feedback laws lose their proportional term on the set of 180-degree
//! attitude errors: the quaternion law because the error scalar crosses zero
//! there, the matrix law because `e_R` vanishes at the three half-turn
//! saddles of `psi`. A body parked anywhere on that set is in equilibrium,
//! and near it the commanded moment is arbitrarily weak, so convergence can
//! stall for a long time under measurement noise.
//!
//! The fix implemented here detects the stall neighborhood and hands the
//! controller a substitute error:
//!
//! - quaternion: when `|q_e0| < epsilon`, the scalar is replaced by one (sign
//!   per policy) and the quaternion renormalized. The vector part, hence the
//!   correction axis, is preserved, and the proportional error product jumps
//!   from nearly zero to almost exactly one half.
//! - matrix: when `psi` sits within `epsilon` of a saddle value, the error
//!   rotation is replaced outright by a quarter turn about that saddle's
//!   axis, giving `|e_R| = (k_i + k_j) / 2`, the largest pull the weights
//!   allow about that axis.
//!
//! Substitution feeds only the proportional term. It never touches the
//! damping or feed-forward terms, and outside the detection bands both
//! functions return their input unchanged, bit for bit.

use crate::algebra::{Mat3, Quaternion, RotationMatrix, Vec3};
use crate::error_kinematics::{error_vector_of, psi, WeightMatrix};
use crate::{Error, Result};

/// Sign given to the replacement scalar in the quaternion substitution.
///
/// `Plus` always escapes the same way; `SignOfScalar` keeps whatever side of
/// the double cover the measurement drifted to (zero counts as positive).
/// Either choice stabilizes; the traversal direction is the only difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignPolicy {
    Plus,
    SignOfScalar,
}

/// Detection band half-width and substitution policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoConfig {
    pub enabled: bool,
    epsilon: f64,
    pub sign_policy: SignPolicy,
}

impl PseudoConfig {
    pub fn new(enabled: bool, epsilon: f64, sign_policy: SignPolicy) -> Result<Self> {
        if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= 0.5 {
            return Err(Error::InvalidParameter(format!(
                "pseudo-target band half-width must lie in (0, 0.5), got {epsilon}"
            )));
        }
        Ok(Self { enabled, epsilon, sign_policy })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The three matrix detection bands `(saddle - eps, saddle + eps)` must
    /// not overlap, otherwise a single `psi` reading could name two axes.
    pub fn bands_disjoint(&self, weights: &WeightMatrix) -> bool {
        self.epsilon < 0.5 * weights.min_saddle_gap()
    }
}

impl Default for PseudoConfig {
    fn default() -> Self {
        Self { enabled: true, epsilon: 0.01, sign_policy: SignPolicy::Plus }
    }
}

/// Where the attitude error sits relative to the stall set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Nominal,
    /// Quaternion scalar within the band: a 180-degree error about some axis.
    HalfTurn,
    /// `psi` within the band of `k2 + k3`: half turn about the first axis.
    SaddleX,
    /// `psi` within the band of `k1 + k3`: half turn about the second axis.
    SaddleY,
    /// `psi` within the band of `k1 + k2`: half turn about the third axis.
    SaddleZ,
}

impl Region {
    pub fn label(&self) -> &'static str {
        match self {
            Region::Nominal => "nominal",
            Region::HalfTurn => "half_turn",
            Region::SaddleX => "saddle_x",
            Region::SaddleY => "saddle_y",
            Region::SaddleZ => "saddle_z",
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Band test for the quaternion law.
pub fn classify_quaternion(q_e: &Quaternion, epsilon: f64) -> Region {
    if q_e.scalar().abs() < epsilon {
        Region::HalfTurn
    } else {
        Region::Nominal
    }
}

/// Band test for the matrix law, driven by the scalar `psi` alone. With
/// disjoint bands at most one can match; they are tried in axis order.
pub fn classify_rotation(psi_value: f64, weights: &WeightMatrix, epsilon: f64) -> Region {
    let saddles = weights.saddle_values();
    let regions = [Region::SaddleX, Region::SaddleY, Region::SaddleZ];
    for (saddle, region) in saddles.iter().zip(regions) {
        if (psi_value - saddle).abs() < epsilon {
            return region;
        }
    }
    Region::Nominal
}

/// Quaternion substitution. Inside the band the scalar is forced to full
/// magnitude and the result renormalized; outside, the input passes through
/// untouched.
pub fn pseudo_quat_error(q_e: &Quaternion, cfg: &PseudoConfig) -> Quaternion {
    if q_e.scalar().abs() >= cfg.epsilon {
        return *q_e;
    }
    let sign = match cfg.sign_policy {
        SignPolicy::Plus => 1.0,
        SignPolicy::SignOfScalar => {
            if q_e.scalar() < 0.0 {
                -1.0
            } else {
                1.0
            }
        }
    };
    let qv = q_e.vector();
    // Unit by construction: norm^2 = 1 + |qv|^2.
    let inv = (1.0 + qv.norm_squared()).sqrt().recip();
    Quaternion::from_raw_unchecked(sign * inv, qv * inv)
}

/// Quarter turn about a principal axis; the substitute error rotation for
/// the matching saddle.
fn quarter_turn(region: Region) -> Mat3 {
    match region {
        Region::SaddleX => Mat3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0),
        Region::SaddleY => Mat3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0),
        Region::SaddleZ => Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0),
        _ => unreachable!("quarter_turn is only defined for saddle regions"),
    }
}

/// Matrix substitution: the error vector of `R_d^T R`, except that inside a
/// saddle band the error rotation is replaced by the quarter turn about that
/// saddle's axis before the vector is formed.
pub fn pseudo_rotation_error(
    r: &RotationMatrix,
    r_d: &RotationMatrix,
    weights: &WeightMatrix,
    cfg: &PseudoConfig,
) -> Vec3 {
    let re = r_d.transpose() * r.matrix();
    let region = classify_rotation(psi(r, r_d, weights), weights, cfg.epsilon);
    match region {
        Region::Nominal => error_vector_of(&re, weights),
        _ => error_vector_of(&quarter_turn(region), weights),
    }
}
