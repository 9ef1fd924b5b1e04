//! Attitude and angular-velocity error functions shared by both feedback
//! laws.
//!
//! The quaternion error is `q_d* x q`; the matrix error is measured by the
//! weighted trace function `psi(R, R_d) = 0.5 tr(K (I - R_d^T R))` together
//! with its gradient vector `e_R`. The weights `k1 < k2 < k3` must be
//! distinct: they separate `psi`'s three saddle values `k2+k3 > k1+k3 >
//! k1+k2`, which is what lets the stall-region detector tell the three
//! half-turn errors apart.

use crate::algebra::{vee, Mat3, Quaternion, RotationMatrix, Vec3};
use crate::{Error, Result};

/// Diagonal weights for the matrix error, strictly increasing and positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightMatrix {
    k1: f64,
    k2: f64,
    k3: f64,
}

impl WeightMatrix {
    pub fn new(k1: f64, k2: f64, k3: f64) -> Result<Self> {
        let finite = k1.is_finite() && k2.is_finite() && k3.is_finite();
        if !finite || k1 <= 0.0 || k2 <= k1 || k3 <= k2 {
            return Err(Error::InvalidParameter(format!(
                "weights must satisfy 0 < k1 < k2 < k3, got ({k1}, {k2}, {k3})"
            )));
        }
        Ok(Self { k1, k2, k3 })
    }

    pub fn values(&self) -> (f64, f64, f64) {
        (self.k1, self.k2, self.k3)
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&Vec3::new(self.k1, self.k2, self.k3))
    }

    /// Saddle values of `psi`, one per half-turn about a principal axis,
    /// ordered by axis: `[k2+k3, k1+k3, k1+k2]`.
    pub fn saddle_values(&self) -> [f64; 3] {
        [self.k2 + self.k3, self.k1 + self.k3, self.k1 + self.k2]
    }

    /// Smallest spacing between saddle values; detection bands must stay
    /// narrower than half of this to be disjoint.
    pub fn min_saddle_gap(&self) -> f64 {
        (self.k2 - self.k1).min(self.k3 - self.k2)
    }
}

/// Attitude error quaternion `q_d* x q`; identity when on target.
pub fn quat_error(q_d: &Quaternion, q: &Quaternion) -> Quaternion {
    q_d.conjugate().multiply(q)
}

/// Weighted trace error, zero exactly on target and positive elsewhere.
pub fn psi(r: &RotationMatrix, r_d: &RotationMatrix, k: &WeightMatrix) -> f64 {
    let re = r_d.transpose() * r.matrix();
    0.5 * (k.matrix() * (Mat3::identity() - re)).trace()
}

/// Gradient of [`psi`] with respect to a body-frame twist of `R`:
/// `0.5 * vee(K Re - Re^T K)` with `Re = R_d^T R`.
pub fn attitude_error_vector(r: &RotationMatrix, r_d: &RotationMatrix, k: &WeightMatrix) -> Vec3 {
    error_vector_of(&(r_d.transpose() * r.matrix()), k)
}

/// Same gradient, taken directly on an error rotation `Re`.
pub fn error_vector_of(re: &Mat3, k: &WeightMatrix) -> Vec3 {
    let a = k.matrix() * re - re.transpose() * k.matrix();
    // a is antisymmetric entry-for-entry: both terms reuse the same products.
    0.5 * vee(&a).expect("K Re - Re^T K is skew by construction")
}

/// Angular velocity error `omega - R^T R_d omega_d`, expressed in the body
/// frame; the desired rate is transported into the body frame before
/// comparing.
pub fn omega_error(
    omega: &Vec3,
    r: &RotationMatrix,
    r_d: &RotationMatrix,
    omega_d: &Vec3,
) -> Vec3 {
    omega - r.transpose() * r_d.matrix() * omega_d
}

/// Compares the analytic gradient against a one-sided finite difference of
/// [`psi`] along the body-frame direction `eta`. Returns
/// `(analytic, finite_difference)` so callers choose their own tolerance.
pub fn psi_gradient_check(
    r: &RotationMatrix,
    r_d: &RotationMatrix,
    k: &WeightMatrix,
    eta: &Vec3,
    h: f64,
) -> (f64, f64) {
    let analytic = attitude_error_vector(r, r_d, k).dot(eta);
    let twist = Quaternion::exp_map(&(h * eta)).to_rotation_matrix();
    let perturbed = *r * twist;
    let fd = (psi(&perturbed, r_d, k) - psi(r, r_d, k)) / h;
    (analytic, fd)
}
