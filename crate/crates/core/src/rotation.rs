//! Proper rotations with an orthonormality guard, and the skew/vee maps.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Maximum entry of `R'R - I` (and of `det R - 1`) accepted as a rotation.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RotationError {
    #[error("matrix is not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("matrix has determinant {det}, not +1")]
    Improper { det: f64 },
    #[error("matrix is singular or non-finite")]
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Matrix3<f64>);

impl Default for Rotation3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation3 {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Accept `m` if it is a rotation within [`ORTHONORMAL_TOL`].
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, RotationError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(RotationError::Degenerate);
        }
        let deviation = (m.transpose() * m - Matrix3::identity()).amax();
        if deviation > ORTHONORMAL_TOL {
            return Err(RotationError::NotOrthonormal { deviation });
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(RotationError::Improper { det });
        }
        Ok(Self(m))
    }

    /// Closest rotation to `m` in the Frobenius sense (polar factor).
    pub fn project(m: Matrix3<f64>) -> Result<Self, RotationError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(RotationError::Degenerate);
        }
        let svd = m.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        if svd.singular_values.min() <= 1e-12 * svd.singular_values.max().max(1e-300) {
            return Err(RotationError::Degenerate);
        }
        let mut fix = Matrix3::identity();
        if (u * v_t).determinant() < 0.0 {
            fix[(2, 2)] = -1.0;
        }
        Ok(Self(u * fix * v_t))
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        Self::from_scaled_axis(axis * (angle / n))
    }

    /// Exponential map of a rotation vector.
    pub fn from_scaled_axis(v: Vector3<f64>) -> Self {
        Self(*nalgebra::Rotation3::from_scaled_axis(v).matrix())
    }

    pub fn from_yaw(yaw: f64) -> Self {
        Self::from_axis_angle(&Vector3::z(), yaw)
    }

    /// Z-Y-X (yaw, pitch, roll) composition.
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self(*nalgebra::Rotation3::from_euler_angles(roll, pitch, yaw).matrix())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Heading of the rotated x axis projected on the ground plane.
    pub fn yaw(&self) -> f64 {
        self.0[(1, 0)].atan2(self.0[(0, 0)])
    }

    /// Rotation vector of `self`.
    pub fn log(&self) -> Vector3<f64> {
        nalgebra::Rotation3::from_matrix_unchecked(self.0).scaled_axis()
    }

    /// Re-project onto SO(3) to remove drift from repeated composition.
    pub fn renormalized(&self) -> Self {
        Self::project(self.0).unwrap_or(*self)
    }
}

impl std::ops::Mul for Rotation3 {
    type Output = Rotation3;
    fn mul(self, rhs: Rotation3) -> Rotation3 {
        self.compose(&rhs)
    }
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`]; reads the antisymmetric part only.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// `vee(sk(R R_des'))` with `sk(A) = (A - A') / 2`.
pub fn skew_vee_error(r: &Rotation3, r_des: &Rotation3) -> Vector3<f64> {
    let a = r.matrix() * r_des.matrix().transpose();
    vee(&(0.5 * (a - a.transpose())))
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_rotations_have_zero_error() {
        let r = Rotation3::from_rpy(0.1, -0.3, 0.7);
        assert!(skew_vee_error(&r, &r).amax() < 1e-15);
    }

    #[test]
    fn yaw_error_is_sine_of_the_angle() {
        let r = Rotation3::from_yaw(0.2);
        let e = skew_vee_error(&r, &Rotation3::identity());
        // sk of a z-rotation has off-diagonal entries -sin and +sin
        assert!((e - Vector3::new(0.0, 0.0, 0.2_f64.sin())).amax() < 1e-15);
    }

    #[test]
    fn swapping_arguments_negates_the_error() {
        let a = Rotation3::from_rpy(0.4, 0.1, -1.2);
        let b = Rotation3::from_rpy(-0.2, 0.5, 0.3);
        let e1 = skew_vee_error(&a, &b);
        let e2 = skew_vee_error(&b, &a);
        assert!((e1 + e2).amax() < 1e-15);
    }

    #[test]
    fn non_orthonormal_input_is_rejected() {
        let mut m = *Rotation3::from_yaw(0.3).matrix();
        m[(0, 0)] += 1e-6;
        assert!(matches!(
            Rotation3::from_matrix(m),
            Err(RotationError::NotOrthonormal { .. })
        ));
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(matches!(
            Rotation3::from_matrix(reflect),
            Err(RotationError::Improper { .. })
        ));
    }

    #[test]
    fn projection_repairs_drift() {
        let mut m = *Rotation3::from_rpy(0.3, 0.2, 0.1).matrix();
        m[(0, 1)] += 1e-4;
        let r = Rotation3::project(m).unwrap();
        assert!(Rotation3::from_matrix(*r.matrix()).is_ok());
        assert!((r.matrix() - m).amax() < 1e-4);
    }

    #[test]
    fn skew_and_vee_are_inverse() {
        let v = Vector3::new(0.3, -1.0, 2.5);
        assert_eq!(vee(&skew(&v)), v);
        let w = Vector3::new(-0.7, 0.2, 0.1);
        assert!((skew(&v) * w - v.cross(&w)).amax() < 1e-15);
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
        assert!((wrap_angle(7.0) - (7.0 - std::f64::consts::TAU)).abs() < 1e-12);
    }
}
