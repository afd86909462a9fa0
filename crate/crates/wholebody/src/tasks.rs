//! Task gains, references and the desired task velocities.

use dcm_core::rotation::{skew_vee_error, Rotation3};
use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, SMatrix, SVector, Vector2, Vector3, Vector6};

use crate::kinematics::Pose;
use crate::WholeBodyError;

/// Trapezoidal integral of a tracking error with a norm clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorIntegral<const D: usize> {
    value: SVector<f64, D>,
    previous: Option<SVector<f64, D>>,
}

impl<const D: usize> Default for ErrorIntegral<D> {
    fn default() -> Self {
        Self {
            value: SVector::zeros(),
            previous: None,
        }
    }
}

impl<const D: usize> ErrorIntegral<D> {
    /// Advance with the new error sample and return the clamped integral.
    /// The first sample after a reset contributes `e dt`.
    pub fn update(&mut self, e: SVector<f64, D>, dt: f64, windup: f64) -> SVector<f64, D> {
        let prev = self.previous.unwrap_or(e);
        self.value += 0.5 * dt * (prev + e);
        let n = self.value.norm();
        if n > windup {
            self.value *= windup / n;
        }
        self.previous = Some(e);
        self.value
    }

    pub fn value(&self) -> SVector<f64, D> {
        self.value
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootGains {
    pub kp: Matrix3<f64>,
    pub ki: Matrix3<f64>,
    pub k_rot: Matrix3<f64>,
    /// Bound on the norm of the position-error integral (m s).
    pub windup: f64,
}

impl Default for FootGains {
    fn default() -> Self {
        Self {
            kp: Matrix3::identity() * 20.0,
            ki: Matrix3::zeros(),
            k_rot: Matrix3::identity() * 20.0,
            windup: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComGains {
    pub kp: Matrix2<f64>,
    pub ki: Matrix2<f64>,
    /// Proportional gain holding the CoM height.
    pub k_height: f64,
    pub windup: f64,
}

impl Default for ComGains {
    fn default() -> Self {
        Self {
            kp: Matrix2::identity() * 10.0,
            ki: Matrix2::zeros(),
            k_height: 10.0,
            windup: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskGains {
    pub torso_weight: Matrix3<f64>,
    pub torso_rot: Matrix3<f64>,
    pub posture_weight: DMatrix<f64>,
    pub posture_gain: DMatrix<f64>,
    pub foot: FootGains,
    pub com: ComGains,
    pub velocity_lower: DVector<f64>,
    pub velocity_upper: DVector<f64>,
    /// Small weight on the base velocity so the cost stays strictly convex
    /// when no hard task pins the base.
    pub base_weight: f64,
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    let s = 0.5 * (m + m.transpose());
    s.symmetric_eigenvalues().min()
}

fn fixed<const R: usize>(m: &SMatrix<f64, R, R>) -> DMatrix<f64> {
    DMatrix::from_column_slice(R, R, m.as_slice())
}

impl TaskGains {
    /// Defaults for a model with `n` joints.
    pub fn with_joints(n: usize) -> Self {
        Self {
            torso_weight: Matrix3::identity(),
            torso_rot: Matrix3::identity() * 5.0,
            posture_weight: DMatrix::identity(n, n) * 0.01,
            posture_gain: DMatrix::identity(n, n) * 2.0,
            foot: FootGains::default(),
            com: ComGains::default(),
            velocity_lower: DVector::from_element(n, -8.0),
            velocity_upper: DVector::from_element(n, 8.0),
            base_weight: 1e-6,
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), WholeBodyError> {
        let bad = |msg: &str| Err(WholeBodyError::Gains(msg.to_string()));
        for (what, m) in [("posture weight", &self.posture_weight), ("posture gain", &self.posture_gain)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(WholeBodyError::Dimension {
                    what,
                    expected: n,
                    found: m.nrows(),
                });
            }
        }
        for (what, v) in [("velocity lower bound", &self.velocity_lower), ("velocity upper bound", &self.velocity_upper)] {
            if v.len() != n {
                return Err(WholeBodyError::Dimension {
                    what,
                    expected: n,
                    found: v.len(),
                });
            }
        }
        let pd = |m: DMatrix<f64>| min_eig(&m) > 0.0;
        let psd = |m: DMatrix<f64>| min_eig(&m) >= 0.0;
        if !pd(fixed(&self.torso_weight)) || !pd(fixed(&self.torso_rot)) {
            return bad("torso weight and orientation gain must be positive definite");
        }
        if !pd(self.posture_weight.clone()) || !psd(self.posture_gain.clone()) {
            return bad("posture weight must be positive definite and its gain semidefinite");
        }
        if !pd(fixed(&self.foot.kp)) || !pd(fixed(&self.foot.k_rot)) || !psd(fixed(&self.foot.ki)) {
            return bad("foot gains must be positive definite (integral: semidefinite)");
        }
        if !pd(fixed(&self.com.kp)) || !psd(fixed(&self.com.ki)) || !(self.com.k_height > 0.0) {
            return bad("CoM gains must be positive definite (integral: semidefinite)");
        }
        if !(self.foot.windup > 0.0) || !(self.com.windup > 0.0) {
            return bad("anti-windup bounds must be positive");
        }
        if self
            .velocity_lower
            .iter()
            .zip(self.velocity_upper.iter())
            .any(|(l, u)| !(l < u))
        {
            return bad("joint velocity bounds must satisfy lower < upper");
        }
        if !(self.base_weight > 0.0) {
            return bad("base weight must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FootReference {
    pub pose: Pose,
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WholeBodyReferences {
    /// Planar CoM velocity input and its integral.
    pub com_velocity: Vector2<f64>,
    pub com_position: Vector2<f64>,
    pub com_height: f64,
    pub left_foot: FootReference,
    pub right_foot: FootReference,
    pub torso_rotation: Rotation3,
    pub torso_angular_velocity: Vector3<f64>,
    pub posture: DVector<f64>,
}

/// Desired velocities of every task for one QP. A `None` hard task is left
/// out of the constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskTargets {
    pub com: Option<Vector3<f64>>,
    pub left_foot: Option<Vector6<f64>>,
    pub right_foot: Option<Vector6<f64>>,
    pub torso: Vector3<f64>,
    pub posture: DVector<f64>,
}

/// `[p*' - Kp e - Ki int e ; w* - K_rot vee(sk(R R*'))]` with `e = p - p*`.
pub fn feet_velocity_star(
    pose: &Pose,
    reference: &FootReference,
    gains: &FootGains,
    integral: &mut ErrorIntegral<3>,
    dt: f64,
) -> Vector6<f64> {
    let e = pose.position - reference.pose.position;
    let ie = integral.update(e, dt, gains.windup);
    let lin = reference.linear_velocity - gains.kp * e - gains.ki * ie;
    let ang = reference.angular_velocity - gains.k_rot * skew_vee_error(&pose.rotation, &reference.pose.rotation);
    Vector6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z)
}

/// Planar `x*' - Kp (x - x*) - Ki int (x - x*)`; the height is held with a
/// proportional term.
pub fn com_velocity_star(
    com: &Vector3<f64>,
    com_ref: &Vector2<f64>,
    com_ref_velocity: &Vector2<f64>,
    height: f64,
    gains: &ComGains,
    integral: &mut ErrorIntegral<2>,
    dt: f64,
) -> Vector3<f64> {
    let e = com.xy() - com_ref;
    let ie = integral.update(e, dt, gains.windup);
    let planar = com_ref_velocity - gains.kp * e - gains.ki * ie;
    Vector3::new(planar.x, planar.y, -gains.k_height * (com.z - height))
}

pub fn torso_velocity_star(
    rotation: &Rotation3,
    reference: &Rotation3,
    reference_rate: &Vector3<f64>,
    k_rot: &Matrix3<f64>,
) -> Vector3<f64> {
    reference_rate - k_rot * skew_vee_error(rotation, reference)
}
