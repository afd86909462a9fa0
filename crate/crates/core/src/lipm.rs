//! Linear inverted pendulum on the walking plane and its divergent component.

use nalgebra::{Matrix4, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point2 = Vector2<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LipmError {
    #[error("gravity must be positive and finite, got {0}")]
    Gravity(f64),
    #[error("CoM height must be positive and finite, got {0}")]
    ComHeight(f64),
    #[error("natural frequency must be positive, got {0}")]
    Omega(f64),
    #[error("time step must be positive, got {0}")]
    TimeStep(f64),
}

/// Gravity, constant CoM height and the cached natural frequency `sqrt(g / z0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PendulumSpec", into = "PendulumSpec")]
pub struct PendulumParams {
    gravity: f64,
    com_height: f64,
    omega: f64,
}

#[derive(Serialize, Deserialize)]
struct PendulumSpec {
    #[serde(default = "standard_gravity")]
    gravity: f64,
    com_height: f64,
}

fn standard_gravity() -> f64 {
    9.81
}

impl TryFrom<PendulumSpec> for PendulumParams {
    type Error = LipmError;
    fn try_from(s: PendulumSpec) -> Result<Self, LipmError> {
        Self::new(s.gravity, s.com_height)
    }
}

impl From<PendulumParams> for PendulumSpec {
    fn from(p: PendulumParams) -> Self {
        Self {
            gravity: p.gravity,
            com_height: p.com_height,
        }
    }
}

impl PendulumParams {
    pub fn new(gravity: f64, com_height: f64) -> Result<Self, LipmError> {
        if !(gravity > 0.0 && gravity.is_finite()) {
            return Err(LipmError::Gravity(gravity));
        }
        if !(com_height > 0.0 && com_height.is_finite()) {
            return Err(LipmError::ComHeight(com_height));
        }
        Ok(Self {
            gravity,
            com_height,
            omega: (gravity / com_height).sqrt(),
        })
    }

    /// Parameters whose natural frequency is exactly `omega` under standard gravity.
    pub fn from_omega(omega: f64) -> Result<Self, LipmError> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(LipmError::Omega(omega));
        }
        let gravity = standard_gravity();
        Ok(Self {
            gravity,
            com_height: gravity / (omega * omega),
            omega,
        })
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn com_height(&self) -> f64 {
        self.com_height
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

/// Planar CoM position and velocity together with the DCM they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplifiedState {
    pub com: Point2,
    pub com_velocity: Point2,
    pub dcm: Point2,
}

impl SimplifiedState {
    pub fn from_com(com: Point2, com_velocity: Point2, omega: f64) -> Result<Self, LipmError> {
        Ok(Self {
            com,
            com_velocity,
            dcm: dcm_from_com(com, com_velocity, omega)?,
        })
    }

    /// State with CoM at `com` and DCM at `dcm`; the velocity follows from
    /// `xd = omega (dcm - com)`.
    pub fn from_com_dcm(com: Point2, dcm: Point2, omega: f64) -> Self {
        Self {
            com,
            com_velocity: omega * (dcm - com),
            dcm,
        }
    }

    /// Standing still above `p`.
    pub fn at_rest(p: Point2) -> Self {
        Self {
            com: p,
            com_velocity: Point2::zeros(),
            dcm: p,
        }
    }
}

pub fn dcm_from_com(com: Point2, com_velocity: Point2, omega: f64) -> Result<Point2, LipmError> {
    if !(omega > 0.0) {
        return Err(LipmError::Omega(omega));
    }
    Ok(com + com_velocity / omega)
}

/// CoM velocity and DCM velocity for a given ZMP.
pub fn continuous_dynamics(
    state: &SimplifiedState,
    zmp: Point2,
    params: &PendulumParams,
) -> (Point2, Point2) {
    let w = params.omega();
    (-w * (state.com - state.dcm), w * (state.dcm - zmp))
}

/// System matrix of `d/dt [x; xi] = A [x; xi] + B r` for one axis pair.
pub fn state_matrix(omega: f64) -> Matrix4<f64> {
    let w = omega;
    #[rustfmt::skip]
    let a = Matrix4::new(
        -w, 0.0, w, 0.0,
        0.0, -w, 0.0, w,
        0.0, 0.0, w, 0.0,
        0.0, 0.0, 0.0, w,
    );
    a
}

/// Exact propagation over `dt` with the ZMP held at `zmp`.
pub fn step_exact(
    state: &SimplifiedState,
    zmp: Point2,
    params: &PendulumParams,
    dt: f64,
) -> Result<SimplifiedState, LipmError> {
    if !(dt > 0.0) {
        return Err(LipmError::TimeStep(dt));
    }
    let w = params.omega();
    let grow = (w * dt).exp();
    let decay = (-w * dt).exp();
    let d = state.dcm - zmp;
    let dcm = zmp + grow * d;
    // x - r obeys e' = -w e + w d exp(w t), solved in closed form
    let com = zmp + decay * (state.com - zmp) + d * (0.5 * (grow - decay));
    Ok(SimplifiedState::from_com_dcm(com, dcm, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dcm_of_rest_state_is_the_com() {
        let xi = dcm_from_com(Point2::zeros(), Point2::zeros(), 3.0).unwrap();
        assert_eq!(xi, Point2::zeros());
    }

    #[test]
    fn dcm_direct_substitution() {
        let xi = dcm_from_com(Point2::new(0.1, 0.0), Point2::new(0.3, 0.0), 3.0).unwrap();
        assert!((xi - Point2::new(0.2, 0.0)).amax() < 1e-15);
    }

    #[test]
    fn dcm_hand_evaluation() {
        let w = 3.1321;
        let xi = dcm_from_com(Point2::new(0.05, -0.02), Point2::new(0.12, 0.06), w).unwrap();
        let x = 0.05 + 0.12 / 3.1321;
        let y = -0.02 + 0.06 / 3.1321;
        assert!((xi.x - x).abs() < 1e-15 && (xi.y - y).abs() < 1e-15);
        assert!((xi.x - 0.088313_2).abs() < 1e-6);
    }

    #[test]
    fn nonpositive_omega_is_rejected() {
        assert!(dcm_from_com(Point2::zeros(), Point2::zeros(), 0.0).is_err());
        assert!(PendulumParams::new(9.81, -1.0).is_err());
        assert!(PendulumParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn equilibrium_has_zero_derivatives() {
        let p = PendulumParams::from_omega(3.0).unwrap();
        let s = SimplifiedState::at_rest(Point2::new(0.3, -0.1));
        let (xd, xid) = continuous_dynamics(&s, s.com, &p);
        assert_eq!(xd, Point2::zeros());
        assert_eq!(xid, Point2::zeros());
    }

    #[test]
    fn dynamics_direct_substitution() {
        let p = PendulumParams::from_omega(3.0).unwrap();
        let s = SimplifiedState::from_com_dcm(Point2::zeros(), Point2::new(0.1, 0.0), 3.0);
        let (xd, xid) = continuous_dynamics(&s, Point2::new(0.1, 0.0), &p);
        assert!((xd - Point2::new(0.3, 0.0)).amax() < 1e-15);
        assert_eq!(xid, Point2::zeros());
    }

    #[test]
    fn dcm_at_zmp_is_a_fixed_point() {
        let p = PendulumParams::from_omega(3.0).unwrap();
        let r = Point2::new(0.2, 0.1);
        let s = SimplifiedState::from_com_dcm(Point2::new(0.0, 0.05), r, 3.0);
        let next = step_exact(&s, r, &p, 0.1).unwrap();
        assert_eq!(next.dcm, r);
    }

    #[test]
    fn dcm_grows_by_the_scalar_exponential() {
        let p = PendulumParams::from_omega(3.0).unwrap();
        let s = SimplifiedState::from_com_dcm(Point2::zeros(), Point2::new(1.0, 0.0), 3.0);
        let next = step_exact(&s, Point2::zeros(), &p, 0.1).unwrap();
        assert!((next.dcm.x - 0.3_f64.exp()).abs() < 1e-15);
        assert!((next.dcm.x - 1.34986).abs() < 1e-5);
    }

    #[test]
    fn step_rejects_nonpositive_dt() {
        let p = PendulumParams::from_omega(3.0).unwrap();
        let s = SimplifiedState::at_rest(Point2::zeros());
        assert_eq!(
            step_exact(&s, Point2::zeros(), &p, 0.0),
            Err(LipmError::TimeStep(0.0))
        );
    }

    #[test]
    fn omega_is_cached_from_gravity_and_height() {
        let p = PendulumParams::new(9.81, 0.53).unwrap();
        assert_eq!(p.omega(), (9.81_f64 / 0.53).sqrt());
    }
}
