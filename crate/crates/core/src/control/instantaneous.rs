use nalgebra::Matrix2;

use super::{min_sym_eigen, ControlError};
use crate::lipm::Point2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstantaneousGains {
    kp: Matrix2<f64>,
    ki: Matrix2<f64>,
    windup: f64,
}

impl InstantaneousGains {
    /// `kp - I` and `ki` must be positive definite; `windup` bounds the norm
    /// of the error integral (m s).
    pub fn new(kp: Matrix2<f64>, ki: Matrix2<f64>, windup: f64) -> Result<Self, ControlError> {
        if !(min_sym_eigen(&(kp - Matrix2::identity())) > 0.0) {
            return Err(ControlError::Gain("proportional DCM gain must exceed the identity".into()));
        }
        if !(min_sym_eigen(&ki) > 0.0) {
            return Err(ControlError::Gain("integral DCM gain must be positive definite".into()));
        }
        if !(windup > 0.0) {
            return Err(ControlError::Gain("anti-windup bound must be positive".into()));
        }
        Ok(Self { kp, ki, windup })
    }

    pub fn kp(&self) -> &Matrix2<f64> {
        &self.kp
    }

    pub fn ki(&self) -> &Matrix2<f64> {
        &self.ki
    }

    pub fn windup(&self) -> f64 {
        self.windup
    }
}

/// Per-axis matrix of the closed-loop error system `[e; int e]` for scalar
/// gains `kp`, `ki`.
pub fn error_system_matrix(kp: f64, ki: f64, omega: f64) -> Matrix2<f64> {
    Matrix2::new(omega * (1.0 - kp), -omega * ki, 1.0, 0.0)
}

/// DCM feedback without cancellation of the unstable dynamics:
/// `r = xi_ref - xi_ref' / w + Kp (xi - xi_ref) + Ki int (xi - xi_ref)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InstantaneousController {
    gains: InstantaneousGains,
    integral: Point2,
    previous_error: Option<Point2>,
}

impl InstantaneousController {
    pub fn new(gains: InstantaneousGains) -> Self {
        Self {
            gains,
            integral: Point2::zeros(),
            previous_error: None,
        }
    }

    pub fn integral(&self) -> Point2 {
        self.integral
    }

    pub fn reset(&mut self) {
        self.integral = Point2::zeros();
        self.previous_error = None;
    }

    /// One control cycle. The integral is advanced with the trapezoidal rule
    /// before the output is computed.
    pub fn control(
        &mut self,
        dcm: Point2,
        dcm_ref: Point2,
        dcm_ref_velocity: Point2,
        dt: f64,
        omega: f64,
    ) -> Result<Point2, ControlError> {
        if !(dt > 0.0) {
            return Err(ControlError::TimeStep(dt));
        }
        if !(omega > 0.0) {
            return Err(ControlError::Omega(omega));
        }
        let e = dcm - dcm_ref;
        let prev = self.previous_error.unwrap_or(e);
        self.integral += 0.5 * dt * (prev + e);
        let n = self.integral.norm();
        if n > self.gains.windup {
            self.integral *= self.gains.windup / n;
        }
        self.previous_error = Some(e);
        Ok(dcm_ref - dcm_ref_velocity / omega + self.gains.kp * e + self.gains.ki * self.integral)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gains(kp: f64, ki: f64) -> InstantaneousGains {
        InstantaneousGains::new(Matrix2::identity() * kp, Matrix2::identity() * ki, 0.05).unwrap()
    }

    #[test]
    fn zero_error_gives_the_feedforward_zmp() {
        let mut c = InstantaneousController::new(gains(2.0, 0.5));
        let xi = Point2::new(0.1, 0.2);
        let xid = Point2::new(0.3, -0.6);
        let r = c.control(xi, xi, xid, 0.01, 3.0).unwrap();
        assert!((r - (xi - xid / 3.0)).amax() < 1e-15);
    }

    #[test]
    fn proportional_substitution() {
        let g = InstantaneousGains::new(Matrix2::identity() * 2.0, Matrix2::identity() * 1e-300, 0.05).unwrap();
        let mut c = InstantaneousController::new(g);
        let r = c.control(Point2::new(0.1, 0.0), Point2::zeros(), Point2::zeros(), 0.01, 3.0).unwrap();
        assert!((r - Point2::new(0.2, 0.0)).amax() < 1e-15);
    }

    #[test]
    fn integral_is_trapezoidal_and_clamped() {
        let mut c = InstantaneousController::new(gains(2.0, 0.5));
        let e1 = Point2::new(0.01, 0.0);
        let e2 = Point2::new(0.03, 0.0);
        c.control(e1, Point2::zeros(), Point2::zeros(), 0.1, 3.0).unwrap();
        assert!((c.integral().x - 0.001).abs() < 1e-15);
        c.control(e2, Point2::zeros(), Point2::zeros(), 0.1, 3.0).unwrap();
        assert!((c.integral().x - (0.001 + 0.05 * 0.04)).abs() < 1e-15);
        for _ in 0..1000 {
            c.control(Point2::new(1.0, 1.0), Point2::zeros(), Point2::zeros(), 0.1, 3.0).unwrap();
        }
        assert!((c.integral().norm() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn inadmissible_gains_are_rejected() {
        let id = Matrix2::identity();
        assert!(InstantaneousGains::new(id, id, 0.05).is_err());
        assert!(InstantaneousGains::new(id * 2.0, id * 0.0, 0.05).is_err());
        assert!(InstantaneousGains::new(id * 2.0, id, 0.0).is_err());
    }
}
