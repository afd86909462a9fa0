use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::{min_sym_eigen, ControlError};
use crate::lipm::Point2;

/// Gains of the ZMP-CoM loop; admissible when `K_com > w I` and
/// `0 < K_zmp < w I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZmpComGains {
    k_zmp: Matrix2<f64>,
    k_com: Matrix2<f64>,
}

impl ZmpComGains {
    pub fn new(k_zmp: Matrix2<f64>, k_com: Matrix2<f64>, omega: f64) -> Result<Self, ControlError> {
        if !(omega > 0.0) {
            return Err(ControlError::Omega(omega));
        }
        let w = Matrix2::identity() * omega;
        if !(min_sym_eigen(&(k_com - w)) > 0.0) {
            return Err(ControlError::Gain(format!("CoM gain must exceed omega = {omega}")));
        }
        if !(min_sym_eigen(&k_zmp) > 0.0) {
            return Err(ControlError::Gain("ZMP gain must be positive definite".into()));
        }
        if !(min_sym_eigen(&(w - k_zmp)) > 0.0) {
            return Err(ControlError::Gain(format!("ZMP gain must stay below omega = {omega}")));
        }
        Ok(Self { k_zmp, k_com })
    }

    pub fn k_zmp(&self) -> &Matrix2<f64> {
        &self.k_zmp
    }

    pub fn k_com(&self) -> &Matrix2<f64> {
        &self.k_com
    }
}

/// Sign applied to the ZMP error term. `Standard` uses
/// `-K_zmp (r_ref - r)`; `Flipped` is kept for sensitivity experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZmpTermSign {
    #[default]
    Standard,
    Flipped,
}

/// `x' = x_ref' - K_zmp (r_ref - r) + K_com (x_ref - x)`.
pub fn zmp_com_control(
    com: Point2,
    com_ref_velocity: Point2,
    com_ref: Point2,
    zmp: Point2,
    zmp_ref: Point2,
    gains: &ZmpComGains,
    sign: ZmpTermSign,
) -> Point2 {
    let zmp_term = gains.k_zmp * (zmp_ref - zmp);
    let zmp_term = match sign {
        ZmpTermSign::Standard => -zmp_term,
        ZmpTermSign::Flipped => zmp_term,
    };
    com_ref_velocity + zmp_term + gains.k_com * (com_ref - com)
}

/// Minimum-jerk time scaling `10u^3 - 15u^4 + 6u^5`.
pub fn min_jerk(u: f64) -> f64 {
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

/// Blend between standing (`blend = 0`) and walking (`blend = 1`) gains
/// along the minimum-jerk profile. The result is re-validated.
pub fn gain_schedule(
    blend: f64,
    standing: &ZmpComGains,
    walking: &ZmpComGains,
    omega: f64,
) -> Result<ZmpComGains, ControlError> {
    if !(0.0..=1.0).contains(&blend) {
        return Err(ControlError::Blend(blend));
    }
    let s = min_jerk(blend);
    let mix = |a: &Matrix2<f64>, b: &Matrix2<f64>| a * (1.0 - s) + b * s;
    ZmpComGains::new(
        mix(&standing.k_zmp, &walking.k_zmp),
        mix(&standing.k_com, &walking.k_com),
        omega,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gains(kz: f64, kc: f64) -> ZmpComGains {
        ZmpComGains::new(Matrix2::identity() * kz, Matrix2::identity() * kc, 3.0).unwrap()
    }

    #[test]
    fn zero_errors_give_the_feedforward() {
        let v = zmp_com_control(
            Point2::new(0.1, 0.0),
            Point2::new(0.2, 0.1),
            Point2::new(0.1, 0.0),
            Point2::new(0.3, 0.3),
            Point2::new(0.3, 0.3),
            &gains(1.0, 4.0),
            ZmpTermSign::Standard,
        );
        assert_eq!(v, Point2::new(0.2, 0.1));
    }

    #[test]
    fn direct_substitution() {
        let v = zmp_com_control(
            Point2::zeros(),
            Point2::zeros(),
            Point2::new(0.01, 0.0),
            Point2::zeros(),
            Point2::new(0.02, 0.0),
            &gains(1.0, 4.0),
            ZmpTermSign::Standard,
        );
        assert!((v - Point2::new(0.02, 0.0)).amax() < 1e-15);
    }

    #[test]
    fn blend_endpoints_and_midpoint() {
        let a = gains(0.5, 4.0);
        let b = gains(2.0, 8.0);
        assert_eq!(gain_schedule(0.0, &a, &b, 3.0).unwrap(), a);
        assert_eq!(gain_schedule(1.0, &a, &b, 3.0).unwrap(), b);
        assert_eq!(min_jerk(0.5), 0.5);
        let mid = gain_schedule(0.5, &a, &b, 3.0).unwrap();
        assert!((mid.k_zmp()[(0, 0)] - 1.25).abs() < 1e-15);
        assert!((mid.k_com()[(1, 1)] - 6.0).abs() < 1e-15);
        assert_eq!(gain_schedule(1.5, &a, &b, 3.0), Err(ControlError::Blend(1.5)));
    }

    #[test]
    fn bounds_relative_to_omega() {
        let id = Matrix2::identity();
        assert!(ZmpComGains::new(id, id * 3.0, 3.0).is_err());
        assert!(ZmpComGains::new(id * 3.0, id * 4.0, 3.0).is_err());
        assert!(ZmpComGains::new(id * 0.0, id * 4.0, 3.0).is_err());
    }
}
