use dcm_core::lipm::{continuous_dynamics, dcm_from_com, state_matrix, step_exact, PendulumParams, SimplifiedState};
use dcm_core::rotation::{skew_vee_error, Rotation3};
use dcm_core::Point2;
use nalgebra::Vector3;
use proptest::prelude::*;

/// Fourth-order Runge-Kutta on `[x; xi]` with the ZMP held constant.
fn rk4(state: &SimplifiedState, zmp: Point2, params: &PendulumParams, horizon: f64, h: f64) -> (Point2, Point2) {
    let w = params.omega();
    let f = |x: Point2, xi: Point2| (-w * (x - xi), w * (xi - zmp));
    let (mut x, mut xi) = (state.com, state.dcm);
    let steps = (horizon / h).round() as usize;
    for _ in 0..steps {
        let (k1x, k1e) = f(x, xi);
        let (k2x, k2e) = f(x + 0.5 * h * k1x, xi + 0.5 * h * k1e);
        let (k3x, k3e) = f(x + 0.5 * h * k2x, xi + 0.5 * h * k2e);
        let (k4x, k4e) = f(x + h * k3x, xi + h * k3e);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        xi += h / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);
    }
    (x, xi)
}

#[test]
fn exact_step_matches_fine_rk4() {
    let params = PendulumParams::new(9.81, 0.53).unwrap();
    let cases = [
        (Point2::new(0.0, 0.0), Point2::new(0.1, -0.05), Point2::new(0.05, 0.02), 0.3),
        (Point2::new(0.2, 0.1), Point2::new(0.15, 0.12), Point2::new(0.3, 0.0), 0.5),
        (Point2::new(-0.1, 0.3), Point2::new(-0.12, 0.25), Point2::new(-0.2, 0.3), 0.1),
    ];
    for (x, xi, r, t) in cases {
        let s = SimplifiedState::from_com_dcm(x, xi, params.omega());
        let exact = step_exact(&s, r, &params, t).unwrap();
        let (xo, xio) = rk4(&s, r, &params, t, 1e-5);
        assert!((exact.com - xo).amax() < 1e-8, "com {:?} vs {:?}", exact.com, xo);
        assert!((exact.dcm - xio).amax() < 1e-8);
    }
}

#[test]
fn dynamics_match_derivative_of_the_exact_flow() {
    let params = PendulumParams::from_omega(4.3).unwrap();
    let s = SimplifiedState::from_com_dcm(Point2::new(0.02, -0.01), Point2::new(0.07, 0.03), 4.3);
    let r = Point2::new(0.05, 0.0);
    let h = 1e-6;
    let fwd = step_exact(&s, r, &params, h).unwrap();
    let (xd, xid) = continuous_dynamics(&s, r, &params);
    assert!(((fwd.com - s.com) / h - xd).amax() < 1e-5);
    assert!(((fwd.dcm - s.dcm) / h - xid).amax() < 1e-5);
}

#[test]
fn state_matrix_has_two_stable_and_two_unstable_modes() {
    let w = 4.3;
    let a = state_matrix(w);
    let eig = a.complex_eigenvalues();
    let mut re: Vec<f64> = eig.iter().map(|c| c.re).collect();
    re.sort_by(f64::total_cmp);
    for (got, want) in re.iter().zip([-w, -w, w, w]) {
        assert!((got - want).abs() < 1e-12, "{re:?}");
    }
    assert!(eig.iter().all(|c| c.im.abs() < 1e-12));
}

proptest! {
    #[test]
    fn exact_steps_compose(
        x in prop::array::uniform2(-0.5f64..0.5), xi in prop::array::uniform2(-0.5f64..0.5),
        r in prop::array::uniform2(-0.5f64..0.5), t1 in 0.001f64..0.5, t2 in 0.001f64..0.5,
        omega in 2.0f64..6.0,
    ) {
        let p = PendulumParams::from_omega(omega).unwrap();
        let s = SimplifiedState::from_com_dcm(Point2::from(x), Point2::from(xi), omega);
        let r = Point2::from(r);
        let two = step_exact(&step_exact(&s, r, &p, t1).unwrap(), r, &p, t2).unwrap();
        let one = step_exact(&s, r, &p, t1 + t2).unwrap();
        prop_assert!((two.com - one.com).amax() < 1e-10);
        prop_assert!((two.dcm - one.dcm).amax() < 1e-10);
    }

    #[test]
    fn dcm_is_inverse_consistent(
        x in prop::array::uniform2(-1.0f64..1.0), v in prop::array::uniform2(-1.0f64..1.0),
        omega in 0.5f64..10.0,
    ) {
        let (x, v) = (Point2::from(x), Point2::from(v));
        let xi = dcm_from_com(x, v, omega).unwrap();
        prop_assert!((omega * (xi - x) - v).amax() < 1e-12);
    }

    #[test]
    fn rotation_error_is_antisymmetric_and_small_near_identity(
        a in prop::array::uniform3(-3.0f64..3.0), b in prop::array::uniform3(-3.0f64..3.0),
    ) {
        let ra = Rotation3::from_scaled_axis(Vector3::from(a));
        let rb = Rotation3::from_scaled_axis(Vector3::from(b));
        let e = skew_vee_error(&ra, &rb) + skew_vee_error(&rb, &ra);
        prop_assert!(e.amax() < 1e-14);
        prop_assert!(Rotation3::from_matrix(*ra.compose(&rb).matrix()).is_ok());
    }
}
