mod common;

use common::{enumerate_optimum, random_problem};
use dcm_qp::{dual_objective, kkt_residuals, solve, QpStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn two_variable_problems_match_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..500 {
        let m_in = case % 4;
        let p = random_problem(&mut rng, 2, m_in, 0, false);
        let expected = enumerate_optimum(&p).expect("feasible by construction");
        let sol = solve(&p, None).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal, "case {case}");
        let err = (&sol.primal - &expected).amax();
        assert!(err < 1e-9, "case {case}: error {err:e}");
    }
}

#[test]
fn small_problems_with_equalities_and_bounds_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..300 {
        let n = 2 + case % 4;
        let m_eq = case % 2;
        let m_in = case % 5;
        let p = random_problem(&mut rng, n, m_in, m_eq, true);
        let expected = enumerate_optimum(&p).expect("feasible by construction");
        let sol = solve(&p, None).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal, "case {case}");
        let err = (&sol.primal - &expected).amax();
        assert!(err < 1e-8, "case {case}: error {err:e}");
    }
}

#[test]
fn random_instances_satisfy_kkt_and_close_the_duality_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let n = 1 + case % 10;
        let m_in = case % 9;
        let m_eq = (case / 9) % n.min(4);
        let p = random_problem(&mut rng, n, m_in, m_eq, case % 3 == 0);
        let sol = solve(&p, None).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal, "case {case}");
        let r = kkt_residuals(&p, &sol);
        assert!(r.within(1e-8, 1e-8, 1e-8), "case {case}: {r:?}");
        assert!(r.complementarity <= 1e-8, "case {case}: {r:?}");
        let gap = p.objective(&sol.primal) - dual_objective(&p, &sol);
        assert!(gap.abs() <= 1e-7, "case {case}: gap {gap:e}");
    }
}
