#![allow(dead_code)]

use dcm_qp::QpProblem;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Random strictly convex problem that is feasible by construction: every
/// constraint is built around a known interior-ish point.
pub fn random_problem<R: Rng>(rng: &mut R, n: usize, m_in: usize, m_eq: usize, bounds: bool) -> QpProblem {
    let uni = |r: &mut R| r.random_range(-1.0..1.0);
    let m = DMatrix::from_fn(n, n, |_, _| uni(rng));
    let h = m.transpose() * &m + DMatrix::identity(n, n) * 0.1;
    let g = DVector::from_fn(n, |_, _| 3.0 * uni(rng));
    let anchor = DVector::from_fn(n, |_, _| uni(rng));

    let a_eq = DMatrix::from_fn(m_eq, n, |_, _| uni(rng));
    let b_eq = &a_eq * &anchor;
    let a_in = DMatrix::from_fn(m_in, n, |_, _| uni(rng));
    let slack = DVector::from_fn(m_in, |_, _| rng.random_range(0.0..0.5));
    let b_in = &a_in * &anchor + slack;

    let mut p = QpProblem::new(h, g)
        .with_equalities(a_eq, b_eq)
        .with_inequalities(a_in, b_in);
    if bounds {
        let lower = DVector::from_fn(n, |i, _| {
            if rng.random_bool(0.5) {
                anchor[i] - rng.random_range(0.0..0.5)
            } else {
                f64::NEG_INFINITY
            }
        });
        let upper = DVector::from_fn(n, |i, _| {
            if rng.random_bool(0.5) {
                anchor[i] + rng.random_range(0.0..0.5)
            } else {
                f64::INFINITY
            }
        });
        p = p.with_bounds(lower, upper);
    }
    p
}

/// Exhaustive active-set oracle: solve the KKT system for every subset of
/// inequality-type rows and keep the primal-feasible, dual-feasible point.
/// Returns `None` when no subset qualifies.
pub fn enumerate_optimum(p: &QpProblem) -> Option<DVector<f64>> {
    let n = p.num_variables();
    // all one-sided rows as (a, b) meaning a'w <= b
    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for i in 0..p.num_inequalities() {
        rows.push((p.ineq_matrix.row(i).transpose(), p.ineq_vector[i]));
    }
    for i in 0..n {
        let e = DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 });
        if p.upper[i].is_finite() {
            rows.push((e.clone(), p.upper[i]));
        }
        if p.lower[i].is_finite() {
            rows.push((-e, -p.lower[i]));
        }
    }
    let me = p.num_equalities();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << rows.len()) {
        let active: Vec<usize> = (0..rows.len()).filter(|k| mask & (1 << k) != 0).collect();
        let k = me + active.len();
        if k > n {
            continue;
        }
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&p.hessian);
        rhs.rows_mut(0, n).copy_from(&(-&p.gradient));
        for r in 0..me {
            let a = p.eq_matrix.row(r);
            kkt.view_mut((n + r, 0), (1, n)).copy_from(&a);
            kkt.view_mut((0, n + r), (n, 1)).copy_from(&a.transpose());
            rhs[n + r] = p.eq_vector[r];
        }
        for (j, &idx) in active.iter().enumerate() {
            let (a, b) = &rows[idx];
            kkt.view_mut((n + me + j, 0), (1, n)).copy_from(&a.transpose());
            kkt.view_mut((0, n + me + j), (n, 1)).copy_from(a);
            rhs[n + me + j] = *b;
        }
        let Some(sol) = kkt.lu().solve(&rhs) else {
            continue;
        };
        if sol.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let w = sol.rows(0, n).into_owned();
        let feasible = rows.iter().all(|(a, b)| a.dot(&w) <= b + 1e-9)
            && (0..me).all(|r| (p.eq_matrix.row(r).dot(&w.transpose()) - p.eq_vector[r]).abs() < 1e-9);
        let dual_ok = (0..active.len()).all(|j| sol[n + me + j] >= -1e-9);
        if feasible && dual_ok {
            let f = p.objective(&w);
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, w));
            }
        }
    }
    best.map(|(_, w)| w)
}
