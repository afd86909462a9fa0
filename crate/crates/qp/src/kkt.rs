use nalgebra::DVector;

use crate::{QpProblem, QpSolution};

/// Infinity-norm KKT residuals of a primal/dual pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KktResiduals {
    /// `|| H w + g + A_eq' l + A_in' m + m_up - m_low ||_inf`
    pub stationarity: f64,
    /// `|| A_eq w - b_eq ||_inf`
    pub eq_violation: f64,
    /// Largest violation of any inequality or bound (zero when feasible).
    pub in_violation: f64,
    /// Largest `|multiplier * slack|` over inequalities and bounds, plus any
    /// negative multiplier magnitude.
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn within(&self, tol_stat: f64, tol_eq: f64, tol_in: f64) -> bool {
        self.stationarity <= tol_stat && self.eq_violation <= tol_eq && self.in_violation <= tol_in
    }
}

/// Residuals of `solution` (primal and all multiplier blocks) for `problem`.
pub fn kkt_residuals(problem: &QpProblem, solution: &QpSolution) -> KktResiduals {
    residuals_from_parts(
        problem,
        &solution.primal,
        &solution.eq_multipliers,
        &solution.ineq_multipliers,
        &solution.lower_multipliers,
        &solution.upper_multipliers,
    )
}

pub(crate) fn residuals_from_parts(
    problem: &QpProblem,
    w: &DVector<f64>,
    eq_mult: &DVector<f64>,
    in_mult: &DVector<f64>,
    lower_mult: &DVector<f64>,
    upper_mult: &DVector<f64>,
) -> KktResiduals {
    let mut grad = &problem.hessian * w + &problem.gradient;
    if problem.num_equalities() > 0 {
        grad += problem.eq_matrix.tr_mul(eq_mult);
    }
    if problem.num_inequalities() > 0 {
        grad += problem.ineq_matrix.tr_mul(in_mult);
    }
    grad += upper_mult - lower_mult;
    let stationarity = grad.amax();

    let eq_violation = if problem.num_equalities() > 0 {
        (&problem.eq_matrix * w - &problem.eq_vector).amax()
    } else {
        0.0
    };

    let mut in_violation: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    if problem.num_inequalities() > 0 {
        let slack = &problem.ineq_vector - &problem.ineq_matrix * w;
        for (s, m) in slack.iter().zip(in_mult.iter()) {
            in_violation = in_violation.max(-s);
            complementarity = complementarity.max((m * s).abs()).max(-m);
        }
    }
    for i in 0..w.len() {
        let (lo, up) = (problem.lower[i], problem.upper[i]);
        if lo.is_finite() {
            let s = w[i] - lo;
            in_violation = in_violation.max(-s);
            complementarity = complementarity
                .max((lower_mult[i] * s).abs())
                .max(-lower_mult[i]);
        }
        if up.is_finite() {
            let s = up - w[i];
            in_violation = in_violation.max(-s);
            complementarity = complementarity
                .max((upper_mult[i] * s).abs())
                .max(-upper_mult[i]);
        }
    }

    KktResiduals {
        stationarity,
        eq_violation,
        in_violation,
        complementarity,
    }
}

/// Wolfe dual objective of a primal/dual pair. Equals the primal objective at
/// an exact KKT point.
pub fn dual_objective(problem: &QpProblem, solution: &QpSolution) -> f64 {
    let w = &solution.primal;
    let mut value = problem.objective(w);
    if problem.num_equalities() > 0 {
        value += solution
            .eq_multipliers
            .dot(&(&problem.eq_matrix * w - &problem.eq_vector));
    }
    if problem.num_inequalities() > 0 {
        value += solution
            .ineq_multipliers
            .dot(&(&problem.ineq_matrix * w - &problem.ineq_vector));
    }
    for i in 0..w.len() {
        if problem.upper[i].is_finite() {
            value += solution.upper_multipliers[i] * (w[i] - problem.upper[i]);
        }
        if problem.lower[i].is_finite() {
            value += solution.lower_multipliers[i] * (problem.lower[i] - w[i]);
        }
    }
    value
}
