//! Nullspace elimination of the equality block followed by the
//! Goldfarb-Idnani dual active-set method on the reduced problem.
//!
//! The reduced problem is
//!
//! ```text
//!     minimize     1/2 y' G y + a' y
//!     subject to   c_i' y <= d_i
//! ```
//!
//! with `w = w0 + Z y`, `G = Z' H Z`, `a = Z' (H w0 + g)`. All factorizations
//! are recomputed from the active set on every iteration; the problems this
//! crate targets have at most a few dozen reduced variables.

use nalgebra::{DMatrix, DVector};

use crate::kkt::{residuals_from_parts, KktResiduals};
use crate::{ConstraintRef, QpError, QpProblem};

/// Solver tolerances and limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QpSettings {
    pub tol_eq: f64,
    pub tol_in: f64,
    pub tol_stat: f64,
    /// Relative singular value threshold used to decide the rank of `A_eq`.
    pub rank_tol: f64,
    /// Maximum number of active-set changes. Zero selects a size-based default.
    pub max_iter: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            tol_eq: 1e-8,
            tol_in: 1e-8,
            tol_stat: 1e-8,
            rank_tol: 1e-10,
            max_iter: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QpStatus {
    Optimal,
    /// No point satisfies the constraints. `constraint` is the constraint the
    /// dual method could not add, `violation` its violation at the last iterate.
    Infeasible {
        constraint: Option<ConstraintRef>,
        violation: f64,
    },
    MaxIter,
}

/// Active inequality constraints of a previous solve, used to seed the next one.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WarmStart {
    pub active_set: Vec<ConstraintRef>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub primal: DVector<f64>,
    pub eq_multipliers: DVector<f64>,
    pub ineq_multipliers: DVector<f64>,
    pub lower_multipliers: DVector<f64>,
    pub upper_multipliers: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub residuals: KktResiduals,
    pub active_set: Vec<ConstraintRef>,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }

    pub fn warm_start(&self) -> WarmStart {
        WarmStart {
            active_set: self.active_set.clone(),
        }
    }

    /// Turn a non-optimal status into an error.
    pub fn into_optimal(self) -> Result<Self, QpError> {
        match self.status {
            QpStatus::Optimal => Ok(self),
            QpStatus::Infeasible {
                constraint,
                violation,
            } => Err(QpError::Infeasible {
                constraint,
                violation,
            }),
            QpStatus::MaxIter => Err(QpError::MaxIterations {
                iterations: self.iterations,
            }),
        }
    }
}

/// Dense QP solver. Cheap to construct; holds only settings.
#[derive(Clone, Debug, Default)]
pub struct QpSolver {
    pub settings: QpSettings,
}

/// Solve with default settings.
pub fn solve(problem: &QpProblem, warm_start: Option<&WarmStart>) -> Result<QpSolution, QpError> {
    QpSolver::default().solve(problem, warm_start)
}

struct Elimination {
    particular: DVector<f64>,
    nullspace: DMatrix<f64>,
    // pseudo-inverse factors of A_eq' for multiplier recovery
    u_rank: DMatrix<f64>,
    sigma_rank: DVector<f64>,
    v_rank: DMatrix<f64>,
}

struct Row {
    origin: ConstraintRef,
    // constraint c' y <= d in reduced coordinates
    c: DVector<f64>,
    d: f64,
}

impl QpSolver {
    pub fn new(settings: QpSettings) -> Self {
        Self { settings }
    }

    pub fn solve(
        &self,
        problem: &QpProblem,
        warm_start: Option<&WarmStart>,
    ) -> Result<QpSolution, QpError> {
        problem.validate()?;
        let n = problem.num_variables();
        let s = &self.settings;

        let elim = match self.eliminate(problem) {
            Ok(e) => e,
            Err((row, residual)) => {
                return Ok(self.failed(
                    problem,
                    DVector::zeros(n),
                    QpStatus::Infeasible {
                        constraint: Some(ConstraintRef::Equality(row)),
                        violation: residual,
                    },
                    0,
                ))
            }
        };
        let z = &elim.nullspace;
        let w0 = &elim.particular;
        let p = z.ncols();

        let reduced_hessian = z.tr_mul(&(&problem.hessian * z));
        let reduced_hessian = 0.5 * (&reduced_hessian + reduced_hessian.transpose());
        let reduced_gradient = z.tr_mul(&(&problem.hessian * w0 + &problem.gradient));

        // Reduced inequality rows. Rows that do not depend on y are checked now.
        let mut rows: Vec<Row> = Vec::new();
        let row_scale = z.amax().max(1.0);
        let mut push_row = |origin: ConstraintRef, c: DVector<f64>, d: f64| -> Result<(), f64> {
            if c.amax() <= 1e-13 * row_scale {
                if d < -s.tol_in {
                    return Err(-d);
                }
                return Ok(());
            }
            rows.push(Row { origin, c, d });
            Ok(())
        };
        let mut constant_violation = None;
        for i in 0..problem.num_inequalities() {
            let a = problem.ineq_matrix.row(i);
            let c = (a * z).transpose();
            let d = problem.ineq_vector[i] - (a * w0)[0];
            if let Err(v) = push_row(ConstraintRef::Inequality(i), c, d) {
                constant_violation.get_or_insert((ConstraintRef::Inequality(i), v));
            }
        }
        for i in 0..n {
            if problem.upper[i].is_finite() {
                let c = z.row(i).transpose();
                let d = problem.upper[i] - w0[i];
                if let Err(v) = push_row(ConstraintRef::Upper(i), c, d) {
                    constant_violation.get_or_insert((ConstraintRef::Upper(i), v));
                }
            }
            if problem.lower[i].is_finite() {
                let c = -z.row(i).transpose();
                let d = w0[i] - problem.lower[i];
                if let Err(v) = push_row(ConstraintRef::Lower(i), c, d) {
                    constant_violation.get_or_insert((ConstraintRef::Lower(i), v));
                }
            }
        }
        if let Some((origin, violation)) = constant_violation {
            return Ok(self.failed(
                problem,
                w0.clone(),
                QpStatus::Infeasible {
                    constraint: Some(origin),
                    violation,
                },
                0,
            ));
        }

        let max_iter = if s.max_iter == 0 {
            10 * (p + rows.len()) + 100
        } else {
            s.max_iter
        };

        let (y, u_active, active, status, iterations) = if p == 0 {
            (
                DVector::zeros(0),
                Vec::new(),
                Vec::new(),
                QpStatus::Optimal,
                0,
            )
        } else {
            let chol = reduced_hessian
                .clone()
                .cholesky()
                .ok_or(QpError::NotConvex)?;
            let mut dual = DualActiveSet::new(chol.l(), &reduced_gradient, &rows, s.tol_in);
            if let Some(ws) = warm_start {
                let seed: Vec<usize> = ws
                    .active_set
                    .iter()
                    .filter_map(|c| rows.iter().position(|r| r.origin == *c))
                    .collect();
                dual.seed(&seed);
            }
            let status = dual.run(max_iter);
            (dual.y, dual.u, dual.active, status, dual.iterations)
        };

        let primal = w0 + z * &y;
        let mut ineq_mult = DVector::zeros(problem.num_inequalities());
        let mut lower_mult = DVector::zeros(n);
        let mut upper_mult = DVector::zeros(n);
        let mut active_set = Vec::with_capacity(active.len());
        if status == QpStatus::Optimal {
            for (&k, &u) in active.iter().zip(u_active.iter()) {
                let origin = rows[k].origin;
                active_set.push(origin);
                match origin {
                    ConstraintRef::Inequality(i) => ineq_mult[i] = u,
                    ConstraintRef::Upper(i) => upper_mult[i] = u,
                    ConstraintRef::Lower(i) => lower_mult[i] = u,
                    ConstraintRef::Equality(_) => unreachable!(),
                }
            }
            active_set.sort();
        }

        let eq_mult = if problem.num_equalities() > 0 {
            let mut rhs = -(&problem.hessian * &primal + &problem.gradient);
            if problem.num_inequalities() > 0 {
                rhs -= problem.ineq_matrix.tr_mul(&ineq_mult);
            }
            rhs -= &upper_mult - &lower_mult;
            let proj = elim.v_rank.tr_mul(&rhs).component_div(&elim.sigma_rank);
            &elim.u_rank * proj
        } else {
            DVector::zeros(0)
        };

        let residuals = residuals_from_parts(
            problem,
            &primal,
            &eq_mult,
            &ineq_mult,
            &lower_mult,
            &upper_mult,
        );

        Ok(QpSolution {
            primal,
            eq_multipliers: eq_mult,
            ineq_multipliers: ineq_mult,
            lower_multipliers: lower_mult,
            upper_multipliers: upper_mult,
            status,
            iterations,
            residuals,
            active_set,
        })
    }

    fn failed(
        &self,
        problem: &QpProblem,
        primal: DVector<f64>,
        status: QpStatus,
        iterations: usize,
    ) -> QpSolution {
        let n = problem.num_variables();
        let eq = DVector::zeros(problem.num_equalities());
        let ineq = DVector::zeros(problem.num_inequalities());
        let bounds = DVector::zeros(n);
        let residuals = residuals_from_parts(problem, &primal, &eq, &ineq, &bounds, &bounds);
        QpSolution {
            primal,
            eq_multipliers: eq,
            ineq_multipliers: ineq,
            lower_multipliers: bounds.clone(),
            upper_multipliers: bounds,
            status,
            iterations,
            residuals,
            active_set: Vec::new(),
        }
    }

    /// Particular solution and orthonormal nullspace basis of `A_eq w = b_eq`.
    /// On inconsistent equalities returns the worst row and its residual.
    fn eliminate(&self, problem: &QpProblem) -> Result<Elimination, (usize, f64)> {
        let n = problem.num_variables();
        let m = problem.num_equalities();
        if m == 0 {
            return Ok(Elimination {
                particular: DVector::zeros(n),
                nullspace: DMatrix::identity(n, n),
                u_rank: DMatrix::zeros(0, 0),
                sigma_rank: DVector::zeros(0),
                v_rank: DMatrix::zeros(n, 0),
            });
        }
        // Thin SVD for the row space. Padding A with zero rows to get a
        // square V loses accuracy in nalgebra's bidiagonalization, so the
        // nullspace is taken from the projector onto the complement instead.
        let svd = problem.eq_matrix.clone().svd(true, true);
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V'");
        let sigma = &svd.singular_values;
        let sigma_max = sigma.amax();
        let threshold = self.settings.rank_tol * sigma_max.max(f64::MIN_POSITIVE);

        let ranked: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] > threshold).collect();
        let r = ranked.len();
        let mut u_rank = DMatrix::zeros(m, r);
        let mut v_rank = DMatrix::zeros(n, r);
        let mut sigma_rank = DVector::zeros(r);
        for (k, &i) in ranked.iter().enumerate() {
            u_rank.set_column(k, &u.column(i));
            v_rank.set_column(k, &v_t.row(i).transpose());
            sigma_rank[k] = sigma[i];
        }
        let nullspace = if r == 0 {
            DMatrix::identity(n, n)
        } else {
            // eigenvalues of I - V V' are 1 on the nullspace and 0 elsewhere
            let projector = DMatrix::identity(n, n) - &v_rank * v_rank.transpose();
            let eig = projector.symmetric_eigen();
            let free: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
            let mut z = DMatrix::zeros(n, free.len());
            for (k, &i) in free.iter().enumerate() {
                z.set_column(k, &eig.eigenvectors.column(i));
            }
            z
        };

        let coeffs = u_rank.tr_mul(&problem.eq_vector).component_div(&sigma_rank);
        let particular = &v_rank * coeffs;

        let residual = &problem.eq_matrix * &particular - &problem.eq_vector;
        let scale = problem.eq_vector.amax().max(1.0);
        let (worst, value) = residual.iamax_full();
        let worst_value = residual[(worst, value)].abs();
        if worst_value > self.settings.tol_eq * scale {
            return Err((worst, worst_value));
        }

        Ok(Elimination {
            particular,
            nullspace,
            u_rank,
            sigma_rank,
            v_rank,
        })
    }
}

/// Goldfarb-Idnani iteration state in the Cholesky-whitened space
/// (`G = L L'`, `n~_i = L^-1 n_i` with `n_i = -c_i`, `b_i = -d_i`).
struct DualActiveSet<'a> {
    l: DMatrix<f64>,
    rows: &'a [Row],
    whitened: Vec<DVector<f64>>,
    gradient_w: DVector<f64>,
    tol_in: f64,
    y: DVector<f64>,
    active: Vec<usize>,
    u: Vec<f64>,
    iterations: usize,
}

impl<'a> DualActiveSet<'a> {
    fn new(l: DMatrix<f64>, gradient: &DVector<f64>, rows: &'a [Row], tol_in: f64) -> Self {
        let whitened = rows
            .iter()
            .map(|r| {
                l.solve_lower_triangular(&(-&r.c))
                    .expect("cholesky factor has a positive diagonal")
            })
            .collect();
        let gradient_w = l
            .solve_lower_triangular(gradient)
            .expect("cholesky factor has a positive diagonal");
        let y = -l
            .tr_solve_lower_triangular(&gradient_w)
            .expect("cholesky factor has a positive diagonal");
        Self {
            l,
            rows,
            whitened,
            gradient_w,
            tol_in,
            y,
            active: Vec::new(),
            u: Vec::new(),
            iterations: 0,
        }
    }

    fn slack(&self, k: usize) -> f64 {
        self.rows[k].d - self.rows[k].c.dot(&self.y)
    }

    fn active_matrix(&self, active: &[usize]) -> DMatrix<f64> {
        let p = self.gradient_w.len();
        let mut m = DMatrix::zeros(p, active.len());
        for (j, &k) in active.iter().enumerate() {
            m.set_column(j, &self.whitened[k]);
        }
        m
    }

    /// Least-squares coefficients of `v` on the active columns and the
    /// component of `v` orthogonal to them.
    fn project(&self, v: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        if self.active.is_empty() {
            return (DVector::zeros(0), v.clone());
        }
        let qr = self.active_matrix(&self.active).qr();
        let q = qr.q();
        let r = qr.r();
        let qtv = q.tr_mul(v);
        let coeffs = r
            .solve_upper_triangular(&qtv)
            .unwrap_or_else(|| DVector::zeros(self.active.len()));
        let resid = v - q * qtv;
        (coeffs, resid)
    }

    fn is_dependent(&self, k: usize, active: &[usize]) -> bool {
        let v = &self.whitened[k];
        if active.is_empty() {
            return v.norm_squared() == 0.0;
        }
        let qr = self.active_matrix(active).qr();
        let q = qr.q();
        let resid = v - &q * q.tr_mul(v);
        resid.norm_squared() <= 1e-14 * v.norm_squared()
    }

    /// Solve the equality-constrained problem for `active`; returns `None` when
    /// the active normals are numerically dependent.
    fn equality_solution(&self, active: &[usize]) -> Option<(DVector<f64>, Vec<f64>)> {
        if active.is_empty() {
            let y = -self.l.tr_solve_lower_triangular(&self.gradient_w)?;
            return Some((y, Vec::new()));
        }
        let n_w = self.active_matrix(active);
        let rhs = DVector::from_iterator(
            active.len(),
            active
                .iter()
                .map(|&k| -self.rows[k].d + self.whitened[k].dot(&self.gradient_w)),
        );
        let qr = n_w.clone().qr();
        let r = qr.r();
        let tmp = r.tr_solve_upper_triangular(&rhs)?;
        let u = r.solve_upper_triangular(&tmp)?;
        if u.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let y = self
            .l
            .tr_solve_lower_triangular(&(n_w * &u - &self.gradient_w))?;
        Some((y, u.iter().copied().collect()))
    }

    /// Start from the equality solution of a previous active set, dropping
    /// dependent rows and rows with negative multipliers.
    fn seed(&mut self, candidates: &[usize]) {
        let mut active: Vec<usize> = Vec::new();
        for &k in candidates {
            if !active.contains(&k) && !self.is_dependent(k, &active) {
                active.push(k);
            }
        }
        while !active.is_empty() {
            let Some((y, u)) = self.equality_solution(&active) else {
                return;
            };
            let (worst, &min_u) = u
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty");
            if min_u >= 0.0 {
                self.y = y;
                self.u = u;
                self.active = active;
                return;
            }
            active.remove(worst);
        }
    }

    fn most_violated(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..self.rows.len() {
            if self.active.contains(&k) {
                continue;
            }
            let s = self.slack(k);
            if s < -0.1 * self.tol_in {
                let scaled = s / self.rows[k].c.norm();
                if best.is_none_or(|(_, b)| scaled < b) {
                    best = Some((k, scaled));
                }
            }
        }
        best.map(|(k, _)| k)
    }

    /// Recompute y and u from the final active set to remove drift.
    fn polish(&mut self) {
        if let Some((y, u)) = self.equality_solution(&self.active) {
            if u.iter().all(|&v| v >= -1e-10) {
                self.y = y;
                self.u = u.into_iter().map(|v| v.max(0.0)).collect();
            }
        }
    }

    fn run(&mut self, max_iter: usize) -> QpStatus {
        let mut polished = false;
        loop {
            let Some(p) = self.most_violated() else {
                if polished {
                    return QpStatus::Optimal;
                }
                self.polish();
                polished = true;
                continue;
            };
            polished = false;
            let n_p = self.whitened[p].clone();
            let mut u_p = 0.0;
            loop {
                self.iterations += 1;
                if self.iterations > max_iter {
                    return QpStatus::MaxIter;
                }
                let (r, resid) = self.project(&n_p);
                let zz = resid.norm_squared();
                let dependent = zz <= 1e-14 * n_p.norm_squared();

                let mut partial = f64::INFINITY;
                let mut drop_idx = None;
                for (j, &rj) in r.iter().enumerate() {
                    if rj > 1e-15 {
                        let t = self.u[j] / rj;
                        if t < partial {
                            partial = t;
                            drop_idx = Some(j);
                        }
                    }
                }
                let full = if dependent {
                    f64::INFINITY
                } else {
                    -self.slack(p) / zz
                };

                if partial.is_infinite() && full.is_infinite() {
                    return QpStatus::Infeasible {
                        constraint: Some(self.rows[p].origin),
                        violation: -self.slack(p),
                    };
                }

                if full.is_infinite() {
                    // dual step only
                    for (j, uj) in self.u.iter_mut().enumerate() {
                        *uj -= partial * r[j];
                    }
                    u_p += partial;
                    let k = drop_idx.expect("finite partial step");
                    self.active.remove(k);
                    self.u.remove(k);
                    continue;
                }

                let t = partial.min(full);
                let z = self
                    .l
                    .tr_solve_lower_triangular(&resid)
                    .expect("cholesky factor has a positive diagonal");
                self.y += t * z;
                for (j, uj) in self.u.iter_mut().enumerate() {
                    *uj = (*uj - t * r[j]).max(0.0);
                }
                u_p += t;
                if full <= partial {
                    self.active.push(p);
                    self.u.push(u_p);
                    break;
                }
                let k = drop_idx.expect("finite partial step");
                self.active.remove(k);
                self.u.remove(k);
            }
        }
    }
}
