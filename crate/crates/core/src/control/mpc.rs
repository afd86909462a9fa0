//! Receding-horizon DCM control in sparse form: DCM states and ZMP inputs
//! over the window are all decision variables, linked by the exact
//! discretization `xi+ = F xi + G r`.

use dcm_qp::{ConstraintRef, QpError, QpProblem, QpSolution, QpSolver, QpStatus, WarmStart};
use nalgebra::{DMatrix, DVector, Matrix2};

use super::{min_sym_eigen, ControlError};
use crate::lipm::Point2;
use crate::polygon::SupportPolygon;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcConfig {
    horizon: usize,
    sample_time: f64,
    state_weight: Matrix2<f64>,
    input_rate_weight: Matrix2<f64>,
    terminal_weight: Matrix2<f64>,
}

impl MpcConfig {
    pub fn new(
        horizon: usize,
        sample_time: f64,
        state_weight: Matrix2<f64>,
        input_rate_weight: Matrix2<f64>,
        terminal_weight: Matrix2<f64>,
    ) -> Result<Self, ControlError> {
        if horizon == 0 {
            return Err(ControlError::Gain("MPC horizon must be at least one sample".into()));
        }
        if !(sample_time > 0.0) {
            return Err(ControlError::TimeStep(sample_time));
        }
        for (name, m) in [
            ("state", &state_weight),
            ("input rate", &input_rate_weight),
            ("terminal", &terminal_weight),
        ] {
            if (m - m.transpose()).amax() > 1e-12 || !(min_sym_eigen(m) > 0.0) {
                return Err(ControlError::Gain(format!(
                    "MPC {name} weight must be symmetric positive definite"
                )));
            }
        }
        Ok(Self {
            horizon,
            sample_time,
            state_weight,
            input_rate_weight,
            terminal_weight,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }

    pub fn num_variables(&self) -> usize {
        2 * (2 * self.horizon + 1)
    }

    /// Offset of DCM sample `j` (`0..=N`) in the decision vector.
    pub fn dcm_index(&self, j: usize) -> usize {
        2 * j
    }

    /// Offset of ZMP sample `j` (`0..N`) in the decision vector.
    pub fn zmp_index(&self, j: usize) -> usize {
        2 * (self.horizon + 1) + 2 * j
    }
}

/// Data for one MPC solve.
#[derive(Debug, Clone, Copy)]
pub struct MpcInput<'a> {
    pub dcm: Point2,
    /// ZMP applied during the previous sample.
    pub previous_zmp: Point2,
    /// `N + 1` DCM reference samples starting at the current time.
    pub dcm_refs: &'a [Point2],
    /// `N` support polygons, one per input sample.
    pub polygons: &'a [SupportPolygon],
}

#[derive(Debug, Clone)]
pub struct MpcOutput {
    pub zmp: Point2,
    pub solution: QpSolution,
}

pub fn build_mpc_qp(config: &MpcConfig, omega: f64, input: &MpcInput<'_>) -> Result<QpProblem, ControlError> {
    if !(omega > 0.0) {
        return Err(ControlError::Omega(omega));
    }
    let n_h = config.horizon;
    if input.dcm_refs.len() != n_h + 1 {
        return Err(ControlError::Window {
            what: "DCM references",
            expected: n_h + 1,
            found: input.dcm_refs.len(),
        });
    }
    if input.polygons.len() != n_h {
        return Err(ControlError::Window {
            what: "support polygons",
            expected: n_h,
            found: input.polygons.len(),
        });
    }
    let n = config.num_variables();
    let mut h = DMatrix::zeros(n, n);
    let mut g = DVector::zeros(n);
    let add_block = |h: &mut DMatrix<f64>, i: usize, j: usize, m: &Matrix2<f64>| {
        let mut view = h.view_mut((i, j), (2, 2));
        view += m;
    };

    // cost is halved: 1/2 w'Hw + g'w equals J / 2 up to a constant
    for j in 0..=n_h {
        let w = if j == n_h {
            &config.terminal_weight
        } else {
            &config.state_weight
        };
        let i = config.dcm_index(j);
        add_block(&mut h, i, i, w);
        g.rows_mut(i, 2).copy_from(&(-(w * input.dcm_refs[j])));
    }
    let r = &config.input_rate_weight;
    for j in 0..n_h {
        let i = config.zmp_index(j);
        add_block(&mut h, i, i, r);
        if j == 0 {
            let mut gj = g.rows_mut(i, 2);
            gj -= r * input.previous_zmp;
        } else {
            let p = config.zmp_index(j - 1);
            add_block(&mut h, p, p, r);
            add_block(&mut h, i, p, &(-r));
            add_block(&mut h, p, i, &(-r.transpose()));
        }
    }

    // equalities: xi_0 = measured, xi_j+1 - F xi_j - G r_j = 0
    let f = (omega * config.sample_time).exp();
    let gg = 1.0 - f;
    let mut a_eq = DMatrix::zeros(2 * (n_h + 1), n);
    let mut b_eq = DVector::zeros(2 * (n_h + 1));
    for a in 0..2 {
        a_eq[(a, config.dcm_index(0) + a)] = 1.0;
        b_eq[a] = input.dcm[a];
    }
    for j in 0..n_h {
        for a in 0..2 {
            let row = 2 * (j + 1) + a;
            a_eq[(row, config.dcm_index(j + 1) + a)] = 1.0;
            a_eq[(row, config.dcm_index(j) + a)] = -f;
            a_eq[(row, config.zmp_index(j) + a)] = -gg;
        }
    }

    let rows: usize = input.polygons.iter().map(|p| p.normals().len()).sum();
    let mut a_in = DMatrix::zeros(rows, n);
    let mut b_in = DVector::zeros(rows);
    let mut row = 0;
    for (j, poly) in input.polygons.iter().enumerate() {
        let c = config.zmp_index(j);
        for (normal, &offset) in poly.normals().iter().zip(poly.offsets()) {
            a_in[(row, c)] = normal.x;
            a_in[(row, c + 1)] = normal.y;
            b_in[row] = offset;
            row += 1;
        }
    }

    Ok(QpProblem::new(h, g)
        .with_equalities(a_eq, b_eq)
        .with_inequalities(a_in, b_in))
}

fn locate_row(polygons: &[SupportPolygon], mut row: usize) -> (usize, usize) {
    for (j, p) in polygons.iter().enumerate() {
        let m = p.normals().len();
        if row < m {
            return (j, row);
        }
        row -= m;
    }
    (polygons.len(), row)
}

/// Stateful wrapper carrying the warm start between solves.
#[derive(Debug, Clone)]
pub struct MpcController {
    config: MpcConfig,
    solver: QpSolver,
    warm: Option<WarmStart>,
}

impl MpcController {
    pub fn new(config: MpcConfig) -> Self {
        Self {
            config,
            solver: QpSolver::default(),
            warm: None,
        }
    }

    pub fn config(&self) -> &MpcConfig {
        &self.config
    }

    /// Solve the window and return the first ZMP.
    pub fn control(&mut self, omega: f64, input: &MpcInput<'_>) -> Result<MpcOutput, ControlError> {
        let problem = build_mpc_qp(&self.config, omega, input)?;
        let solution = self.solver.solve(&problem, self.warm.as_ref())?;
        match solution.status {
            QpStatus::Optimal => {}
            QpStatus::Infeasible {
                constraint: Some(ConstraintRef::Inequality(row)),
                violation,
            } => {
                self.warm = None;
                let (sample, edge) = locate_row(input.polygons, row);
                return Err(ControlError::MpcInfeasible {
                    sample,
                    edge,
                    violation,
                });
            }
            QpStatus::Infeasible {
                constraint,
                violation,
            } => {
                self.warm = None;
                return Err(QpError::Infeasible {
                    constraint,
                    violation,
                }
                .into());
            }
            QpStatus::MaxIter => {
                self.warm = None;
                return Err(QpError::MaxIterations {
                    iterations: solution.iterations,
                }
                .into());
            }
        }
        // Active sets shift by one sample between solves; rows are reused by
        // index, which the solver treats as a hint only.
        self.warm = Some(solution.warm_start());
        let i = self.config.zmp_index(0);
        let zmp = Point2::new(solution.primal[i], solution.primal[i + 1]);
        Ok(MpcOutput { zmp, solution })
    }

    pub fn reset(&mut self) {
        self.warm = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::footstep::{FootSide, Footstep};
    use crate::polygon::FootSize;

    fn config(n: usize) -> MpcConfig {
        let id = Matrix2::identity();
        MpcConfig::new(n, 0.1, id, id * 0.1, id * 10.0).unwrap()
    }

    fn square(center: Point2, half: f64) -> SupportPolygon {
        let f = Footstep::new(FootSide::Left, center, 0.0, 0.0);
        SupportPolygon::foot(
            &f,
            FootSize {
                length: 2.0 * half,
                width: 2.0 * half,
            },
        )
        .unwrap()
    }

    #[test]
    fn stationary_reference_returns_the_reference() {
        let p = Point2::new(0.2, -0.1);
        let cfg = config(5);
        let refs = vec![p; 6];
        let polys = vec![square(p, 0.05); 5];
        let mut c = MpcController::new(cfg);
        let out = c
            .control(
                4.0,
                &MpcInput {
                    dcm: p,
                    previous_zmp: p,
                    dcm_refs: &refs,
                    polygons: &polys,
                },
            )
            .unwrap();
        assert!((out.zmp - p).amax() < 1e-9);
    }

    #[test]
    fn contradictory_half_planes_are_reported_with_their_sample() {
        let cfg = config(2);
        let refs = vec![Point2::zeros(); 3];
        // x <= -1 and -x <= -1 on the second sample
        let bad = SupportPolygon::from_half_planes_unchecked(
            vec![Point2::new(1.0, 0.0), Point2::new(-1.0, 0.0)],
            vec![-1.0, -1.0],
        );
        let polys = vec![square(Point2::zeros(), 0.05), bad];
        let err = MpcController::new(cfg)
            .control(
                4.0,
                &MpcInput {
                    dcm: Point2::zeros(),
                    previous_zmp: Point2::zeros(),
                    dcm_refs: &refs,
                    polygons: &polys,
                },
            )
            .unwrap_err();
        match err {
            ControlError::MpcInfeasible { sample, violation, .. } => {
                assert_eq!(sample, 1);
                assert!(violation > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn window_shape_is_checked() {
        let cfg = config(3);
        let refs = vec![Point2::zeros(); 3];
        let polys = vec![square(Point2::zeros(), 0.1); 3];
        let err = build_mpc_qp(
            &cfg,
            4.0,
            &MpcInput {
                dcm: Point2::zeros(),
                previous_zmp: Point2::zeros(),
                dcm_refs: &refs,
                polygons: &polys,
            },
        )
        .unwrap_err();
        assert!(matches!(err, ControlError::Window { expected: 4, found: 3, .. }));
    }

    #[test]
    fn weights_must_be_positive_definite() {
        let id = Matrix2::identity();
        assert!(MpcConfig::new(0, 0.1, id, id, id).is_err());
        assert!(MpcConfig::new(2, 0.1, id, id * 0.0, id).is_err());
        assert!(MpcConfig::new(2, 0.1, Matrix2::new(1.0, 0.5, 0.0, 1.0), id, id).is_err());
    }
}
