use std::sync::Arc;

use dcm_qp::{QpError, QpProblem, QpSolution, QpSolver, QpStatus, WarmStart};
use nalgebra::{DVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::kinematics::{Kinematics, Pose, RobotState};
use crate::model::{FrameId, KinematicModel};
use crate::qp::assemble;
use crate::tasks::{
    com_velocity_star, feet_velocity_star, torso_velocity_star, ErrorIntegral, TaskGains, TaskTargets,
    WholeBodyReferences,
};
use crate::WholeBodyError;

/// Whether the QP output is integrated internally (`Position`) or sent to
/// the joints as velocities (`Velocity`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Position,
    Velocity,
}

/// Frame held at a known pose when the internal state is integrated, e.g.
/// the stance sole. The base is re-placed after every joint update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub frame: FrameId,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JointCommand {
    Position(DVector<f64>),
    Velocity(DVector<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// Largest absolute hard-task residual `|A nu - b|`.
    pub hard_residual: f64,
    /// Norm of the torso angular velocity error.
    pub torso_residual: f64,
    pub iterations: usize,
    /// The hard targets were replaced by zero after a rank or feasibility
    /// failure.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleOutput {
    pub command: JointCommand,
    pub nu: DVector<f64>,
    pub targets: TaskTargets,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone)]
pub struct WholeBodyController {
    model: Arc<KinematicModel>,
    gains: TaskGains,
    mode: Mode,
    solver: QpSolver,
    warm: Option<WarmStart>,
    internal: Option<RobotState>,
    left: ErrorIntegral<3>,
    right: ErrorIntegral<3>,
    com: ErrorIntegral<2>,
    cycle: u64,
}

impl WholeBodyController {
    pub fn new(model: Arc<KinematicModel>, gains: TaskGains, mode: Mode) -> Result<Self, WholeBodyError> {
        gains.validate(model.num_joints())?;
        Ok(Self {
            model,
            gains,
            mode,
            solver: QpSolver::default(),
            warm: None,
            internal: None,
            left: ErrorIntegral::default(),
            right: ErrorIntegral::default(),
            com: ErrorIntegral::default(),
            cycle: 0,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn model(&self) -> &KinematicModel {
        &self.model
    }

    pub fn gains(&self) -> &TaskGains {
        &self.gains
    }

    /// Reset integrators and seed the internal state used in position mode.
    pub fn initialize(&mut self, state: &RobotState) {
        self.internal = Some(state.clone());
        self.warm = None;
        self.left.reset();
        self.right.reset();
        self.com.reset();
        self.cycle = 0;
    }

    pub fn internal_state(&self) -> Option<&RobotState> {
        self.internal.as_ref()
    }

    /// Re-place the base of the internal state on `anchor`, e.g. when the
    /// supporting foot changes. No-op before [`Self::initialize`].
    pub fn reanchor(&mut self, anchor: &Anchor) -> Result<(), WholeBodyError> {
        if let Some(state) = &self.internal {
            self.internal = Some(state.anchored(&self.model, anchor.frame, &anchor.pose)?);
        }
        Ok(())
    }

    /// Desired task velocities at `state` (with `kin` computed from it);
    /// advances the error integrals.
    pub fn task_targets(
        &mut self,
        kin: &Kinematics<'_>,
        state: &RobotState,
        refs: &WholeBodyReferences,
        dt: f64,
    ) -> Result<TaskTargets, WholeBodyError> {
        let n = self.model.num_joints();
        if refs.posture.len() != n {
            return Err(WholeBodyError::Dimension {
                what: "posture reference",
                expected: n,
                found: refs.posture.len(),
            });
        }
        let g = &self.gains;
        let m = &self.model;
        let lf = feet_velocity_star(&kin.frame_pose(m.left_foot()), &refs.left_foot, &g.foot, &mut self.left, dt);
        let rf = feet_velocity_star(&kin.frame_pose(m.right_foot()), &refs.right_foot, &g.foot, &mut self.right, dt);
        let com = com_velocity_star(
            &kin.com(),
            &refs.com_position,
            &refs.com_velocity,
            refs.com_height,
            &g.com,
            &mut self.com,
            dt,
        );
        let torso = torso_velocity_star(
            &kin.frame_pose(m.torso()).rotation,
            &refs.torso_rotation,
            &refs.torso_angular_velocity,
            &g.torso_rot,
        );
        let posture = -(&g.posture_gain * (&state.joints - &refs.posture));
        Ok(TaskTargets {
            com: Some(com),
            left_foot: Some(lf),
            right_foot: Some(rf),
            torso,
            posture,
        })
    }

    fn solve(&mut self, problem: &QpProblem) -> Result<QpSolution, QpError> {
        self.solver.solve(problem, self.warm.as_ref())
    }

    /// One whole-body cycle. `measured` drives the tasks in velocity mode;
    /// position mode uses the internally integrated state and, when an
    /// anchor is given, re-places its base on the anchor after integration.
    pub fn control_cycle(
        &mut self,
        measured: &RobotState,
        refs: &WholeBodyReferences,
        dt: f64,
        anchor: Option<&Anchor>,
    ) -> Result<CycleOutput, WholeBodyError> {
        if !(dt > 0.0) {
            return Err(WholeBodyError::TimeStep(dt));
        }
        let model = Arc::clone(&self.model);
        let state = match self.mode {
            Mode::Velocity => measured.clone(),
            Mode::Position => self.internal.clone().ok_or(WholeBodyError::NotInitialized)?,
        };
        let kin = Kinematics::new(&model, &state)?;
        let targets = self.task_targets(&kin, &state, refs, dt)?;
        let cycle = self.cycle;
        self.cycle += 1;

        let qp_err = |source| WholeBodyError::Qp { cycle, source };
        let mut fallback = false;
        let mut used = targets.clone();
        let solution = match assemble(&kin, &targets, &self.gains, true) {
            Ok(p) => {
                let s = self.solve(&p).map_err(qp_err)?;
                match s.status {
                    QpStatus::Infeasible { .. } => None,
                    _ => Some((p, s)),
                }
            }
            Err(WholeBodyError::RankDeficient { .. }) => None,
            Err(e) => return Err(e),
        };
        let (problem, solution) = match solution {
            Some(ps) => ps,
            None => {
                fallback = true;
                self.warm = None;
                used.com = used.com.map(|_| Vector3::zeros());
                used.left_foot = used.left_foot.map(|_| Vector6::zeros());
                used.right_foot = used.right_foot.map(|_| Vector6::zeros());
                let p = assemble(&kin, &used, &self.gains, false)?;
                let s = self.solve(&p).map_err(qp_err)?;
                (p, s)
            }
        };
        let solution = match solution.status {
            QpStatus::Optimal => solution,
            QpStatus::Infeasible { constraint, violation } => {
                self.warm = None;
                return Err(qp_err(QpError::Infeasible { constraint, violation }));
            }
            QpStatus::MaxIter => {
                self.warm = None;
                return Err(qp_err(QpError::MaxIterations {
                    iterations: solution.iterations,
                }));
            }
        };
        self.warm = Some(solution.warm_start());

        let nu = solution.primal.clone();
        let hard_residual = if problem.eq_matrix.nrows() > 0 {
            (&problem.eq_matrix * &nu - &problem.eq_vector).amax()
        } else {
            0.0
        };
        let jt = kin.angular_jacobian(model.torso());
        let torso_residual = (&jt * &nu - DVector::from_column_slice(used.torso.as_slice())).norm();
        let diagnostics = Diagnostics {
            hard_residual,
            torso_residual,
            iterations: solution.iterations,
            fallback,
        };

        let n = model.num_joints();
        let command = match self.mode {
            Mode::Velocity => JointCommand::Velocity(nu.rows(6, n).into_owned()),
            Mode::Position => {
                let mut next = state.integrate(&nu, dt);
                if let Some(a) = anchor {
                    next = next.anchored(&model, a.frame, &a.pose)?;
                }
                let q = next.joints.clone();
                self.internal = Some(next);
                JointCommand::Position(q)
            }
        };
        Ok(CycleOutput {
            command,
            nu,
            targets: used,
            diagnostics,
        })
    }
}
