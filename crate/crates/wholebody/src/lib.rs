//! Floating-base kinematic trees and the whole-body velocity QP.
//!
//! The generalized velocity is `nu = (v_B, w_B, s')`: base linear velocity
//! and angular velocity, both in the inertial frame, followed by the joint
//! velocities. Jacobians are `6 x (6 + n)` with linear rows first.

pub mod controller;
pub mod kinematics;
pub mod model;
pub mod qp;
pub mod tasks;

pub use controller::{Anchor, CycleOutput, Diagnostics, JointCommand, Mode, WholeBodyController};
pub use kinematics::{forward_kinematics, jacobian, Kinematics, Pose, RobotState};
pub use model::{FrameId, JointKind, KinematicModel, ModelError};
pub use qp::{build_wholebody_qp, HardTask};
pub use tasks::{
    com_velocity_star, feet_velocity_star, torso_velocity_star, ComGains, ErrorIntegral, FootGains,
    FootReference, TaskGains, TaskTargets, WholeBodyReferences,
};

use dcm_qp::QpError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WholeBodyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{what} has length {found}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid gains: {0}")]
    Gains(String),
    #[error("time step must be positive, got {0}")]
    TimeStep(f64),
    #[error("{task} constraint is rank deficient (rank {rank} of {rows} rows)")]
    RankDeficient { task: HardTask, rank: usize, rows: usize },
    #[error("position mode used before the internal state was initialized")]
    NotInitialized,
    #[error("whole-body QP failed at cycle {cycle}: {source}")]
    Qp {
        cycle: u64,
        #[source]
        source: QpError,
    },
}
