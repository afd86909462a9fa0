//! Closed-loop walking simulation: footstep and DCM planning, the simplified
//! model controllers, the whole-body QP and a kinematic plant with a
//! pendulum CoM, plus the architecture comparison used by the CLI.

pub mod compare;
pub mod metrics;
pub mod plant;
pub mod run;
pub mod scenario;

pub use compare::{compare_architectures, sweep, ComparisonRow, SweepPoint};
pub use metrics::{Metrics, TraceRow, Traces};
pub use plant::{closest_point, FallDetector, Plant};
pub use run::{run_scenario, RunResult, Timing};
pub use scenario::{Architecture, ControllerKind, Scenario};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("controller error: {0}")]
    Controller(String),
}

impl SimError {
    /// Machine-readable category, also used for the CLI exit code.
    pub fn category(&self) -> &'static str {
        match self {
            SimError::Config(_) => "config",
            SimError::Io(_) => "io",
            SimError::Controller(_) => "controller",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 3,
            SimError::Io(_) => 4,
            SimError::Controller(_) => 5,
        }
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

impl From<csv::Error> for SimError {
    fn from(e: csv::Error) -> Self {
        SimError::Io(e.to_string())
    }
}
