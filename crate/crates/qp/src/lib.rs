//! Dense convex quadratic programming.
//!
//! Equality constraints are removed by a nullspace change of variables and the
//! remaining inequality/bound problem is solved with a dual active-set method
//! (Goldfarb-Idnani). The reduced Hessian must be positive definite.

mod dump;
mod kkt;
mod problem;
mod solver;

pub use dump::{read_dump, write_dump};
pub use kkt::{dual_objective, kkt_residuals, KktResiduals};
pub use problem::{ConstraintRef, QpProblem};
pub use solver::{solve, QpSettings, QpSolution, QpSolver, QpStatus, WarmStart};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QpError {
    #[error("{what} has shape {found:?}, expected {expected:?}")]
    Dimension {
        what: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("problem data contains NaN or infinite entries")]
    NonFinite,
    #[error("lower bound exceeds upper bound on variable {index}")]
    CrossedBounds { index: usize },
    #[error("hessian is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("reduced hessian is not positive definite")]
    NotConvex,
    #[error("problem is infeasible{}: violation {violation:e}", constraint.map(|c| format!(" at {c}")).unwrap_or_default())]
    Infeasible {
        constraint: Option<ConstraintRef>,
        violation: f64,
    },
    #[error("no optimum after {iterations} iterations")]
    MaxIterations { iterations: usize },
    #[error("malformed problem dump: {0}")]
    Parse(String),
}
