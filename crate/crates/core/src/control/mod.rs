//! DCM stabilizers (instantaneous and predictive) and the ZMP-CoM controller.

mod instantaneous;
mod mpc;
mod zmp_com;

pub use instantaneous::{error_system_matrix, InstantaneousController, InstantaneousGains};
pub use mpc::{build_mpc_qp, MpcConfig, MpcController, MpcInput, MpcOutput};
pub use zmp_com::{gain_schedule, min_jerk, zmp_com_control, ZmpComGains, ZmpTermSign};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("invalid gain: {0}")]
    Gain(String),
    #[error("time step must be positive, got {0}")]
    TimeStep(f64),
    #[error("natural frequency must be positive, got {0}")]
    Omega(f64),
    #[error("blend must lie in [0, 1], got {0}")]
    Blend(f64),
    #[error("MPC window needs {expected} {what}, got {found}")]
    Window {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("MPC problem infeasible: support polygon at sample {sample}, edge {edge} violated by {violation:e} m")]
    MpcInfeasible {
        sample: usize,
        edge: usize,
        violation: f64,
    },
    #[error("QP solver failed: {0}")]
    Qp(#[from] dcm_qp::QpError),
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub(crate) fn min_sym_eigen(m: &Matrix2<f64>) -> f64 {
    let s = 0.5 * (m + m.transpose());
    s.symmetric_eigenvalues().min()
}

/// 2x2 gain written in a config file as a scalar (times identity), a
/// diagonal pair, or a full row-major matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gain2 {
    Scalar(f64),
    Diagonal([f64; 2]),
    Full([[f64; 2]; 2]),
}

impl Gain2 {
    pub fn matrix(&self) -> Matrix2<f64> {
        match *self {
            Gain2::Scalar(k) => Matrix2::identity() * k,
            Gain2::Diagonal([a, b]) => Matrix2::new(a, 0.0, 0.0, b),
            Gain2::Full([[a, b], [c, d]]) => Matrix2::new(a, b, c, d),
        }
    }
}

impl From<Gain2> for Matrix2<f64> {
    fn from(g: Gain2) -> Self {
        g.matrix()
    }
}
