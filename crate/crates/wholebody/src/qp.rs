//! Assembly of the whole-body velocity QP.
//!
//! Decision variable `nu` of size `6 + n`. Cost
//! `|v*_torso - J_torso nu|^2_Kt + |s' - s'*|^2_Lambda + base_weight |nu_B|^2`
//! (halved), hard equalities for the CoM and both feet, and box bounds on
//! the joint velocities.

use std::fmt;

use dcm_qp::QpProblem;
use nalgebra::{DMatrix, DVector};

use crate::kinematics::Kinematics;
use crate::tasks::{TaskGains, TaskTargets};
use crate::WholeBodyError;

/// Relative singular-value threshold of the hard-task rank check.
const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HardTask {
    Com,
    LeftFoot,
    RightFoot,
}

impl fmt::Display for HardTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HardTask::Com => "CoM",
            HardTask::LeftFoot => "left foot",
            HardTask::RightFoot => "right foot",
        })
    }
}

fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * top).count()
}

/// Stack the present hard tasks. Returns the constraint matrix and vector.
fn hard_rows(kin: &Kinematics<'_>, targets: &TaskTargets, check_rank: bool) -> Result<(DMatrix<f64>, DVector<f64>), WholeBodyError> {
    let model = kin.model();
    let nv = model.num_velocities();
    let mut blocks: Vec<(HardTask, DMatrix<f64>, DVector<f64>)> = Vec::new();
    if let Some(v) = targets.com {
        blocks.push((HardTask::Com, kin.com_jacobian(), DVector::from_column_slice(v.as_slice())));
    }
    if let Some(v) = targets.left_foot {
        blocks.push((HardTask::LeftFoot, kin.jacobian(model.left_foot()), DVector::from_column_slice(v.as_slice())));
    }
    if let Some(v) = targets.right_foot {
        blocks.push((HardTask::RightFoot, kin.jacobian(model.right_foot()), DVector::from_column_slice(v.as_slice())));
    }
    let rows: usize = blocks.iter().map(|b| b.1.nrows()).sum();
    let mut a = DMatrix::zeros(rows, nv);
    let mut b = DVector::zeros(rows);
    let mut row = 0;
    let mut have = 0;
    for (task, jac, v) in blocks {
        let k = jac.nrows();
        a.view_mut((row, 0), (k, nv)).copy_from(&jac);
        b.rows_mut(row, k).copy_from(&v);
        row += k;
        if check_rank {
            let r = rank(&a.rows(0, row).into_owned());
            if r < have + k {
                return Err(WholeBodyError::RankDeficient {
                    task,
                    rank: r - have,
                    rows: k,
                });
            }
            have = r;
        }
    }
    Ok((a, b))
}

pub fn build_wholebody_qp(kin: &Kinematics<'_>, targets: &TaskTargets, gains: &TaskGains) -> Result<QpProblem, WholeBodyError> {
    assemble(kin, targets, gains, true)
}

pub(crate) fn assemble(
    kin: &Kinematics<'_>,
    targets: &TaskTargets,
    gains: &TaskGains,
    check_rank: bool,
) -> Result<QpProblem, WholeBodyError> {
    let model = kin.model();
    let n = model.num_joints();
    let nv = model.num_velocities();
    if targets.posture.len() != n {
        return Err(WholeBodyError::Dimension {
            what: "posture velocity",
            expected: n,
            found: targets.posture.len(),
        });
    }
    if gains.posture_weight.nrows() != n || gains.velocity_lower.len() != n {
        return Err(WholeBodyError::Dimension {
            what: "task gains",
            expected: n,
            found: gains.velocity_lower.len(),
        });
    }

    let jt = kin.angular_jacobian(model.torso());
    let kt = DMatrix::from_column_slice(3, 3, gains.torso_weight.as_slice());
    let vt = DVector::from_column_slice(targets.torso.as_slice());
    let kt_jt = &kt * &jt;
    let mut h = jt.transpose() * &kt_jt;
    let mut g = -(kt_jt.transpose() * &vt);

    let lambda = &gains.posture_weight;
    {
        let mut hj = h.view_mut((6, 6), (n, n));
        hj += lambda;
    }
    {
        let mut gj = g.rows_mut(6, n);
        gj -= lambda * &targets.posture;
    }
    for i in 0..6 {
        h[(i, i)] += gains.base_weight;
    }
    // symmetrize roundoff from the products
    let h = 0.5 * (&h + h.transpose());

    let (a_eq, b_eq) = hard_rows(kin, targets, check_rank)?;

    let mut lower = DVector::from_element(nv, f64::NEG_INFINITY);
    let mut upper = DVector::from_element(nv, f64::INFINITY);
    lower.rows_mut(6, n).copy_from(&gains.velocity_lower);
    upper.rows_mut(6, n).copy_from(&gains.velocity_upper);

    Ok(QpProblem::new(h, g)
        .with_equalities(a_eq, b_eq)
        .with_bounds(lower, upper))
}
