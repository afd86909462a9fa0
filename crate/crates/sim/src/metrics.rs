//! Per-cycle traces and the metrics derived from them.

use std::io::Write;

use dcm_core::lipm::Point2;
use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::SimError;

/// One control cycle. Measured quantities are sampled at `t`, before the
/// command computed in the cycle is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub dcm_ref: Point2,
    pub dcm: Point2,
    pub com_ref: Point2,
    pub com: Point2,
    pub com_height: f64,
    /// Output of the DCM controller.
    pub zmp_ref: Point2,
    pub zmp: Point2,
    pub zmp_measured: Point2,
    /// Signed distance of `zmp_ref` outside the support polygon.
    pub zmp_ref_violation: f64,
    pub left_ref: Vector3<f64>,
    pub left: Vector3<f64>,
    pub right_ref: Vector3<f64>,
    pub right: Vector3<f64>,
    pub left_swing: bool,
    pub right_swing: bool,
    pub hard_residual: f64,
    /// The whole-body QP fell back to holding the hard tasks still.
    pub fallback: bool,
    pub joint_velocity_margin: f64,
    pub joint_commands: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Traces {
    pub rows: Vec<TraceRow>,
    /// Landing times of the planned steps, initial feet excluded.
    pub landings: Vec<f64>,
    pub fall_time: Option<f64>,
    /// Set when a controller error stopped the run.
    pub failure: Option<String>,
}

impl Traces {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.rows.first().map_or(0, |r| r.joint_commands.len());
        let mut header: Vec<String> = [
            "t",
            "dcm_ref_x",
            "dcm_ref_y",
            "dcm_x",
            "dcm_y",
            "com_ref_x",
            "com_ref_y",
            "com_x",
            "com_y",
            "com_z",
            "zmp_ref_x",
            "zmp_ref_y",
            "zmp_x",
            "zmp_y",
            "zmp_meas_x",
            "zmp_meas_y",
            "zmp_ref_violation",
            "left_ref_x",
            "left_ref_y",
            "left_ref_z",
            "left_x",
            "left_y",
            "left_z",
            "right_ref_x",
            "right_ref_y",
            "right_ref_z",
            "right_x",
            "right_y",
            "right_z",
            "left_swing",
            "right_swing",
            "hard_residual",
            "fallback",
            "joint_velocity_margin",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend((0..n).map(|i| format!("q_cmd_{i}")));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec: Vec<String> = Vec::with_capacity(header.len());
            rec.push(r.t.to_string());
            for p in [r.dcm_ref, r.dcm, r.com_ref] {
                rec.extend([p.x.to_string(), p.y.to_string()]);
            }
            rec.extend([r.com.x.to_string(), r.com.y.to_string(), r.com_height.to_string()]);
            for p in [r.zmp_ref, r.zmp, r.zmp_measured] {
                rec.extend([p.x.to_string(), p.y.to_string()]);
            }
            rec.push(r.zmp_ref_violation.to_string());
            for v in [r.left_ref, r.left, r.right_ref, r.right] {
                rec.extend(v.iter().map(|x| x.to_string()));
            }
            rec.push(u8::from(r.left_swing).to_string());
            rec.push(u8::from(r.right_swing).to_string());
            rec.push(r.hard_residual.to_string());
            rec.push(u8::from(r.fallback).to_string());
            rec.push(r.joint_velocity_margin.to_string());
            rec.extend(r.joint_commands.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub cycles: usize,
    pub simulated_time: f64,
    pub max_dcm_error: f64,
    pub mean_dcm_error: f64,
    pub max_com_error: f64,
    pub mean_com_error: f64,
    /// Per axis, over both feet while they swing.
    pub max_swing_foot_error: [f64; 3],
    /// Norm of the position error, over swinging feet.
    pub max_swing_foot_error_norm: f64,
    /// Per axis, over both feet at all times.
    pub max_foot_error: [f64; 3],
    pub max_zmp_ref_violation: f64,
    pub max_hard_residual: f64,
    pub fallback_cycles: usize,
    /// Smallest distance of a joint velocity to its bound; negative when
    /// a bound was exceeded.
    pub min_joint_velocity_margin: f64,
    pub steps_completed: usize,
    pub mean_forward_velocity: f64,
    pub fell: bool,
    pub fall_time: Option<f64>,
    pub failure: Option<String>,
}

impl Metrics {
    pub fn from_traces(traces: &Traces) -> Self {
        let rows = &traces.rows;
        let n = rows.len();
        let mut m = Metrics {
            cycles: n,
            simulated_time: rows.last().map_or(0.0, |r| r.t),
            max_dcm_error: 0.0,
            mean_dcm_error: 0.0,
            max_com_error: 0.0,
            mean_com_error: 0.0,
            max_swing_foot_error: [0.0; 3],
            max_swing_foot_error_norm: 0.0,
            max_foot_error: [0.0; 3],
            max_zmp_ref_violation: f64::NEG_INFINITY,
            max_hard_residual: 0.0,
            fallback_cycles: 0,
            min_joint_velocity_margin: f64::INFINITY,
            steps_completed: 0,
            mean_forward_velocity: 0.0,
            fell: traces.fall_time.is_some(),
            fall_time: traces.fall_time,
            failure: traces.failure.clone(),
        };
        let mut dcm_sum = 0.0;
        let mut com_sum = 0.0;
        for r in rows {
            let e_dcm = (r.dcm - r.dcm_ref).norm();
            let e_com = (r.com - r.com_ref).norm();
            dcm_sum += e_dcm;
            com_sum += e_com;
            m.max_dcm_error = m.max_dcm_error.max(e_dcm);
            m.max_com_error = m.max_com_error.max(e_com);
            for (swing, reference, actual) in [(r.left_swing, r.left_ref, r.left), (r.right_swing, r.right_ref, r.right)] {
                let e = actual - reference;
                for a in 0..3 {
                    m.max_foot_error[a] = m.max_foot_error[a].max(e[a].abs());
                    if swing {
                        m.max_swing_foot_error[a] = m.max_swing_foot_error[a].max(e[a].abs());
                    }
                }
                if swing {
                    m.max_swing_foot_error_norm = m.max_swing_foot_error_norm.max(e.norm());
                }
            }
            m.max_zmp_ref_violation = m.max_zmp_ref_violation.max(r.zmp_ref_violation);
            m.max_hard_residual = m.max_hard_residual.max(r.hard_residual);
            m.fallback_cycles += usize::from(r.fallback);
            m.min_joint_velocity_margin = m.min_joint_velocity_margin.min(r.joint_velocity_margin);
        }
        if n > 0 {
            m.mean_dcm_error = dcm_sum / n as f64;
            m.mean_com_error = com_sum / n as f64;
            let (a, b) = (&rows[0], &rows[n - 1]);
            if b.t > a.t {
                m.mean_forward_velocity = (b.com.x - a.com.x) / (b.t - a.t);
            }
        }
        // a step counts once its foot has landed before the run ended
        let end = match traces.fall_time {
            Some(f) => f.min(m.simulated_time),
            None => m.simulated_time,
        };
        m.steps_completed = traces.landings.iter().filter(|&&l| l <= end).count();
        m
    }

    pub fn passed(&self) -> bool {
        !self.fell && self.failure.is_none()
    }
}
