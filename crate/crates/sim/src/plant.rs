//! Kinematic robot with a pendulum CoM.
//!
//! The joints follow the commands exactly (position mode) or by Euler
//! integration (velocity mode) and the base is placed on the stance foot.
//! A pendulum CoM follows the kinematic CoM through a damped second-order
//! law; the ZMP this requires is clipped to the support
//! polygon and becomes the realized ZMP.

use std::sync::Arc;

use dcm_core::lipm::{step_exact, PendulumParams, Point2, SimplifiedState};
use dcm_core::polygon::SupportPolygon;
use dcm_wholebody::{Kinematics, KinematicModel, Pose, RobotState};
use nalgebra::{DVector, Vector3};

use crate::scenario::PlantSection;
use crate::SimError;

/// Point of `polygon` closest to `p`.
pub fn closest_point(polygon: &SupportPolygon, p: Point2) -> Point2 {
    if polygon.contains(p, 0.0) {
        return p;
    }
    let v = polygon.vertices();
    let n = v.len();
    let mut best = v[0];
    let mut best_d = f64::INFINITY;
    for i in 0..n {
        let a = v[i];
        let ab = v[(i + 1) % n] - a;
        let s = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
        let q = a + s * ab;
        let d = (q - p).norm_squared();
        if d < best_d {
            best_d = d;
            best = q;
        }
    }
    best
}

/// Latching fall flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FallDetector {
    threshold: f64,
    com_height: f64,
    fell_at: Option<f64>,
}

impl FallDetector {
    pub fn new(threshold: f64, com_height: f64) -> Self {
        Self {
            threshold,
            com_height,
            fell_at: None,
        }
    }

    /// True once the DCM has left `polygon` by more than the threshold or the
    /// CoM height has drifted by more than half its nominal value.
    pub fn update(&mut self, t: f64, dcm: Point2, polygon: &SupportPolygon, com_z: f64) -> bool {
        if self.fell_at.is_none()
            && (polygon.distance(dcm) > self.threshold || (com_z - self.com_height).abs() > 0.5 * self.com_height)
        {
            self.fell_at = Some(t);
        }
        self.fell_at.is_some()
    }

    pub fn fell_at(&self) -> Option<f64> {
        self.fell_at
    }
}

#[derive(Debug, Clone)]
pub struct Plant {
    model: Arc<KinematicModel>,
    robot: RobotState,
    com_kin: Vector3<f64>,
    com_kin_velocity: Point2,
    pendulum: SimplifiedState,
    params: PendulumParams,
    zmp: Point2,
    bandwidth: f64,
    damping: f64,
    mass: f64,
}

impl Plant {
    pub fn new(model: Arc<KinematicModel>, robot: RobotState, params: PendulumParams, section: &PlantSection) -> Result<Self, SimError> {
        let com_kin = Kinematics::new(&model, &robot).map_err(ctrl)?.com();
        let start = com_kin.xy();
        let mass = model.total_mass();
        Ok(Self {
            model,
            robot,
            com_kin,
            com_kin_velocity: Point2::zeros(),
            pendulum: SimplifiedState::at_rest(start),
            params,
            zmp: start,
            bandwidth: section.tracking_bandwidth,
            damping: section.tracking_damping,
            mass,
        })
    }

    pub fn robot(&self) -> &RobotState {
        &self.robot
    }

    pub fn pendulum(&self) -> &SimplifiedState {
        &self.pendulum
    }

    pub fn kinematic_com(&self) -> Vector3<f64> {
        self.com_kin
    }

    /// ZMP realized over the last step.
    pub fn zmp(&self) -> Point2 {
        self.zmp
    }

    pub fn frame_pose(&self, frame: dcm_wholebody::FrameId) -> Result<Pose, SimError> {
        Ok(Kinematics::new(&self.model, &self.robot).map_err(ctrl)?.frame_pose(frame))
    }

    /// Set the joints and re-place the base on `anchor`.
    pub fn set_joints(&mut self, joints: DVector<f64>, anchor: &dcm_wholebody::Anchor, dt: f64) -> Result<(), SimError> {
        let moved = RobotState {
            joint_velocities: (&joints - &self.robot.joints) / dt,
            joints,
            base: self.robot.base,
        };
        self.robot = moved.anchored(&self.model, anchor.frame, &anchor.pose).map_err(ctrl)?;
        let com = Kinematics::new(&self.model, &self.robot).map_err(ctrl)?.com();
        self.com_kin_velocity = (com.xy() - self.com_kin.xy()) / dt;
        self.com_kin = com;
        Ok(())
    }

    /// Advance the pendulum by `dt` with the ZMP confined to `polygon`.
    pub fn step(&mut self, polygon: &SupportPolygon, dt: f64) -> Result<(), SimError> {
        let p = &self.pendulum;
        let wc = self.bandwidth;
        let acc = wc * wc * (self.com_kin.xy() - p.com) + 2.0 * self.damping * wc * (self.com_kin_velocity - p.com_velocity);
        let w = self.params.omega();
        let demand = p.com - acc / (w * w);
        self.zmp = closest_point(polygon, demand);
        self.pendulum = step_exact(p, self.zmp, &self.params, dt).map_err(|e| SimError::Controller(e.to_string()))?;
        Ok(())
    }

    /// Instantaneous CoM velocity change from a planar impulse (N s).
    pub fn push(&mut self, impulse: Point2) {
        let p = &self.pendulum;
        let v = p.com_velocity + impulse / self.mass;
        self.pendulum = SimplifiedState {
            com: p.com,
            com_velocity: v,
            dcm: p.com + v / self.params.omega(),
        };
    }
}

fn ctrl(e: dcm_wholebody::WholeBodyError) -> SimError {
    SimError::Controller(e.to_string())
}
