//! Swing-foot trajectories and the feet motion of a whole timeline.

use nalgebra::Vector3;
use thiserror::Error;

use crate::footstep::{FootSide, Footstep};
use crate::lipm::Point2;
use crate::rotation::{wrap_angle, Rotation3};
use crate::spline::Cubic;
use crate::timeline::GaitTimeline;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SwingError {
    #[error("swing phase [{start}, {end}] has no duration")]
    Duration { start: f64, end: f64 },
    #[error("apex height must be positive, got {0}")]
    Apex(f64),
}

/// Pose and velocity of a foot sole on flat ground.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootMotion {
    pub position: Vector3<f64>,
    pub yaw: f64,
    pub velocity: Vector3<f64>,
    pub yaw_rate: f64,
}

impl FootMotion {
    pub fn resting(step: &Footstep) -> Self {
        Self {
            position: step.position3(),
            yaw: step.yaw,
            velocity: Vector3::zeros(),
            yaw_rate: 0.0,
        }
    }

    pub fn rotation(&self) -> Rotation3 {
        Rotation3::from_yaw(self.yaw)
    }

    pub fn angular_velocity(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, self.yaw_rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwingTrajectory {
    start: f64,
    end: f64,
    x: Cubic,
    y: Cubic,
    yaw: Cubic,
    // rising half; the falling half mirrors it
    z: Cubic,
}

pub fn swing_trajectory(from: &Footstep, to: &Footstep, phase: (f64, f64), apex: f64) -> Result<SwingTrajectory, SwingError> {
    SwingTrajectory::new(from, to, phase.0, phase.1, apex)
}

impl SwingTrajectory {
    pub fn new(from: &Footstep, to: &Footstep, start: f64, end: f64, apex: f64) -> Result<Self, SwingError> {
        let duration = end - start;
        if !(duration > 0.0) {
            return Err(SwingError::Duration { start, end });
        }
        if !(apex > 0.0) {
            return Err(SwingError::Apex(apex));
        }
        let dyaw = wrap_angle(to.yaw - from.yaw);
        Ok(Self {
            start,
            end,
            x: Cubic::hermite(from.position.x, 0.0, to.position.x, 0.0, duration),
            y: Cubic::hermite(from.position.y, 0.0, to.position.y, 0.0, duration),
            yaw: Cubic::hermite(from.yaw, 0.0, from.yaw + dyaw, 0.0, duration),
            z: Cubic::hermite(0.0, 0.0, apex, 0.0, 0.5 * duration),
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    pub fn planar_cubics(&self) -> (&Cubic, &Cubic) {
        (&self.x, &self.y)
    }

    /// Pose and velocity at `t`, clamped to the swing interval.
    pub fn eval(&self, t: f64) -> FootMotion {
        let tau = (t - self.start).clamp(0.0, self.end - self.start);
        let (x, vx) = self.x.eval(tau);
        let (y, vy) = self.y.eval(tau);
        let (yaw, wz) = self.yaw.eval(tau);
        let half = 0.5 * (self.end - self.start);
        let (z, vz) = if tau <= half {
            self.z.eval(tau)
        } else {
            let (z, vz) = self.z.eval(2.0 * half - tau);
            (z, -vz)
        };
        FootMotion {
            position: Vector3::new(x, y, z),
            yaw: wrap_angle(yaw),
            velocity: Vector3::new(vx, vy, vz),
            yaw_rate: wz,
        }
    }
}

/// Desired motion of both feet along a timeline.
#[derive(Debug, Clone)]
pub struct FeetTrajectory {
    timeline: GaitTimeline,
    swings: Vec<Option<SwingTrajectory>>,
}

impl FeetTrajectory {
    pub fn new(timeline: &GaitTimeline, apex: f64) -> Result<Self, SwingError> {
        let steps = timeline.steps();
        let mut swings = vec![None, None];
        for j in 2..steps.len() {
            let swing = SwingTrajectory::new(
                &steps[j - 2],
                &steps[j],
                timeline.liftoff_time(j),
                timeline.landing_time(j),
                apex,
            )?;
            swings.push(Some(swing));
        }
        Ok(Self {
            timeline: timeline.clone(),
            swings,
        })
    }

    pub fn timeline(&self) -> &GaitTimeline {
        &self.timeline
    }

    pub fn foot(&self, side: FootSide, t: f64) -> FootMotion {
        let j = self.timeline.foot_index(side, t);
        match &self.swings[j] {
            Some(swing) if t < self.timeline.landing_time(j) => swing.eval(t),
            _ => FootMotion::resting(&self.timeline.steps()[j]),
        }
    }

    /// True while `side` is in the air.
    pub fn is_swinging(&self, side: FootSide, t: f64) -> bool {
        let j = self.timeline.foot_index(side, t);
        j >= 2 && t < self.timeline.landing_time(j)
    }

    /// Planar centre of the last footstep of `side` on the ground at `t`.
    pub fn ground_position(&self, side: FootSide, t: f64) -> Point2 {
        let j = self.timeline.foot_index(side, t);
        if self.is_swinging(side, t) {
            self.timeline.steps()[j - 2].position
        } else {
            self.timeline.steps()[j].position
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(x: f64, y: f64, yaw: f64) -> Footstep {
        Footstep::new(FootSide::Left, Point2::new(x, y), yaw, 0.0)
    }

    #[test]
    fn in_place_step_only_lifts() {
        let s = step(0.1, 0.07, 0.3);
        let sw = SwingTrajectory::new(&s, &s, 1.0, 1.6, 0.03).unwrap();
        for i in 0..=60 {
            let m = sw.eval(1.0 + 0.01 * i as f64);
            assert!((m.position.x - 0.1).abs() < 1e-15 && (m.position.y - 0.07).abs() < 1e-15);
            assert!((m.yaw - 0.3).abs() < 1e-15);
        }
        assert!((sw.eval(1.3).position.z - 0.03).abs() < 1e-15);
    }

    #[test]
    fn straight_step_is_symmetric_with_apex_at_mid_swing() {
        let sw = SwingTrajectory::new(&step(0.0, 0.07, 0.0), &step(0.2, 0.07, 0.0), 0.0, 0.8, 0.03).unwrap();
        let mid = sw.eval(0.4);
        assert!((mid.position.x - 0.1).abs() < 1e-15);
        assert!((mid.position.z - 0.03).abs() < 1e-15);
        let max_z = (0..=800).map(|i| sw.eval(i as f64 * 1e-3).position.z).fold(0.0, f64::max);
        assert!((max_z - 0.03).abs() < 1e-15);
        for t in [0.0, 0.8] {
            let m = sw.eval(t);
            assert!(m.velocity.amax() < 1e-15 && m.yaw_rate.abs() < 1e-15);
            assert!(m.position.z.abs() < 1e-15);
        }
    }

    #[test]
    fn yaw_takes_the_short_way_round() {
        let sw = SwingTrajectory::new(&step(0.0, 0.0, 3.0), &step(0.0, 0.0, -3.0), 0.0, 1.0, 0.02).unwrap();
        let mid = sw.eval(0.5);
        assert!((mid.yaw.abs() - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let s = step(0.0, 0.0, 0.0);
        assert!(matches!(SwingTrajectory::new(&s, &s, 1.0, 1.0, 0.03), Err(SwingError::Duration { .. })));
        assert_eq!(SwingTrajectory::new(&s, &s, 0.0, 1.0, 0.0), Err(SwingError::Apex(0.0)));
    }
}
