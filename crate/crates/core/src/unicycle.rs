//! Footstep planning by sampling a unicycle path.
//!
//! The unicycle reference point sits midway between the feet. Its path is
//! integrated at a fixed sample time starting when the first stance foot takes
//! the load; each new footstep is the lateral offset of the path at the
//! earliest sample that satisfies every step bound.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::footstep::{FootSide, Footstep};
use crate::lipm::Point2;
use crate::rotation::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnicycleCommand {
    /// Constant forward (m/s) and turning (rad/s) speed.
    Velocity { forward: f64, angular: f64 },
    /// Drive to a planar pose with a pursuit law, saturated at the given speeds.
    TargetPose {
        x: f64,
        y: f64,
        yaw: f64,
        max_forward: f64,
        max_angular: f64,
    },
}

impl Default for UnicycleCommand {
    fn default() -> Self {
        UnicycleCommand::Velocity {
            forward: 0.0,
            angular: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepBounds {
    pub min_duration: f64,
    pub max_duration: f64,
    /// Bounds on the displacement of a foot between two of its own footsteps.
    pub min_stride: f64,
    pub max_stride: f64,
    /// Largest yaw difference between the new foot and the stance foot.
    pub max_yaw: f64,
    /// Smallest lateral distance of the new foot from the stance foot,
    /// measured in the stance foot frame towards the new foot's side.
    pub min_width: f64,
}

impl Default for StepBounds {
    fn default() -> Self {
        Self {
            min_duration: 0.6,
            max_duration: 1.5,
            min_stride: 0.02,
            max_stride: 0.45,
            max_yaw: 0.35,
            min_width: 0.10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnicycleConfig {
    pub command: UnicycleCommand,
    pub bounds: StepBounds,
    /// Lateral distance between the feet centres.
    pub nominal_width: f64,
    pub sample_dt: f64,
}

impl Default for UnicycleConfig {
    fn default() -> Self {
        Self {
            command: UnicycleCommand::default(),
            bounds: StepBounds::default(),
            nominal_width: 0.14,
            sample_dt: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepBound {
    MinDuration,
    MaxDuration,
    MinStride,
    MaxStride,
    MaxYaw,
    MinWidth,
}

impl fmt::Display for StepBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepBound::MinDuration => "min step duration",
            StepBound::MaxDuration => "max step duration",
            StepBound::MinStride => "min stride",
            StepBound::MaxStride => "max stride",
            StepBound::MaxYaw => "max inter-feet yaw",
            StepBound::MinWidth => "min lateral width",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("invalid planner config: {0}")]
    Config(String),
    #[error("horizon {horizon} s is shorter than the minimum step duration {min_duration} s")]
    HorizonTooShort { horizon: f64, min_duration: f64 },
    #[error("initial feet coincide")]
    CoincidentFeet,
    #[error("initial feet are on the same side")]
    SameSide,
    #[error("initial impact times must increase")]
    ImpactOrder,
    #[error("no step after t = {after} s satisfies the {bound} (value {value}, limit {limit})")]
    Infeasible {
        bound: StepBound,
        after: f64,
        value: f64,
        limit: f64,
    },
}

impl UnicycleConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        let b = &self.bounds;
        let bad = |msg: &str| Err(PlanError::Config(msg.to_owned()));
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(b.min_duration) && b.min_duration < b.max_duration && b.max_duration.is_finite()) {
            return bad("need 0 < min_duration < max_duration");
        }
        if !(positive(b.min_stride) && b.min_stride < b.max_stride && b.max_stride.is_finite()) {
            return bad("need 0 < min_stride < max_stride");
        }
        if !positive(b.max_yaw) {
            return bad("max_yaw must be positive");
        }
        if !(b.min_width >= 0.0 && b.min_width <= self.nominal_width) {
            return bad("need 0 <= min_width <= nominal_width");
        }
        if !positive(self.sample_dt) || self.sample_dt > b.min_duration {
            return bad("sample_dt must be positive and below min_duration");
        }
        match self.command {
            UnicycleCommand::Velocity { forward, angular } => {
                if !(forward.is_finite() && angular.is_finite()) {
                    return bad("velocity command must be finite");
                }
            }
            UnicycleCommand::TargetPose {
                x,
                y,
                yaw,
                max_forward,
                max_angular,
            } => {
                if ![x, y, yaw].iter().all(|v| v.is_finite())
                    || !positive(max_forward)
                    || !positive(max_angular)
                {
                    return bad("target pose needs finite pose and positive speed limits");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnicyclePose {
    pub position: Point2,
    pub heading: f64,
}

impl UnicyclePose {
    pub fn foot(&self, side: FootSide, width: f64) -> Point2 {
        let lateral = Point2::new(-self.heading.sin(), self.heading.cos());
        self.position + lateral * (0.5 * width * side.lateral_sign())
    }
}

const PURSUIT_POSITION_GAIN: f64 = 1.0;
const PURSUIT_HEADING_GAIN: f64 = 2.0;
const PURSUIT_ARRIVAL: f64 = 0.005;

impl UnicycleCommand {
    /// Forward and angular speed applied at `pose`.
    fn speeds(&self, pose: &UnicyclePose) -> (f64, f64) {
        match *self {
            UnicycleCommand::Velocity { forward, angular } => (forward, angular),
            UnicycleCommand::TargetPose {
                x,
                y,
                yaw,
                max_forward,
                max_angular,
            } => {
                let d = Point2::new(x, y) - pose.position;
                let dist = d.norm();
                if dist > PURSUIT_ARRIVAL {
                    let err = wrap_angle(d.y.atan2(d.x) - pose.heading);
                    let w = (PURSUIT_HEADING_GAIN * err).clamp(-max_angular, max_angular);
                    let v = (PURSUIT_POSITION_GAIN * dist).min(max_forward) * err.cos().max(0.0);
                    (v, w)
                } else {
                    let err = wrap_angle(yaw - pose.heading);
                    (0.0, (PURSUIT_HEADING_GAIN * err).clamp(-max_angular, max_angular))
                }
            }
        }
    }
}

/// Exact unicycle motion over `dt` with constant speeds.
fn advance(pose: &UnicyclePose, v: f64, w: f64, dt: f64) -> UnicyclePose {
    let th = pose.heading;
    let th1 = th + w * dt;
    let delta = if (w * dt).abs() < 1e-9 {
        let mid = th + 0.5 * w * dt;
        Point2::new(mid.cos(), mid.sin()) * (v * dt)
    } else {
        Point2::new(th1.sin() - th.sin(), th.cos() - th1.cos()) * (v / w)
    };
    UnicyclePose {
        position: pose.position + delta,
        heading: th1,
    }
}

/// Unicycle poses sampled every `dt` from `start`.
pub fn sample_path(command: &UnicycleCommand, start: UnicyclePose, dt: f64, count: usize) -> Vec<UnicyclePose> {
    let mut poses = Vec::with_capacity(count);
    let mut pose = start;
    for _ in 0..count {
        poses.push(pose);
        let (v, w) = command.speeds(&pose);
        pose = advance(&pose, v, w, dt);
    }
    poses
}

struct Check {
    violated: Option<(StepBound, f64, f64)>,
}

fn check_step(
    bounds: &StepBounds,
    candidate: &Footstep,
    stance: &Footstep,
    previous_same: &Footstep,
    skip_min_stride: bool,
) -> Check {
    let stride = (candidate.position - previous_same.position).norm();
    let yaw = wrap_angle(candidate.yaw - stance.yaw).abs();
    let width = stance.to_local(candidate.position).y * candidate.side.lateral_sign();
    let violated = if stride > bounds.max_stride {
        Some((StepBound::MaxStride, stride, bounds.max_stride))
    } else if yaw > bounds.max_yaw {
        Some((StepBound::MaxYaw, yaw, bounds.max_yaw))
    } else if width < bounds.min_width {
        Some((StepBound::MinWidth, width, bounds.min_width))
    } else if !skip_min_stride && stride < bounds.min_stride {
        Some((StepBound::MinStride, stride, bounds.min_stride))
    } else {
        None
    };
    Check { violated }
}

/// Plan footsteps after the two initial feet.
///
/// `initial[0]` is the first foot to swing and `initial[1]` the first stance
/// foot; its impact time is when the unicycle starts moving. New steps are
/// placed while their impact time stays within `horizon` seconds of that
/// instant. The returned list starts with the initial feet. If the feet end up
/// staggered, a closing step brings the last swing foot alongside the stance
/// foot; it is exempt from the minimum stride and may land after the horizon.
///
/// When a full window of candidate durations fails only the minimum stride
/// the unicycle is moving too slowly to require a step and planning stops.
pub fn plan_footsteps(
    config: &UnicycleConfig,
    initial: [Footstep; 2],
    horizon: f64,
) -> Result<Vec<Footstep>, PlanError> {
    config.validate()?;
    let b = &config.bounds;
    if !(horizon > b.min_duration) {
        return Err(PlanError::HorizonTooShort {
            horizon,
            min_duration: b.min_duration,
        });
    }
    let [first_swing, first_stance] = initial;
    if first_swing.side == first_stance.side {
        return Err(PlanError::SameSide);
    }
    if (first_swing.position - first_stance.position).norm() < 1e-9 {
        return Err(PlanError::CoincidentFeet);
    }
    if !(first_stance.impact_time > first_swing.impact_time) {
        return Err(PlanError::ImpactOrder);
    }

    let t0 = first_stance.impact_time;
    let dt = config.sample_dt;
    let heading = first_swing.yaw + 0.5 * wrap_angle(first_stance.yaw - first_swing.yaw);
    let start = UnicyclePose {
        position: 0.5 * (first_swing.position + first_stance.position),
        heading,
    };
    let samples = ((horizon + b.max_duration) / dt).ceil() as usize + 2;
    let path = sample_path(&config.command, start, dt, samples);
    let last_sample = (horizon / dt + 1e-9).floor() as usize;

    let mut steps = vec![first_swing, first_stance];
    let mut k_last = 0usize;
    loop {
        let n = steps.len();
        let stance = steps[n - 1];
        let previous_same = steps[n - 2];
        let side = stance.side.opposite();
        let k_min = k_last + (b.min_duration / dt - 1e-9).ceil() as usize;
        let k_max = k_last + (b.max_duration / dt + 1e-9).floor() as usize;
        if k_min > last_sample {
            break;
        }
        let window_complete = k_max <= last_sample;
        let mut chosen = None;
        let mut last_violation = None;
        for k in k_min..=k_max.min(last_sample) {
            let pose = &path[k];
            let candidate = Footstep::new(
                side,
                pose.foot(side, config.nominal_width),
                pose.heading,
                t0 + k as f64 * dt,
            );
            match check_step(b, &candidate, &stance, &previous_same, false).violated {
                None => {
                    chosen = Some((k, candidate));
                    break;
                }
                Some(v) => last_violation = Some(v),
            }
        }
        match (chosen, last_violation) {
            (Some((k, step)), _) => {
                steps.push(step);
                k_last = k;
            }
            (None, Some((StepBound::MinStride, _, _))) | (None, None) => break,
            (None, Some((bound, value, limit))) => {
                if !window_complete {
                    break;
                }
                return Err(PlanError::Infeasible {
                    bound,
                    after: t0 + k_last as f64 * dt,
                    value,
                    limit,
                });
            }
        }
    }

    // closing step
    let n = steps.len();
    let stance = steps[n - 1];
    let previous_same = steps[n - 2];
    let side = stance.side.opposite();
    let offset = Point2::new(-stance.yaw.sin(), stance.yaw.cos()) * (config.nominal_width * side.lateral_sign());
    let duration = if n > 2 {
        (stance.impact_time - previous_same.impact_time).clamp(b.min_duration, b.max_duration)
    } else {
        b.min_duration
    };
    let closing = Footstep::new(side, stance.position + offset, stance.yaw, stance.impact_time + duration);
    let aligned = (closing.position - previous_same.position).norm() < 1e-6
        && wrap_angle(closing.yaw - previous_same.yaw).abs() < 1e-6;
    if n > 2 && !aligned && check_step(b, &closing, &stance, &previous_same, true).violated.is_none() {
        steps.push(closing);
    }
    Ok(steps)
}

/// Initial feet standing side by side around `center` facing `yaw`: the
/// `first_swing` foot at time `t0`, the other foot taking the load at `t1`.
pub fn initial_feet(center: Point2, yaw: f64, width: f64, first_swing: FootSide, t0: f64, t1: f64) -> [Footstep; 2] {
    let pose = UnicyclePose {
        position: center,
        heading: yaw,
    };
    let stance = first_swing.opposite();
    [
        Footstep::new(first_swing, pose.foot(first_swing, width), yaw, t0),
        Footstep::new(stance, pose.foot(stance, width), yaw, t1),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feet() -> [Footstep; 2] {
        initial_feet(Point2::zeros(), 0.0, 0.14, FootSide::Left, 0.0, 1.0)
    }

    fn config(forward: f64, angular: f64) -> UnicycleConfig {
        UnicycleConfig {
            command: UnicycleCommand::Velocity { forward, angular },
            ..UnicycleConfig::default()
        }
    }

    #[test]
    fn zero_command_adds_no_steps() {
        let steps = plan_footsteps(&config(0.0, 0.0), feet(), 10.0).unwrap();
        assert_eq!(steps, feet().to_vec());
    }

    #[test]
    fn forward_walk_respects_stride_and_keeps_yaw() {
        let mut c = config(0.1, 0.0);
        c.bounds.max_stride = 0.2;
        let steps = plan_footsteps(&c, feet(), 10.0).unwrap();
        assert!(steps.len() > 6);
        for pair in steps.windows(3) {
            let stride = (pair[2].position - pair[0].position).norm();
            assert!(stride <= 0.2 + 1e-12, "stride {stride}");
            assert_eq!(pair[2].side, pair[0].side);
            assert_ne!(pair[2].side, pair[1].side);
        }
        assert!(steps.iter().all(|s| s.yaw == 0.0));
    }

    #[test]
    fn too_fast_command_names_the_stride_bound() {
        let err = plan_footsteps(&config(2.0, 0.0), feet(), 10.0).unwrap_err();
        assert!(matches!(
            err,
            PlanError::Infeasible {
                bound: StepBound::MaxStride,
                ..
            }
        ));
    }

    #[test]
    fn fast_turn_names_the_yaw_bound() {
        let err = plan_footsteps(&config(0.0, 2.0), feet(), 10.0).unwrap_err();
        assert!(matches!(
            err,
            PlanError::Infeasible {
                bound: StepBound::MaxYaw,
                ..
            }
        ));
    }

    #[test]
    fn target_pose_is_reached_with_feet_together() {
        let c = UnicycleConfig {
            command: UnicycleCommand::TargetPose {
                x: 0.6,
                y: 0.0,
                yaw: 0.0,
                max_forward: 0.15,
                max_angular: 0.3,
            },
            ..UnicycleConfig::default()
        };
        let steps = plan_footsteps(&c, feet(), 20.0).unwrap();
        let n = steps.len();
        let mid = 0.5 * (steps[n - 1].position + steps[n - 2].position);
        assert!((mid.x - 0.6).abs() < 0.05, "mid {mid:?}");
        assert!(((steps[n - 1].position - steps[n - 2].position).norm() - 0.14).abs() < 1e-9);
    }

    #[test]
    fn bad_config_and_inputs_are_rejected() {
        let mut c = config(0.1, 0.0);
        c.bounds.min_duration = 2.0;
        assert!(matches!(plan_footsteps(&c, feet(), 10.0), Err(PlanError::Config(_))));
        assert!(matches!(
            plan_footsteps(&config(0.1, 0.0), feet(), 0.1),
            Err(PlanError::HorizonTooShort { .. })
        ));
        let mut f = feet();
        f[1].position = f[0].position;
        f[1].side = FootSide::Right;
        assert_eq!(plan_footsteps(&config(0.1, 0.0), f, 10.0), Err(PlanError::CoincidentFeet));
    }
}
