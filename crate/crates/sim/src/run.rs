//! The closed-loop run: planner, DCM controller, ZMP-CoM loop, whole-body QP
//! and plant, one control period at a time.

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use dcm_core::control::{
    gain_schedule, zmp_com_control, InstantaneousController, InstantaneousGains, MpcConfig, MpcController, MpcInput,
    ZmpComGains, ZmpTermSign,
};
use dcm_core::dcm::{build_trajectory, DcmTrajectory};
use dcm_core::footstep::{FootSide, Footstep};
use dcm_core::lipm::{PendulumParams, Point2};
use dcm_core::polygon::SupportPolygon;
use dcm_core::rotation::{wrap_angle, Rotation3};
use dcm_core::swing::FeetTrajectory;
use dcm_core::timeline::{GaitTimeline, Support};
use dcm_core::unicycle::{initial_feet, plan_footsteps, UnicycleConfig};
use dcm_wholebody::{
    Anchor, FootReference, FrameId, JointCommand, Kinematics, KinematicModel, Mode, Pose, RobotState,
    WholeBodyController, WholeBodyReferences,
};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::metrics::{Metrics, TraceRow, Traces};
use crate::plant::{FallDetector, Plant};
use crate::scenario::{mode_label, Architecture, ControllerKind, Scenario};
use crate::SimError;

/// Wall-clock cost of the controller stack per cycle, in seconds. Kept out
/// of the traces so that these stay deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timing {
    pub mean_cycle: f64,
    pub max_cycle: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub name: String,
    pub seed: u64,
    pub architecture: Architecture,
    pub forward_speed: f64,
    pub traces: Traces,
    pub metrics: Metrics,
    pub timing: Timing,
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    seed: u64,
    controller: &'static str,
    mode: &'static str,
    forward_speed: f64,
    metrics: &'a Metrics,
    timing: Timing,
}

impl RunResult {
    pub fn summary_json(&self) -> String {
        let s = Summary {
            scenario: &self.name,
            seed: self.seed,
            controller: self.architecture.controller.label(),
            mode: mode_label(self.architecture.mode),
            forward_speed: self.forward_speed,
            metrics: &self.metrics,
            timing: self.timing,
        };
        serde_json::to_string_pretty(&s).expect("summary serializes")
    }

    /// Write `traces.csv` and `summary.json` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<(), SimError> {
        fs::create_dir_all(dir).map_err(|e| SimError::Io(format!("{}: {e}", dir.display())))?;
        let file = fs::File::create(dir.join("traces.csv"))?;
        self.traces.write_csv(std::io::BufWriter::new(file))?;
        fs::write(dir.join("summary.json"), self.summary_json() + "\n")?;
        Ok(())
    }
}

/// Load the kinematic model named by the scenario, or the bundled one.
pub fn load_model(scenario: &Scenario) -> Result<Arc<KinematicModel>, SimError> {
    match &scenario.model {
        Some(path) => KinematicModel::from_file(path)
            .map(Arc::new)
            .map_err(|e| SimError::Config(format!("model {}: {e}", path.display()))),
        None => Ok(Arc::new(KinematicModel::sample())),
    }
}

pub fn run_scenario(scenario: &Scenario) -> Result<RunResult, SimError> {
    let model = load_model(scenario)?;
    run_with_model(scenario, model)
}

/// Run with an already loaded model; used by the sweeps to share it.
pub fn run_with_model(scenario: &Scenario, model: Arc<KinematicModel>) -> Result<RunResult, SimError> {
    Simulation::new(scenario, model)?.run()
}

fn config_err(what: &str) -> impl Fn(String) -> SimError + '_ {
    move |e| SimError::Config(format!("{what}: {e}"))
}

enum DcmStabilizer {
    Instantaneous(InstantaneousController),
    Predictive { mpc: MpcController, period: usize },
}

/// Planned gait with one support polygon per phase.
struct Gait {
    timeline: GaitTimeline,
    dcm: DcmTrajectory,
    feet: FeetTrajectory,
    polygons: Vec<SupportPolygon>,
}

impl Gait {
    fn phase_index(&self, t: f64) -> usize {
        self.timeline.phases().partition_point(|p| p.start <= t).saturating_sub(1)
    }

    fn polygon(&self, t: f64) -> &SupportPolygon {
        &self.polygons[self.phase_index(t)]
    }

    /// Footstep the base is anchored to: the stance foot, or the newer foot
    /// in double support.
    fn anchor_step(&self, t: f64) -> usize {
        match self.timeline.phases()[self.phase_index(t)].support {
            Support::Single { stance, .. } => stance,
            Support::Double { second, .. } => second,
        }
    }
}

/// Pose where each foot last touched down, keyed by footstep index.
#[derive(Debug, Clone, Copy)]
struct Contact {
    step: usize,
    pose: Pose,
}

struct Simulation<'s> {
    scenario: &'s Scenario,
    model: Arc<KinematicModel>,
    params: PendulumParams,
    gait: Gait,
    stabilizer: DcmStabilizer,
    standing_gains: ZmpComGains,
    walking_gains: ZmpComGains,
    sign: ZmpTermSign,
    wbc: WholeBodyController,
    plant: Plant,
    fall: FallDetector,
    rng: ChaCha8Rng,
    zmp_noise: Normal<f64>,
    encoder_noise: Normal<f64>,
}

impl<'s> Simulation<'s> {
    fn new(scenario: &'s Scenario, model: Arc<KinematicModel>) -> Result<Self, SimError> {
        scenario.validate()?;
        let walk = &scenario.walk;

        let stance_side = walk.first_swing.opposite();
        let feet = initial_feet(Point2::zeros(), 0.0, walk.nominal_width, walk.first_swing, 0.0, walk.first_step);
        let stance = feet.iter().find(|f| f.side == stance_side).expect("two sides");
        let robot = RobotState::new(Pose::identity(), model.nominal_posture().clone())
            .anchored(&model, foot_frame(&model, stance_side), &footstep_pose(stance))
            .map_err(|e| SimError::Config(e.to_string()))?;
        let com = Kinematics::new(&model, &robot).map_err(|e| SimError::Config(e.to_string()))?.com();
        let z0 = scenario.pendulum.com_height.unwrap_or(com.z);
        let params = PendulumParams::new(scenario.pendulum.gravity, z0).map_err(|e| config_err("pendulum")(e.to_string()))?;
        let omega = params.omega();

        let gait = plan_gait(scenario, feet, omega)?;

        let g = &scenario.gains;
        let stabilizer = match scenario.architecture.controller {
            ControllerKind::Instantaneous => {
                let gains = InstantaneousGains::new(g.instantaneous.kp.matrix(), g.instantaneous.ki.matrix(), g.instantaneous.windup)
                    .map_err(|e| config_err("instantaneous gains")(e.to_string()))?;
                DcmStabilizer::Instantaneous(InstantaneousController::new(gains))
            }
            ControllerKind::Predictive => {
                let m = &g.mpc;
                let cfg = MpcConfig::new(
                    m.horizon,
                    m.sample_time,
                    m.state_weight.matrix(),
                    m.rate_weight.matrix(),
                    m.terminal_weight.matrix(),
                )
                .map_err(|e| config_err("MPC")(e.to_string()))?;
                let period = (scenario.mpc_period / scenario.control_dt).round().max(1.0) as usize;
                DcmStabilizer::Predictive {
                    mpc: MpcController::new(cfg),
                    period,
                }
            }
        };
        let zc = &g.zmp_com;
        let walking_gains =
            ZmpComGains::new(zc.k_zmp.matrix(), zc.k_com.matrix(), omega).map_err(|e| config_err("ZMP-CoM gains")(e.to_string()))?;
        let standing_gains = ZmpComGains::new(
            zc.standing_k_zmp.unwrap_or(zc.k_zmp).matrix(),
            zc.standing_k_com.unwrap_or(zc.k_com).matrix(),
            omega,
        )
        .map_err(|e| config_err("standing ZMP-CoM gains")(e.to_string()))?;

        let task_gains = g.wholebody.task_gains(model.num_joints());
        let mut wbc = WholeBodyController::new(Arc::clone(&model), task_gains, scenario.architecture.mode)
            .map_err(|e| config_err("whole-body gains")(e.to_string()))?;
        wbc.initialize(&robot);

        let plant = Plant::new(Arc::clone(&model), robot, params, &scenario.plant)?;
        let noise = |std: f64| Normal::new(0.0, std).map_err(|e| config_err("noise")(e.to_string()));
        Ok(Self {
            scenario,
            params,
            gait,
            stabilizer,
            standing_gains,
            walking_gains,
            sign: zc.sign,
            wbc,
            plant,
            fall: FallDetector::new(scenario.plant.fall_threshold, z0),
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            zmp_noise: noise(scenario.noise.zmp_std)?,
            encoder_noise: noise(scenario.noise.encoder_std)?,
            model,
        })
    }

    fn run(mut self) -> Result<RunResult, SimError> {
        let s = self.scenario;
        let dt = s.control_dt;
        let omega = self.params.omega();
        let n = self.model.num_joints();
        let cycles = (s.duration / dt).round() as usize;
        let mut pushes: Vec<_> = s.pushes.clone();
        pushes.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut next_push = 0;

        let mut traces = Traces {
            landings: (2..self.gait.timeline.steps().len())
                .map(|j| self.gait.timeline.landing_time(j))
                .collect(),
            ..Traces::default()
        };

        let start = self.gait.dcm.eval(0.0).dcm;
        let mut com_ref = start;
        let mut com_star = self.plant.pendulum().com;
        let mut zmp_ref = self.gait.dcm.implied_zmp(0.0);
        let mut anchor_step = usize::MAX;
        let mut plant_anchor = None;
        let mut ctrl_anchor = None;
        let mut contacts = [None::<Contact>; 2];
        let lower = self.wbc.gains().velocity_lower.clone();
        let upper = self.wbc.gains().velocity_upper.clone();
        let mut total_time = 0.0;
        let mut max_time: f64 = 0.0;

        for k in 0..cycles {
            let t = k as f64 * dt;
            while next_push < pushes.len() && pushes[next_push].time <= t + 1e-12 {
                self.plant.push(Point2::from(pushes[next_push].impulse));
                next_push += 1;
            }

            // measurements
            let pendulum = *self.plant.pendulum();
            let zmp_measured = self.plant.zmp() + Point2::new(self.zmp_noise.sample(&mut self.rng), self.zmp_noise.sample(&mut self.rng));
            let plant_joints = self.plant.robot().joints.clone();
            let measured_joints = plant_joints.map(|q| q + self.encoder_noise.sample(&mut self.rng));

            let clock = Instant::now();
            let step = self.gait.anchor_step(t);
            let polygon = self.gait.polygon(t).clone();
            let side = self.gait.timeline.steps()[step].side;
            let frame = foot_frame(&self.model, side);
            if step != anchor_step {
                anchor_step = step;
                plant_anchor = Some(Anchor {
                    frame,
                    pose: on_ground(&self.plant.frame_pose(frame)?),
                });
                let internal = self.wbc.internal_state().expect("initialized");
                let anchor = Anchor {
                    frame,
                    pose: on_ground(&frame_pose(&self.model, internal, frame)?),
                };
                self.wbc.reanchor(&anchor).map_err(ctrl)?;
                ctrl_anchor = Some(anchor);
            }
            let plant_anchor_ref = plant_anchor.as_ref().expect("set above");
            let measured = RobotState::new(self.plant.robot().base, measured_joints)
                .anchored(&self.model, plant_anchor_ref.frame, &plant_anchor_ref.pose)
                .map_err(ctrl)?;

            // simplified model layer
            let reference = self.gait.dcm.eval(t);
            let stabilized = match &mut self.stabilizer {
                DcmStabilizer::Instantaneous(c) => c
                    .control(pendulum.dcm, reference.dcm, reference.dcm_velocity, dt, omega)
                    .map(Some),
                DcmStabilizer::Predictive { mpc, period } if k % *period == 0 => {
                    let horizon = mpc.config().horizon();
                    let ts = mpc.config().sample_time();
                    let refs: Vec<Point2> = (0..=horizon).map(|j| self.gait.dcm.eval(t + j as f64 * ts).dcm).collect();
                    let polys: Vec<SupportPolygon> =
                        (0..horizon).map(|j| self.gait.polygon(t + j as f64 * ts).clone()).collect();
                    let input = MpcInput {
                        dcm: pendulum.dcm,
                        previous_zmp: zmp_ref,
                        dcm_refs: &refs,
                        polygons: &polys,
                    };
                    mpc.control(omega, &input).map(|o| Some(o.zmp))
                }
                DcmStabilizer::Predictive { .. } => Ok(None),
            };
            match stabilized {
                Ok(Some(r)) => zmp_ref = r,
                Ok(None) => {}
                Err(e) => {
                    traces.failure = Some(format!("DCM controller at t = {t:.3} s: {e}"));
                    break;
                }
            }

            let com_ref_velocity = omega * (reference.dcm - com_ref);
            let blend = if s.gains.zmp_com.blend_time > 0.0 {
                (t / s.gains.zmp_com.blend_time).min(1.0)
            } else {
                1.0
            };
            let gains = match gain_schedule(blend, &self.standing_gains, &self.walking_gains, omega) {
                Ok(g) => g,
                Err(e) => {
                    traces.failure = Some(format!("gain schedule at t = {t:.3} s: {e}"));
                    break;
                }
            };
            let com_star_velocity = zmp_com_control(pendulum.com, com_ref_velocity, com_ref, zmp_measured, zmp_ref, &gains, self.sign);

            // whole-body layer
            let view = match s.architecture.mode {
                Mode::Position => self.wbc.internal_state().expect("initialized").clone(),
                Mode::Velocity => measured.clone(),
            };
            let left = self.foot_reference(FootSide::Left, t, &view, &mut contacts[0])?;
            let right = self.foot_reference(FootSide::Right, t, &view, &mut contacts[1])?;
            let lm = self.gait.feet.foot(FootSide::Left, t);
            let rm = self.gait.feet.foot(FootSide::Right, t);
            let yaw = lm.yaw + 0.5 * wrap_angle(rm.yaw - lm.yaw);
            let refs = WholeBodyReferences {
                com_velocity: com_star_velocity,
                com_position: com_star,
                com_height: self.params.com_height(),
                left_foot: left,
                right_foot: right,
                torso_rotation: Rotation3::from_yaw(yaw),
                torso_angular_velocity: Vector3::new(0.0, 0.0, 0.5 * (lm.yaw_rate + rm.yaw_rate)),
                posture: self.model.nominal_posture().clone(),
            };
            let output = match self.wbc.control_cycle(&measured, &refs, dt, ctrl_anchor.as_ref()) {
                Ok(o) => o,
                Err(e) => {
                    traces.failure = Some(format!("whole-body controller at t = {t:.3} s: {e}"));
                    break;
                }
            };
            let elapsed = clock.elapsed().as_secs_f64();
            total_time += elapsed;
            max_time = max_time.max(elapsed);

            let joints = match &output.command {
                JointCommand::Position(q) => q.clone(),
                JointCommand::Velocity(v) => &plant_joints + dt * v,
            };
            let sdot = output.nu.rows(6, n);
            let margin = (0..n)
                .map(|i| (upper[i] - sdot[i]).min(sdot[i] - lower[i]))
                .fold(f64::INFINITY, f64::min);

            traces.rows.push(TraceRow {
                t,
                dcm_ref: reference.dcm,
                dcm: pendulum.dcm,
                com_ref,
                com: pendulum.com,
                com_height: self.plant.kinematic_com().z,
                zmp_ref,
                zmp: self.plant.zmp(),
                zmp_measured,
                zmp_ref_violation: polygon.max_violation(zmp_ref),
                left_ref: lm.position,
                left: self.plant.frame_pose(self.model.left_foot())?.position,
                right_ref: rm.position,
                right: self.plant.frame_pose(self.model.right_foot())?.position,
                left_swing: self.gait.feet.is_swinging(FootSide::Left, t),
                right_swing: self.gait.feet.is_swinging(FootSide::Right, t),
                hard_residual: output.diagnostics.hard_residual,
                fallback: output.diagnostics.fallback,
                joint_velocity_margin: margin,
                joint_commands: match output.command {
                    JointCommand::Position(q) => q,
                    JointCommand::Velocity(v) => v,
                },
            });

            // plant and reference integration over [t, t + dt]
            self.plant.set_joints(joints, plant_anchor_ref, dt)?;
            self.plant.step(&polygon, dt)?;
            com_ref += (1.0 - (-omega * dt).exp()) * (reference.dcm - com_ref);
            com_star += dt * com_star_velocity;

            let t_next = t + dt;
            let p = self.plant.pendulum();
            if self.fall.update(t_next, p.dcm, self.gait.polygon(t_next), self.plant.kinematic_com().z) {
                break;
            }
        }

        traces.fall_time = self.fall.fell_at();
        let metrics = Metrics::from_traces(&traces);
        let count = traces.rows.len().max(1) as f64;
        Ok(RunResult {
            name: s.name.clone(),
            seed: s.seed,
            architecture: s.architecture,
            forward_speed: s.forward_speed(),
            timing: Timing {
                mean_cycle: total_time / count,
                max_cycle: max_time,
            },
            traces,
            metrics,
        })
    }

    /// Reference for one foot. A foot on the ground is held where it
    /// touched down; a swinging foot follows the planned trajectory.
    fn foot_reference(&self, side: FootSide, t: f64, view: &RobotState, contact: &mut Option<Contact>) -> Result<FootReference, SimError> {
        let motion = self.gait.feet.foot(side, t);
        if self.gait.feet.is_swinging(side, t) {
            return Ok(FootReference {
                pose: Pose::new(motion.position, motion.rotation()),
                linear_velocity: motion.velocity,
                angular_velocity: motion.angular_velocity(),
            });
        }
        let step = self.gait.timeline.foot_index(side, t);
        let pose = match contact {
            Some(c) if c.step == step => c.pose,
            _ => {
                let pose = on_ground(&frame_pose(&self.model, view, foot_frame(&self.model, side))?);
                *contact = Some(Contact { step, pose });
                pose
            }
        };
        Ok(FootReference {
            pose,
            linear_velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
        })
    }
}

fn plan_gait(scenario: &Scenario, feet: [Footstep; 2], omega: f64) -> Result<Gait, SimError> {
    let walk = &scenario.walk;
    let cfg = UnicycleConfig {
        command: walk.command,
        bounds: walk.bounds,
        nominal_width: walk.nominal_width,
        sample_dt: walk.sample_dt,
    };
    let horizon = scenario.duration - walk.first_step - walk.stop_margin;
    let steps = plan_footsteps(&cfg, feet, horizon).map_err(|e| config_err("footstep plan")(e.to_string()))?;
    let timeline = GaitTimeline::new(steps, walk.ds_ratio).map_err(|e| config_err("gait timeline")(e.to_string()))?;
    let dcm = build_trajectory(&timeline, omega).map_err(|e| config_err("DCM trajectory")(e.to_string()))?;
    let feet = FeetTrajectory::new(&timeline, walk.swing_apex).map_err(|e| config_err("swing trajectory")(e.to_string()))?;
    let size = scenario.plant.foot;
    let st = timeline.steps();
    let polygons = timeline
        .phases()
        .iter()
        .map(|p| match p.support {
            Support::Single { stance, .. } => SupportPolygon::foot(&st[stance], size),
            Support::Double { first, second } => SupportPolygon::feet(&st[first], &st[second], size),
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| config_err("support polygon")(e.to_string()))?;
    Ok(Gait {
        timeline,
        dcm,
        feet,
        polygons,
    })
}

fn footstep_pose(step: &Footstep) -> Pose {
    Pose::new(step.position3(), step.rotation())
}

/// A foot that touches down is flattened onto the ground plane.
fn on_ground(pose: &Pose) -> Pose {
    Pose::new(
        Vector3::new(pose.position.x, pose.position.y, 0.0),
        Rotation3::from_yaw(pose.rotation.yaw()),
    )
}

fn foot_frame(model: &KinematicModel, side: FootSide) -> FrameId {
    match side {
        FootSide::Left => model.left_foot(),
        FootSide::Right => model.right_foot(),
    }
}

fn frame_pose(model: &KinematicModel, state: &RobotState, frame: FrameId) -> Result<Pose, SimError> {
    Ok(Kinematics::new(model, state).map_err(ctrl)?.frame_pose(frame))
}

fn ctrl(e: dcm_wholebody::WholeBodyError) -> SimError {
    SimError::Controller(e.to_string())
}
