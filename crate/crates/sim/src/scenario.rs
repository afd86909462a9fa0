//! Scenario configuration.
//!
//! A scenario is a TOML document. Every table and key is optional except
//! `duration`; see `scenarios/walk.toml` for a fully spelled-out example.
//!
//! | key | meaning |
//! |---|---|
//! | `name`, `seed` | label and RNG seed (the CLI `--seed` overrides) |
//! | `duration`, `control_dt`, `mpc_period` | run length and loop periods, s |
//! | `model` | kinematic model file; the bundled biped when absent |
//! | `[pendulum]` | `gravity`, `com_height` (defaults to the model's nominal CoM height) |
//! | `[architecture]` | `controller = "instantaneous" \| "predictive"`, `mode = "position" \| "velocity"` |
//! | `[walk]` | `command` (unicycle command table), `bounds`, `nominal_width`, `sample_dt`, `ds_ratio`, `first_step`, `first_swing`, `swing_apex`, `stop_margin` |
//! | `[noise]` | `zmp_std` (m), `encoder_std` (rad) |
//! | `[[pushes]]` | `time` (s) and planar `impulse` (N s) applied to the CoM |
//! | `[gains.*]` | `instantaneous`, `mpc`, `zmp_com`, `wholebody` |
//! | `[plant]` | CoM tracking bandwidth and damping, fall threshold, foot size |
//! | `sweep_velocities` | forward speeds tried by `compare` |

use std::path::{Path, PathBuf};

use dcm_core::control::{Gain2, ZmpTermSign};
use dcm_core::footstep::FootSide;
use dcm_core::polygon::FootSize;
use dcm_core::unicycle::{StepBounds, UnicycleCommand};
use dcm_wholebody::{ComGains, FootGains, Mode, TaskGains};
use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Instantaneous,
    Predictive,
}

impl ControllerKind {
    pub fn label(self) -> &'static str {
        match self {
            ControllerKind::Instantaneous => "Instantaneous",
            ControllerKind::Predictive => "Predictive",
        }
    }
}

pub fn mode_label(mode: Mode) -> &'static str {
    match mode {
        Mode::Position => "Position",
        Mode::Velocity => "Velocity",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub controller: ControllerKind,
    pub mode: Mode,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            controller: ControllerKind::Instantaneous,
            mode: Mode::Position,
        }
    }
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [
        Architecture {
            controller: ControllerKind::Instantaneous,
            mode: Mode::Position,
        },
        Architecture {
            controller: ControllerKind::Instantaneous,
            mode: Mode::Velocity,
        },
        Architecture {
            controller: ControllerKind::Predictive,
            mode: Mode::Position,
        },
        Architecture {
            controller: ControllerKind::Predictive,
            mode: Mode::Velocity,
        },
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumSection {
    pub gravity: f64,
    pub com_height: Option<f64>,
}

impl Default for PendulumSection {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            com_height: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSection {
    pub command: UnicycleCommand,
    pub bounds: StepBounds,
    pub nominal_width: f64,
    pub sample_dt: f64,
    pub ds_ratio: f64,
    /// Impact time of the first stance foot; the robot stands before it.
    pub first_step: f64,
    pub first_swing: FootSide,
    pub swing_apex: f64,
    /// Stop planning new steps this long before the end of the run.
    pub stop_margin: f64,
}

impl Default for WalkSection {
    fn default() -> Self {
        Self {
            command: UnicycleCommand::default(),
            bounds: StepBounds::default(),
            nominal_width: 0.14,
            sample_dt: 0.01,
            ds_ratio: 0.2,
            first_step: 1.0,
            first_swing: FootSide::Right,
            swing_apex: 0.03,
            stop_margin: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub zmp_std: f64,
    pub encoder_std: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            zmp_std: 0.005,
            encoder_std: 1e-3,
        }
    }
}

impl NoiseSection {
    pub fn none() -> Self {
        Self {
            zmp_std: 0.0,
            encoder_std: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Push {
    pub time: f64,
    pub impulse: [f64; 2],
}

/// 3x3 gain: scalar, diagonal or full row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gain3 {
    Scalar(f64),
    Diagonal([f64; 3]),
    Full([[f64; 3]; 3]),
}

impl Gain3 {
    pub fn matrix(&self) -> Matrix3<f64> {
        match *self {
            Gain3::Scalar(k) => Matrix3::identity() * k,
            Gain3::Diagonal(d) => Matrix3::from_diagonal(&d.into()),
            Gain3::Full(rows) => Matrix3::from_fn(|i, j| rows[i][j]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstantaneousSection {
    pub kp: Gain2,
    pub ki: Gain2,
    pub windup: f64,
}

impl Default for InstantaneousSection {
    fn default() -> Self {
        Self {
            kp: Gain2::Scalar(2.0),
            ki: Gain2::Scalar(0.5),
            windup: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcSection {
    pub horizon: usize,
    pub sample_time: f64,
    pub state_weight: Gain2,
    pub rate_weight: Gain2,
    pub terminal_weight: Gain2,
}

impl Default for MpcSection {
    fn default() -> Self {
        Self {
            horizon: 20,
            sample_time: 0.1,
            state_weight: Gain2::Scalar(1.0),
            rate_weight: Gain2::Scalar(0.01),
            terminal_weight: Gain2::Scalar(10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZmpComSection {
    pub k_zmp: Gain2,
    pub k_com: Gain2,
    /// Gains while standing; the walking gains are reached over
    /// `blend_time` with a minimum-jerk profile.
    pub standing_k_zmp: Option<Gain2>,
    pub standing_k_com: Option<Gain2>,
    pub blend_time: f64,
    pub sign: ZmpTermSign,
}

impl Default for ZmpComSection {
    fn default() -> Self {
        Self {
            k_zmp: Gain2::Scalar(1.0),
            k_com: Gain2::Scalar(6.0),
            standing_k_zmp: None,
            standing_k_com: None,
            blend_time: 0.5,
            sign: ZmpTermSign::Standard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WholeBodySection {
    pub torso_weight: Gain3,
    pub torso_rot: Gain3,
    pub posture_weight: f64,
    pub posture_gain: f64,
    pub foot_kp: Gain3,
    pub foot_ki: Gain3,
    pub foot_rot: Gain3,
    pub foot_windup: f64,
    pub com_kp: Gain2,
    pub com_ki: Gain2,
    pub com_height_gain: f64,
    pub com_windup: f64,
    pub joint_velocity_limit: f64,
    pub base_weight: f64,
}

impl Default for WholeBodySection {
    fn default() -> Self {
        Self {
            torso_weight: Gain3::Scalar(1.0),
            torso_rot: Gain3::Scalar(5.0),
            posture_weight: 0.01,
            posture_gain: 2.0,
            foot_kp: Gain3::Scalar(20.0),
            foot_ki: Gain3::Scalar(0.0),
            foot_rot: Gain3::Scalar(20.0),
            foot_windup: 0.05,
            com_kp: Gain2::Scalar(10.0),
            com_ki: Gain2::Scalar(0.0),
            com_height_gain: 10.0,
            com_windup: 0.05,
            joint_velocity_limit: 8.0,
            base_weight: 1e-6,
        }
    }
}

impl WholeBodySection {
    pub fn task_gains(&self, n: usize) -> TaskGains {
        TaskGains {
            torso_weight: self.torso_weight.matrix(),
            torso_rot: self.torso_rot.matrix(),
            posture_weight: DMatrix::identity(n, n) * self.posture_weight,
            posture_gain: DMatrix::identity(n, n) * self.posture_gain,
            foot: FootGains {
                kp: self.foot_kp.matrix(),
                ki: self.foot_ki.matrix(),
                k_rot: self.foot_rot.matrix(),
                windup: self.foot_windup,
            },
            com: ComGains {
                kp: self.com_kp.matrix(),
                ki: self.com_ki.matrix(),
                k_height: self.com_height_gain,
                windup: self.com_windup,
            },
            velocity_lower: DVector::from_element(n, -self.joint_velocity_limit),
            velocity_upper: DVector::from_element(n, self.joint_velocity_limit),
            base_weight: self.base_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainsSection {
    pub instantaneous: InstantaneousSection,
    pub mpc: MpcSection,
    pub zmp_com: ZmpComSection,
    pub wholebody: WholeBodySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    /// Bandwidth (rad/s) and damping ratio with which the dynamic CoM
    /// follows the kinematic CoM. The realized ZMP reacts to a step in
    /// commanded CoM velocity with gain `2 * damping * bandwidth / omega^2`;
    /// above about one the measured-ZMP feedback loop oscillates.
    pub tracking_bandwidth: f64,
    pub tracking_damping: f64,
    /// DCM distance from the support polygon that counts as a fall (m).
    pub fall_threshold: f64,
    pub foot: FootSize,
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            tracking_bandwidth: 8.0,
            tracking_damping: 0.7,
            fall_threshold: 0.3,
            foot: FootSize::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub control_dt: f64,
    #[serde(default = "default_mpc_period")]
    pub mpc_period: f64,
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub pendulum: PendulumSection,
    #[serde(default)]
    pub architecture: Architecture,
    #[serde(default)]
    pub walk: WalkSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub pushes: Vec<Push>,
    #[serde(default)]
    pub gains: GainsSection,
    #[serde(default)]
    pub plant: PlantSection,
    /// Forward speeds tried by `compare` (m/s).
    #[serde(default = "default_sweep")]
    pub sweep_velocities: Vec<f64>,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_dt() -> f64 {
    0.01
}

fn default_mpc_period() -> f64 {
    0.1
}

fn default_sweep() -> Vec<f64> {
    vec![0.05, 0.1, 0.15, 0.19, 0.22, 0.25, 0.28, 0.31, 0.34, 0.37]
}

impl Scenario {
    /// Defaults with the given duration and forward speed.
    pub fn walking(duration: f64, forward: f64) -> Self {
        Self {
            name: default_name(),
            seed: 0,
            duration,
            control_dt: default_dt(),
            mpc_period: default_mpc_period(),
            model: None,
            pendulum: PendulumSection::default(),
            architecture: Architecture::default(),
            walk: WalkSection {
                command: UnicycleCommand::Velocity { forward, angular: 0.0 },
                ..WalkSection::default()
            },
            noise: NoiseSection::default(),
            pushes: Vec::new(),
            gains: GainsSection::default(),
            plant: PlantSection::default(),
            sweep_velocities: default_sweep(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let s: Scenario = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Load a scenario; a relative `model` path is resolved against the
    /// scenario file's directory.
    pub fn from_file(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        let mut s = Self::from_toml_str(&text)?;
        if let (Some(m), Some(dir)) = (&s.model, path.parent()) {
            if m.is_relative() {
                s.model = Some(dir.join(m));
            }
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        if !(self.control_dt > 0.0) {
            return bad(format!("control_dt must be positive, got {}", self.control_dt));
        }
        if !(self.mpc_period >= self.control_dt) {
            return bad("mpc_period must be at least control_dt".into());
        }
        if !(self.noise.zmp_std >= 0.0) || !(self.noise.encoder_std >= 0.0) {
            return bad("noise standard deviations must be non-negative".into());
        }
        let min_steps = self.walk.first_step + 4.0 * self.walk.bounds.min_duration + self.walk.stop_margin;
        if !(self.duration >= min_steps) {
            return bad(format!(
                "duration {} s cannot cover four steps (needs at least {min_steps} s)",
                self.duration
            ));
        }
        if !(self.walk.first_step > 0.0) || !(self.walk.swing_apex > 0.0) {
            return bad("first_step and swing_apex must be positive".into());
        }
        if !(self.plant.tracking_bandwidth > 0.0) || !(self.plant.tracking_damping > 0.0) || !(self.plant.fall_threshold > 0.0) {
            return bad("plant bandwidth, damping and fall threshold must be positive".into());
        }
        if !(self.gains.zmp_com.blend_time >= 0.0) {
            return bad("blend_time must be non-negative".into());
        }
        if self.sweep_velocities.iter().any(|v| !v.is_finite()) {
            return bad("sweep velocities must be finite".into());
        }
        if self.pushes.iter().any(|p| !p.time.is_finite() || p.impulse.iter().any(|v| !v.is_finite())) {
            return bad("push times and impulses must be finite".into());
        }
        Ok(())
    }

    pub fn forward_speed(&self) -> f64 {
        match self.walk.command {
            UnicycleCommand::Velocity { forward, .. } => forward,
            UnicycleCommand::TargetPose { max_forward, .. } => max_forward,
        }
    }

    pub fn set_forward_speed(&mut self, v: f64) {
        self.walk.command = match self.walk.command {
            UnicycleCommand::Velocity { angular, .. } => UnicycleCommand::Velocity { forward: v, angular },
            UnicycleCommand::TargetPose { .. } => UnicycleCommand::Velocity {
                forward: v,
                angular: 0.0,
            },
        };
    }
}
