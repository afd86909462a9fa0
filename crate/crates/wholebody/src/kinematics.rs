use dcm_core::rotation::{skew, Rotation3};
use nalgebra::{DMatrix, DVector, Vector3};

use crate::model::{FrameId, JointKind, KinematicModel};
use crate::WholeBodyError;

/// Rigid transform: position plus rotation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub rotation: Rotation3,
}

impl Pose {
    pub fn new(position: Vector3<f64>, rotation: Rotation3) -> Self {
        Self { position, rotation }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_translation(position: Vector3<f64>) -> Self {
        Self::new(position, Rotation3::identity())
    }

    /// `self * other`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.position + self.rotation.apply(&other.position),
            self.rotation.compose(&other.rotation),
        )
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose::new(-rt.apply(&self.position), rt)
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.rotation.apply(p)
    }
}

/// Floating-base configuration with joint positions and velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub base: Pose,
    pub joints: DVector<f64>,
    pub joint_velocities: DVector<f64>,
}

impl RobotState {
    pub fn new(base: Pose, joints: DVector<f64>) -> Self {
        let n = joints.len();
        Self {
            base,
            joints,
            joint_velocities: DVector::zeros(n),
        }
    }

    /// Explicit Euler step of `nu` over `dt`; the base rotation is advanced
    /// with the exponential map of the inertial angular velocity.
    pub fn integrate(&self, nu: &DVector<f64>, dt: f64) -> RobotState {
        let v = Vector3::new(nu[0], nu[1], nu[2]);
        let w = Vector3::new(nu[3], nu[4], nu[5]);
        let sdot = nu.rows(6, nu.len() - 6).into_owned();
        RobotState {
            base: Pose::new(
                self.base.position + dt * v,
                Rotation3::from_scaled_axis(dt * w).compose(&self.base.rotation),
            ),
            joints: &self.joints + dt * &sdot,
            joint_velocities: sdot,
        }
    }

    /// Place the base so that `frame` sits at `target`, keeping the joints.
    pub fn anchored(&self, model: &KinematicModel, frame: FrameId, target: &Pose) -> Result<RobotState, WholeBodyError> {
        let local = RobotState {
            base: Pose::identity(),
            ..self.clone()
        };
        let rel = Kinematics::new(model, &local)?.frame_pose(frame);
        Ok(RobotState {
            base: target.compose(&rel.inverse()),
            ..self.clone()
        })
    }
}

/// Link poses and joint axes of one configuration.
#[derive(Debug, Clone)]
pub struct Kinematics<'m> {
    model: &'m KinematicModel,
    base: Pose,
    links: Vec<Pose>,
    /// World-frame joint axis and origin.
    axes: Vec<(Vector3<f64>, Vector3<f64>)>,
}

impl<'m> Kinematics<'m> {
    pub fn new(model: &'m KinematicModel, state: &RobotState) -> Result<Self, WholeBodyError> {
        let n = model.num_joints();
        if state.joints.len() != n {
            return Err(WholeBodyError::Dimension {
                what: "joint positions",
                expected: n,
                found: state.joints.len(),
            });
        }
        let mut links = vec![Pose::identity(); model.links().len()];
        links[model.base_link()] = state.base;
        let mut axes = vec![(Vector3::zeros(), Vector3::zeros()); n];
        for &j in model.joint_order() {
            let joint = &model.joints()[j];
            let frame = links[joint.parent_link].compose(&joint.origin);
            let q = state.joints[j];
            let motion = match joint.kind {
                JointKind::Revolute => Pose::new(Vector3::zeros(), Rotation3::from_axis_angle(&joint.axis, q)),
                JointKind::Prismatic => Pose::from_translation(joint.axis * q),
            };
            axes[j] = (frame.rotation.apply(&joint.axis), frame.position);
            links[joint.child_link] = frame.compose(&motion);
        }
        Ok(Self {
            model,
            base: state.base,
            links,
            axes,
        })
    }

    pub fn model(&self) -> &KinematicModel {
        self.model
    }

    pub fn link_pose(&self, link: usize) -> &Pose {
        &self.links[link]
    }

    pub fn frame_pose(&self, frame: FrameId) -> Pose {
        let f = self.model.frame_info(frame);
        self.links[f.link].compose(&f.offset)
    }

    /// Linear rows of the Jacobian of a point rigidly attached to `link`,
    /// accumulated into `out` with weight `scale`.
    fn add_point_jacobian(&self, link: usize, p: &Vector3<f64>, scale: f64, out: &mut DMatrix<f64>, row: usize) {
        for a in 0..3 {
            out[(row + a, a)] += scale;
        }
        let arm = -skew(&(p - self.base.position)) * scale;
        let mut block = out.view_mut((row, 3), (3, 3));
        block += &arm;
        for &j in self.model.chain(link) {
            let (axis, origin) = &self.axes[j];
            let col = match self.model.joints()[j].kind {
                JointKind::Revolute => axis.cross(&(p - origin)),
                JointKind::Prismatic => *axis,
            };
            for a in 0..3 {
                out[(row + a, 6 + j)] += scale * col[a];
            }
        }
    }

    /// `6 x (6 + n)` Jacobian mapping `nu` to the frame's linear and angular
    /// velocity in the inertial frame.
    pub fn jacobian(&self, frame: FrameId) -> DMatrix<f64> {
        let f = self.model.frame_info(frame);
        let p = self.frame_pose(frame).position;
        let mut jac = DMatrix::zeros(6, self.model.num_velocities());
        self.add_point_jacobian(f.link, &p, 1.0, &mut jac, 0);
        for a in 0..3 {
            jac[(3 + a, 3 + a)] = 1.0;
        }
        for &j in self.model.chain(f.link) {
            if self.model.joints()[j].kind == JointKind::Revolute {
                let axis = self.axes[j].0;
                for a in 0..3 {
                    jac[(3 + a, 6 + j)] = axis[a];
                }
            }
        }
        jac
    }

    /// Angular rows of [`Self::jacobian`].
    pub fn angular_jacobian(&self, frame: FrameId) -> DMatrix<f64> {
        self.jacobian(frame).rows(3, 3).into_owned()
    }

    pub fn com(&self) -> Vector3<f64> {
        let total = self.model.total_mass();
        self.model
            .links()
            .iter()
            .zip(&self.links)
            .map(|(l, pose)| pose.transform_point(&l.com) * (l.mass / total))
            .sum()
    }

    /// `3 x (6 + n)` Jacobian of the whole-body centre of mass.
    pub fn com_jacobian(&self) -> DMatrix<f64> {
        let total = self.model.total_mass();
        let mut jac = DMatrix::zeros(3, self.model.num_velocities());
        for (i, (l, pose)) in self.model.links().iter().zip(&self.links).enumerate() {
            if l.mass > 0.0 {
                let p = pose.transform_point(&l.com);
                self.add_point_jacobian(i, &p, l.mass / total, &mut jac, 0);
            }
        }
        jac
    }
}

pub fn forward_kinematics(model: &KinematicModel, state: &RobotState, frame: &str) -> Result<Pose, WholeBodyError> {
    let id = model.frame(frame)?;
    Ok(Kinematics::new(model, state)?.frame_pose(id))
}

pub fn jacobian(model: &KinematicModel, state: &RobotState, frame: &str) -> Result<DMatrix<f64>, WholeBodyError> {
    let id = model.frame(frame)?;
    Ok(Kinematics::new(model, state)?.jacobian(id))
}
