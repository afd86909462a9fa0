//! Kinematic tree description.
//!
//! Models are read from TOML with the following tables:
//!
//! * `base`: name of the floating base link.
//! * `[[links]]`: `name`, `mass` (kg, non-negative) and optional `com`
//!   offset in the link frame.
//! * `[[joints]]`: `name`, optional `type` (`revolute` or `prismatic`,
//!   default revolute), `parent` and `child` link names, optional `xyz` and
//!   `rpy` placing the joint frame in the parent frame, a unit `axis` in the
//!   joint frame and position `limits = [lower, upper]`.
//! * `[frames.torso]`, `[frames.left_foot]`, `[frames.right_foot]` and any
//!   number of extra `[frames.<name>]`: a `link` plus an optional `xyz`/`rpy`
//!   offset.
//! * optional `[nominal]`: joint name to position for the reference posture;
//!   unlisted joints are zero.
//!
//! The joint order in the file is the order of the joint coordinates.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use dcm_core::rotation::Rotation3;
use nalgebra::{DVector, Vector3};
use serde::Deserialize;
use thiserror::Error;

use crate::kinematics::Pose;

const AXIS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("cannot read model: {0}")]
    Io(String),
    #[error("cannot parse model: {0}")]
    Parse(String),
    #[error("duplicate name {0:?}")]
    Duplicate(String),
    #[error("joint {joint:?} refers to unknown link {link:?}")]
    UnknownLink { joint: String, link: String },
    #[error("unknown frame {0:?}")]
    UnknownFrame(String),
    #[error("unknown joint {0:?}")]
    UnknownJoint(String),
    #[error("link {0:?} has more than one parent joint")]
    MultipleParents(String),
    #[error("link {0:?} is not connected to the base")]
    Disconnected(String),
    #[error("joint {0:?} axis is not a unit vector")]
    AxisNotUnit(String),
    #[error("joint {0:?} has an empty position range")]
    Limits(String),
    #[error("link {0:?} has a negative or non-finite mass")]
    Mass(String),
    #[error("total mass must be positive")]
    ZeroMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub name: String,
    pub mass: f64,
    pub com: Vector3<f64>,
    /// Joint whose child is this link; `None` for the base.
    pub parent_joint: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    pub parent_link: usize,
    pub child_link: usize,
    pub origin: Pose,
    pub axis: Vector3<f64>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrameId(pub(crate) usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub name: String,
    pub link: usize,
    pub offset: Pose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicModel {
    links: Vec<Link>,
    joints: Vec<Joint>,
    base: usize,
    /// Joints sorted so that every parent link is placed before its children.
    order: Vec<usize>,
    /// Joints on the path from the base to each link.
    chains: Vec<Vec<usize>>,
    frames: Vec<Frame>,
    frame_names: HashMap<String, FrameId>,
    torso: FrameId,
    left_foot: FrameId,
    right_foot: FrameId,
    nominal: DVector<f64>,
    total_mass: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    base: String,
    links: Vec<LinkSpec>,
    joints: Vec<JointSpec>,
    frames: FramesSpec,
    #[serde(default)]
    nominal: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkSpec {
    name: String,
    mass: f64,
    #[serde(default)]
    com: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointSpec {
    name: String,
    #[serde(rename = "type", default = "revolute")]
    kind: JointKind,
    parent: String,
    child: String,
    #[serde(default)]
    xyz: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
    axis: [f64; 3],
    limits: [f64; 2],
}

fn revolute() -> JointKind {
    JointKind::Revolute
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameSpec {
    link: String,
    #[serde(default)]
    xyz: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
}

#[derive(Deserialize)]
struct FramesSpec {
    torso: FrameSpec,
    left_foot: FrameSpec,
    right_foot: FrameSpec,
    #[serde(flatten)]
    extra: BTreeMap<String, FrameSpec>,
}

fn offset(xyz: [f64; 3], rpy: [f64; 3]) -> Pose {
    Pose::new(Vector3::from(xyz), Rotation3::from_rpy(rpy[0], rpy[1], rpy[2]))
}

impl KinematicModel {
    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        Self::build(file)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    /// The bundled biped: two 6-joint legs and a 2-joint torso.
    pub fn sample() -> Self {
        Self::from_toml_str(include_str!("../models/biped.toml")).expect("bundled model is valid")
    }

    fn build(file: ModelFile) -> Result<Self, ModelError> {
        let mut link_index = HashMap::new();
        let mut links = Vec::with_capacity(file.links.len());
        for (i, l) in file.links.into_iter().enumerate() {
            if !(l.mass >= 0.0) || !l.mass.is_finite() {
                return Err(ModelError::Mass(l.name));
            }
            if link_index.insert(l.name.clone(), i).is_some() {
                return Err(ModelError::Duplicate(l.name));
            }
            links.push(Link {
                name: l.name,
                mass: l.mass,
                com: Vector3::from(l.com),
                parent_joint: None,
            });
        }
        let base = *link_index
            .get(&file.base)
            .ok_or_else(|| ModelError::UnknownLink {
                joint: "<base>".into(),
                link: file.base.clone(),
            })?;

        let mut joints = Vec::with_capacity(file.joints.len());
        let mut joint_index = HashMap::new();
        for (j, decl) in file.joints.into_iter().enumerate() {
            let find = |name: &str| {
                link_index.get(name).copied().ok_or_else(|| ModelError::UnknownLink {
                    joint: decl.name.clone(),
                    link: name.to_string(),
                })
            };
            let (parent_link, child_link) = (find(&decl.parent)?, find(&decl.child)?);
            let axis = Vector3::from(decl.axis);
            if (axis.norm() - 1.0).abs() > AXIS_TOL {
                return Err(ModelError::AxisNotUnit(decl.name));
            }
            if !(decl.limits[0] <= decl.limits[1]) {
                return Err(ModelError::Limits(decl.name));
            }
            if child_link == base || links[child_link].parent_joint.is_some() {
                return Err(ModelError::MultipleParents(links[child_link].name.clone()));
            }
            links[child_link].parent_joint = Some(j);
            if joint_index.insert(decl.name.clone(), j).is_some() {
                return Err(ModelError::Duplicate(decl.name));
            }
            joints.push(Joint {
                name: decl.name,
                kind: decl.kind,
                parent_link,
                child_link,
                origin: offset(decl.xyz, decl.rpy),
                axis,
                lower: decl.limits[0],
                upper: decl.limits[1],
            });
        }

        // breadth-first from the base; anything left over is disconnected or
        // part of a cycle
        let mut order = Vec::with_capacity(joints.len());
        let mut chains = vec![Vec::new(); links.len()];
        let mut reached = vec![false; links.len()];
        reached[base] = true;
        let mut queue = std::collections::VecDeque::from([base]);
        while let Some(link) = queue.pop_front() {
            for (j, joint) in joints.iter().enumerate() {
                if joint.parent_link == link {
                    let mut chain = chains[link].clone();
                    chain.push(j);
                    chains[joint.child_link] = chain;
                    reached[joint.child_link] = true;
                    order.push(j);
                    queue.push_back(joint.child_link);
                }
            }
        }
        if let Some(i) = reached.iter().position(|r| !r) {
            return Err(ModelError::Disconnected(links[i].name.clone()));
        }

        let total_mass: f64 = links.iter().map(|l| l.mass).sum();
        if !(total_mass > 0.0) {
            return Err(ModelError::ZeroMass);
        }

        let mut frames = Vec::new();
        let mut frame_names = HashMap::new();
        for (i, l) in links.iter().enumerate() {
            frame_names.insert(l.name.clone(), FrameId(frames.len()));
            frames.push(Frame {
                name: l.name.clone(),
                link: i,
                offset: Pose::identity(),
            });
        }
        let mut add_frame = |name: String, decl: FrameSpec| -> Result<FrameId, ModelError> {
            let link = *link_index.get(&decl.link).ok_or_else(|| ModelError::UnknownLink {
                joint: format!("<frame {name}>"),
                link: decl.link.clone(),
            })?;
            let id = FrameId(frames.len());
            if frame_names.insert(name.clone(), id).is_some() {
                return Err(ModelError::Duplicate(name));
            }
            frames.push(Frame {
                name,
                link,
                offset: offset(decl.xyz, decl.rpy),
            });
            Ok(id)
        };
        let torso = add_frame("torso".into(), file.frames.torso)?;
        let left_foot = add_frame("left_foot".into(), file.frames.left_foot)?;
        let right_foot = add_frame("right_foot".into(), file.frames.right_foot)?;
        for (name, decl) in file.frames.extra {
            add_frame(name, decl)?;
        }

        let mut nominal = DVector::zeros(joints.len());
        for (name, value) in file.nominal {
            let j = *joint_index.get(&name).ok_or(ModelError::UnknownJoint(name))?;
            nominal[j] = value;
        }

        Ok(Self {
            links,
            joints,
            base,
            order,
            chains,
            frames,
            frame_names,
            torso,
            left_foot,
            right_foot,
            nominal,
            total_mass,
        })
    }

    pub fn num_joints(&self) -> usize {
        self.joints.len()
    }

    /// Size of the generalized velocity, `6 + n`.
    pub fn num_velocities(&self) -> usize {
        6 + self.joints.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn base_link(&self) -> usize {
        self.base
    }

    pub(crate) fn joint_order(&self) -> &[usize] {
        &self.order
    }

    pub(crate) fn chain(&self, link: usize) -> &[usize] {
        &self.chains[link]
    }

    pub fn frame(&self, name: &str) -> Result<FrameId, ModelError> {
        self.frame_names
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownFrame(name.to_string()))
    }

    pub fn frame_info(&self, id: FrameId) -> &Frame {
        &self.frames[id.0]
    }

    pub fn frames(&self) -> impl Iterator<Item = FrameId> + '_ {
        (0..self.frames.len()).map(FrameId)
    }

    pub fn torso(&self) -> FrameId {
        self.torso
    }

    pub fn left_foot(&self) -> FrameId {
        self.left_foot
    }

    pub fn right_foot(&self) -> FrameId {
        self.right_foot
    }

    pub fn joint_index(&self, name: &str) -> Result<usize, ModelError> {
        self.joints
            .iter()
            .position(|j| j.name == name)
            .ok_or_else(|| ModelError::UnknownJoint(name.to_string()))
    }

    /// Reference posture from the model file.
    pub fn nominal_posture(&self) -> &DVector<f64> {
        &self.nominal
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn within_limits(&self, s: &DVector<f64>) -> bool {
        s.len() == self.joints.len()
            && self.joints.iter().zip(s.iter()).all(|(j, &q)| q >= j.lower && q <= j.upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_LINK: &str = r#"
        base = "a"
        [[links]]
        name = "a"
        mass = 1.0
        [[links]]
        name = "b"
        mass = 1.0
        [[joints]]
        name = "j"
        parent = "a"
        child = "b"
        axis = [0.0, 0.0, 1.0]
        limits = [-1.0, 1.0]
        [frames.torso]
        link = "a"
        [frames.left_foot]
        link = "b"
        [frames.right_foot]
        link = "b"
    "#;

    #[test]
    fn sample_model_shape() {
        let m = KinematicModel::sample();
        assert_eq!(m.num_joints(), 14);
        assert_eq!(m.num_velocities(), 20);
        assert!((m.total_mass() - 27.4).abs() < 1e-12);
        assert!(m.within_limits(m.nominal_posture()));
        assert_eq!(m.frame("left_foot").unwrap(), m.left_foot());
        assert!(matches!(m.frame("head"), Err(ModelError::UnknownFrame(_))));
    }

    #[test]
    fn minimal_model_parses() {
        let m = KinematicModel::from_toml_str(TWO_LINK).unwrap();
        assert_eq!(m.num_joints(), 1);
        assert_eq!(m.chain(1), &[0]);
    }

    #[test]
    fn bad_models_are_rejected() {
        let axis = TWO_LINK.replace("[0.0, 0.0, 1.0]", "[0.0, 0.0, 2.0]");
        assert_eq!(KinematicModel::from_toml_str(&axis), Err(ModelError::AxisNotUnit("j".into())));
        let mass = TWO_LINK.replace("mass = 1.0", "mass = 0.0");
        assert_eq!(KinematicModel::from_toml_str(&mass), Err(ModelError::ZeroMass));
        let link = TWO_LINK.replace("child = \"b\"", "child = \"c\"");
        assert!(matches!(
            KinematicModel::from_toml_str(&link),
            Err(ModelError::UnknownLink { .. })
        ));
        let cycle = TWO_LINK.replace("parent = \"a\"", "parent = \"b\"");
        assert_eq!(KinematicModel::from_toml_str(&cycle), Err(ModelError::Disconnected("b".into())));
        let base_child = TWO_LINK.replace("child = \"b\"", "child = \"a\"");
        assert!(matches!(
            KinematicModel::from_toml_str(&base_child),
            Err(ModelError::MultipleParents(_))
        ));
    }
}
