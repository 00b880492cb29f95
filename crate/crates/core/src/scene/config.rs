//! TOML scene description: camera intrinsics, joints, camera mounts and objects.
//!
//! ```toml
//! [camera]
//! focal = 500.0            # pixels
//! width = 640
//! height = 480
//! # principal = [320.0, 240.0]   # defaults to the image centre
//!
//! [[joints]]
//! name = "arm_lift"
//! kind = "prismatic"       # or "revolute"
//! axis = [0.0, 0.0, 1.0]   # unit vector in the joint frame
//! translation = [0.14, 0.0, 0.55]   # fixed offset from the parent link (m)
//! rpy_deg = [0.0, 0.0, 0.0]         # fixed rotation, Rz(yaw) Ry(pitch) Rx(roll)
//! limits = [0.0, 0.69]     # radians or meters
//!
//! [[cameras]]
//! name = "hand"
//! joints = ["base_forward", "base_lateral", "arm_lift"]   # root-to-tip order
//! translation = [0.05, 0.0, -0.08]  # last joint frame -> optical frame
//! rpy_deg = [180.0, 0.0, 0.0]
//!
//! [[objects]]
//! id = "ball"
//! shape = "sphere"         # sphere {radius} | box {half_extents} | disk {radius, normal}
//! radius = 0.035
//! translation = [0.6, 0.0, 0.285]
//! ```
//!
//! Joints listed by several cameras share their value; each joint's fixed
//! offset is relative to the previous joint on every camera path through it.

use std::path::Path;

use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::{CameraModel, CameraMount, Joint, JointKind, KinematicChain, Pose, Robot, Scene, SceneError, SceneObject, Shape};

const HSR_LIKE: &str = include_str!("../../fixtures/hsr_like_scene.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub focal: f64,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub principal: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    pub axis: [f64; 3],
    #[serde(default)]
    pub translation: [f64; 3],
    #[serde(default)]
    pub rpy_deg: [f64; 3],
    pub limits: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MountSpec {
    pub name: String,
    pub joints: Vec<String>,
    #[serde(default)]
    pub translation: [f64; 3],
    #[serde(default)]
    pub rpy_deg: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ShapeSpec {
    Sphere { radius: f64 },
    Box { half_extents: [f64; 3] },
    Disk {
        radius: f64,
        #[serde(default = "up")]
        normal: [f64; 3],
    },
}

fn up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: String,
    #[serde(flatten)]
    pub shape: ShapeSpec,
    #[serde(default)]
    pub translation: [f64; 3],
    #[serde(default)]
    pub rpy_deg: [f64; 3],
}

impl ObjectSpec {
    pub fn build(&self) -> Result<SceneObject, SceneError> {
        let shape = match &self.shape {
            ShapeSpec::Sphere { radius } => Shape::Sphere { radius: *radius },
            ShapeSpec::Box { half_extents } => Shape::Box { half_extents: Vector3::from(*half_extents) },
            ShapeSpec::Disk { radius, normal } => {
                let n = Vector3::from(*normal);
                if !(n.norm() > 0.0) {
                    return Err(SceneError::InvalidObject(format!("disk `{}` has a zero normal", self.id)));
                }
                Shape::Disk { radius: *radius, normal: Unit::new_normalize(n) }
            }
        };
        SceneObject::new(self.id.clone(), shape, Pose::from_rpy_deg(self.translation, self.rpy_deg))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub camera: CameraSpec,
    pub joints: Vec<JointSpec>,
    pub cameras: Vec<MountSpec>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
}

impl SceneConfig {
    pub fn hsr_like() -> Self {
        Self::parse(HSR_LIKE).expect("bundled scene fixture parses")
    }

    pub fn parse(text: &str) -> Result<Self, SceneError> {
        toml::from_str(text).map_err(|e| SceneError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SceneError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn build(&self) -> Result<Scene, SceneError> {
        let model = match self.camera.principal {
            Some([cx, cy]) => CameraModel::with_principal(self.camera.focal, self.camera.width, self.camera.height, cx, cy)?,
            None => CameraModel::new(self.camera.focal, self.camera.width, self.camera.height)?,
        };
        let joints = self
            .joints
            .iter()
            .map(|j| {
                Joint::new(
                    j.name.clone(),
                    j.kind,
                    j.axis,
                    Pose::from_rpy_deg(j.translation, j.rpy_deg),
                    (j.limits[0], j.limits[1]),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut mounts = Vec::new();
        for m in &self.cameras {
            let chain_joints = m
                .joints
                .iter()
                .map(|name| {
                    joints
                        .iter()
                        .find(|j| &j.name == name)
                        .cloned()
                        .ok_or_else(|| SceneError::Config(format!("camera `{}` uses undeclared joint `{name}`", m.name)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let chain = KinematicChain::new(chain_joints, Pose::from_rpy_deg(m.translation, m.rpy_deg))?;
            mounts.push(CameraMount { name: m.name.clone(), chain });
        }
        let robot = Robot::new(joints, mounts)?;
        let objects = self.objects.iter().map(ObjectSpec::build).collect::<Result<Vec<_>, _>>()?;
        Scene::new(robot, model, objects)
    }
}
