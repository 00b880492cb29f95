//! Ground-truth simulated world: robot kinematics, pinhole cameras and
//! analytic objects rendered as silhouettes.

mod camera;
pub mod config;
mod kinematics;
mod render;

use thiserror::Error;

pub use camera::{project_point, CameraModel};
pub use config::SceneConfig;
pub use kinematics::{forward_kinematics, Joint, JointKind, JointState, KinematicChain, Pose};
pub use render::{render_silhouette, SceneObject, Shape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("joint state has no value for `{0}`")]
    MissingJoint(String),
    #[error("joint `{joint}` value {value} outside [{min}, {max}]")]
    LimitViolation { joint: String, value: f64, min: f64, max: f64 },
    #[error("point lies behind the camera (depth {depth})")]
    BehindCamera { depth: f64 },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown camera `{0}`")]
    UnknownCamera(String),
    #[error("invalid joint: {0}")]
    InvalidJoint(String),
    #[error("invalid joint state: {0}")]
    InvalidJointState(String),
    #[error("invalid camera model: {0}")]
    InvalidCamera(String),
    #[error("invalid object: {0}")]
    InvalidObject(String),
    #[error("scene config: {0}")]
    Config(String),
}

/// A camera rigidly attached to the end of a kinematic chain.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraMount {
    pub name: String,
    pub chain: KinematicChain,
}

/// All actuated joints plus the camera chains built from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Robot {
    joints: Vec<Joint>,
    cameras: Vec<CameraMount>,
}

/// A joint value that had to be clamped into its limits.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitClamp {
    pub joint: String,
    pub requested: f64,
    pub applied: f64,
}

impl Robot {
    pub fn new(joints: Vec<Joint>, cameras: Vec<CameraMount>) -> Result<Self, SceneError> {
        for (i, j) in joints.iter().enumerate() {
            if joints[..i].iter().any(|o| o.name == j.name) {
                return Err(SceneError::InvalidJoint(format!("duplicate joint `{}`", j.name)));
            }
        }
        Ok(Self { joints, cameras })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn joint(&self, name: &str) -> Option<&Joint> {
        self.joints.iter().find(|j| j.name == name)
    }

    pub fn cameras(&self) -> &[CameraMount] {
        &self.cameras
    }

    pub fn camera(&self, name: &str) -> Result<&KinematicChain, SceneError> {
        self.cameras
            .iter()
            .find(|c| c.name == name)
            .map(|c| &c.chain)
            .ok_or_else(|| SceneError::UnknownCamera(name.to_owned()))
    }

    /// Every declared joint at zero, clamped into its limits.
    pub fn home(&self) -> JointState {
        let mut q = JointState::new();
        for j in &self.joints {
            q.set(&j.name, j.clamp(0.0)).expect("finite");
        }
        q
    }

    /// Clamp every known joint of `q` into its limits, reporting each change.
    pub fn clamp(&self, q: &JointState) -> (JointState, Vec<LimitClamp>) {
        let mut out = q.clone();
        let mut clamps = Vec::new();
        for (name, value) in q.iter() {
            if let Some(j) = self.joint(name) {
                let applied = j.clamp(value);
                if applied != value {
                    out.set(name, applied).expect("finite");
                    clamps.push(LimitClamp { joint: name.to_owned(), requested: value, applied });
                }
            }
        }
        (out, clamps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub robot: Robot,
    pub camera_model: CameraModel,
    objects: Vec<SceneObject>,
}

impl Scene {
    pub fn new(robot: Robot, camera_model: CameraModel, objects: Vec<SceneObject>) -> Result<Self, SceneError> {
        let mut scene = Self { robot, camera_model, objects: Vec::new() };
        for o in objects {
            scene.insert_object(o)?;
        }
        Ok(scene)
    }

    /// The bundled mobile-manipulator fixture with its default objects.
    pub fn hsr_like() -> Self {
        SceneConfig::hsr_like().build().expect("bundled scene fixture is valid")
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn object(&self, id: &str) -> Result<&SceneObject, SceneError> {
        self.objects.iter().find(|o| o.id == id).ok_or_else(|| SceneError::UnknownObject(id.to_owned()))
    }

    /// Add an object, replacing any existing object with the same id.
    pub fn insert_object(&mut self, object: SceneObject) -> Result<(), SceneError> {
        object.shape.validate()?;
        match self.objects.iter_mut().find(|o| o.id == object.id) {
            Some(slot) => *slot = object,
            None => self.objects.push(object),
        }
        Ok(())
    }

    pub fn with_object_pose(&self, id: &str, pose: Pose) -> Result<Scene, SceneError> {
        let mut scene = self.clone();
        let obj = scene.objects.iter_mut().find(|o| o.id == id).ok_or_else(|| SceneError::UnknownObject(id.to_owned()))?;
        obj.pose = pose;
        Ok(scene)
    }

    /// World pose of the named camera at joint state `q`.
    pub fn camera_pose(&self, camera: &str, q: &JointState) -> Result<Pose, SceneError> {
        self.robot.camera(camera)?.forward_kinematics(q)
    }
}
