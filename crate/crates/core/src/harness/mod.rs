//! Scenario files, experiment runners and their CSV and text outputs.
//!
//! A scenario is a TOML file naming the experiment kind, the seed and the
//! pieces each runner needs:
//!
//! ```toml
//! kind = "learn"          # learn | servo_step | approach_depth | grasp | trial_suite
//! seed = 7
//! object = "sugar_box"
//! # scene = "my_scene.toml"   # relative to this file; the bundled scene otherwise
//! max_steps = 60
//!
//! [start]                 # joint overrides on top of the robot's home pose
//! arm_lift = 0.5
//!
//! [servo]
//! preset = "base"
//! alpha = 0.1
//! # init = [[0.001, 0.0], [0.0, 0.001]]   # explicit starting J⁺
//!
//! [noise]
//! dropout_prob = 0.05
//!
//! [[placements]]          # where the object appears from the start pose
//! pixel = [470.0, 300.0]
//! height = 0.2695         # world z of the object frame; or `depth` along the optical axis
//! ```
//!
//! Every output is a pure function of the scenario and its seed.

mod output;
mod runners;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use output::{read_trajectory_csv, trajectory_csv, ReplayRow};
pub use runners::{
    approach_depth, grasp, learn, replay, replay_fixture, run, servo_step, trial_suite, ApproachResult, GraspResult,
    LearnResult, PlacementStatus, ReplayReport, RunReport, ServoStepResult, TrialRow, TrialSuiteResult,
};

use crate::depth::{ApproachConfig, DepthError};
use crate::grasp::{GraspConfig, GraspError};
use crate::mask::FeatureVector;
use crate::perception::{NoiseModel, PerceptionError};
use crate::scene::config::SceneConfig;
use crate::scene::{JointState, Pose, Scene, SceneError, SceneObject, Shape};
use crate::servo::{
    init_pseudojacobian, JacobianFile, Preset, PseudoJacobian, ServoConfig, ServoError, DEFAULT_SEED_VALUE,
};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "SEGSERVO_OUT";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Servo(#[from] ServoError),
    #[error(transparent)]
    Depth(#[from] DepthError),
    #[error(transparent)]
    Grasp(#[from] GraspError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
}

impl HarnessError {
    /// 2 for bad configuration, 3 for a failed experiment, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_)
            | HarnessError::Servo(ServoError::InvalidConfig(_) | ServoError::InvalidCoupling(_) | ServoError::Parse(_))
            | HarnessError::Depth(DepthError::InvalidParameter(_) | DepthError::Csv(_))
            | HarnessError::Grasp(GraspError::InvalidConfig(_) | GraspError::InvalidTemplate(_) | GraspError::InvalidGrid(_))
            | HarnessError::Perception(PerceptionError::InvalidNoise(_))
            | HarnessError::Scene(SceneError::Config(_)) => 2,
            HarnessError::Servo(ServoError::ObjectLost)
            | HarnessError::Depth(DepthError::ObjectLost | DepthError::DegenerateSystem | DepthError::InsufficientData { .. })
            | HarnessError::Grasp(GraspError::GraspFailed { .. } | GraspError::ObjectLost) => 3,
            _ => 1,
        }
    }
}

pub(crate) fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Learn,
    ServoStep,
    ApproachDepth,
    Grasp,
    TrialSuite,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Learn => "learn",
            ExperimentKind::ServoStep => "servo_step",
            ExperimentKind::ApproachDepth => "approach_depth",
            ExperimentKind::Grasp => "grasp",
            ExperimentKind::TrialSuite => "trial_suite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServoSpec {
    pub preset: Preset,
    pub gain: f64,
    pub alpha: f64,
    pub tolerance: f64,
    pub epsilon: f64,
    pub target: Option<[f64; 2]>,
    /// Coupled entries of the starting J⁺ when no `init` or jacobian file is given.
    pub seed_value: f64,
    /// Full starting J⁺, one row per preset joint.
    pub init: Option<Vec<Vec<f64>>>,
}

impl Default for ServoSpec {
    fn default() -> Self {
        Self {
            preset: Preset::Base,
            gain: 1.0,
            alpha: 0.0,
            tolerance: 5.0,
            epsilon: 1e-9,
            target: None,
            seed_value: DEFAULT_SEED_VALUE,
            init: None,
        }
    }
}

impl ServoSpec {
    pub fn for_preset(preset: Preset) -> Self {
        Self { preset, ..Self::default() }
    }

    pub fn config(&self) -> ServoConfig {
        let target = self.target.map_or_else(|| self.preset.default_target(), FeatureVector::from);
        ServoConfig {
            gain: self.gain,
            alpha: self.alpha,
            target,
            tolerance: self.tolerance,
            epsilon: self.epsilon,
            coupling: self.preset.coupling(),
        }
    }

    /// Explicit `init` rows if present, otherwise `seed_value · H`.
    pub fn initial_jacobian(&self) -> Result<PseudoJacobian, HarnessError> {
        let h = self.preset.coupling();
        let Some(rows) = &self.init else {
            return Ok(init_pseudojacobian(&h, self.seed_value));
        };
        let (n, k) = (h.joints().len(), h.features());
        if rows.len() != n || rows.iter().any(|r| r.len() != k) {
            return Err(HarnessError::Config(format!("servo.init must be {n} rows of {k} values")));
        }
        let values = nalgebra::DMatrix::from_fn(n, k, |i, j| rows[i][j]);
        let j = PseudoJacobian::new(h.joints().to_vec(), values)?;
        if !j.satisfies_gating(&h) {
            return Err(HarnessError::Config("servo.init has entries where the coupling matrix is zero".into()));
        }
        Ok(j)
    }
}

/// Where to put an object relative to the start view.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Placement {
    /// Object to move; the scenario's `object` when absent.
    pub object: Option<String>,
    /// Pixel the object frame origin should project to.
    pub pixel: Option<[f64; 2]>,
    /// Camera-frame depth of the object origin.
    pub depth: Option<f64>,
    /// World z of the object origin; the object's current z when neither this nor `depth` is given.
    pub height: Option<f64>,
    /// Absolute world position; excludes `pixel`.
    pub translation: Option<[f64; 3]>,
}

/// One row of a trial suite: an object resting on a support at some height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialSpec {
    pub object: String,
    /// Height of the surface the object rests on, meters.
    pub support: f64,
    /// Where the object appears from the start pose.
    #[serde(default = "default_trial_pixel")]
    pub pixel: [f64; 2],
    /// Replaces the scenario noise for this trial.
    #[serde(default)]
    pub noise: Option<NoiseModel>,
}

fn default_trial_pixel() -> [f64; 2] {
    [400.0, 300.0]
}

fn default_max_steps() -> usize {
    60
}

fn default_max_resets() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    #[serde(default)]
    pub scene: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub object: Option<String>,
    #[serde(default)]
    pub jacobian: Option<PathBuf>,
    /// Step budget for one servo run (`learn`: for the whole run).
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Pose resets allowed while learning.
    #[serde(default = "default_max_resets")]
    pub max_resets: usize,
    #[serde(default)]
    pub start: BTreeMap<String, f64>,
    #[serde(default)]
    pub servo: ServoSpec,
    /// Servo used under the gripper at grasp height.
    #[serde(default = "fine_servo")]
    pub fine_servo: ServoSpec,
    /// The seed field is ignored; the scenario seed is used.
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub placements: Vec<Placement>,
    #[serde(default)]
    pub approach: ApproachConfig,
    #[serde(default)]
    pub grasp: GraspConfig,
    /// Grasp after the depth estimate in trial suites.
    #[serde(default)]
    pub with_grasp: bool,
    #[serde(default)]
    pub trials: Vec<TrialSpec>,
    /// Observation log to replay instead of simulating an approach.
    #[serde(default)]
    pub replay: Option<PathBuf>,
}

fn fine_servo() -> ServoSpec {
    ServoSpec::for_preset(Preset::BaseGrasp)
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

/// A parsed scenario with its scene built and relative paths resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub scene: Scene,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
    /// Jacobian loaded from `config.jacobian` or the command line.
    pub jacobian: Option<JacobianFile>,
}

impl Scenario {
    pub fn from_config(config: ScenarioConfig, base_dir: impl Into<PathBuf>) -> Result<Self, HarnessError> {
        let base_dir = base_dir.into();
        let scene_cfg = match &config.scene {
            Some(p) => SceneConfig::load(&base_dir.join(p)).map_err(|e| HarnessError::Config(e.to_string()))?,
            None => SceneConfig::hsr_like(),
        };
        let scene = scene_cfg.build().map_err(|e| HarnessError::Config(e.to_string()))?;
        let mut scenario = Self { config, scene, base_dir, jacobian: None };
        if let Some(p) = scenario.config.jacobian.clone() {
            scenario.load_jacobian(&scenario.base_dir.join(p))?;
        }
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let config = ScenarioConfig::parse(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_config(config, base)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.config.seed = seed;
        self
    }

    pub fn load_jacobian(&mut self, path: &Path) -> Result<(), HarnessError> {
        let file = JacobianFile::load(path).map_err(|e| HarnessError::Config(e.to_string()))?;
        if file.jacobian.joints() != self.config.servo.preset.coupling().joints() {
            return Err(HarnessError::Config(format!(
                "{} holds joints {:?}, the `{}` preset uses {:?}",
                path.display(),
                file.jacobian.joints(),
                self.config.servo.preset.name(),
                self.config.servo.preset.coupling().joints()
            )));
        }
        self.jacobian = Some(file);
        Ok(())
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let cfg = &self.config;
        let (w, h) = (self.scene.camera_model.width, self.scene.camera_model.height);
        cfg.servo.config().validate(w, h)?;
        cfg.fine_servo.config().validate(w, h)?;
        cfg.servo.initial_jacobian()?;
        cfg.noise.validate()?;
        for (name, value) in &cfg.start {
            let joint = self.scene.robot.joint(name).ok_or_else(|| HarnessError::Config(format!("start joint `{name}` is not declared")))?;
            if !joint.within_limits(*value) {
                return Err(HarnessError::Config(format!("start {name} = {value} is outside [{}, {}]", joint.min, joint.max)));
            }
        }
        for p in &cfg.placements {
            if p.pixel.is_some() == p.translation.is_some() {
                return Err(HarnessError::Config("each placement needs exactly one of `pixel` or `translation`".into()));
            }
            if p.depth.is_some() && p.height.is_some() {
                return Err(HarnessError::Config("a placement takes `depth` or `height`, not both".into()));
            }
            let id = p.object.as_ref().or(cfg.object.as_ref()).ok_or_else(|| HarnessError::Config("placement without an object".into()))?;
            self.scene.object(id).map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if let Some(id) = &cfg.object {
            self.scene.object(id).map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        for t in &cfg.trials {
            self.scene.object(&t.object).map_err(|e| HarnessError::Config(e.to_string()))?;
            if let Some(n) = &t.noise {
                n.validate()?;
            }
        }
        Ok(())
    }

    pub fn object_id(&self) -> Result<&str, HarnessError> {
        self.config.object.as_deref().ok_or_else(|| HarnessError::Config("scenario needs an `object`".into()))
    }

    /// Home pose with the `[start]` overrides applied.
    pub fn start_state(&self) -> JointState {
        let mut q = self.scene.robot.home();
        for (name, value) in &self.config.start {
            q.set(name, *value).expect("validated");
        }
        q
    }

    /// Scenario noise keyed to the scenario seed.
    pub fn noise(&self) -> NoiseModel {
        NoiseModel { seed: self.config.seed, ..self.config.noise.clone() }
    }

    pub fn camera(&self) -> &'static str {
        self.config.servo.preset.camera()
    }

    /// Scene with placement `index` applied, or the scene as configured when there are none.
    pub fn placed_scene(&self, index: usize) -> Result<Scene, HarnessError> {
        match self.config.placements.get(index) {
            None => Ok(self.scene.clone()),
            Some(p) => place(&self.scene, self.camera(), &self.start_state(), p, self.config.object.as_deref()),
        }
    }

    pub fn placement_count(&self) -> usize {
        self.config.placements.len().max(1)
    }
}

/// Move one object as described by `placement`, seen from `camera` at `q`.
pub fn place(scene: &Scene, camera: &str, q: &JointState, placement: &Placement, default_object: Option<&str>) -> Result<Scene, HarnessError> {
    let id = placement
        .object
        .as_deref()
        .or(default_object)
        .ok_or_else(|| HarnessError::Config("placement without an object".into()))?;
    let current = scene.object(id)?.pose;
    let position = match (placement.translation, placement.pixel) {
        (Some(t), _) => Point3::from(t),
        (None, Some([u, v])) => {
            let cam = scene.camera_pose(camera, q)?;
            let ray = scene.camera_model.ray_direction(u, v);
            let depth = match (placement.depth, placement.height) {
                (Some(d), _) => d,
                (None, h) => {
                    let z = h.unwrap_or(current.translation.z);
                    let dir = cam.rotation * ray;
                    if dir.z.abs() < 1e-12 {
                        return Err(HarnessError::Config(format!("pixel ({u}, {v}) never reaches height {z}; give `depth`")));
                    }
                    (z - cam.translation.z) / dir.z
                }
            };
            if !(depth > 0.0) {
                return Err(HarnessError::Config(format!("object `{id}` would be behind the camera")));
            }
            cam.transform_point(&Point3::from(ray * depth))
        }
        (None, None) => return Err(HarnessError::Config("placement needs `pixel` or `translation`".into())),
    };
    Ok(scene.with_object_pose(id, Pose::new(current.rotation, position.coords))?)
}

/// Distance from an object's origin down to its lowest point.
pub fn rest_offset(object: &SceneObject) -> f64 {
    match &object.shape {
        Shape::Box { .. } => object.reference_height() - object.pose.translation.z,
        Shape::Sphere { radius } => *radius,
        Shape::Disk { .. } => 0.0,
    }
}
