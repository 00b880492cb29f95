//! Grasping from segmentation: standoff height, wrist roll and the lift check.
//!
//! Once the object depth is known the camera descends until the closed
//! fingertips sit at that depth. The wrist roll is the one whose projected
//! gripper silhouette overlaps the object mask least, and after lifting, a
//! grasp counts as held only if the object's mask kept more than half of its
//! area.

use std::f64::consts::PI;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depth::{approach, approach_coordinate, ApproachConfig, ApproachOutcome, DepthError};
use crate::mask::{jaccard, BinaryMask, MaskError};
use crate::perception::{MaskSource, NoiseModel, PerceptionError, SimulatedSegmenter};
use crate::scene::{CameraModel, JointState, Pose, Scene, SceneError};
use crate::servo::{servo_episode, PseudoJacobian, ServoConfig, ServoError, Termination, TrajectoryLog};

/// Area ratio above which a lifted object counts as held.
pub const GRASP_CHECK_RATIO: f64 = 0.5;

#[derive(Debug, Error)]
pub enum GraspError {
    #[error("object mask is empty")]
    EmptyMask,
    #[error("grid step {0} must lie in (0, π/8]")]
    InvalidGrid(f64),
    #[error("grasp baseline area must be positive")]
    InvalidBaseline,
    #[error("invalid gripper template: {0}")]
    InvalidTemplate(String),
    #[error("invalid grasp configuration: {0}")]
    InvalidConfig(String),
    #[error("target object is not visible")]
    ObjectLost,
    #[error(transparent)]
    Depth(#[from] DepthError),
    #[error(transparent)]
    Servo(#[from] ServoError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error("grasp failed: {reason}")]
    GraspFailed { reason: String, outcome: Box<GraspOutcome> },
}

/// Camera height at which the closed fingertips reach depth `z_object_hat`.
pub fn grasp_standoff(z_object_hat: f64, z_gripper: f64) -> f64 {
    z_object_hat + z_gripper
}

/// True when the raised area is strictly more than half the at-grasp area.
pub fn grasp_check(s_a_grasp: usize, s_a_raised: usize) -> Result<bool, GraspError> {
    if s_a_grasp == 0 {
        return Err(GraspError::InvalidBaseline);
    }
    Ok(s_a_raised as f64 > GRASP_CHECK_RATIO * s_a_grasp as f64)
}

/// Two-finger parallel gripper seen from the hand camera.
///
/// At roll 0 the fingers sit above and below the fingertip centre in the
/// image, closing along the image y axis. Lengths are meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GripperTemplate {
    /// Gap between the open fingers.
    pub opening: f64,
    /// Finger size along the closing direction.
    pub finger_thickness: f64,
    /// Finger size across the closing direction.
    pub finger_breadth: f64,
    /// Camera-to-fingertip distance along the optical axis.
    pub z_gripper: f64,
    /// Fingertip centre in the camera's x-y plane.
    pub offset: [f64; 2],
}

impl Default for GripperTemplate {
    fn default() -> Self {
        Self { opening: 0.135, finger_thickness: 0.015, finger_breadth: 0.03, z_gripper: 0.25, offset: [-0.05, 0.0] }
    }
}

impl GripperTemplate {
    pub fn validate(&self) -> Result<(), GraspError> {
        let positive = [
            ("opening", self.opening),
            ("finger_thickness", self.finger_thickness),
            ("finger_breadth", self.finger_breadth),
            ("z_gripper", self.z_gripper),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GraspError::InvalidTemplate(format!("{name} {v} must be positive")));
            }
        }
        if !self.offset.iter().all(|v| v.is_finite()) {
            return Err(GraspError::InvalidTemplate("offset must be finite".into()));
        }
        Ok(())
    }

    /// Fingertip centre in the camera frame.
    pub fn fingertip(&self) -> Point3<f64> {
        Point3::new(self.offset[0], self.offset[1], self.z_gripper)
    }

    /// Pixel the fingertip centre projects to.
    pub fn center_pixel(&self, model: &CameraModel) -> [f64; 2] {
        model.project(&self.fingertip()).expect("z_gripper is positive")
    }

    /// Corners of both finger rectangles in the fingertip plane, meters
    /// relative to the fingertip centre, rotated by `roll` in image axes.
    fn fingers(&self, roll: f64) -> [[[f64; 2]; 4]; 2] {
        let (s, c) = roll.sin_cos();
        let hx = self.finger_breadth / 2.0;
        let inner = self.opening / 2.0;
        let outer = inner + self.finger_thickness;
        let rect = |y0: f64, y1: f64| {
            [[-hx, y0], [hx, y0], [hx, y1], [-hx, y1]].map(|[x, y]| [c * x - s * y, s * x + c * y])
        };
        [rect(inner, outer), rect(-outer, -inner)]
    }

    /// Whether a point in the fingertip plane (relative to the centre) is under a finger.
    fn covers(&self, roll: f64, x: f64, y: f64) -> bool {
        let (s, c) = roll.sin_cos();
        let gx = c * x + s * y;
        let gy = -s * x + c * y;
        let inner = self.opening / 2.0;
        // pixel centres can land on an edge at axis-aligned rolls; rounding must not decide them
        let tol = 1e-9;
        gx.abs() <= self.finger_breadth / 2.0 + tol && (inner - tol..=inner + self.finger_thickness + tol).contains(&gy.abs())
    }

    /// Gripper silhouette for wrist roll `roll`, sized to `model`.
    pub fn mask(&self, model: &CameraModel, roll: f64) -> BinaryMask {
        let mut mask = BinaryMask::new(model.width, model.height).expect("camera model has positive size");
        let [cu, cv] = self.center_pixel(model);
        let scale = self.z_gripper / model.focal;
        for corners in self.fingers(roll) {
            let (mut umin, mut umax, mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for [x, y] in corners {
                let (u, v) = (cu + x / scale, cv + y / scale);
                umin = umin.min(u);
                umax = umax.max(u);
                vmin = vmin.min(v);
                vmax = vmax.max(v);
            }
            let (w, h) = (model.width as f64, model.height as f64);
            if umax < 0.0 || vmax < 0.0 || umin > w - 1.0 || vmin > h - 1.0 {
                continue;
            }
            let (u0, u1) = (umin.floor().max(0.0) as usize, (umax.ceil().min(w - 1.0)) as usize);
            let (v0, v1) = (vmin.floor().max(0.0) as usize, (vmax.ceil().min(h - 1.0)) as usize);
            for v in v0..=v1 {
                for u in u0..=u1 {
                    if self.covers(roll, (u as f64 - cu) * scale, (v as f64 - cv) * scale) {
                        mask.set(u, v, true);
                    }
                }
            }
        }
        mask
    }
}

/// Roll angles `{0, step, 2·step, …} ∩ [0, π)`.
pub fn roll_grid(grid_step: f64) -> Result<Vec<f64>, GraspError> {
    if !(grid_step > 0.0 && grid_step <= PI / 8.0 + 1e-15) {
        return Err(GraspError::InvalidGrid(grid_step));
    }
    Ok((0..).map(|k| k as f64 * grid_step).take_while(|&r| r < PI).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WristSelection {
    pub wrist_roll: f64,
    /// Jaccard index of the object and the gripper at `wrist_roll`.
    pub score: f64,
}

/// Grid search for the roll with the least object-gripper overlap; ties go to the smallest angle.
pub fn select_wrist_rotation(
    object: &BinaryMask,
    template: &GripperTemplate,
    model: &CameraModel,
    grid_step: f64,
) -> Result<WristSelection, GraspError> {
    if object.is_empty() {
        return Err(GraspError::EmptyMask);
    }
    let mut best: Option<WristSelection> = None;
    for roll in roll_grid(grid_step)? {
        let score = jaccard(object, &template.mask(model, roll))?;
        if best.is_none_or(|b| score < b.score) {
            best = Some(WristSelection { wrist_roll: roll, score });
        }
    }
    Ok(best.expect("grid contains roll 0"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspPlan {
    pub wrist_roll: f64,
    pub score: f64,
    pub z_camera_grasp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraspConfig {
    pub template: GripperTemplate,
    /// Wrist-roll search resolution, radians.
    pub grid_step: f64,
    /// Extra attempts after a failed lift check.
    pub retries: usize,
    /// Largest planar fingertip-to-object distance that still captures the object, meters.
    pub capture_radius: f64,
    /// Largest depth error that still closes on the object, meters.
    pub depth_margin: f64,
    /// Arm lift travel for the check, meters.
    pub lift_height: f64,
    /// Joint that moves the camera along its optical axis.
    pub lift_joint: String,
    pub roll_joint: String,
    /// Servo steps allowed for each centring phase.
    pub servo_steps: usize,
    /// Number of leading attempts forced to slip.
    pub forced_slips: usize,
    pub approach: ApproachConfig,
}

impl Default for GraspConfig {
    fn default() -> Self {
        Self {
            template: GripperTemplate::default(),
            grid_step: PI / 36.0,
            retries: 2,
            capture_radius: 0.02,
            depth_margin: 0.03,
            lift_height: 0.2,
            lift_joint: "arm_lift".into(),
            roll_joint: "wrist_roll".into(),
            servo_steps: 30,
            forced_slips: 0,
            approach: ApproachConfig::default(),
        }
    }
}

impl GraspConfig {
    pub fn validate(&self) -> Result<(), GraspError> {
        self.template.validate()?;
        roll_grid(self.grid_step)?;
        self.approach.validate()?;
        for (name, v) in [("capture_radius", self.capture_radius), ("depth_margin", self.depth_margin), ("lift_height", self.lift_height)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GraspError::InvalidConfig(format!("{name} {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// Servo settings for the two centring phases.
#[derive(Debug, Clone)]
pub struct GraspServo {
    /// Centres the object on the optical axis before the approach.
    pub center: ServoConfig,
    pub center_jacobian: PseudoJacobian,
    /// Centres the object under the fingertips at grasp height.
    pub fine: ServoConfig,
    pub fine_jacobian: PseudoJacobian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspAttempt {
    pub attempt: usize,
    pub wrist_roll: f64,
    pub jaccard: f64,
    pub s_a_grasp: usize,
    pub s_a_raised: usize,
    pub success: bool,
}

#[derive(Debug, Clone)]
pub struct GraspOutcome {
    pub depth: ApproachOutcome,
    pub plan: Option<GraspPlan>,
    pub attempts: Vec<GraspAttempt>,
    /// Every servo step of the pipeline, in order.
    pub servo_log: TrajectoryLog,
    pub final_state: JointState,
    pub next_frame: u64,
}

impl GraspOutcome {
    pub fn success(&self) -> bool {
        self.attempts.last().is_some_and(|a| a.success)
    }
}

fn centre(
    scene: &Scene,
    source: &dyn MaskSource,
    config: &ServoConfig,
    jacobian: &PseudoJacobian,
    q: &JointState,
    steps: usize,
    frame: u64,
) -> Result<crate::servo::Episode, GraspError> {
    let frozen = ServoConfig { alpha: 0.0, ..config.clone() };
    let episode = match servo_episode(&scene.robot, "hand", source, &frozen, jacobian.clone(), q, steps, frame) {
        Err(ServoError::ObjectLost) => return Err(GraspError::ObjectLost),
        other => other?,
    };
    if episode.termination == Termination::ObjectLost {
        return Err(GraspError::ObjectLost);
    }
    Ok(episode)
}

/// Centre, estimate depth, descend, fine-centre, pick a wrist roll, close,
/// lift and check, retrying up to `config.retries` times.
///
/// Closing captures the object when the fingertip centre is within
/// `capture_radius` of the object horizontally and the estimated depth is
/// within `depth_margin` of the object's reference height. A captured object
/// rides with the hand during the lift; otherwise it stays put and its mask
/// shrinks as the camera rises.
pub fn grasp_pipeline(
    scene: &Scene,
    object_id: &str,
    noise: &NoiseModel,
    servo: &GraspServo,
    config: &GraspConfig,
    start: &JointState,
    first_frame: u64,
) -> Result<GraspOutcome, GraspError> {
    config.validate()?;
    let chain = scene.robot.camera("hand")?;
    let lift = scene.robot.joint(&config.lift_joint).ok_or_else(|| SceneError::MissingJoint(config.lift_joint.clone()))?;
    let segmenter = SimulatedSegmenter::new(scene.clone(), object_id, noise.clone())?;
    let object = scene.object(object_id)?.clone();
    let mut servo_log = TrajectoryLog::new(servo.center.target, servo.center_jacobian.joints().to_vec());

    let first = centre(scene, &segmenter, &servo.center, &servo.center_jacobian, start, config.servo_steps, first_frame)?;
    let mut frame = first.next_frame;
    let mut q = first.final_state.clone();
    servo_log.extend(first.log);

    let depth = match approach(&scene.robot, "hand", &segmenter, &servo.center, &servo.center_jacobian, &q, &config.approach, frame) {
        Err(DepthError::ObjectLost) => return Err(GraspError::ObjectLost),
        other => other?,
    };
    frame = depth.next_frame;
    q = depth.final_state.clone();
    let mut outcome = GraspOutcome { depth, plan: None, attempts: Vec::new(), servo_log, final_state: q.clone(), next_frame: frame };
    let fail = |reason: String, outcome: GraspOutcome| Err(GraspError::GraspFailed { reason, outcome: Box::new(outcome) });
    if !outcome.depth.converged {
        return fail("depth estimate did not converge".into(), outcome);
    }
    let z_hat = outcome.depth.estimate().expect("converged traces are non-empty").z_object;
    let z_grasp = grasp_standoff(z_hat, config.template.z_gripper);

    // camera travel per unit of lift, measured on the chain
    let lift_now = q.get(&config.lift_joint).ok_or_else(|| SceneError::MissingJoint(config.lift_joint.clone()))?;
    let z_now = approach_coordinate(&chain.forward_kinematics(&q)?);
    let mut probe = q.clone();
    probe.set(&config.lift_joint, lift_now + 0.01)?;
    let rate = (approach_coordinate(&chain.forward_kinematics(&probe)?) - z_now) / 0.01;
    let lift_grasp = lift_now + (z_grasp - z_now) / rate;
    if !lift.within_limits(lift_grasp) || !lift.within_limits(lift_grasp + config.lift_height) {
        return fail(format!("grasp height {z_grasp:.4} m is outside the lift range"), outcome);
    }
    q.set(&config.lift_joint, lift_grasp)?;

    for attempt in 0..=config.retries {
        let fine = centre(scene, &segmenter, &servo.fine, &servo.fine_jacobian, &q, config.servo_steps, frame)?;
        frame = fine.next_frame;
        q = fine.final_state.clone();
        outcome.servo_log.extend(fine.log);

        let camera = chain.forward_kinematics(&q)?;
        let grasp_mask = segmenter.mask(&camera, frame)?;
        frame += 1;
        let choice = select_wrist_rotation(&grasp_mask, &config.template, &scene.camera_model, config.grid_step)?;
        outcome.plan = Some(GraspPlan { wrist_roll: choice.wrist_roll, score: choice.score, z_camera_grasp: z_grasp });
        if scene.robot.joint(&config.roll_joint).is_some() {
            q.set(&config.roll_joint, choice.wrist_roll)?;
        }

        let tip = camera.transform_point(&config.template.fingertip());
        let planar = (tip.xy() - object.center().xy()).norm();
        let captured = attempt >= config.forced_slips
            && planar <= config.capture_radius
            && (z_hat - object.reference_height()).abs() <= config.depth_margin;

        let mut raised_q = q.clone();
        raised_q.set(&config.lift_joint, lift_grasp + config.lift_height)?;
        let raised_camera = chain.forward_kinematics(&raised_q)?;
        let raised_scene;
        let raised_source: &dyn MaskSource = if captured {
            let carried = Pose::new(
                object.pose.rotation,
                object.pose.translation + (raised_camera.translation - camera.translation),
            );
            raised_scene = SimulatedSegmenter::new(scene.with_object_pose(object_id, carried)?, object_id, noise.clone())?;
            &raised_scene
        } else {
            &segmenter
        };
        let raised_mask = raised_source.mask(&raised_camera, frame)?;
        frame += 1;
        let s_a_grasp = grasp_mask.area();
        let s_a_raised = raised_mask.area();
        let success = grasp_check(s_a_grasp, s_a_raised)?;
        outcome.attempts.push(GraspAttempt { attempt, wrist_roll: choice.wrist_roll, jaccard: choice.score, s_a_grasp, s_a_raised, success });
        outcome.final_state = if success { raised_q } else { q.clone() };
        outcome.next_frame = frame;
        if success {
            return Ok(outcome);
        }
    }
    let n = outcome.attempts.len();
    fail(format!("lift check failed on all {n} attempts"), outcome)
}

/// Correct-sign jacobian for the base joints of the bundled robot, for an
/// object `depth` meters below the camera.
pub fn nominal_base_jacobian(config: &ServoConfig, depth: f64, focal: f64) -> Result<PseudoJacobian, ServoError> {
    let g = depth / focal;
    let joints = config.coupling.joints().to_vec();
    let mut values = config.coupling.as_matrix().clone();
    for (i, name) in joints.iter().enumerate() {
        for j in 0..values.ncols() {
            if values[(i, j)] != 0.0 {
                values[(i, j)] = match (name.as_str(), j) {
                    ("base_forward", 0) => -g,
                    ("base_lateral", 1) => g,
                    _ => 0.0,
                };
            }
        }
    }
    PseudoJacobian::new(joints, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::servo::Preset;

    fn bar(model: &CameraModel, angle: f64, half_len: f64, half_width: f64) -> BinaryMask {
        let t = GripperTemplate::default();
        let [cu, cv] = t.center_pixel(model);
        let (s, c) = angle.sin_cos();
        BinaryMask::from_fn(model.width, model.height, |u, v| {
            let (x, y) = (u as f64 - cu, v as f64 - cv);
            let (a, b) = (c * x + s * y, -s * x + c * y);
            a.abs() <= half_len && b.abs() <= half_width
        })
        .unwrap()
    }

    #[test]
    fn standoff() {
        assert_eq!(grasp_standoff(0.2, 0.3), 0.5);
        assert_eq!(grasp_standoff(0.2, 0.0), 0.2);
        assert!((grasp_standoff(0.2025, 0.25) - 0.4525).abs() < 1e-15);
    }

    #[test]
    fn lift_check_threshold() {
        assert!(grasp_check(1000, 600).unwrap());
        assert!(!grasp_check(1000, 400).unwrap());
        assert!(!grasp_check(1000, 500).unwrap());
        assert!(matches!(grasp_check(0, 10), Err(GraspError::InvalidBaseline)));
    }

    #[test]
    fn template_geometry() {
        let model = CameraModel::new(500.0, 640, 480).unwrap();
        let t = GripperTemplate::default();
        assert_eq!(t.center_pixel(&model), [220.0, 240.0]);
        let m0 = t.mask(&model, 0.0);
        // fingers straddle the centre along image y
        assert!(!m0.get(220, 240));
        assert!(m0.get(220, 240 + 140));
        assert!(m0.get(220, 240 - 140));
        assert!(!m0.get(220 + 140, 240));
        let m90 = t.mask(&model, PI / 2.0);
        assert!(m90.get(220 + 140, 240) && m90.get(220 - 140, 240));
        for k in 0..36 {
            assert!(!t.mask(&model, k as f64 * PI / 36.0).is_empty());
        }
    }

    #[test]
    fn horizontal_bar_prefers_roll_zero() {
        let model = CameraModel::new(500.0, 640, 480).unwrap();
        let t = GripperTemplate::default();
        let object = bar(&model, 0.0, 200.0, 20.0);
        let plan = select_wrist_rotation(&object, &t, &model, PI / 36.0).unwrap();
        assert_eq!(plan.wrist_roll, 0.0);
        assert_eq!(plan.score, 0.0);
        let fine: Vec<(f64, f64)> = roll_grid(PI / 1024.0)
            .unwrap()
            .into_iter()
            .map(|r| (r, jaccard(&object, &t.mask(&model, r)).unwrap()))
            .collect();
        let worst = fine.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
        assert!((worst - PI / 2.0).abs() < 0.05, "{worst}");
        assert_eq!(fine.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0, 0.0);
    }

    #[test]
    fn disk_scores_do_not_depend_on_roll() {
        let model = CameraModel::new(500.0, 640, 480).unwrap();
        let t = GripperTemplate::default();
        let [cu, cv] = t.center_pixel(&model);
        let disk = |r: f64| BinaryMask::from_fn(640, 480, |u, v| (u as f64 - cu).hypot(v as f64 - cv) <= r).unwrap();

        // inside the opening: zero everywhere, roll 0 by tie-break
        let plan = select_wrist_rotation(&disk(100.0), &t, &model, PI / 36.0).unwrap();
        assert_eq!((plan.wrist_roll, plan.score), (0.0, 0.0));

        // covering both fingers: equal up to pixelization of the rotated rectangles
        let big = disk(200.0);
        let scores: Vec<f64> = roll_grid(PI / 36.0).unwrap().into_iter().map(|r| jaccard(&big, &t.mask(&model, r)).unwrap()).collect();
        let (lo, hi) = scores.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
        assert!((hi - lo) / hi < 0.06, "{lo} {hi}");
    }

    #[test]
    fn rotated_bar_shifts_minimiser() {
        let model = CameraModel::new(500.0, 640, 480).unwrap();
        let t = GripperTemplate::default();
        for k in [3usize, 9, 18, 27] {
            let angle = k as f64 * PI / 36.0;
            let object = bar(&model, angle, 200.0, 12.0);
            let plan = select_wrist_rotation(&object, &t, &model, PI / 36.0).unwrap();
            let diff = (plan.wrist_roll - angle).abs();
            assert!(diff < 1e-9 || (diff - PI).abs() < 1e-9 || plan.score == 0.0, "k={k} roll={}", plan.wrist_roll);
        }
    }

    #[test]
    fn disjoint_object_ties_to_zero() {
        let model = CameraModel::new(500.0, 640, 480).unwrap();
        let object = BinaryMask::from_fn(640, 480, |u, v| u > 600 && v < 10).unwrap();
        let plan = select_wrist_rotation(&object, &GripperTemplate::default(), &model, PI / 36.0).unwrap();
        assert_eq!((plan.wrist_roll, plan.score), (0.0, 0.0));
    }

    #[test]
    fn selection_errors() {
        let model = CameraModel::new(500.0, 640, 480).unwrap();
        let t = GripperTemplate::default();
        let empty = BinaryMask::new(640, 480).unwrap();
        assert!(matches!(select_wrist_rotation(&empty, &t, &model, 0.1), Err(GraspError::EmptyMask)));
        let object = bar(&model, 0.0, 10.0, 10.0);
        assert!(matches!(select_wrist_rotation(&object, &t, &model, 0.0), Err(GraspError::InvalidGrid(_))));
        assert!(matches!(select_wrist_rotation(&object, &t, &model, 1.0), Err(GraspError::InvalidGrid(_))));
        assert_eq!(roll_grid(PI / 8.0).unwrap().len(), 8);
        assert_eq!(roll_grid(PI / 36.0).unwrap().len(), 36);
    }

    fn sphere_setup() -> (Scene, JointState, GraspServo) {
        use crate::scene::{SceneObject, Shape};
        let mut scene = Scene::hsr_like();
        let mut q = scene.robot.home();
        q.set("arm_lift", 0.5).unwrap();
        let cam = scene.camera_pose("hand", &q).unwrap();
        let ball = SceneObject::new("ball", Shape::Sphere { radius: 0.035 }, Pose::from_translation(cam.translation.x + 0.03, cam.translation.y - 0.02, 0.16)).unwrap();
        scene.insert_object(ball).unwrap();
        let center = ServoConfig::from_preset(Preset::Base);
        let fine = ServoConfig::from_preset(Preset::BaseGrasp);
        let f = scene.camera_model.focal;
        let servo = GraspServo {
            center_jacobian: nominal_base_jacobian(&center, cam.translation.z - 0.16, f).unwrap(),
            fine_jacobian: nominal_base_jacobian(&fine, 0.25, f).unwrap(),
            center,
            fine,
        };
        (scene, q, servo)
    }

    #[test]
    fn noiseless_sphere_single_attempt() {
        let (scene, q, servo) = sphere_setup();
        let out = grasp_pipeline(&scene, "ball", &NoiseModel::default(), &servo, &GraspConfig::default(), &q, 0).unwrap();
        assert!(out.success());
        assert_eq!(out.attempts.len(), 1);
        let z = out.depth.estimate().unwrap().z_object;
        assert!((z - 0.16).abs() < 0.003, "{z}");
        assert!(out.servo_log.last_error().is_some_and(|e| e[0].hypot(e[1]) <= 5.0));
    }

    #[test]
    fn forced_slip_triggers_retry() {
        let (scene, q, servo) = sphere_setup();
        let config = GraspConfig { forced_slips: 1, ..GraspConfig::default() };
        let out = grasp_pipeline(&scene, "ball", &NoiseModel::default(), &servo, &config, &q, 0).unwrap();
        assert_eq!(out.attempts.len(), 2);
        assert!(!out.attempts[0].success);
        assert!((out.attempts[0].s_a_raised as f64) < 0.5 * out.attempts[0].s_a_grasp as f64);
        assert!(out.attempts[1].success);

        let config = GraspConfig { forced_slips: 5, ..GraspConfig::default() };
        match grasp_pipeline(&scene, "ball", &NoiseModel::default(), &servo, &config, &q, 0) {
            Err(GraspError::GraspFailed { outcome, .. }) => assert_eq!(outcome.attempts.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn heavy_area_noise_fails_depth() {
        let (scene, q, servo) = sphere_setup();
        // uniform dropout rescales every area alike, so only a tight tolerance exposes the jitter
        let noise = NoiseModel { seed: 3, dropout_prob: 0.5, ..NoiseModel::default() };
        let config = GraspConfig { approach: ApproachConfig { tol: 0.0005, max_moves: 12, ..ApproachConfig::default() }, ..GraspConfig::default() };
        match grasp_pipeline(&scene, "ball", &noise, &servo, &config, &q, 0) {
            Err(GraspError::GraspFailed { reason, outcome }) => {
                assert!(reason.contains("depth"), "{reason}");
                assert!(!outcome.depth.trace.is_empty());
            }
            other => panic!("{other:?}"),
        }
    }
}
