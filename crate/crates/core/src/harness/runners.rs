//! One runner per experiment kind. Each returns an in-memory result whose
//! [`RunReport`] holds the exact bytes of every output file.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::output::{parameter_csv, read_trajectory_csv, to_csv, trajectory_csv};
use super::{io_err, place, rest_offset, HarnessError, Placement, Scenario};
use crate::depth::{
    approach, approach_coordinate, convergence_check, incremental_estimates, observation_rows, read_observation_csv,
    write_observation_csv, DepthEstimate, DepthObservation, Rejection,
};
use crate::grasp::{grasp_pipeline, nominal_base_jacobian, GraspAttempt, GraspError, GraspServo};
use crate::mask::FeatureVector;
use crate::perception::{segment, NoiseModel, SimulatedSegmenter};
use crate::scene::{JointState, Scene};
use crate::servo::{
    servo_episode, JacobianFile, Preset, PseudoJacobian, ServoConfig, ServoError, Termination, TrajectoryLog,
};

/// Output of one run: a pass/fail flag, a text summary and the files to write.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub success: bool,
    pub summary: String,
    /// `(file name, contents)`, in write order.
    pub files: Vec<(String, String)>,
}

impl RunReport {
    pub fn write_to(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for (name, contents) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        }
        Ok(())
    }
}

struct Summary(String);

impl Summary {
    fn new(kind: &str) -> Self {
        Self(format!("kind: {kind}\n"))
    }

    fn line(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.0, "{key}: {value}");
        self
    }
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::MaxSteps => "max_steps",
        Termination::ObjectLost => "object_lost",
        Termination::Stalled => "unreachable",
    }
}

fn fmt_error(e: Option<[f64; 2]>) -> String {
    e.map(|e| format!("{:.3}", e[0].hypot(e[1]))).unwrap_or_else(|| "-".into())
}

/// Jacobian for a frozen servo: the loaded file, then `servo.init`, then the
/// geometric base jacobian for an object `depth` meters away.
fn frozen_jacobian(scenario: &Scenario, spec: &super::ServoSpec, depth: f64) -> Result<PseudoJacobian, HarnessError> {
    if let Some(file) = &scenario.jacobian {
        if file.jacobian.joints() == spec.preset.coupling().joints() {
            return Ok(file.jacobian.clone());
        }
    }
    if spec.init.is_some() {
        return spec.initial_jacobian();
    }
    match spec.preset {
        Preset::Base | Preset::BaseGrasp => Ok(nominal_base_jacobian(&spec.config(), depth, scenario.scene.camera_model.focal)?),
        p => Err(HarnessError::Config(format!("preset `{}` needs a jacobian file or `servo.init`", p.name()))),
    }
}

/// Distance along the optical axis from the camera at `q` to the object's reference surface.
fn object_distance(scene: &Scene, camera: &str, q: &JointState, object: &str) -> Result<f64, HarnessError> {
    let cam = scene.camera_pose(camera, q)?;
    let obj = scene.object(object)?;
    let axis = cam.rotation * nalgebra::Vector3::z();
    let to_obj = obj.center().coords - cam.translation;
    Ok(if camera == "hand" { approach_coordinate(&cam) - obj.reference_height() } else { axis.dot(&to_obj) })
}

#[derive(Debug, Clone)]
pub struct LearnResult {
    /// `(placement, episode, log)`; an episode ends at convergence or a reset.
    pub segments: Vec<(usize, usize, TrajectoryLog)>,
    /// Starting J⁺ followed by the result of every applied update.
    pub trace: Vec<PseudoJacobian>,
    pub file: JacobianFile,
    pub converged: bool,
    pub resets: usize,
    /// Updates applied before the first placement was centred.
    pub updates_to_first_convergence: Option<usize>,
}

/// Learn J⁺ online over the configured placements.
///
/// Losing the object teleports the robot back to the start pose and resumes
/// from the latest J⁺. The run fails when the step budget or the reset budget
/// runs out, or an episode stalls on joint limits.
pub fn learn(scenario: &Scenario) -> Result<LearnResult, HarnessError> {
    let cfg = &scenario.config;
    let servo = cfg.servo.config();
    if !(servo.alpha > 0.0) {
        return Err(HarnessError::Config("learning needs servo.alpha > 0".into()));
    }
    let object = scenario.object_id()?;
    let mut jacobian = match &scenario.jacobian {
        Some(file) => file.jacobian.clone(),
        None => cfg.servo.initial_jacobian()?,
    };
    let start = scenario.start_state();
    let mut trace = vec![jacobian.clone()];
    let mut segments = Vec::new();
    let mut frame = 0;
    let mut steps_left = cfg.max_steps;
    let mut resets = 0;
    let mut first = None;
    let mut converged = true;

    'placements: for p in 0..scenario.placement_count() {
        let source = SimulatedSegmenter::new(scenario.placed_scene(p)?, object, scenario.noise())?;
        for episode in 0.. {
            let ep = servo_episode(&scenario.scene.robot, scenario.camera(), &source, &servo, jacobian, &start, steps_left, frame)?;
            frame = ep.next_frame;
            steps_left -= ep.log.records.len() - 1;
            jacobian = ep.jacobian;
            let offset = trace.len() - 1;
            trace.extend(ep.updates);
            let mut log = ep.log;
            for r in &mut log.records {
                r.updates += offset;
            }
            segments.push((p, episode, log));
            match ep.termination {
                Termination::Converged => {
                    first.get_or_insert(trace.len() - 1);
                    break;
                }
                Termination::ObjectLost if resets < cfg.max_resets && steps_left > 0 => resets += 1,
                _ => {
                    converged = false;
                    break 'placements;
                }
            }
        }
    }

    let file = JacobianFile {
        jacobian: jacobian.clone(),
        coupling: servo.coupling.clone(),
        alpha: servo.alpha,
        gain: servo.gain,
        target: servo.target,
    };
    Ok(LearnResult { segments, trace, file, converged, resets, updates_to_first_convergence: first })
}

impl LearnResult {
    pub fn report(&self) -> Result<RunReport, HarnessError> {
        let segs: Vec<_> = self.segments.iter().map(|(p, e, l)| (*p, *e, l)).collect();
        let mut s = Summary::new("learn");
        s.line("converged", self.converged)
            .line("updates", self.trace.len() - 1)
            .line("resets", self.resets)
            .line("steps", self.segments.iter().map(|(_, _, l)| l.records.len() - 1).sum::<usize>())
            .line("final_error_px", fmt_error(self.segments.last().and_then(|(_, _, l)| l.last_error())));
        if let Some(n) = self.updates_to_first_convergence {
            s.line("updates_to_first_convergence", n);
        }
        Ok(RunReport {
            success: self.converged,
            summary: s.0,
            files: vec![
                ("jacobian.txt".into(), self.file.to_text()),
                ("trajectory.csv".into(), trajectory_csv(&segs)?),
                ("parameters.csv".into(), parameter_csv(&self.file.coupling, &self.trace)?),
            ],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementStatus {
    pub placement: usize,
    pub status: &'static str,
    pub steps: usize,
    pub final_error: Option<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct ServoStepResult {
    pub segments: Vec<(usize, TrajectoryLog)>,
    pub statuses: Vec<PlacementStatus>,
}

/// Frozen-jacobian step responses, one per placement. A run that stalls on
/// joint limits is reported as `unreachable`.
pub fn servo_step(scenario: &Scenario) -> Result<ServoStepResult, HarnessError> {
    let cfg = &scenario.config;
    let object = scenario.object_id()?;
    let servo = ServoConfig { alpha: 0.0, ..cfg.servo.config() };
    let start = scenario.start_state();
    let mut frame = 0;
    let mut segments = Vec::new();
    let mut statuses = Vec::new();
    for p in 0..scenario.placement_count() {
        let scene = scenario.placed_scene(p)?;
        let jacobian = frozen_jacobian(scenario, &cfg.servo, object_distance(&scene, scenario.camera(), &start, object)?)?;
        let source = SimulatedSegmenter::new(scene, object, scenario.noise())?;
        match servo_episode(&scenario.scene.robot, scenario.camera(), &source, &servo, jacobian, &start, cfg.max_steps, frame) {
            Ok(ep) => {
                frame = ep.next_frame;
                statuses.push(PlacementStatus {
                    placement: p,
                    status: termination_name(ep.termination),
                    steps: ep.log.records.len() - 1,
                    final_error: ep.log.last_error(),
                });
                segments.push((p, ep.log));
            }
            Err(ServoError::ObjectLost) => {
                frame += 1;
                statuses.push(PlacementStatus { placement: p, status: "object_lost", steps: 0, final_error: None });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(ServoStepResult { segments, statuses })
}

impl ServoStepResult {
    pub fn report(&self) -> Result<RunReport, HarnessError> {
        let mut files = Vec::new();
        for (p, log) in &self.segments {
            files.push((format!("trajectory_{p}.csv"), trajectory_csv(&[(*p, 0, log)])?));
        }
        let header = ["placement", "status", "steps", "final_error_px"].map(String::from).to_vec();
        let rows: Vec<Vec<String>> = self
            .statuses
            .iter()
            .map(|s| vec![s.placement.to_string(), s.status.into(), s.steps.to_string(), fmt_error(s.final_error)])
            .collect();
        files.push(("placements.csv".into(), to_csv(&header, &rows)?));
        let mut s = Summary::new("servo_step");
        for st in &self.statuses {
            s.line(&format!("placement_{}", st.placement), format!("{} after {} steps", st.status, st.steps));
        }
        let success = self.statuses.iter().all(|s| s.status == "converged");
        Ok(RunReport { success, summary: s.0, files })
    }
}

#[derive(Debug, Clone)]
pub struct ApproachResult {
    pub observations: Vec<DepthObservation>,
    pub trace: Vec<DepthEstimate>,
    pub rejected: Vec<Rejection>,
    pub converged: bool,
    /// Reference height of the simulated object; `None` for replays.
    pub z_true: Option<f64>,
    pub servo_log: Option<TrajectoryLog>,
    pub replayed: bool,
}

/// Observations read from an observation log (`#` lines are comments).
pub fn replay_fixture(path: &Path) -> Result<Vec<DepthObservation>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let rows = read_observation_csv(file)?;
    Ok(rows.iter().map(|r| r.observation()).collect::<Result<_, _>>()?)
}

/// Estimate depth from a replayed log or a simulated approach.
pub fn approach_depth(scenario: &Scenario) -> Result<ApproachResult, HarnessError> {
    let cfg = &scenario.config;
    if let Some(path) = &cfg.replay {
        let observations = replay_fixture(&scenario.base_dir.join(path))?;
        let trace = incremental_estimates(&observations)?;
        let converged = trace.len() >= cfg.approach.window && convergence_check(&trace, cfg.approach.window, cfg.approach.tol)?;
        return Ok(ApproachResult { observations, trace, rejected: Vec::new(), converged, z_true: None, servo_log: None, replayed: true });
    }
    let object = scenario.object_id()?;
    let scene = scenario.placed_scene(0)?;
    let start = scenario.start_state();
    let camera = scenario.camera();
    let jacobian = frozen_jacobian(scenario, &cfg.servo, object_distance(&scene, camera, &start, object)?)?;
    let servo = ServoConfig { alpha: 0.0, ..cfg.servo.config() };
    let source = SimulatedSegmenter::new(scene.clone(), object, scenario.noise())?;
    let centre = servo_episode(&scene.robot, camera, &source, &servo, jacobian.clone(), &start, cfg.max_steps, 0)?;
    let mut log = centre.log;
    let out = approach(&scene.robot, camera, &source, &servo, &jacobian, &centre.final_state, &cfg.approach, centre.next_frame)?;
    log.extend(out.servo_log);
    Ok(ApproachResult {
        observations: out.observations,
        trace: out.trace,
        rejected: out.rejected,
        converged: out.converged,
        z_true: Some(scene.object(object)?.reference_height()),
        servo_log: Some(log),
        replayed: false,
    })
}

impl ApproachResult {
    pub fn estimate(&self) -> Option<&DepthEstimate> {
        self.trace.last()
    }

    pub fn report(&self) -> Result<RunReport, HarnessError> {
        let mut obs = Vec::new();
        write_observation_csv(&mut obs, &observation_rows(&self.observations)?)?;
        let mut files = vec![("observations.csv".into(), String::from_utf8(obs).map_err(|e| HarnessError::Io(e.to_string()))?)];
        if !self.replayed {
            let rows: Vec<Vec<String>> = self.rejected.iter().map(|r| vec![r.frame.to_string(), r.reason.clone()]).collect();
            files.push(("rejected.csv".into(), to_csv(&["frame".into(), "reason".into()], &rows)?));
        }
        if let Some(log) = &self.servo_log {
            files.push(("trajectory.csv".into(), trajectory_csv(&[(0, 0, log)])?));
        }
        let mut s = Summary::new("approach_depth");
        s.line("source", if self.replayed { "replay" } else { "simulation" })
            .line("observations", self.observations.len())
            .line("converged", self.converged);
        if let Some(e) = self.estimate() {
            s.line("z_object_hat_m", e.z_object).line("c_object_hat", e.c_object).line("residual_rms", e.residual_rms);
        }
        if let Some(z) = self.z_true {
            s.line("z_object_true_m", z);
        }
        Ok(RunReport { success: self.replayed || self.converged, summary: s.0, files })
    }
}

#[derive(Debug, Clone)]
pub struct GraspResult {
    pub attempts: Vec<GraspAttempt>,
    pub success: bool,
    pub reason: Option<String>,
    pub observations: Vec<DepthObservation>,
    pub z_hat: Option<f64>,
    pub z_true: f64,
    pub servo_log: TrajectoryLog,
}

fn grasp_servo(scenario: &Scenario, scene: &Scene, start: &JointState, object: &str) -> Result<GraspServo, HarnessError> {
    let cfg = &scenario.config;
    let distance = object_distance(scene, "hand", start, object)?;
    Ok(GraspServo {
        center: cfg.servo.config(),
        center_jacobian: frozen_jacobian(scenario, &cfg.servo, distance)?,
        fine: cfg.fine_servo.config(),
        fine_jacobian: frozen_jacobian(scenario, &cfg.fine_servo, cfg.grasp.template.z_gripper)?,
    })
}

fn run_grasp(scenario: &Scenario, scene: &Scene, object: &str, noise: &NoiseModel) -> Result<GraspResult, HarnessError> {
    let start = scenario.start_state();
    let servo = grasp_servo(scenario, scene, &start, object)?;
    let z_true = scene.object(object)?.reference_height();
    let (outcome, reason) = match grasp_pipeline(scene, object, noise, &servo, &scenario.config.grasp, &start, 0) {
        Ok(o) => (o, None),
        Err(GraspError::GraspFailed { reason, outcome }) => (*outcome, Some(reason)),
        Err(e) => return Err(e.into()),
    };
    Ok(GraspResult {
        success: outcome.success(),
        attempts: outcome.attempts.clone(),
        reason,
        observations: outcome.depth.observations.clone(),
        z_hat: outcome.depth.estimate().map(|e| e.z_object),
        z_true,
        servo_log: outcome.servo_log,
    })
}

/// Centre, estimate depth and grasp the scenario object.
pub fn grasp(scenario: &Scenario) -> Result<GraspResult, HarnessError> {
    let object = scenario.object_id()?;
    run_grasp(scenario, &scenario.placed_scene(0)?, object, &scenario.noise())
}

impl GraspResult {
    pub fn report(&self) -> Result<RunReport, HarnessError> {
        let header = ["attempt", "wrist_roll", "jaccard", "s_A_grasp", "s_A_raised", "success"].map(String::from).to_vec();
        let rows: Vec<Vec<String>> = self
            .attempts
            .iter()
            .map(|a| {
                vec![
                    a.attempt.to_string(),
                    a.wrist_roll.to_string(),
                    a.jaccard.to_string(),
                    a.s_a_grasp.to_string(),
                    a.s_a_raised.to_string(),
                    a.success.to_string(),
                ]
            })
            .collect();
        let mut obs = Vec::new();
        write_observation_csv(&mut obs, &observation_rows(&self.observations)?)?;
        let mut s = Summary::new("grasp");
        s.line("success", self.success).line("attempts", self.attempts.len());
        if let Some(z) = self.z_hat {
            s.line("z_object_hat_m", z);
        }
        s.line("z_object_true_m", self.z_true);
        if let Some(r) = &self.reason {
            s.line("failure", r);
        }
        Ok(RunReport {
            success: self.success,
            summary: s.0,
            files: vec![
                ("attempts.csv".into(), to_csv(&header, &rows)?),
                ("observations.csv".into(), String::from_utf8(obs).map_err(|e| HarnessError::Io(e.to_string()))?),
                ("trajectory.csv".into(), trajectory_csv(&[(0, 0, &self.servo_log)])?),
            ],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub item: String,
    pub height: f64,
    pub vs_success: bool,
    pub de_success: bool,
    pub z_hat: Option<f64>,
    pub z_true: f64,
    /// `None` when the suite does not grasp.
    pub grasp_success: Option<bool>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct TrialSuiteResult {
    pub rows: Vec<TrialRow>,
}

fn run_trial(scenario: &Scenario, index: usize) -> Result<TrialRow, HarnessError> {
    let cfg = &scenario.config;
    let spec = &cfg.trials[index];
    let start = scenario.start_state();
    let camera = "hand";
    let resting = scenario.scene.object(&spec.object)?;
    let height = spec.support + rest_offset(resting);
    let placement = Placement { object: Some(spec.object.clone()), pixel: Some(spec.pixel), height: Some(height), ..Placement::default() };
    let scene = place(&scenario.scene, camera, &start, &placement, None)?;
    let noise = NoiseModel {
        seed: cfg.seed.wrapping_add(index as u64),
        ..spec.noise.clone().unwrap_or_else(|| cfg.noise.clone())
    };
    let z_true = scene.object(&spec.object)?.reference_height();
    let mut row = TrialRow {
        trial: index,
        item: spec.object.clone(),
        height: spec.support,
        vs_success: false,
        de_success: false,
        z_hat: None,
        z_true,
        grasp_success: None,
        note: String::new(),
    };

    let servo = ServoConfig { alpha: 0.0, ..cfg.servo.config() };
    let jacobian = frozen_jacobian(scenario, &cfg.servo, object_distance(&scene, camera, &start, &spec.object)?)?;
    let source = SimulatedSegmenter::new(scene.clone(), &spec.object, noise.clone())?;
    let centre = match servo_episode(&scene.robot, camera, &source, &servo, jacobian.clone(), &start, cfg.max_steps, 0) {
        Ok(ep) => ep,
        Err(e) => {
            row.note = e.to_string();
            return Ok(row);
        }
    };
    row.vs_success = centre.converged();
    if !row.vs_success {
        row.note = format!("servo {}", termination_name(centre.termination));
        return Ok(row);
    }
    match approach(&scene.robot, camera, &source, &servo, &jacobian, &centre.final_state, &cfg.approach, centre.next_frame) {
        Ok(out) => {
            row.z_hat = out.estimate().map(|e| e.z_object);
            row.de_success = out.converged && row.z_hat.is_some_and(|z| (z - z_true).abs() <= cfg.grasp.depth_margin);
            if !out.converged {
                row.note = "depth not converged".into();
            }
        }
        Err(e) => row.note = e.to_string(),
    }
    if cfg.with_grasp {
        match run_grasp(scenario, &scene, &spec.object, &noise) {
            Ok(g) => {
                row.grasp_success = Some(g.success);
                if let Some(r) = g.reason {
                    row.note = r;
                }
            }
            Err(e) => {
                row.grasp_success = Some(false);
                row.note = e.to_string();
            }
        }
    }
    Ok(row)
}

/// Run every trial, in parallel, each with its own seed `seed + index`.
pub fn trial_suite(scenario: &Scenario) -> Result<TrialSuiteResult, HarnessError> {
    if scenario.config.trials.is_empty() {
        return Err(HarnessError::Config("trial suite has no trials".into()));
    }
    let rows = (0..scenario.config.trials.len())
        .into_par_iter()
        .map(|i| run_trial(scenario, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TrialSuiteResult { rows })
}

fn rate(n: usize, d: usize) -> String {
    if d == 0 {
        "-".into()
    } else {
        format!("{}/{} ({:.0}%)", n, d, 100.0 * n as f64 / d as f64)
    }
}

impl TrialSuiteResult {
    pub fn report(&self) -> Result<RunReport, HarnessError> {
        let header =
            ["trial", "item", "height_m", "vs_success", "de_success", "z_hat_m", "z_true_m", "grasp_success", "note"]
                .map(String::from)
                .to_vec();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.trial.to_string(),
                    r.item.clone(),
                    r.height.to_string(),
                    r.vs_success.to_string(),
                    r.de_success.to_string(),
                    r.z_hat.map(|z| z.to_string()).unwrap_or_default(),
                    r.z_true.to_string(),
                    r.grasp_success.map(|g| g.to_string()).unwrap_or_default(),
                    r.note.clone(),
                ]
            })
            .collect();
        let n = self.rows.len();
        let vs = self.rows.iter().filter(|r| r.vs_success).count();
        let de = self.rows.iter().filter(|r| r.de_success).count();
        let grasped: Vec<bool> = self.rows.iter().filter_map(|r| r.grasp_success).collect();
        let mut s = Summary::new("trial_suite");
        s.line("trials", n).line("vs_success", rate(vs, n)).line("de_success", rate(de, n));
        if !grasped.is_empty() {
            s.line("grasp_success", rate(grasped.iter().filter(|g| **g).count(), grasped.len()));
        }
        let mut table = String::new();
        let _ = writeln!(table, "{:<6} {:<12} {:>8} {:>4} {:>4} {:>9}", "trial", "item", "height", "VS", "DE", "z_hat");
        for r in &self.rows {
            let mark = |b: bool| if b { "yes" } else { "no" };
            let z = r.z_hat.map(|z| format!("{z:.4}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(table, "{:<6} {:<12} {:>8.3} {:>4} {:>4} {:>9}", r.trial, r.item, r.height, mark(r.vs_success), mark(r.de_success), z);
        }
        let summary = format!("{}\n{table}", s.0);
        Ok(RunReport {
            success: true,
            summary: summary.clone(),
            files: vec![("trials.csv".into(), to_csv(&header, &rows)?), ("report.txt".into(), summary)],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub rows: usize,
    /// Rows with features that were re-rendered and compared.
    pub checked: usize,
    /// `(row, logged, replayed)` for every row that did not match exactly.
    pub mismatches: Vec<(usize, Option<FeatureVector>, Option<FeatureVector>)>,
}

/// Re-render every logged state and compare the features bit for bit.
pub fn replay(scenario: &Scenario, trajectory: &str) -> Result<ReplayReport, HarnessError> {
    let object = scenario.object_id()?;
    let rows = read_trajectory_csv(trajectory)?;
    let noise = scenario.noise();
    let mut scenes: Vec<Option<Scene>> = vec![None; scenario.placement_count()];
    let mut report = ReplayReport { rows: rows.len(), checked: 0, mismatches: Vec::new() };
    for (i, row) in rows.iter().enumerate() {
        let Some(logged) = row.features else { continue };
        let slot = scenes.get_mut(row.placement).ok_or_else(|| HarnessError::Config(format!("row {i}: unknown placement {}", row.placement)))?;
        let scene = match slot {
            Some(s) => s,
            None => slot.insert(scenario.placed_scene(row.placement)?),
        };
        let cam = scene.camera_pose(scenario.camera(), &row.q)?;
        let mask = segment(scene, &cam, object, &noise, row.frame)?;
        let seen = mask.centroid().ok();
        report.checked += 1;
        if seen != Some(logged) || mask.area() != row.area {
            report.mismatches.push((i, Some(logged), seen));
        }
    }
    Ok(report)
}

impl ReplayReport {
    pub fn report(&self) -> RunReport {
        let mut s = Summary::new("replay");
        s.line("rows", self.rows).line("checked", self.checked).line("mismatches", self.mismatches.len());
        for (i, logged, seen) in self.mismatches.iter().take(10) {
            s.line(&format!("row_{i}"), format!("logged {logged:?} replayed {seen:?}"));
        }
        RunReport { success: self.mismatches.is_empty(), summary: s.0, files: Vec::new() }
    }
}

/// Run the experiment of the given kind and collect its outputs.
pub fn run(kind: super::ExperimentKind, scenario: &Scenario) -> Result<RunReport, HarnessError> {
    use super::ExperimentKind::*;
    let mut report = match kind {
        Learn => learn(scenario)?.report()?,
        ServoStep => servo_step(scenario)?.report()?,
        ApproachDepth => approach_depth(scenario)?.report()?,
        Grasp => grasp(scenario)?.report()?,
        TrialSuite => trial_suite(scenario)?.report()?,
    };
    report.files.push(("summary.txt".into(), report.summary.clone()));
    Ok(report)
}
