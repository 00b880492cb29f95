//! Closed-loop servo episodes against a simulated plant.

use nalgebra::{DMatrix, DVector};

use super::{control_step, converged, feature_error, hb_update, PseudoJacobian, ServoConfig, ServoError, UpdateOutcome};
use crate::mask::FeatureVector;
use crate::perception::MaskSource;
use crate::scene::{JointState, Robot};

/// Consecutive clamped, non-improving steps before an episode is declared stalled.
const STALL_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum StepEvent {
    UpdateSkipped { denominator: f64 },
    LimitClamp { joint: String },
    ObjectLost,
}

impl std::fmt::Display for StepEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepEvent::UpdateSkipped { .. } => write!(f, "update_skipped"),
            StepEvent::LimitClamp { joint } => write!(f, "limit_clamp:{joint}"),
            StepEvent::ObjectLost => write!(f, "object_lost"),
        }
    }
}

/// One observation of the loop: the state reached and what was seen there.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Segmentation frame index the features came from.
    pub frame: u64,
    pub q: JointState,
    /// `None` when the object was lost at this step.
    pub features: Option<FeatureVector>,
    pub error: Option<[f64; 2]>,
    pub area: usize,
    /// Number of jacobian updates applied so far.
    pub updates: usize,
    pub jacobian: DMatrix<f64>,
    pub events: Vec<StepEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub target: FeatureVector,
    pub jacobian_joints: Vec<String>,
    pub records: Vec<StepRecord>,
}

impl TrajectoryLog {
    pub fn new(target: FeatureVector, jacobian_joints: Vec<String>) -> Self {
        Self { target, jacobian_joints, records: Vec::new() }
    }

    pub fn last_error(&self) -> Option<[f64; 2]> {
        self.records.iter().rev().find_map(|r| r.error)
    }

    /// Step indices strictly increase and every error matches its own features.
    pub fn is_consistent(&self) -> bool {
        self.records.windows(2).all(|w| w[0].step < w[1].step)
            && self.records.iter().all(|r| match (r.features, r.error) {
                (Some(s), Some(e)) => feature_error(s, self.target) == e,
                (None, None) => true,
                _ => false,
            })
    }

    /// Append another log, renumbering its steps to continue this one.
    pub fn extend(&mut self, other: TrajectoryLog) {
        let offset = self.records.last().map_or(0, |r| r.step + 1);
        self.records.extend(other.records.into_iter().map(|mut r| {
            r.step += offset;
            r
        }));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxSteps,
    ObjectLost,
    /// Joint limits keep the error from shrinking.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub log: TrajectoryLog,
    pub jacobian: PseudoJacobian,
    /// Jacobian after each applied update, in order.
    pub updates: Vec<PseudoJacobian>,
    pub termination: Termination,
    pub final_state: JointState,
    /// First frame index not used by this episode.
    pub next_frame: u64,
}

impl Episode {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Run segment → features → error → `Δq` → move → (learn) until the error is
/// within tolerance, the step budget runs out, the object is lost or joint
/// limits stall the motion.
///
/// Commanded motions are clamped to joint limits and the achieved `Δq`, not
/// the commanded one, feeds the jacobian update. Learning is enabled when
/// `config.alpha > 0`.
#[allow(clippy::too_many_arguments)]
pub fn servo_episode(
    robot: &Robot,
    camera: &str,
    source: &dyn MaskSource,
    config: &ServoConfig,
    jacobian: PseudoJacobian,
    start: &JointState,
    max_steps: usize,
    first_frame: u64,
) -> Result<Episode, ServoError> {
    let chain = robot.camera(camera)?;
    if jacobian.joints() != config.coupling.joints() {
        return Err(ServoError::DimensionMismatch("jacobian and coupling joints differ".into()));
    }
    for name in jacobian.joints() {
        if start.get(name).is_none() {
            return Err(crate::scene::SceneError::MissingJoint(name.clone()).into());
        }
    }
    let mut jacobian = jacobian;
    let mut frame = first_frame;
    let mut q = start.clone();
    let mask = source.mask(&chain.forward_kinematics(&q)?, frame)?;
    let mut s = mask.centroid().map_err(|_| ServoError::ObjectLost)?;
    let mut e = feature_error(s, config.target);

    let mut log = TrajectoryLog::new(config.target, jacobian.joints().to_vec());
    log.records.push(StepRecord {
        step: 0,
        frame,
        q: q.clone(),
        features: Some(s),
        error: Some(e),
        area: mask.area(),
        updates: 0,
        jacobian: jacobian.values().clone(),
        events: Vec::new(),
    });
    frame += 1;

    let mut updates = Vec::new();
    let mut stalled_for = 0;
    let mut step = 0;
    let termination = loop {
        if converged(e, config.tolerance) {
            break Termination::Converged;
        }
        if step == max_steps {
            break Termination::MaxSteps;
        }
        step += 1;

        let command = control_step(&jacobian, &e, config.gain)?;
        let mut requested = q.clone();
        for (name, dq) in jacobian.joints().iter().zip(command.iter()) {
            let current = q.get(name).expect("checked above");
            requested.set(name, current + dq)?;
        }
        let (next_q, clamps) = robot.clamp(&requested);
        let achieved = DVector::from_iterator(
            jacobian.joints().len(),
            jacobian.joints().iter().map(|n| next_q.get(n).unwrap() - q.get(n).unwrap()),
        );
        let mut events: Vec<StepEvent> =
            clamps.iter().map(|c| StepEvent::LimitClamp { joint: c.joint.clone() }).collect();

        let mask = source.mask(&chain.forward_kinematics(&next_q)?, frame)?;
        let this_frame = frame;
        frame += 1;
        q = next_q;

        let Ok(next_s) = mask.centroid() else {
            events.push(StepEvent::ObjectLost);
            log.records.push(StepRecord {
                step,
                frame: this_frame,
                q: q.clone(),
                features: None,
                error: None,
                area: 0,
                updates: updates.len(),
                jacobian: jacobian.values().clone(),
                events,
            });
            break Termination::ObjectLost;
        };
        let next_e = feature_error(next_s, config.target);

        if config.alpha > 0.0 {
            let de = DVector::from_vec(vec![next_e[0] - e[0], next_e[1] - e[1]]);
            match hb_update(&jacobian, &achieved, &de, config.alpha, &config.coupling, config.epsilon)? {
                UpdateOutcome::Applied(next) => {
                    jacobian = next;
                    updates.push(jacobian.clone());
                }
                UpdateOutcome::SkippedSingular { denominator } => {
                    events.push(StepEvent::UpdateSkipped { denominator });
                }
            }
        }

        let improving = next_e[0].hypot(next_e[1]) < e[0].hypot(e[1]) - 1e-9;
        stalled_for = if !clamps.is_empty() && !improving { stalled_for + 1 } else { 0 };

        s = next_s;
        e = next_e;
        log.records.push(StepRecord {
            step,
            frame: this_frame,
            q: q.clone(),
            features: Some(s),
            error: Some(e),
            area: mask.area(),
            updates: updates.len(),
            jacobian: jacobian.values().clone(),
            events,
        });
        if stalled_for >= STALL_STEPS {
            break Termination::Stalled;
        }
    };

    Ok(Episode { log, jacobian, updates, termination, final_state: q, next_frame: frame })
}
