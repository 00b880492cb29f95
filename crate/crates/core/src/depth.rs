//! Object depth from the growth of its segmentation area during an approach.
//!
//! With the object centred on the optical axis, projected area falls off with
//! the inverse square of distance, so `(z_camera - z_object) √s_A` is the same
//! constant `c_object` for every frame. Each observation gives one row of
//!
//! ```text
//! [√s_A,i  1] [ẑ_object ĉ_object]ᵀ = z_camera,i √s_A,i
//! ```
//!
//! and the stacked system is solved in the least-squares sense.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::MaskSource;
use crate::scene::{JointState, Pose, Robot, SceneError};
use crate::servo::{converged, servo_episode, PseudoJacobian, ServoConfig, ServoError, Termination, TrajectoryLog};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DepthError {
    #[error("need at least {needed} observations, have {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate system: all observations have the same area")]
    DegenerateSystem,
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("invalid approach parameter: {0}")]
    InvalidParameter(String),
    #[error("target object is not visible")]
    ObjectLost,
    #[error(transparent)]
    Servo(#[from] ServoError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("observation log: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthObservation {
    /// Camera position along the approach axis, meters.
    pub z_camera: f64,
    /// Segmentation area, pixels.
    pub s_a: f64,
}

impl DepthObservation {
    pub fn new(z_camera: f64, s_a: f64) -> Result<Self, DepthError> {
        if !z_camera.is_finite() {
            return Err(DepthError::InvalidObservation(format!("z_camera {z_camera} is not finite")));
        }
        if !(s_a > 0.0 && s_a.is_finite()) {
            return Err(DepthError::InvalidObservation(format!("area {s_a} must be positive")));
        }
        Ok(Self { z_camera, s_a })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthEstimate {
    pub z_object: f64,
    /// `(z_camera - z_object) √s_A`, meters·√pixels.
    pub c_object: f64,
    pub m: usize,
    /// RMS of `A x - b`.
    pub residual_rms: f64,
}

/// Least-squares depth over all observations, solved by QR factorization.
pub fn estimate(observations: &[DepthObservation]) -> Result<DepthEstimate, DepthError> {
    let m = observations.len();
    if m < 2 {
        return Err(DepthError::InsufficientData { needed: 2, got: m });
    }
    let roots: Vec<f64> = observations.iter().map(|o| o.s_a.sqrt()).collect();
    let (lo, hi) = roots.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    if hi - lo <= 1e-12 * hi {
        return Err(DepthError::DegenerateSystem);
    }
    let a = DMatrix::from_fn(m, 2, |i, j| if j == 0 { roots[i] } else { 1.0 });
    let b = DVector::from_iterator(m, observations.iter().zip(&roots).map(|(o, r)| o.z_camera * r));

    let qr = a.clone().qr();
    let qtb = qr.q().transpose() * &b;
    let r = qr.r();
    if r[(1, 1)].abs() <= 1e-12 * r[(0, 0)].abs() {
        return Err(DepthError::DegenerateSystem);
    }
    let c_object = qtb[1] / r[(1, 1)];
    let z_object = (qtb[0] - r[(0, 1)] * c_object) / r[(0, 0)];

    let residual = a * DVector::from_vec(vec![z_object, c_object]) - b;
    let residual_rms = (residual.norm_squared() / m as f64).sqrt();
    Ok(DepthEstimate { z_object, c_object, m, residual_rms })
}

/// Estimates over every prefix of length 2..=m.
pub fn incremental_estimates(observations: &[DepthObservation]) -> Result<Vec<DepthEstimate>, DepthError> {
    if observations.len() < 2 {
        return Err(DepthError::InsufficientData { needed: 2, got: observations.len() });
    }
    (2..=observations.len()).map(|k| estimate(&observations[..k])).collect()
}

/// True when the last `window` estimates span less than `tol` meters.
pub fn convergence_check(trace: &[DepthEstimate], window: usize, tol: f64) -> Result<bool, DepthError> {
    if window < 2 {
        return Err(DepthError::InvalidParameter(format!("window {window} must be at least 2")));
    }
    if trace.len() < window {
        return Err(DepthError::InsufficientData { needed: window, got: trace.len() });
    }
    let tail = &trace[trace.len() - window..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.z_object), hi.max(e.z_object)));
    Ok(hi - lo < tol)
}

/// Why a frame did not become an observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub frame: u64,
    pub reason: String,
}

/// Collects observations only while the object is centred.
#[derive(Debug, Clone, Default)]
pub struct DepthAccumulator {
    pub tolerance: f64,
    observations: Vec<DepthObservation>,
    rejected: Vec<Rejection>,
}

impl DepthAccumulator {
    pub fn new(tolerance: f64) -> Self {
        Self { tolerance, ..Self::default() }
    }

    /// Record `(z_camera, area)` if `error` is within tolerance. Returns whether it was kept.
    pub fn offer(&mut self, frame: u64, z_camera: f64, area: usize, error: Option<[f64; 2]>) -> bool {
        let reason = match error {
            None => "object_lost".to_string(),
            Some(e) if !converged(e, self.tolerance) => format!("off_center:{:.3}", e[0].hypot(e[1])),
            Some(_) => match DepthObservation::new(z_camera, area as f64) {
                Ok(obs) => {
                    self.observations.push(obs);
                    return true;
                }
                Err(err) => err.to_string(),
            },
        };
        self.rejected.push(Rejection { frame, reason });
        false
    }

    pub fn observations(&self) -> &[DepthObservation] {
        &self.observations
    }

    pub fn rejected(&self) -> &[Rejection] {
        &self.rejected
    }

    pub fn estimate(&self) -> Result<DepthEstimate, DepthError> {
        estimate(&self.observations)
    }
}

/// Position of a camera along its own optical axis, measured backwards so the
/// value grows as the camera retreats from what it looks at.
pub fn approach_coordinate(camera: &Pose) -> f64 {
    -camera.rotation.transform_vector(&Vector3::z()).dot(&camera.translation)
}

/// One row of the observation log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRow {
    pub step: usize,
    pub z_camera_m: f64,
    #[serde(rename = "s_A_px")]
    pub s_a_px: f64,
    pub z_hat_m: Option<f64>,
    pub c_hat: Option<f64>,
    pub residual_rms: Option<f64>,
}

impl ObservationRow {
    pub fn observation(&self) -> Result<DepthObservation, DepthError> {
        DepthObservation::new(self.z_camera_m, self.s_a_px)
    }
}

/// Rows pairing each observation with the estimate over the observations up to it.
pub fn observation_rows(observations: &[DepthObservation]) -> Result<Vec<ObservationRow>, DepthError> {
    let trace = if observations.len() >= 2 { incremental_estimates(observations)? } else { Vec::new() };
    Ok(observations
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let est = i.checked_sub(1).and_then(|k| trace.get(k));
            ObservationRow {
                step: i,
                z_camera_m: o.z_camera,
                s_a_px: o.s_a,
                z_hat_m: est.map(|e| e.z_object),
                c_hat: est.map(|e| e.c_object),
                residual_rms: est.map(|e| e.residual_rms),
            }
        })
        .collect())
}

pub fn write_observation_csv(out: impl Write, rows: &[ObservationRow]) -> Result<(), DepthError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| DepthError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| DepthError::Csv(e.to_string()))
}

/// Read an observation log; lines starting with `#` are ignored.
pub fn read_observation_csv(input: impl Read) -> Result<Vec<ObservationRow>, DepthError> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input)
        .deserialize()
        .collect::<Result<Vec<ObservationRow>, _>>()
        .map_err(|e| DepthError::Csv(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproachConfig {
    /// Joint moved between observations.
    pub joint: String,
    /// Signed joint change per move.
    pub delta: f64,
    /// Maximum number of moves.
    pub max_moves: usize,
    /// Servo steps allowed to re-centre before each observation.
    pub recenter_steps: usize,
    pub min_observations: usize,
    pub window: usize,
    /// Span of the last `window` estimates that counts as converged, meters.
    pub tol: f64,
}

impl Default for ApproachConfig {
    fn default() -> Self {
        Self {
            joint: "arm_lift".into(),
            delta: -0.011,
            max_moves: 30,
            recenter_steps: 10,
            min_observations: 6,
            window: 4,
            tol: 0.002,
        }
    }
}

impl ApproachConfig {
    pub fn validate(&self) -> Result<(), DepthError> {
        let bad = |msg: String| Err(DepthError::InvalidParameter(msg));
        if !(self.delta != 0.0 && self.delta.is_finite()) {
            return bad(format!("delta {} must be nonzero", self.delta));
        }
        if self.window < 2 {
            return bad(format!("window {} must be at least 2", self.window));
        }
        if self.min_observations < 2 {
            return bad(format!("min_observations {} must be at least 2", self.min_observations));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol {} must be positive", self.tol));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ApproachOutcome {
    pub observations: Vec<DepthObservation>,
    pub trace: Vec<DepthEstimate>,
    pub rejected: Vec<Rejection>,
    pub converged: bool,
    /// Servo steps taken while re-centring.
    pub servo_log: TrajectoryLog,
    pub final_state: JointState,
    pub next_frame: u64,
}

impl ApproachOutcome {
    pub fn estimate(&self) -> Option<&DepthEstimate> {
        self.trace.last()
    }
}

/// Centre, observe, move along the optical axis, repeat.
///
/// The jacobian is held fixed. Stops once `min_observations` are in hand and
/// the trace passes [`convergence_check`], or when the move budget or the
/// approach joint's limit is reached.
#[allow(clippy::too_many_arguments)]
pub fn approach(
    robot: &Robot,
    camera: &str,
    source: &dyn MaskSource,
    servo: &ServoConfig,
    jacobian: &PseudoJacobian,
    start: &JointState,
    config: &ApproachConfig,
    first_frame: u64,
) -> Result<ApproachOutcome, DepthError> {
    config.validate()?;
    let chain = robot.camera(camera)?;
    let joint = robot.joint(&config.joint).ok_or_else(|| SceneError::MissingJoint(config.joint.clone()))?;
    let servo = ServoConfig { alpha: 0.0, ..servo.clone() };

    let mut q = start.clone();
    let mut frame = first_frame;
    let mut acc = DepthAccumulator::new(servo.tolerance);
    let mut trace = Vec::new();
    let mut servo_log = TrajectoryLog::new(servo.target, jacobian.joints().to_vec());
    let mut done = false;

    for moves in 0..=config.max_moves {
        let episode = match servo_episode(robot, camera, source, &servo, jacobian.clone(), &q, config.recenter_steps, frame) {
            Err(ServoError::ObjectLost) => return Err(DepthError::ObjectLost),
            other => other?,
        };
        frame = episode.next_frame;
        q = episode.final_state.clone();
        if episode.termination == Termination::ObjectLost {
            return Err(DepthError::ObjectLost);
        }
        let last = episode.log.records.last().expect("episodes record their first frame");
        let z_camera = approach_coordinate(&chain.forward_kinematics(&q)?);
        let kept = acc.offer(last.frame, z_camera, last.area, last.error);
        servo_log.extend(episode.log);

        if kept && acc.observations().len() >= 2 {
            trace.push(acc.estimate()?);
            if acc.observations().len() >= config.min_observations
                && trace.len() >= config.window
                && convergence_check(&trace, config.window, config.tol)?
            {
                done = true;
                break;
            }
        }
        if moves == config.max_moves {
            break;
        }
        let current = q.get(&config.joint).ok_or_else(|| SceneError::MissingJoint(config.joint.clone()))?;
        let next = current + config.delta;
        if !joint.within_limits(next) {
            break;
        }
        q.set(&config.joint, next)?;
    }

    Ok(ApproachOutcome {
        observations: acc.observations().to_vec(),
        trace,
        rejected: acc.rejected().to_vec(),
        converged: done,
        servo_log,
        final_state: q,
        next_frame: frame,
    })
}
