//! Discrete joint-space visual servoing with an online-learned pseudoinverse
//! feature Jacobian.
//!
//! The controller commands `Δq = -λ J⁺ e` directly in joint space, where `e`
//! is the centroid error in pixels and `J⁺` (joint units per pixel) is
//! refined after every motion with a rank-one Broyden step on the
//! pseudoinverse whose correction is masked elementwise by a logical coupling
//! matrix `H`. Entries where `H` is zero never change, so actuators only ever
//! respond to the features they are allowed to.

mod episode;
pub mod persist;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use episode::{servo_episode, Episode, StepEvent, StepRecord, Termination, TrajectoryLog};
pub use persist::JacobianFile;

use crate::mask::FeatureVector;
use crate::perception::PerceptionError;
use crate::scene::SceneError;

/// Names of the two centroid features, in column order.
pub const FEATURES: [&str; 2] = ["s_x", "s_y"];

/// Initial value of every coupled entry before learning.
pub const DEFAULT_SEED_VALUE: f64 = 0.001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServoError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid coupling matrix: {0}")]
    InvalidCoupling(String),
    #[error("invalid servo configuration: {0}")]
    InvalidConfig(String),
    #[error("target object is not visible")]
    ObjectLost,
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error("malformed jacobian file: {0}")]
    Parse(String),
}

/// Named coupling presets for the controlled-joint sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Head,
    ArmLift,
    ArmWrist,
    ArmBoth,
    Base,
    BaseGrasp,
}

impl Preset {
    pub const ALL: [Preset; 6] =
        [Preset::Head, Preset::ArmLift, Preset::ArmWrist, Preset::ArmBoth, Preset::Base, Preset::BaseGrasp];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Head => "head",
            Preset::ArmLift => "arm_lift",
            Preset::ArmWrist => "arm_wrist",
            Preset::ArmBoth => "arm_both",
            Preset::Base => "base",
            Preset::BaseGrasp => "base_grasp",
        }
    }

    /// Camera the preset servos with.
    pub fn camera(self) -> &'static str {
        match self {
            Preset::Head => "head",
            _ => "hand",
        }
    }

    /// Default image-space target. Grasp positioning puts the object under
    /// the fingers, which sit left of the hand camera's optical axis.
    pub fn default_target(self) -> FeatureVector {
        match self {
            Preset::BaseGrasp => FeatureVector::new(220.0, 240.0),
            _ => FeatureVector::new(320.0, 240.0),
        }
    }

    pub fn coupling(self) -> CouplingMatrix {
        let (joints, rows): (&[&str], &[[bool; 2]]) = match self {
            Preset::Head => (&["head_pan", "head_tilt"], &[[true, false], [false, true]]),
            Preset::ArmLift => (&["arm_lift", "arm_roll"], &[[true, false], [false, true]]),
            Preset::ArmWrist => (&["wrist_flex", "arm_roll"], &[[true, false], [false, true]]),
            Preset::ArmBoth => {
                (&["arm_lift", "wrist_flex", "arm_roll"], &[[true, false], [true, false], [false, true]])
            }
            Preset::Base | Preset::BaseGrasp => {
                (&["base_forward", "base_lateral"], &[[true, false], [false, true]])
            }
        };
        CouplingMatrix::new(joints.iter().map(|s| s.to_string()).collect(), rows.iter().map(|r| r.to_vec()).collect())
            .expect("presets are valid")
    }
}

impl std::str::FromStr for Preset {
    type Err = ServoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ServoError::InvalidConfig(format!("unknown preset `{s}`")))
    }
}

/// Logical `n × k` matrix: entry `(i, j)` is set when joint `i` may respond to feature `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    joints: Vec<String>,
    mask: DMatrix<f64>,
}

impl CouplingMatrix {
    pub fn new(joints: Vec<String>, rows: Vec<Vec<bool>>) -> Result<Self, ServoError> {
        if joints.len() != rows.len() {
            return Err(ServoError::DimensionMismatch(format!("{} joints but {} rows", joints.len(), rows.len())));
        }
        let k = rows.first().map_or(FEATURES.len(), Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(ServoError::DimensionMismatch("ragged coupling rows".into()));
        }
        for (i, name) in joints.iter().enumerate() {
            if joints[..i].contains(name) {
                return Err(ServoError::InvalidCoupling(format!("duplicate joint `{name}`")));
            }
        }
        let n = joints.len();
        let mask = DMatrix::from_fn(n, k, |i, j| if rows[i][j] { 1.0 } else { 0.0 });
        let h = Self { joints, mask };
        for j in 0..k {
            if h.mask.column(j).iter().all(|&v| v == 0.0) {
                return Err(ServoError::InvalidCoupling(format!("feature column {j} has no coupled joint")));
            }
        }
        Ok(h)
    }

    /// The all-zero matrix. It fails the per-column invariant, so it is only
    /// built explicitly to exercise full gating.
    pub fn zeros(joints: Vec<String>, features: usize) -> Self {
        let n = joints.len();
        Self { joints, mask: DMatrix::zeros(n, features) }
    }

    /// Every joint coupled to every feature: the ungated Broyden update.
    pub fn all_ones(joints: Vec<String>, features: usize) -> Self {
        let n = joints.len();
        Self { joints, mask: DMatrix::from_element(n, features, 1.0) }
    }

    pub fn joints(&self) -> &[String] {
        &self.joints
    }

    pub fn features(&self) -> usize {
        self.mask.ncols()
    }

    pub fn get(&self, joint: usize, feature: usize) -> bool {
        self.mask[(joint, feature)] != 0.0
    }

    /// 0/1 entries as reals.
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.mask
    }
}

/// Learned `∂q/∂s`, one row per controlled joint.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoJacobian {
    joints: Vec<String>,
    values: DMatrix<f64>,
}

impl PseudoJacobian {
    pub fn new(joints: Vec<String>, values: DMatrix<f64>) -> Result<Self, ServoError> {
        if joints.len() != values.nrows() {
            return Err(ServoError::DimensionMismatch(format!("{} joints for {} rows", joints.len(), values.nrows())));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(ServoError::InvalidConfig("non-finite jacobian entry".into()));
        }
        Ok(Self { joints, values })
    }

    pub fn joints(&self) -> &[String] {
        &self.joints
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, joint: &str, feature: usize) -> Option<f64> {
        let i = self.joints.iter().position(|j| j == joint)?;
        (feature < self.values.ncols()).then(|| self.values[(i, feature)])
    }

    /// `J⁺ ∘ (1 − H) = 0`.
    pub fn satisfies_gating(&self, h: &CouplingMatrix) -> bool {
        self.values.shape() == h.mask.shape()
            && self.values.iter().zip(h.mask.iter()).all(|(v, m)| *m != 0.0 || *v == 0.0)
    }
}

/// `J⁺₀ = seed_value · H`.
pub fn init_pseudojacobian(h: &CouplingMatrix, seed_value: f64) -> PseudoJacobian {
    PseudoJacobian { joints: h.joints.clone(), values: &h.mask * seed_value }
}

/// `e = s − s*`.
pub fn feature_error(s: FeatureVector, target: FeatureVector) -> [f64; 2] {
    [s.x - target.x, s.y - target.y]
}

/// `‖e‖₂ ≤ tolerance`.
pub fn converged(e: [f64; 2], tolerance: f64) -> bool {
    e[0].hypot(e[1]) <= tolerance
}

/// `Δq = −λ J⁺ e`, ordered like the jacobian's joints.
pub fn control_step(jacobian: &PseudoJacobian, e: &[f64], gain: f64) -> Result<DVector<f64>, ServoError> {
    if e.len() != jacobian.values.ncols() {
        return Err(ServoError::DimensionMismatch(format!(
            "error has {} components, jacobian has {} feature columns",
            e.len(),
            jacobian.values.ncols()
        )));
    }
    Ok(&jacobian.values * DVector::from_column_slice(e) * -gain)
}

/// Result of one learning step.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateOutcome {
    Applied(PseudoJacobian),
    /// `|Δqᵀ J⁺ Δe|` was too small relative to `‖Δq‖ ‖J⁺‖ ‖Δe‖`; the
    /// jacobian is left unchanged.
    SkippedSingular { denominator: f64 },
}

impl UpdateOutcome {
    pub fn jacobian_or<'a>(&'a self, current: &'a PseudoJacobian) -> &'a PseudoJacobian {
        match self {
            UpdateOutcome::Applied(j) => j,
            UpdateOutcome::SkippedSingular { .. } => current,
        }
    }
}

/// Gated Broyden update of the pseudoinverse:
///
/// `J⁺ₜ₊₁ = J⁺ₜ + α ((Δq − J⁺ₜ Δe) Δqᵀ J⁺ₜ / (Δqᵀ J⁺ₜ Δe)) ∘ H`
///
/// `epsilon` bounds the normalized denominator
/// `|Δqᵀ J⁺ Δe| / (‖Δq‖ ‖J⁺‖_F ‖Δe‖)`; below it the step is skipped.
pub fn hb_update(
    jacobian: &PseudoJacobian,
    dq: &DVector<f64>,
    de: &DVector<f64>,
    alpha: f64,
    h: &CouplingMatrix,
    epsilon: f64,
) -> Result<UpdateOutcome, ServoError> {
    let j = &jacobian.values;
    if dq.len() != j.nrows() || de.len() != j.ncols() || h.mask.shape() != j.shape() {
        return Err(ServoError::DimensionMismatch(format!(
            "Δq {} / Δe {} / H {:?} against J⁺ {:?}",
            dq.len(),
            de.len(),
            h.mask.shape(),
            j.shape()
        )));
    }
    let j_de = j * de;
    let denominator = dq.dot(&j_de);
    let scale = dq.norm() * j.norm() * de.norm();
    if !(scale > 0.0 && scale.is_finite() && denominator.abs() >= epsilon * scale) {
        return Ok(UpdateOutcome::SkippedSingular { denominator });
    }
    let dq_j = dq.transpose() * j;
    let correction = ((dq - &j_de) * dq_j / denominator).component_mul(&h.mask);
    let values = j + correction * alpha;
    if !values.iter().all(|v| v.is_finite()) {
        return Ok(UpdateOutcome::SkippedSingular { denominator });
    }
    Ok(UpdateOutcome::Applied(PseudoJacobian { joints: jacobian.joints.clone(), values }))
}

/// Controller parameters for one servo configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ServoConfig {
    pub gain: f64,
    pub alpha: f64,
    pub target: FeatureVector,
    pub tolerance: f64,
    pub epsilon: f64,
    pub coupling: CouplingMatrix,
}

impl ServoConfig {
    /// λ = 1, tolerance 5 px, ε = 1e-9, frozen jacobian.
    pub fn new(coupling: CouplingMatrix, target: FeatureVector) -> Self {
        Self { gain: 1.0, alpha: 0.0, target, tolerance: 5.0, epsilon: 1e-9, coupling }
    }

    pub fn from_preset(preset: Preset) -> Self {
        Self::new(preset.coupling(), preset.default_target())
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<(), ServoError> {
        let bad = |msg: String| Err(ServoError::InvalidConfig(msg));
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return bad(format!("gain {} must be positive", self.gain));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha {} must be non-negative", self.alpha));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance {} must be positive", self.tolerance));
        }
        if !(self.epsilon >= 0.0) {
            return bad(format!("epsilon {} must be non-negative", self.epsilon));
        }
        let t = self.target;
        if !(t.x >= 0.0 && t.x < width as f64 && t.y >= 0.0 && t.y < height as f64) {
            return bad(format!("target ({}, {}) outside the {width}x{height} image", t.x, t.y));
        }
        Ok(())
    }
}
