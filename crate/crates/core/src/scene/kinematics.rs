//! Rigid poses, joint descriptors and serial kinematic chains.

use nalgebra::{Point3, Rotation3, Unit, Vector3};

use super::SceneError;

/// Rigid transform. Maps points from the child frame into the parent frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self { rotation: Rotation3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Rotation3::identity(), Vector3::new(x, y, z))
    }

    /// Fixed-axis roll/pitch/yaw in degrees, composed as `Rz(yaw) Ry(pitch) Rx(roll)`.
    pub fn from_rpy_deg(translation: [f64; 3], rpy_deg: [f64; 3]) -> Self {
        let [r, p, y] = rpy_deg.map(f64::to_radians);
        Self::new(Rotation3::from_euler_angles(r, p, y), Vector3::from(translation))
    }

    /// `self * other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let r = self.rotation.inverse();
        Pose { rotation: r, translation: -(r * self.translation) }
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse_transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        self.rotation.inverse() * (p - self.translation)
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse_transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse() * v
    }

    /// Largest deviation of `RᵀR` from identity.
    pub fn orthonormality_error(&self) -> f64 {
        let m = self.rotation.matrix();
        (m.transpose() * m - nalgebra::Matrix3::identity()).abs().max()
    }

    pub fn renormalized(mut self) -> Pose {
        self.rotation.renormalize();
        self
    }
}

impl std::ops::Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// One actuated degree of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    pub axis: Unit<Vector3<f64>>,
    /// Fixed offset from the previous link, applied before the joint motion.
    pub pre: Pose,
    pub min: f64,
    pub max: f64,
}

impl Joint {
    pub fn new(
        name: impl Into<String>,
        kind: JointKind,
        axis: [f64; 3],
        pre: Pose,
        limits: (f64, f64),
    ) -> Result<Self, SceneError> {
        let name = name.into();
        let v = Vector3::from(axis);
        if !v.iter().all(|c| c.is_finite()) || (v.norm() - 1.0).abs() > 1e-9 {
            return Err(SceneError::InvalidJoint(format!("axis of `{name}` is not unit length")));
        }
        let (min, max) = limits;
        if !(min <= max) {
            return Err(SceneError::InvalidJoint(format!("limits of `{name}` have min > max")));
        }
        Ok(Self { name, kind, axis: Unit::new_unchecked(v), pre, min, max })
    }

    pub fn revolute(name: &str, axis: [f64; 3], pre: Pose, limits: (f64, f64)) -> Result<Self, SceneError> {
        Self::new(name, JointKind::Revolute, axis, pre, limits)
    }

    pub fn prismatic(name: &str, axis: [f64; 3], pre: Pose, limits: (f64, f64)) -> Result<Self, SceneError> {
        Self::new(name, JointKind::Prismatic, axis, pre, limits)
    }

    /// Motion transform for a joint value.
    pub fn motion(&self, value: f64) -> Pose {
        match self.kind {
            JointKind::Revolute => {
                Pose::new(Rotation3::from_axis_angle(&self.axis, value), Vector3::zeros())
            }
            JointKind::Prismatic => Pose::new(Rotation3::identity(), self.axis.into_inner() * value),
        }
    }

    pub fn within_limits(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }
}

/// Ordered `(joint name, value)` pairs. Radians for revolute joints, meters for prismatic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JointState {
    values: Vec<(String, f64)>,
}

impl JointState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<S: Into<String>>(
        pairs: impl IntoIterator<Item = (S, f64)>,
    ) -> Result<Self, SceneError> {
        let mut state = Self::new();
        for (name, value) in pairs {
            let name = name.into();
            if state.get(&name).is_some() {
                return Err(SceneError::InvalidJointState(format!("duplicate joint `{name}`")));
            }
            state.set(&name, value)?;
        }
        Ok(state)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Set or append a joint value.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), SceneError> {
        if !value.is_finite() {
            return Err(SceneError::InvalidJointState(format!("value of `{name}` is not finite")));
        }
        match self.values.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = value,
            None => self.values.push((name.to_owned(), value)),
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(n, v)| (n.as_str(), *v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Serial chain from the world frame to a camera frame.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    joints: Vec<Joint>,
    /// Fixed transform from the last joint to the camera optical frame.
    tip: Pose,
}

impl KinematicChain {
    pub fn new(joints: Vec<Joint>, tip: Pose) -> Result<Self, SceneError> {
        for (i, j) in joints.iter().enumerate() {
            if joints[..i].iter().any(|o| o.name == j.name) {
                return Err(SceneError::InvalidJoint(format!("duplicate joint `{}` in chain", j.name)));
            }
        }
        Ok(Self { joints, tip })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn joint(&self, name: &str) -> Option<&Joint> {
        self.joints.iter().find(|j| j.name == name)
    }

    pub fn tip(&self) -> &Pose {
        &self.tip
    }

    /// Split into `[0, at)` with identity tip and `[at, n)` keeping this tip.
    pub fn split_at(&self, at: usize) -> (KinematicChain, KinematicChain) {
        let (a, b) = self.joints.split_at(at);
        (
            KinematicChain { joints: a.to_vec(), tip: Pose::identity() },
            KinematicChain { joints: b.to_vec(), tip: self.tip },
        )
    }

    /// Camera pose in the world frame.
    pub fn forward_kinematics(&self, q: &JointState) -> Result<Pose, SceneError> {
        let mut pose = Pose::identity();
        for joint in &self.joints {
            let value = q.get(&joint.name).ok_or_else(|| SceneError::MissingJoint(joint.name.clone()))?;
            if !joint.within_limits(value) {
                return Err(SceneError::LimitViolation {
                    joint: joint.name.clone(),
                    value,
                    min: joint.min,
                    max: joint.max,
                });
            }
            pose = pose.compose(&joint.pre).compose(&joint.motion(value));
        }
        Ok(pose.compose(&self.tip).renormalized())
    }
}

/// See [`KinematicChain::forward_kinematics`].
pub fn forward_kinematics(chain: &KinematicChain, q: &JointState) -> Result<Pose, SceneError> {
    chain.forward_kinematics(q)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use approx::assert_relative_eq;

    use super::*;

    const WIDE: (f64, f64) = (-10.0, 10.0);

    #[test]
    fn zero_state_identity_chain() {
        let chain = KinematicChain::new(
            vec![
                Joint::revolute("a", [0.0, 0.0, 1.0], Pose::identity(), WIDE).unwrap(),
                Joint::prismatic("b", [1.0, 0.0, 0.0], Pose::identity(), WIDE).unwrap(),
            ],
            Pose::identity(),
        )
        .unwrap();
        let q = JointState::from_pairs([("a", 0.0), ("b", 0.0)]).unwrap();
        let pose = chain.forward_kinematics(&q).unwrap();
        assert_relative_eq!(pose.rotation.matrix(), Rotation3::identity().matrix());
        assert_eq!(pose.translation, Vector3::zeros());
    }

    #[test]
    fn single_prismatic() {
        let chain = KinematicChain::new(
            vec![Joint::prismatic("lift", [0.0, 0.0, 1.0], Pose::identity(), WIDE).unwrap()],
            Pose::identity(),
        )
        .unwrap();
        let q = JointState::from_pairs([("lift", 0.25)]).unwrap();
        assert_eq!(chain.forward_kinematics(&q).unwrap().translation, Vector3::new(0.0, 0.0, 0.25));
    }

    #[test]
    fn revolute_then_prismatic() {
        let chain = KinematicChain::new(
            vec![
                Joint::revolute("yaw", [0.0, 0.0, 1.0], Pose::identity(), WIDE).unwrap(),
                Joint::prismatic("slide", [1.0, 0.0, 0.0], Pose::identity(), WIDE).unwrap(),
            ],
            Pose::identity(),
        )
        .unwrap();
        let q = JointState::from_pairs([("yaw", FRAC_PI_2), ("slide", 1.0)]).unwrap();
        let pose = chain.forward_kinematics(&q).unwrap();
        assert_relative_eq!(pose.translation, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-12);
        let expected = Rotation3::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2);
        assert_relative_eq!(pose.rotation.matrix(), expected.matrix(), epsilon = 1e-12);
    }

    #[test]
    fn missing_and_out_of_limit_joints() {
        let chain = KinematicChain::new(
            vec![Joint::prismatic("lift", [0.0, 0.0, 1.0], Pose::identity(), (0.0, 0.5)).unwrap()],
            Pose::identity(),
        )
        .unwrap();
        assert!(matches!(
            chain.forward_kinematics(&JointState::new()),
            Err(SceneError::MissingJoint(name)) if name == "lift"
        ));
        let q = JointState::from_pairs([("lift", 0.6)]).unwrap();
        assert!(matches!(chain.forward_kinematics(&q), Err(SceneError::LimitViolation { .. })));
    }

    #[test]
    fn rejects_bad_descriptors() {
        assert!(Joint::revolute("a", [0.0, 0.0, 2.0], Pose::identity(), WIDE).is_err());
        assert!(Joint::revolute("a", [0.0, 0.0, 1.0], Pose::identity(), (1.0, 0.0)).is_err());
        assert!(JointState::from_pairs([("a", 0.0), ("a", 1.0)]).is_err());
        assert!(JointState::from_pairs([("a", f64::NAN)]).is_err());
    }

    #[test]
    fn rpy_matches_axis_composition() {
        let pose = Pose::from_rpy_deg([0.0; 3], [-90.0, 0.0, -90.0]);
        // camera looking along +x with image x along -y and image y along -z
        let m = pose.rotation.matrix();
        assert_relative_eq!(m.column(0).into_owned(), Vector3::new(0.0, -1.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(m.column(1).into_owned(), Vector3::new(0.0, 0.0, -1.0), epsilon = 1e-12);
        assert_relative_eq!(m.column(2).into_owned(), Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-12);
    }
}
