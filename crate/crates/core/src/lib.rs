//! Segmentation-driven visual servoing in a deterministic simulated world.
//!
//! The crate is organised bottom-up:
//!
//! - [`mask`]: binary masks and their area, centroid and overlap features.
//! - [`scene`]: kinematic chains, pinhole cameras and ray-cast silhouettes.
//! - [`perception`]: seeded segmentation noise on top of ground-truth silhouettes.
//! - [`servo`]: the discrete control law and online pseudoinverse Jacobian learning.
//! - [`depth`]: object depth from area changes along an optical-axis approach.
//! - [`grasp`]: grasp standoff, wrist-roll selection and the lift check.
//! - [`harness`]: scenario files, experiment runners and CSV/report output.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod depth;
pub mod grasp;
pub mod harness;
pub mod mask;
pub mod perception;
pub mod scene;
pub mod servo;

pub use mask::{BinaryMask, FeatureVector};
pub use scene::{JointState, Pose, Scene};
