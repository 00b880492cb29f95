//! Simulated segmentation front end.
//!
//! Ground-truth silhouettes are corrupted by three error classes seen in real
//! video object segmentation: boundary erosion or dilation, missing object
//! pixels, and false-positive blobs elsewhere in the frame. Noise is applied
//! in that fixed order from an RNG keyed by `(seed, frame_index)`, so any
//! frame of an episode can be regenerated on its own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mask::BinaryMask;
use crate::scene::{Pose, Scene, SceneError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub seed: u64,
    /// Disk radius in pixels; negative erodes, positive dilates.
    pub boundary_morph: i32,
    /// Probability that an object pixel is dropped.
    pub dropout_prob: f64,
    /// Expected number of false-positive blobs per frame.
    pub blob_rate: f64,
    /// Semi-axis range of false-positive ellipses, pixels.
    pub blob_radius: [f64; 2],
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { seed: 0, boundary_morph: 0, dropout_prob: 0.0, blob_rate: 0.0, blob_radius: [4.0, 12.0] }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn is_neutral(&self) -> bool {
        self.boundary_morph == 0 && self.dropout_prob == 0.0 && self.blob_rate == 0.0
    }

    pub fn validate(&self) -> Result<(), PerceptionError> {
        if !(0.0..=1.0).contains(&self.dropout_prob) {
            return Err(PerceptionError::InvalidNoise(format!("dropout_prob {} outside [0, 1]", self.dropout_prob)));
        }
        if !(self.blob_rate >= 0.0 && self.blob_rate.is_finite()) {
            return Err(PerceptionError::InvalidNoise(format!("blob_rate {} must be >= 0", self.blob_rate)));
        }
        let [lo, hi] = self.blob_radius;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(PerceptionError::InvalidNoise(format!("blob_radius [{lo}, {hi}] is not a valid range")));
        }
        Ok(())
    }

    fn rng(&self, frame_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(frame_index);
        rng
    }

    /// Corrupt a ground-truth mask for the given frame.
    pub fn apply(&self, mask: &BinaryMask, frame_index: u64) -> BinaryMask {
        if self.is_neutral() {
            return mask.clone();
        }
        let mut rng = self.rng(frame_index);
        let mut out = match self.boundary_morph {
            0 => mask.clone(),
            r if r > 0 => dilate(mask, r as usize),
            r => erode(mask, r.unsigned_abs() as usize),
        };
        if self.dropout_prob > 0.0 {
            let labeled: Vec<_> = out.labeled_pixels().collect();
            for (x, y) in labeled {
                if rng.random::<f64>() < self.dropout_prob {
                    out.set(x, y, false);
                }
            }
        }
        if self.blob_rate > 0.0 {
            let count = Poisson::new(self.blob_rate).map(|p| p.sample(&mut rng) as usize).unwrap_or(0);
            for _ in 0..count {
                let cx = rng.random::<f64>() * out.width() as f64;
                let cy = rng.random::<f64>() * out.height() as f64;
                let [lo, hi] = self.blob_radius;
                let a = rng.random_range(lo..=hi);
                let b = rng.random_range(lo..=hi);
                let theta = rng.random::<f64>() * std::f64::consts::PI;
                paint_ellipse(&mut out, cx, cy, a, b, theta);
            }
        }
        out
    }
}

fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut offsets = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                offsets.push((dx, dy));
            }
        }
    }
    offsets
}

fn offset(mask: &BinaryMask, x: usize, y: usize, (dx, dy): (isize, isize)) -> Option<(usize, usize)> {
    let nx = x.checked_add_signed(dx)?;
    let ny = y.checked_add_signed(dy)?;
    (nx < mask.width() && ny < mask.height()).then_some((nx, ny))
}

/// Morphological dilation with a disk of `radius` pixels.
pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let offsets = disk_offsets(radius);
    let mut out = mask.clone();
    for (x, y) in mask.labeled_pixels() {
        for &o in &offsets {
            if let Some((nx, ny)) = offset(mask, x, y, o) {
                out.set(nx, ny, true);
            }
        }
    }
    out
}

/// Morphological erosion with a disk of `radius` pixels; outside the image counts as background.
pub fn erode(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let offsets = disk_offsets(radius);
    let mut out = mask.clone();
    for (x, y) in mask.labeled_pixels() {
        let keep = offsets.iter().all(|&o| offset(mask, x, y, o).is_some_and(|(nx, ny)| mask.get(nx, ny)));
        if !keep {
            out.set(x, y, false);
        }
    }
    out
}

fn paint_ellipse(mask: &mut BinaryMask, cx: f64, cy: f64, a: f64, b: f64, theta: f64) {
    let (s, c) = theta.sin_cos();
    let r = a.max(b);
    let x0 = (cx - r).floor().max(0.0) as usize;
    let y0 = (cy - r).floor().max(0.0) as usize;
    let x1 = ((cx + r).ceil() as usize).min(mask.width() - 1);
    let y1 = ((cy + r).ceil() as usize).min(mask.height() - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let u = c * dx + s * dy;
            let v = -s * dx + c * dy;
            if (u / a).powi(2) + (v / b).powi(2) <= 1.0 {
                mask.set(x, y, true);
            }
        }
    }
}

/// Noisy segmentation of `object_id` seen from `camera`.
pub fn segment(
    scene: &Scene,
    camera: &Pose,
    object_id: &str,
    noise: &NoiseModel,
    frame_index: u64,
) -> Result<BinaryMask, PerceptionError> {
    let truth = crate::scene::render_silhouette(scene, camera, &scene.camera_model, object_id)?;
    Ok(noise.apply(&truth, frame_index))
}

/// Anything that turns a camera pose into an object mask.
pub trait MaskSource {
    fn mask(&self, camera: &Pose, frame_index: u64) -> Result<BinaryMask, PerceptionError>;
}

/// Ray-cast silhouette of one scene object plus seeded noise.
#[derive(Debug, Clone)]
pub struct SimulatedSegmenter {
    pub scene: Scene,
    pub object_id: String,
    pub noise: NoiseModel,
}

impl SimulatedSegmenter {
    pub fn new(scene: Scene, object_id: impl Into<String>, noise: NoiseModel) -> Result<Self, PerceptionError> {
        let object_id = object_id.into();
        scene.object(&object_id)?;
        noise.validate()?;
        Ok(Self { scene, object_id, noise })
    }
}

impl MaskSource for SimulatedSegmenter {
    fn mask(&self, camera: &Pose, frame_index: u64) -> Result<BinaryMask, PerceptionError> {
        segment(&self.scene, camera, &self.object_id, &self.noise, frame_index)
    }
}
