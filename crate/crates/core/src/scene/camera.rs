//! Ideal pinhole camera. The optical frame has `x` right, `y` down and `z`
//! along the viewing direction, matching the image-space pixel convention.

use nalgebra::{Point3, Vector3};

use super::{Pose, SceneError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    /// Focal length in pixels.
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraModel {
    /// Principal point defaults to `(width / 2, height / 2)`.
    pub fn new(focal: f64, width: usize, height: usize) -> Result<Self, SceneError> {
        Self::with_principal(focal, width, height, width as f64 / 2.0, height as f64 / 2.0)
    }

    pub fn with_principal(
        focal: f64,
        width: usize,
        height: usize,
        cx: f64,
        cy: f64,
    ) -> Result<Self, SceneError> {
        if !(focal > 0.0 && focal.is_finite()) {
            return Err(SceneError::InvalidCamera(format!("focal length {focal} must be positive")));
        }
        if width == 0 || height == 0 {
            return Err(SceneError::InvalidCamera("image must have positive size".into()));
        }
        if !(0.0..=width as f64).contains(&cx) || !(0.0..=height as f64).contains(&cy) {
            return Err(SceneError::InvalidCamera(format!("principal point ({cx}, {cy}) outside image")));
        }
        Ok(Self { focal, cx, cy, width, height })
    }

    /// Same field of view at `factor` times the resolution.
    pub fn scaled(&self, factor: usize) -> Self {
        let f = factor as f64;
        Self {
            focal: self.focal * f,
            cx: self.cx * f,
            cy: self.cy * f,
            width: self.width * factor,
            height: self.height * factor,
        }
    }

    /// Project a camera-frame point to pixel coordinates.
    pub fn project(&self, p: &Point3<f64>) -> Result<[f64; 2], SceneError> {
        if !(p.z > 0.0) {
            return Err(SceneError::BehindCamera { depth: p.z });
        }
        Ok([self.cx + self.focal * p.x / p.z, self.cy + self.focal * p.y / p.z])
    }

    /// Camera-frame direction (unnormalized, `z = 1`) through pixel `(u, v)`.
    pub fn ray_direction(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.focal, (v - self.cy) / self.focal, 1.0)
    }
}

/// Pixel coordinates of a world point seen from `camera`.
pub fn project_point(camera: &Pose, model: &CameraModel, world_point: &Point3<f64>) -> Result<[f64; 2], SceneError> {
    model.project(&camera.inverse_transform_point(world_point))
}
