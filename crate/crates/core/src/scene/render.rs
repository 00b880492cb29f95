//! Analytic objects and per-pixel ray-cast silhouettes.

use nalgebra::{Point3, Unit, Vector3};

use super::{CameraModel, Pose, Scene, SceneError};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Sphere { radius: f64 },
    /// Axis-aligned in the object frame.
    Box { half_extents: Vector3<f64> },
    /// Zero-thickness disk; `normal` is expressed in the object frame.
    Disk { radius: f64, normal: Unit<Vector3<f64>> },
}

impl Shape {
    pub fn validate(&self) -> Result<(), SceneError> {
        let ok = match self {
            Shape::Sphere { radius } | Shape::Disk { radius, .. } => *radius > 0.0 && radius.is_finite(),
            Shape::Box { half_extents } => half_extents.iter().all(|h| *h > 0.0 && h.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(SceneError::InvalidObject(format!("non-positive dimension in {self:?}")))
        }
    }

    pub fn bounding_radius(&self) -> f64 {
        match self {
            Shape::Sphere { radius } | Shape::Disk { radius, .. } => *radius,
            Shape::Box { half_extents } => half_extents.norm(),
        }
    }

    /// Does the ray `origin + t * dir`, `t > 0`, meet the solid? Object-frame inputs.
    fn ray_hits(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> bool {
        match self {
            Shape::Sphere { radius } => {
                let oc = origin.coords;
                let a = dir.norm_squared();
                let b = oc.dot(dir);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return false;
                }
                // far root must lie in front of the origin
                (-b + disc.sqrt()) / a > 0.0
            }
            Shape::Box { half_extents } => {
                let (mut t_min, mut t_max) = (f64::NEG_INFINITY, f64::INFINITY);
                for k in 0..3 {
                    let (o, d, h) = (origin[k], dir[k], half_extents[k]);
                    if d == 0.0 {
                        if o < -h || o > h {
                            return false;
                        }
                        continue;
                    }
                    let t1 = (-h - o) / d;
                    let t2 = (h - o) / d;
                    t_min = t_min.max(t1.min(t2));
                    t_max = t_max.min(t1.max(t2));
                }
                t_max >= t_min && t_max > 0.0
            }
            Shape::Disk { radius, normal } => {
                let denom = normal.dot(dir);
                if denom == 0.0 {
                    return false;
                }
                let t = -normal.dot(&origin.coords) / denom;
                t > 0.0 && (origin.coords + dir * t).norm_squared() <= radius * radius
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub id: String,
    pub shape: Shape,
    /// Object frame in the world frame.
    pub pose: Pose,
}

impl SceneObject {
    pub fn new(id: impl Into<String>, shape: Shape, pose: Pose) -> Result<Self, SceneError> {
        shape.validate()?;
        Ok(Self { id: id.into(), shape, pose })
    }

    pub fn center(&self) -> Point3<f64> {
        Point3::from(self.pose.translation)
    }

    /// Height of the surface an overhead camera sees first: the top face of a
    /// box, the plane of a disk, the centre of a sphere (its silhouette plane).
    pub fn reference_height(&self) -> f64 {
        match &self.shape {
            Shape::Box { half_extents } => {
                // largest world-z reach of the box corners
                let r = self.pose.rotation.matrix();
                let reach: f64 = (0..3).map(|k| (r[(2, k)] * half_extents[k]).abs()).sum();
                self.pose.translation.z + reach
            }
            Shape::Sphere { .. } | Shape::Disk { .. } => self.pose.translation.z,
        }
    }

    /// Silhouette as seen from `camera`.
    pub fn render(&self, camera: &Pose, model: &CameraModel) -> BinaryMask {
        let mut mask = BinaryMask::new(model.width, model.height).expect("camera model has positive size");
        // camera → object frame
        let to_object = self.pose.inverse().compose(camera);
        let origin = Point3::from(to_object.translation);
        let Some((x0, x1, y0, y1)) = self.pixel_bounds(camera, model) else {
            return mask;
        };
        for v in y0..=y1 {
            for u in x0..=x1 {
                let dir = to_object.rotation * model.ray_direction(u as f64, v as f64);
                if self.shape.ray_hits(&origin, &dir) {
                    mask.set(u, v, true);
                }
            }
        }
        mask
    }

    /// Conservative pixel rectangle containing the silhouette, or `None` when
    /// the object lies entirely behind the camera.
    fn pixel_bounds(&self, camera: &Pose, model: &CameraModel) -> Option<(usize, usize, usize, usize)> {
        let full = Some((0, model.width - 1, 0, model.height - 1));
        let c = camera.inverse_transform_point(&self.center());
        let r = self.shape.bounding_radius();
        if c.z + r <= 0.0 {
            return None;
        }
        if c.z - r <= 1e-9 {
            return full;
        }
        // Perspective maps the bounding cube to the hull of its projected corners.
        let (mut umin, mut umax, mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for sx in [-r, r] {
            for sy in [-r, r] {
                for sz in [-r, r] {
                    let [u, v] = model.project(&Point3::new(c.x + sx, c.y + sy, c.z + sz)).ok()?;
                    umin = umin.min(u);
                    umax = umax.max(u);
                    vmin = vmin.min(v);
                    vmax = vmax.max(v);
                }
            }
        }
        let (w, h) = (model.width as f64, model.height as f64);
        if umax < -1.0 || vmax < -1.0 || umin > w || vmin > h {
            return None;
        }
        let lo = |x: f64| (x.floor() - 1.0).max(0.0) as usize;
        let hi = |x: f64, limit: usize| ((x.ceil() + 1.0).max(0.0) as usize).min(limit - 1);
        Some((lo(umin), hi(umax, model.width), lo(vmin), hi(vmax, model.height)))
    }
}

/// Ground-truth binary mask of one scene object.
pub fn render_silhouette(
    scene: &Scene,
    camera: &Pose,
    model: &CameraModel,
    object_id: &str,
) -> Result<BinaryMask, SceneError> {
    Ok(scene.object(object_id)?.render(camera, model))
}
