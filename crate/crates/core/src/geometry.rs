//! Camera models, pose transforms and two-view localization.
//!
//! Camera frame convention: `+z` along the optical axis, `+x` to the right in
//! the image and `+y` down. A [`Pose`] maps camera coordinates into the world
//! (UTM east / north / altitude): `p_world = R * p_cam + t`.
//!
//! Depth arguments are always the camera-frame `z` coordinate of the point.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::BoundingBox;

/// Default metric area above which a localized detection is rejected (m^2).
pub const DEFAULT_AREA_THRESHOLD: f64 = 3.0;
/// Rays closer to parallel than this are not triangulated (degrees).
pub const DEFAULT_MIN_RAY_ANGLE_DEG: f64 = 0.1;

const UNDISTORT_MAX_ITERS: usize = 20;
const UNDISTORT_TOL: f64 = 1e-8;
const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point is behind the camera (camera-frame z = {0})")]
    PointBehindCamera(f64),
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("camera centers coincide; no triangulation baseline")]
    DegenerateBaseline,
    #[error("rays are nearly parallel ({angle_deg:.4} deg below {min_deg} deg)")]
    ParallelRays { angle_deg: f64, min_deg: f64 },
    #[error("ray does not hit the ground plane in front of the camera")]
    RayMissesPlane,
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

/// Pinhole intrinsics with 4-coefficient radial-tangential distortion
/// `[k1, k2, p1, p2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default)]
    pub distortion: [f64; 4],
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, distortion: [f64; 4], width: u32, height: u32) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            distortion,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    /// Distortion-free camera.
    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        Self::new(fx, fy, cx, cy, [0.0; 4], width, height)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx = {}, fy = {})",
                self.fx, self.fy
            )));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "cx = {} outside [0, {})",
                self.cx, self.width
            )));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "cy = {} outside [0, {})",
                self.cy, self.height
            )));
        }
        if self.distortion.iter().any(|d| !d.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics("non-finite distortion".into()));
        }
        Ok(())
    }

    fn has_distortion(&self) -> bool {
        self.distortion.iter().any(|&d| d != 0.0)
    }

    /// Applies the radial-tangential model to normalized image coordinates.
    pub fn distort(&self, x: f64, y: f64) -> (f64, f64) {
        let [k1, k2, p1, p2] = self.distortion;
        let r2 = x * x + y * y;
        let radial = 1.0 + k1 * r2 + k2 * r2 * r2;
        let xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x);
        let yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y;
        (xd, yd)
    }

    /// Inverts [`distort`](Self::distort) by fixed-point iteration.
    pub fn undistort(&self, xd: f64, yd: f64) -> (f64, f64) {
        if !self.has_distortion() {
            return (xd, yd);
        }
        let [k1, k2, p1, p2] = self.distortion;
        let (mut x, mut y) = (xd, yd);
        for _ in 0..UNDISTORT_MAX_ITERS {
            let r2 = x * x + y * y;
            let radial = 1.0 + k1 * r2 + k2 * r2 * r2;
            let dx = 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x);
            let dy = p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y;
            let nx = (xd - dx) / radial;
            let ny = (yd - dy) / radial;
            let step = (nx - x).abs().max((ny - y).abs());
            x = nx;
            y = ny;
            if step < UNDISTORT_TOL {
                break;
            }
        }
        (x, y)
    }

    /// Projects a camera-frame point to pixels.
    pub fn camera_to_pixel(&self, p: &Vector3<f64>) -> Result<(f64, f64)> {
        if p.z <= 0.0 {
            return Err(GeometryError::PointBehindCamera(p.z));
        }
        let (xd, yd) = self.distort(p.x / p.z, p.y / p.z);
        Ok((self.fx * xd + self.cx, self.fy * yd + self.cy))
    }

    /// Undistorted viewing direction `(x, y, 1)` of a pixel in camera coordinates.
    pub fn pixel_to_ray(&self, u: f64, v: f64) -> Vector3<f64> {
        let (x, y) = self.undistort((u - self.cx) / self.fx, (v - self.cy) / self.fy);
        Vector3::new(x, y, 1.0)
    }

    /// Camera-frame point seen at pixel `(u, v)` with camera-frame depth `depth`.
    pub fn pixel_to_camera(&self, u: f64, v: f64, depth: f64) -> Result<Vector3<f64>> {
        if !(depth > 0.0) {
            return Err(GeometryError::NonPositiveDepth(depth));
        }
        Ok(self.pixel_to_ray(u, v) * depth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WorldPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<Vector3<f64>> for WorldPoint {
    fn from(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }
}

/// Camera pose: rotation world<-camera plus the camera origin in the world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub timestamp: f64,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>, timestamp: f64) -> Result<Self> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if !(ortho <= ORTHONORMAL_TOL) {
            return Err(GeometryError::InvalidPose(format!(
                "rotation is not orthonormal (max deviation {ortho:e})"
            )));
        }
        let det = rotation.determinant();
        if !((det - 1.0).abs() <= ORTHONORMAL_TOL) {
            return Err(GeometryError::InvalidPose(format!("det(rotation) = {det}")));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidPose("non-finite translation".into()));
        }
        Ok(Self {
            rotation,
            translation,
            timestamp,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            timestamp: 0.0,
        }
    }

    /// Pose from a (not necessarily normalized) quaternion `w, x, y, z`.
    pub fn from_quaternion(translation: [f64; 3], q: [f64; 4], timestamp: f64) -> Result<Self> {
        let quat = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
        if !(quat.norm() > 0.0) {
            return Err(GeometryError::InvalidPose("zero quaternion".into()));
        }
        let unit = UnitQuaternion::from_quaternion(quat);
        Self::new(
            *unit.to_rotation_matrix().matrix(),
            Vector3::from(translation),
            timestamp,
        )
    }

    /// Rotation as a unit quaternion `[w, x, y, z]`.
    pub fn quaternion(&self) -> [f64; 4] {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(self.rotation);
        let q = UnitQuaternion::from_rotation_matrix(&rot);
        [q.w, q.i, q.j, q.k]
    }

    /// Nadir-looking camera at `position`: image `+x` points east, image `+y` south.
    pub fn nadir(position: Vector3<f64>, timestamp: f64) -> Self {
        #[rustfmt::skip]
        let rotation = Matrix3::new(
            1.0,  0.0,  0.0,
            0.0, -1.0,  0.0,
            0.0,  0.0, -1.0,
        );
        Self {
            rotation,
            translation: position,
            timestamp,
        }
    }

    pub fn world_to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }

    pub fn camera_to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn position(&self) -> WorldPoint {
        self.translation.into()
    }
}

/// Projects a world point into the image.
pub fn project(point: &WorldPoint, pose: &Pose, intr: &CameraIntrinsics) -> Result<(f64, f64)> {
    intr.camera_to_pixel(&pose.world_to_camera(&point.to_vector()))
}

/// World point seen at `pixel` with camera-frame depth `depth`.
pub fn backproject(pixel: (f64, f64), depth: f64, pose: &Pose, intr: &CameraIntrinsics) -> Result<WorldPoint> {
    let p_cam = intr.pixel_to_camera(pixel.0, pixel.1, depth)?;
    Ok(pose.camera_to_world(&p_cam).into())
}

/// Intersects the viewing ray of `pixel` with the horizontal plane `z = ground_z`.
pub fn intersect_ground(pixel: (f64, f64), pose: &Pose, intr: &CameraIntrinsics, ground_z: f64) -> Result<WorldPoint> {
    let dir = pose.rotation * intr.pixel_to_ray(pixel.0, pixel.1);
    if dir.z.abs() < 1e-12 {
        return Err(GeometryError::RayMissesPlane);
    }
    let s = (ground_z - pose.translation.z) / dir.z;
    if s <= 0.0 {
        return Err(GeometryError::RayMissesPlane);
    }
    Ok((pose.translation + dir * s).into())
}

/// Moves a pixel from one view to another assuming it images the plane `z = ground_z`.
pub fn ground_plane_transfer(
    pixel: (f64, f64),
    from: &Pose,
    to: &Pose,
    intr: &CameraIntrinsics,
    ground_z: f64,
) -> Result<(f64, f64)> {
    let p = intersect_ground(pixel, from, intr, ground_z)?;
    project(&p, to, intr)
}

/// One image observation together with the pose it was taken from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub pixel: (f64, f64),
    pub pose: Pose,
}

/// Two-view triangulation with the default minimum ray angle.
pub fn triangulate(a: &Observation, b: &Observation, intr: &CameraIntrinsics) -> Result<WorldPoint> {
    triangulate_with_min_angle(a, b, intr, DEFAULT_MIN_RAY_ANGLE_DEG)
}

/// Midpoint of the common perpendicular between the two viewing rays.
pub fn triangulate_with_min_angle(
    a: &Observation,
    b: &Observation,
    intr: &CameraIntrinsics,
    min_angle_deg: f64,
) -> Result<WorldPoint> {
    let ca = a.pose.translation;
    let cb = b.pose.translation;
    if (ca - cb).norm() <= 1e-6 {
        return Err(GeometryError::DegenerateBaseline);
    }
    let da = (a.pose.rotation * intr.pixel_to_ray(a.pixel.0, a.pixel.1)).normalize();
    let db = (b.pose.rotation * intr.pixel_to_ray(b.pixel.0, b.pixel.1)).normalize();

    let angle_deg = da.cross(&db).norm().atan2(da.dot(&db)).to_degrees();
    if angle_deg < min_angle_deg {
        return Err(GeometryError::ParallelRays {
            angle_deg,
            min_deg: min_angle_deg,
        });
    }

    // Closest points ca + s*da and cb + t*db, with unit directions.
    let w0 = ca - cb;
    let cos = da.dot(&db);
    let d = da.dot(&w0);
    let e = db.dot(&w0);
    let denom = 1.0 - cos * cos;
    let s = (cos * e - d) / denom;
    let t = (e - cos * d) / denom;
    let pa = ca + da * s;
    let pb = cb + db * t;
    Ok(((pa + pb) * 0.5).into())
}

/// Euclidean distance between the camera origin and a world point.
pub fn depth_of(human: &WorldPoint, uav: &Pose) -> f64 {
    (uav.translation - human.to_vector()).norm()
}

/// Area of a planar quadrilateral given clockwise (or counter-clockwise) corners.
pub fn quad_area(corners: &[WorldPoint; 4]) -> f64 {
    let [p1, p2, p3, p4] = corners.map(WorldPoint::to_vector);
    let a = (p2 - p1).cross(&(p3 - p1));
    let b = (p3 - p1).cross(&(p4 - p1));
    0.5 * (a + b).norm()
}

/// Metric area of a bounding box whose corners are back-projected at `depth`.
pub fn metric_bbox_area(bbox: &BoundingBox, depth: f64, pose: &Pose, intr: &CameraIntrinsics) -> Result<f64> {
    let c = bbox.corners();
    let corners = [
        backproject(c[0], depth, pose, intr)?,
        backproject(c[1], depth, pose, intr)?,
        backproject(c[2], depth, pose, intr)?,
        backproject(c[3], depth, pose, intr)?,
    ];
    Ok(quad_area(&corners))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaVerdict {
    Keep,
    Reject,
}

/// Rejects boxes whose metric area strictly exceeds `t_area`.
pub fn reject_by_area(area: f64, t_area: f64) -> AreaVerdict {
    if area > t_area {
        AreaVerdict::Reject
    } else {
        AreaVerdict::Keep
    }
}
