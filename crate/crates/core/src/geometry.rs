//! Vectors, rigid camera poses, pinhole projection and cubic Bezier chains.
//!
//! Conventions used throughout the crate: right-handed world with +Y up, and
//! cameras looking down their local −Z axis. A [`Pose`] is camera-to-world.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Tolerance used when checking that a rotation block is orthonormal.
pub const RIGIDITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("{name} = {value} is outside its valid range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("eye and target coincide")]
    DegenerateLookAt,
    #[error("view direction is parallel to the up hint")]
    ParallelUp,
    #[error("point is at or behind the camera plane (depth {depth})")]
    BehindCamera { depth: f64 },
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("matrix is not a rigid transform: {0}")]
    NotRigid(String),
}

#[inline]
pub fn world_up() -> Vec3 {
    Vec3::new(0.0, 1.0, 0.0)
}

/// Interpolates with the `(1 - t)·a + t·b` form, which is exact at both ends.
#[inline]
pub fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (1.0 - t) * a + t * b
}

#[inline]
pub fn lerp_vec(a: &Vec3, b: &Vec3, t: f64) -> Vec3 {
    a * (1.0 - t) + b * t
}

/// Camera-to-world rigid transform.
///
/// The rotation columns are the camera's right, up and back (+Z) axes in
/// world coordinates; `translation` is the camera origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn right(&self) -> Vec3 {
        self.rotation.column(0).into_owned()
    }

    pub fn up(&self) -> Vec3 {
        self.rotation.column(1).into_owned()
    }

    pub fn forward(&self) -> Vec3 {
        -self.rotation.column(2).into_owned()
    }

    pub fn world_to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation.transpose() * (p - self.translation)
    }

    pub fn camera_to_world(&self, p_cam: &Vec3) -> Vec3 {
        self.rotation * p_cam + self.translation
    }

    /// Rotates the camera about one of its own axes (given in camera space).
    pub fn rotated_local(&self, axis: &Vec3, angle: f64) -> Pose {
        if angle == 0.0 {
            return *self;
        }
        let local = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle);
        Pose {
            rotation: self.rotation * local.matrix(),
            translation: self.translation,
        }
    }

    /// Row-major 4×4 camera-to-world matrix.
    #[rustfmt::skip]
    pub fn to_matrix(&self) -> [f64; 16] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x,
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y,
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z,
            0.0, 0.0, 0.0, 1.0,
        ]
    }

    /// Parses a row-major 4×4 matrix, rejecting anything that is not rigid.
    pub fn from_matrix(m: &[f64; 16]) -> Result<Pose, GeometryError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NotRigid("non-finite entry".into()));
        }
        if m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0 {
            return Err(GeometryError::NotRigid("bottom row must be 0 0 0 1".into()));
        }
        let pose = Pose {
            rotation: Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]),
            translation: Vec3::new(m[3], m[7], m[11]),
        };
        let (orth, det) = pose.rigidity_error();
        if orth > RIGIDITY_TOLERANCE || det > RIGIDITY_TOLERANCE {
            return Err(GeometryError::NotRigid(format!(
                "|RᵀR − I|∞ = {orth:e}, |det − 1| = {det:e}"
            )));
        }
        Ok(pose)
    }

    /// Returns `(max |RᵀR − I|, |det R − 1|)`.
    pub fn rigidity_error(&self) -> (f64, f64) {
        let gram = self.rotation.transpose() * self.rotation - Matrix3::identity();
        let orth = gram.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        (orth, (self.rotation.determinant() - 1.0).abs())
    }

    pub fn is_rigid(&self, tol: f64) -> bool {
        let (orth, det) = self.rigidity_error();
        orth <= tol && det <= tol
    }
}

/// Builds a zero-roll camera at `eye` aimed exactly at `target`.
pub fn look_at(eye: &Vec3, target: &Vec3, up_hint: &Vec3) -> Result<Pose, GeometryError> {
    let to_target = target - eye;
    let len = to_target.norm();
    if !(len > 1e-9) {
        return Err(GeometryError::DegenerateLookAt);
    }
    let forward = to_target / len;
    let right = forward.cross(up_hint);
    let right_len = right.norm();
    if !(right_len > 1e-9 * up_hint.norm()) {
        return Err(GeometryError::ParallelUp);
    }
    let right = right / right_len;
    let up = right.cross(&forward);
    Ok(Pose {
        rotation: Matrix3::from_columns(&[right, up, -forward]),
        translation: *eye,
    })
}

/// Pinhole intrinsics expressed in photographic units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub focal_mm: f64,
    pub sensor_width_mm: f64,
    /// Image width divided by image height.
    pub aspect: f64,
    pub near_m: f64,
    pub far_m: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            focal_mm: 36.0,
            sensor_width_mm: 36.0,
            aspect: 1.0,
            near_m: 0.1,
            far_m: 1000.0,
        }
    }
}

impl CameraIntrinsics {
    pub fn with_focal(mut self, focal_mm: f64) -> Self {
        self.focal_mm = focal_mm;
        self
    }

    pub fn with_aspect(mut self, aspect: f64) -> Self {
        self.aspect = aspect;
        self
    }

    /// Focal length that yields the requested horizontal field of view.
    pub fn focal_for_hfov(sensor_width_mm: f64, hfov_rad: f64) -> f64 {
        sensor_width_mm / (2.0 * (hfov_rad / 2.0).tan())
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(GeometryError::InvalidIntrinsics(format!("{name} must be positive, got {v}")))
            }
        };
        positive("focal_mm", self.focal_mm)?;
        positive("sensor_width_mm", self.sensor_width_mm)?;
        positive("aspect", self.aspect)?;
        positive("near_m", self.near_m)?;
        if !(self.far_m.is_finite() && self.far_m > self.near_m) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "far_m ({}) must exceed near_m ({})",
                self.far_m, self.near_m
            )));
        }
        Ok(())
    }

    /// tan(hFOV / 2)
    pub fn tan_half_h(&self) -> f64 {
        self.sensor_width_mm / (2.0 * self.focal_mm)
    }

    /// tan(vFOV / 2)
    pub fn tan_half_v(&self) -> f64 {
        self.tan_half_h() / self.aspect
    }

    pub fn hfov(&self) -> f64 {
        2.0 * self.tan_half_h().atan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdcPoint {
    pub x: f64,
    pub y: f64,
    /// Metric distance along the camera's viewing axis.
    pub depth: f64,
}

pub fn project_to_ndc(
    p_world: &Vec3,
    pose: &Pose,
    intr: &CameraIntrinsics,
) -> Result<NdcPoint, GeometryError> {
    let c = pose.world_to_camera(p_world);
    let depth = -c.z;
    if !(depth > 0.0) {
        return Err(GeometryError::BehindCamera { depth });
    }
    let tan_h = intr.tan_half_h();
    Ok(NdcPoint {
        x: c.x / (depth * tan_h),
        y: c.y / (depth * tan_h / intr.aspect),
        depth,
    })
}

/// Continuous pixel coordinates, origin top-left, y down.
#[inline]
pub fn ndc_to_pixel(ndc_x: f64, ndc_y: f64, width: f64, height: f64) -> (f64, f64) {
    ((ndc_x + 1.0) / 2.0 * width, (1.0 - ndc_y) / 2.0 * height)
}

#[inline]
pub fn pixel_to_ndc(px: f64, py: f64, width: f64, height: f64) -> (f64, f64) {
    (px / width * 2.0 - 1.0, 1.0 - py / height * 2.0)
}

/// Inverse of projection: the world point seen at pixel `(px, py)` at `depth`.
pub fn unproject_pixel(
    px: f64,
    py: f64,
    depth: f64,
    pose: &Pose,
    intr: &CameraIntrinsics,
    width: f64,
    height: f64,
) -> Vec3 {
    let (nx, ny) = pixel_to_ndc(px, py, width, height);
    let tan_h = intr.tan_half_h();
    let cam = Vec3::new(nx * depth * tan_h, ny * depth * tan_h / intr.aspect, -depth);
    pose.camera_to_world(&cam)
}

pub fn in_frustum(p_world: &Vec3, pose: &Pose, intr: &CameraIntrinsics) -> bool {
    match project_to_ndc(p_world, pose, intr) {
        Ok(ndc) => {
            ndc.x.abs() <= 1.0
                && ndc.y.abs() <= 1.0
                && ndc.depth >= intr.near_m
                && ndc.depth <= intr.far_m
        }
        Err(_) => false,
    }
}

/// A chain of cubic Bezier segments sharing endpoints (3k + 1 control points).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec3>", into = "Vec<Vec3>")]
pub struct BezierCurve {
    control_points: Vec<Vec3>,
}

impl TryFrom<Vec<Vec3>> for BezierCurve {
    type Error = GeometryError;

    fn try_from(points: Vec<Vec3>) -> Result<Self, Self::Error> {
        BezierCurve::new(points)
    }
}

impl From<BezierCurve> for Vec<Vec3> {
    fn from(curve: BezierCurve) -> Self {
        curve.control_points
    }
}

impl BezierCurve {
    pub fn new(control_points: Vec<Vec3>) -> Result<Self, GeometryError> {
        let n = control_points.len();
        if n < 4 || n % 3 != 1 {
            return Err(GeometryError::InvalidCurve(format!(
                "expected 3k+1 control points (k ≥ 1), got {n}"
            )));
        }
        if control_points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::InvalidCurve("non-finite control point".into()));
        }
        Ok(Self { control_points })
    }

    pub fn control_points(&self) -> &[Vec3] {
        &self.control_points
    }

    pub fn segments(&self) -> usize {
        (self.control_points.len() - 1) / 3
    }

    fn locate(&self, u: f64) -> Result<(usize, f64), GeometryError> {
        if !(0.0..=1.0).contains(&u) {
            return Err(GeometryError::OutOfRange { name: "u", value: u });
        }
        let k = self.segments();
        let s = u * k as f64;
        let seg = (s.floor() as usize).min(k - 1);
        Ok((seg, s - seg as f64))
    }

    /// Evaluates the chain at global parameter `u`, split uniformly across segments.
    pub fn point(&self, u: f64) -> Result<Vec3, GeometryError> {
        let (seg, t) = self.locate(u)?;
        let p = &self.control_points[3 * seg..3 * seg + 4];
        // de Casteljau
        let a = lerp_vec(&p[0], &p[1], t);
        let b = lerp_vec(&p[1], &p[2], t);
        let c = lerp_vec(&p[2], &p[3], t);
        let ab = lerp_vec(&a, &b, t);
        let bc = lerp_vec(&b, &c, t);
        Ok(lerp_vec(&ab, &bc, t))
    }

    /// Derivative with respect to the global parameter `u`.
    pub fn tangent(&self, u: f64) -> Result<Vec3, GeometryError> {
        let (seg, t) = self.locate(u)?;
        let p = &self.control_points[3 * seg..3 * seg + 4];
        let s = 1.0 - t;
        let d = (p[1] - p[0]) * (s * s) + (p[2] - p[1]) * (2.0 * s * t) + (p[3] - p[2]) * (t * t);
        Ok(d * (3.0 * self.segments() as f64))
    }
}
