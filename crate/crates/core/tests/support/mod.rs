//! Brute-force ray casting used as an independent reference for the rasterizer.
#![allow(dead_code)]

use nalgebra::{Matrix4, Vector4};
use previz_core::geometry::{look_at, CameraIntrinsics, Pose, Vec3};
use previz_core::groundtruth::raster::WorldTriangle;
use previz_core::scene::Capsule;
use rand::Rng;

pub enum Shape {
    Triangle([Vec3; 3]),
    Capsule(Capsule),
}

pub struct Hit {
    pub depth: f64,
    pub object: u32,
}

/// Camera-space pixel ray through `(px, py)` with unit depth, built from the pose matrix.
pub struct Camera {
    pub origin: Vec3,
    cam_to_world: Matrix4<f64>,
    pub tan_h: f64,
    pub tan_v: f64,
    pub width: usize,
    pub height: usize,
    pub near: f64,
    pub far: f64,
}

impl Camera {
    pub fn new(pose: &Pose, intr: &CameraIntrinsics, width: usize, height: usize) -> Self {
        let m = Matrix4::from_row_slice(&pose.to_matrix());
        let tan_h = intr.sensor_width_mm / 2.0 / intr.focal_mm;
        Self {
            origin: Vec3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]),
            cam_to_world: m,
            tan_h,
            tan_v: tan_h * height as f64 / width as f64,
            width,
            height,
            near: intr.near_m,
            far: intr.far_m,
        }
    }

    /// World direction whose camera-space z component is -1, so ray parameter equals depth.
    pub fn ray(&self, px: f64, py: f64) -> Vec3 {
        let nx = 2.0 * px / self.width as f64 - 1.0;
        let ny = 1.0 - 2.0 * py / self.height as f64;
        let d = self.cam_to_world * Vector4::new(nx * self.tan_h, ny * self.tan_v, -1.0, 0.0);
        Vec3::new(d.x, d.y, d.z)
    }

    /// Pixel position of a world point via the inverse of the pose matrix.
    pub fn to_pixel(&self, p: &Vec3) -> Option<(f64, f64, f64)> {
        let inv = self.cam_to_world.try_inverse()?;
        let c = inv * Vector4::new(p.x, p.y, p.z, 1.0);
        let depth = -c.z;
        if depth <= 0.0 {
            return None;
        }
        let fx = self.width as f64 / (2.0 * self.tan_h);
        let fy = self.height as f64 / (2.0 * self.tan_v);
        Some((self.width as f64 / 2.0 + fx * c.x / depth, self.height as f64 / 2.0 - fy * c.y / depth, depth))
    }
}

fn ray_triangle(o: &Vec3, d: &Vec3, t: &[Vec3; 3]) -> Option<f64> {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 {
        return None;
    }
    let s = o - t[0];
    let u = s.dot(&p) / det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = d.dot(&q) / det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(&q) / det)
}

fn ray_sphere(o: &Vec3, d: &Vec3, c: &Vec3, r: f64) -> Option<f64> {
    let oc = o - c;
    let a = d.dot(d);
    let b = oc.dot(d);
    let cc = oc.dot(&oc) - r * r;
    let disc = b * b - a * cc;
    if disc < 0.0 {
        return None;
    }
    Some((-b - disc.sqrt()) / a)
}

/// Nearest intersection with the capsule surface, from outside.
fn ray_capsule(o: &Vec3, d: &Vec3, cap: &Capsule) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut take = |t: f64| {
        if t > 0.0 && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    };
    let axis = cap.p1 - cap.p0;
    let len = axis.norm();
    if len > 1e-12 {
        let a = axis / len;
        let oc = o - cap.p0;
        let dp = d - a * d.dot(&a);
        let op = oc - a * oc.dot(&a);
        let qa = dp.dot(&dp);
        let qb = dp.dot(&op);
        let qc = op.dot(&op) - cap.radius * cap.radius;
        let disc = qb * qb - qa * qc;
        if qa > 0.0 && disc >= 0.0 {
            let t = (-qb - disc.sqrt()) / qa;
            let s = (oc + d * t).dot(&a);
            if (0.0..=len).contains(&s) {
                take(t);
            }
        }
    }
    for c in [cap.p0, cap.p1] {
        if let Some(t) = ray_sphere(o, d, &c, cap.radius) {
            take(t);
        }
    }
    best
}

pub fn cast(cam: &Camera, shapes: &[(Shape, u32)], px: f64, py: f64) -> Option<Hit> {
    let d = cam.ray(px, py);
    let mut best: Option<Hit> = None;
    for (shape, object) in shapes {
        let t = match shape {
            Shape::Triangle(t) => ray_triangle(&cam.origin, &d, t),
            Shape::Capsule(c) => ray_capsule(&cam.origin, &d, c),
        };
        if let Some(t) = t {
            if t >= cam.near && t <= cam.far && best.as_ref().is_none_or(|b| t < b.depth) {
                best = Some(Hit { depth: t, object: *object });
            }
        }
    }
    best
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    ((p.0 - a.0 - s * dx).powi(2) + (p.1 - a.1 - s * dy).powi(2)).sqrt()
}

/// True when the pixel center is at least `margin` pixels from every projected triangle edge.
pub fn is_interior(cam: &Camera, tris: &[WorldTriangle], px: f64, py: f64, margin: f64) -> bool {
    tris.iter().all(|t| {
        let Some(s) = t.vertices.iter().map(|v| cam.to_pixel(v).map(|(x, y, _)| (x, y))).collect::<Option<Vec<_>>>() else {
            return false;
        };
        (0..3).all(|k| segment_distance((px, py), s[k], s[(k + 1) % 3]) >= margin)
    })
}

/// Random triangles placed in front of a randomly aimed camera.
pub fn random_triangle_scene(rng: &mut impl Rng, max_tris: usize) -> (Pose, CameraIntrinsics, Vec<WorldTriangle>) {
    let eye = Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-2.0..4.0), rng.random_range(-5.0..5.0));
    let target = eye
        + Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5), rng.random_range(-1.0..1.0)).normalize()
            * 10.0;
    let pose = look_at(&eye, &target, &Vec3::y()).unwrap();
    let intr = CameraIntrinsics::default().with_focal(rng.random_range(18.0..60.0));
    let n = rng.random_range(1..=max_tris);
    let tan = intr.tan_half_h();
    let tris = (0..n)
        .map(|i| {
            let depth = rng.random_range(2.0..15.0);
            let center = Vec3::new(
                rng.random_range(-0.8..0.8) * depth * tan,
                rng.random_range(-0.8..0.8) * depth * tan,
                -depth,
            );
            let size = rng.random_range(0.3..1.0) * depth * tan;
            let vertices = [0, 1, 2].map(|_| {
                let mut v = center
                    + Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                        * size;
                v.z = v.z.min(-0.5);
                pose.camera_to_world(&v)
            });
            WorldTriangle { vertices, object: (i % 4) as u32 }
        })
        .collect();
    (pose, intr, tris)
}
