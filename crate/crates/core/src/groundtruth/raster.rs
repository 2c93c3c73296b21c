//! Z-buffered triangle rasterizer with near-plane clipping.
//!
//! Pixels are sampled at their centers. The edge test is inclusive and the
//! depth test strict, so on a shared edge the first triangle drawn keeps the
//! pixel. Depth is interpolated as 1/z, which is linear in screen space.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::geometry::{CameraIntrinsics, Pose, Vec3};
use crate::scene::{bone_capsules, Capsule, SceneDoc, SceneObject};

use super::{check_dimensions, DepthBuffer, GroundTruthError, IdBuffer};

pub const CAPSULE_RADIAL_SEGMENTS: usize = 12;
/// Latitude bands per hemispherical cap.
pub const CAPSULE_CAP_BANDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldTriangle {
    pub vertices: [Vec3; 3],
    /// Index of the owning object in scene order.
    pub object: u32,
}

/// Triangulates a capsule; every vertex lies on the analytic surface.
pub fn tessellate_capsule(c: &Capsule) -> Vec<[Vec3; 3]> {
    let axis = c.p1 - c.p0;
    let a = if axis.norm() > 1e-12 { axis.normalize() } else { Vec3::y() };
    let seed = if a.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = a.cross(&seed).normalize();
    let v = a.cross(&u);
    let n = CAPSULE_RADIAL_SEGMENTS;
    let ring = |center: &Vec3, lat: f64, sign: f64| -> Vec<Vec3> {
        (0..n)
            .map(|k| {
                let phi = TAU * k as f64 / n as f64;
                center + c.radius * (lat.cos() * (phi.cos() * u + phi.sin() * v) + sign * lat.sin() * a)
            })
            .collect()
    };
    let mut tris = Vec::with_capacity(2 * n * (2 * CAPSULE_CAP_BANDS - 1) + 2 * n);
    let band = |tris: &mut Vec<[Vec3; 3]>, lo: &[Vec3], hi: &[Vec3]| {
        for k in 0..n {
            let k1 = (k + 1) % n;
            tris.push([lo[k], lo[k1], hi[k1]]);
            tris.push([lo[k], hi[k1], hi[k]]);
        }
    };
    let equator0 = ring(&c.p0, 0.0, -1.0);
    let equator1 = ring(&c.p1, 0.0, 1.0);
    band(&mut tris, &equator0, &equator1);
    for (center, sign) in [(c.p1, 1.0), (c.p0, -1.0)] {
        let mut prev = ring(&center, 0.0, sign);
        for b in 1..CAPSULE_CAP_BANDS {
            let next = ring(&center, FRAC_PI_2 * b as f64 / CAPSULE_CAP_BANDS as f64, sign);
            band(&mut tris, &prev, &next);
            prev = next;
        }
        let pole = center + sign * c.radius * a;
        for k in 0..n {
            tris.push([prev[k], prev[(k + 1) % n], pole]);
        }
    }
    tris
}

/// All renderable triangles at time `t_s`, meshes and character capsules alike.
pub fn scene_triangles(scene: &SceneDoc, t_s: f64) -> Vec<WorldTriangle> {
    let mut out = Vec::new();
    for (i, o) in scene.objects().iter().enumerate() {
        let object = i as u32;
        match o {
            SceneObject::Mesh(m) => {
                let world = m.world_vertices();
                out.extend(m.triangles.iter().map(|t| WorldTriangle {
                    vertices: t.map(|k| world[k as usize]),
                    object,
                }));
            }
            SceneObject::Character(c) => {
                for cap in bone_capsules(c, t_s) {
                    out.extend(tessellate_capsule(&cap).into_iter().map(|vertices| WorldTriangle { vertices, object }));
                }
            }
        }
    }
    out
}

pub fn rasterize(
    scene: &SceneDoc,
    t_s: f64,
    pose: &Pose,
    intr: &CameraIntrinsics,
    width: usize,
    height: usize,
) -> Result<(DepthBuffer, IdBuffer), GroundTruthError> {
    let labels = scene.object_ids().map(str::to_string).collect();
    rasterize_triangles(&scene_triangles(scene, t_s), labels, pose, intr, width, height)
}

#[derive(Clone, Copy)]
struct ScreenVertex {
    x: f64,
    y: f64,
    depth: f64,
}

pub fn rasterize_triangles(
    triangles: &[WorldTriangle],
    labels: Vec<String>,
    pose: &Pose,
    intr: &CameraIntrinsics,
    width: usize,
    height: usize,
) -> Result<(DepthBuffer, IdBuffer), GroundTruthError> {
    check_dimensions(width, height)?;
    intr.validate()?;
    let mut zbuf = vec![f64::INFINITY; width * height];
    let mut ids = IdBuffer::background(width, height, labels);
    let (w, h) = (width as f64, height as f64);
    let (tan_h, tan_v) = (intr.tan_half_h(), intr.tan_half_v());
    let to_screen = |c: &Vec3| {
        let depth = -c.z;
        ScreenVertex {
            x: (c.x / (depth * tan_h) + 1.0) * 0.5 * w,
            y: (1.0 - c.y / (depth * tan_v)) * 0.5 * h,
            depth,
        }
    };
    let mut poly = Vec::with_capacity(4);
    for tri in triangles {
        let cam = tri.vertices.map(|p| pose.world_to_camera(&p));
        clip_near(&cam, intr.near_m, &mut poly);
        if poly.len() < 3 {
            continue;
        }
        let screen: Vec<ScreenVertex> = poly.iter().map(to_screen).collect();
        for k in 1..screen.len() - 1 {
            fill(
                [screen[0], screen[k], screen[k + 1]],
                tri.object,
                intr.far_m,
                width,
                height,
                &mut zbuf,
                &mut ids.ids,
            );
        }
    }
    let depth = DepthBuffer {
        width,
        height,
        values: zbuf.iter().map(|&z| z as f32).collect(),
    };
    Ok((depth, ids))
}

/// Keeps the part of the triangle at depth >= near (camera looks down -Z).
fn clip_near(tri: &[Vec3; 3], near: f64, out: &mut Vec<Vec3>) {
    out.clear();
    let inside = |p: &Vec3| -p.z >= near;
    for i in 0..3 {
        let (a, b) = (&tri[i], &tri[(i + 1) % 3]);
        match (inside(a), inside(b)) {
            (true, true) => out.push(*b),
            (true, false) => out.push(intersect(a, b, near)),
            (false, true) => {
                out.push(intersect(a, b, near));
                out.push(*b);
            }
            (false, false) => {}
        }
    }
}

fn intersect(a: &Vec3, b: &Vec3, near: f64) -> Vec3 {
    let s = (-near - a.z) / (b.z - a.z);
    let mut p = a + (b - a) * s;
    p.z = -near;
    p
}

#[inline]
fn edge(a: &ScreenVertex, b: &ScreenVertex, px: f64, py: f64) -> f64 {
    (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
}

fn fill(
    v: [ScreenVertex; 3],
    object: u32,
    far: f64,
    width: usize,
    height: usize,
    zbuf: &mut [f64],
    ids: &mut [u32],
) {
    let area = edge(&v[0], &v[1], v[2].x, v[2].y);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    let sign = area.signum();
    let span = |lo: f64, hi: f64, n: usize| -> Option<(usize, usize)> {
        let first = (lo - 0.5).ceil().max(0.0);
        let last = (hi - 0.5).floor().min(n as f64 - 1.0);
        (first <= last).then_some((first as usize, last as usize))
    };
    let (min_x, max_x) = (v[0].x.min(v[1].x).min(v[2].x), v[0].x.max(v[1].x).max(v[2].x));
    let (min_y, max_y) = (v[0].y.min(v[1].y).min(v[2].y), v[0].y.max(v[1].y).max(v[2].y));
    let (Some((x0, x1)), Some((y0, y1))) = (span(min_x, max_x, width), span(min_y, max_y, height)) else {
        return;
    };
    let inv = [1.0 / v[0].depth, 1.0 / v[1].depth, 1.0 / v[2].depth];
    for y in y0..=y1 {
        let py = y as f64 + 0.5;
        for x in x0..=x1 {
            let px = x as f64 + 0.5;
            let e0 = edge(&v[1], &v[2], px, py) * sign;
            let e1 = edge(&v[2], &v[0], px, py) * sign;
            let e2 = edge(&v[0], &v[1], px, py) * sign;
            if e0 < 0.0 || e1 < 0.0 || e2 < 0.0 {
                continue;
            }
            let abs_area = area.abs();
            let inv_z = (e0 * inv[0] + e1 * inv[1] + e2 * inv[2]) / abs_area;
            let depth = 1.0 / inv_z;
            if !(depth <= far) {
                continue;
            }
            let i = y * width + x;
            if depth < zbuf[i] {
                zbuf[i] = depth;
                ids[i] = object;
            }
        }
    }
}
