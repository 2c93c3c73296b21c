//! Acceptance suite. One PASS/FAIL line per criterion; exits non-zero on any failure.

mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use previz_core::behaviors::{chain_end_state, BehaviorKind, CameraBehavior, OrientationMode, PushRange, ShotState};
use previz_core::cinespace::{angle_distance, from_pose, to_pose, CineRig, CineSpaceParams, Easing};
use previz_core::demo::{demo_board, demo_scene, BOARD_NAMES};
use previz_core::geometry::{in_frustum, BezierCurve, CameraIntrinsics, Pose, Vec3};
use previz_core::groundtruth::collage::{collage_bundles, composite, CollageLayer, CollageSpec, LayerFrame};
use previz_core::groundtruth::depth::depth16_value;
use previz_core::groundtruth::export::{BundleManifest, FrameRender};
use previz_core::groundtruth::netpbm::{decode_pfm, decode_pgm};
use previz_core::groundtruth::pose_map::{project_keypoints, KeypointDocument, KeypointSet};
use previz_core::groundtruth::raster::rasterize_triangles;
use previz_core::groundtruth::{export_bundle, DepthBuffer, ExportOptions, IdBuffer};
use previz_core::openpose::{JOINT_COUNT, JOINT_NAMES};
use previz_core::scene::{AnimationClip, Character, Joint};
use previz_core::storyboard::{behavior_frame_count, generate, Keyframe, ShotAsset, Storyboard};

use support::{cast, is_interior, random_triangle_scene, Camera, Shape};

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || format!("took {:.2?}, limit {limit_s} s", elapsed))
}

fn v(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

fn random_rig(rng: &mut impl Rng) -> CineRig {
    let mut p = || v(rng.random_range(-20.0..20.0), rng.random_range(-5.0..5.0), rng.random_range(-20.0..20.0));
    let (a, b) = (p(), p());
    CineRig { subject_a: a, subject_b: b, blend: rng.random_range(0.0..=1.0), rig_yaw: rng.random_range(-3.0..3.0) }
}

fn two_shot_framing() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let intr = CameraIntrinsics::default()
        .with_focal(CameraIntrinsics::focal_for_hfov(36.0, 60f64.to_radians()))
        .with_aspect(16.0 / 9.0);
    let start = Instant::now();
    let mut frames = 0;
    let mut rigs = 0;
    while rigs < 1000 {
        let mut rig = random_rig(&mut rng);
        rig.blend = rng.random_range(0.25..=0.75);
        if rig.separation() < 0.5 {
            continue;
        }
        rigs += 1;
        let d = rng.random_range(2.5..6.0) * rig.separation();
        for i in 0..36 {
            for j in 0..9 {
                let phi = (-80.0 + 20.0 * j as f64).to_radians();
                let pose = to_pose(&rig, &CineSpaceParams::orbit(d, i as f64 * TAU / 36.0, phi)).map_err(|e| e.to_string())?;
                ensure(in_frustum(&rig.subject_a, &pose, &intr) && in_frustum(&rig.subject_b, &pose, &intr), || {
                    format!("subject outside frame: rig {rig:?}, d {d}, i {i}, j {j}")
                })?;
                frames += 1;
            }
        }
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!("{frames} frames, both subjects in view, {:.2?}", start.elapsed()))
}

fn round_trip() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for case in 0..10_000 {
        let mut rig = random_rig(&mut rng);
        if case % 50 == 0 {
            // coincident subjects and vertically stacked subjects
            rig.subject_b = if case % 100 == 0 { rig.subject_a } else { rig.subject_a + v(0.0, 2.0, 0.0) };
        }
        let d = rng.random_range(0.1..50.0);
        let p = CineSpaceParams {
            screen_offset: rng.random_range(-0.5..0.5),
            ..CineSpaceParams::orbit(d, rng.random_range(0.0..TAU), rng.random_range(-80f64..80.0).to_radians())
        };
        let c = from_pose(&rig, &to_pose(&rig, &p).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let err = ((c.d - d).abs() / d).max(angle_distance(c.theta, p.theta)).max((c.phi - p.phi).abs());
        worst = worst.max(err);
        ensure(err <= 1e-9, || format!("case {case}: error {err:e} for {p:?}"))?;
    }
    within(start.elapsed(), 2.0)?;
    Ok(format!("10000 cases, worst {worst:.1e}, {:.2?}", start.elapsed()))
}

fn dolly_zoom_constancy() -> Result<String, String> {
    let start = Instant::now();
    let rig = CineRig::new(v(-1.0, 0.2, 0.5), v(1.5, 0.0, -0.3));
    let initial = CineSpaceParams { focal_mm: 35.0, ..CineSpaceParams::orbit(6.0, 0.7, 0.25) };
    let board = Storyboard::shot("dz", rig, initial.into(), vec![CameraBehavior::new(BehaviorKind::DollyZoom, 2.0, 0.6)]);
    let asset = generate(&board).map_err(|e| e.to_string())?;
    ensure(asset.frames() == 48, || format!("{} frames", asset.frames()))?;
    let q = rig.center();
    let heights: Vec<f64> = asset
        .poses
        .iter()
        .zip(&asset.focals)
        .map(|(pose, f)| {
            // pinhole oracle in sensor millimeters
            let up = pose.rotation.column(1).into_owned();
            let project = |p: Vec3| {
                let c = pose.rotation.transpose() * (p - pose.translation);
                f * c.y / -c.z
            };
            project(q + up * 0.25) - project(q - up * 0.25)
        })
        .collect();
    let worst = heights.iter().map(|h| (h / heights[0] - 1.0).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-6, || format!("relative drift {worst:e}"))?;
    ensure((asset.cine_params[47].d / asset.cine_params[0].d - 0.4).abs() < 1e-12, || "camera did not travel".into())?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("48 frames, drift {worst:.1e}, {:.2?}", start.elapsed()))
}

/// Independent check of a row-major 4x4 rigid transform.
fn rigidity_error(m: &[f64; 16]) -> f64 {
    let r = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
    let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
    let bottom = (m[12].abs() + m[13].abs() + m[14].abs() + (m[15] - 1.0).abs()).max(0.0);
    ortho.max((r.determinant() - 1.0).abs()).max(bottom)
}

fn random_behavior(rng: &mut impl Rng, state: &ShotState, rig: &CineRig) -> CameraBehavior {
    use BehaviorKind::*;
    let kind = BehaviorKind::ALL[rng.random_range(0..BehaviorKind::ALL.len())];
    let duration = rng.random_range(0.05..2.5);
    let b = match kind {
        PushIn | DollyZoom => CameraBehavior::new(kind, duration, rng.random_range(0.05..0.6)),
        PullOut => CameraBehavior::new(kind, duration, rng.random_range(0.05..1.5)),
        ZoomIn | ZoomOut => CameraBehavior::new(kind, duration, rng.random_range(1.1..3.0)),
        Tracking => {
            let from = state.base_pose(rig).expect("valid state").translation;
            let mut pts = vec![from];
            for _ in 0..3 {
                let last = *pts.last().unwrap();
                pts.push(last + v(rng.random_range(-1.0..1.0), rng.random_range(-0.3..0.3), rng.random_range(-1.0..1.0)));
            }
            let mode = [OrientationMode::LookAtQ, OrientationMode::Fixed, OrientationMode::Tangent][rng.random_range(0..3)];
            CameraBehavior::tracking(duration, BezierCurve::new(pts).unwrap(), mode)
        }
        Arc | Truck => CameraBehavior::new(kind, duration, rng.random_range(-1.5..1.5)),
        _ => CameraBehavior::new(kind, duration, rng.random_range(0.0..0.5)),
    };
    b.with_easing([Easing::Linear, Easing::Smoothstep][rng.random_range(0..2)])
}

fn random_shot_board(rng: &mut impl Rng, id: &str) -> Storyboard {
    let rig = CineRig::new(v(rng.random_range(-3.0..-0.5), 0.0, 0.0), v(rng.random_range(0.5..3.0), rng.random_range(-0.5..0.5), 0.0));
    let initial: ShotState =
        CineSpaceParams::orbit(rng.random_range(3.0..8.0), rng.random_range(0.0..TAU), rng.random_range(-0.6..0.6)).into();
    let mut state = initial.clone();
    let mut behaviors = Vec::new();
    for _ in 0..rng.random_range(1..5) {
        let b = random_behavior(rng, &state, &rig);
        state = chain_end_state(std::slice::from_ref(&b), &state, &rig).expect("random behaviors are valid");
        behaviors.push(b);
    }
    Storyboard::shot(id, rig, initial, behaviors)
}

fn random_frame_board(rng: &mut impl Rng, id: &str) -> Storyboard {
    let rig = CineRig::new(v(-1.0, 0.0, 0.0), v(1.0, 0.3, 0.4));
    let mut frame = 0;
    let keyframes = (0..rng.random_range(2..6))
        .map(|k| {
            if k > 0 {
                frame += rng.random_range(1..40);
            }
            Keyframe {
                frame,
                params: CineSpaceParams {
                    focal_mm: rng.random_range(20.0..80.0),
                    screen_offset: rng.random_range(-0.3..0.3),
                    ..CineSpaceParams::orbit(rng.random_range(2.0..9.0), rng.random_range(0.0..TAU), rng.random_range(-1.2..1.2))
                },
                easing_to_next: [Easing::Linear, Easing::Smoothstep][rng.random_range(0..2)],
            }
        })
        .collect();
    Storyboard::frames(id, rig, keyframes)
}

fn rigidity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut boards: Vec<Storyboard> = BOARD_NAMES.iter().map(|n| demo_board(n).unwrap()).collect();
    for i in 0..100 {
        boards.push(random_shot_board(&mut rng, &format!("s{i}")));
        boards.push(random_frame_board(&mut rng, &format!("f{i}")));
    }
    let mut matrices = 0;
    let mut worst: f64 = 0.0;
    for board in &boards {
        let asset = generate(board).map_err(|e| format!("{}: {e}", board.id))?;
        for (k, pose) in asset.poses.iter().enumerate() {
            let err = rigidity_error(&pose.to_matrix());
            worst = worst.max(err);
            ensure(err <= 1e-9, || format!("{} frame {k}: error {err:e}", board.id))?;
            matrices += 1;
        }
    }
    Ok(format!("{} assets, {matrices} matrices, worst {worst:.1e}", boards.len()))
}

fn rasterizer_vs_raycast() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (w, h) = (64, 64);
    let labels: Vec<String> = (0..4).map(|i| format!("o{i}")).collect();
    let (mut compared, mut agree, mut depth_checked) = (0usize, 0usize, 0usize);
    let mut worst_depth: f64 = 0.0;
    for scene in 0..10 {
        let (pose, intr, tris) = random_triangle_scene(&mut rng, 20);
        let (depth, ids) = rasterize_triangles(&tris, labels.clone(), &pose, &intr, w, h).map_err(|e| e.to_string())?;
        let cam = Camera::new(&pose, &intr, w, h);
        let shapes: Vec<(Shape, u32)> = tris.iter().map(|t| (Shape::Triangle(t.vertices), t.object)).collect();
        for y in 0..h {
            for x in 0..w {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                if !is_interior(&cam, &tris, px, py, 1.0) {
                    continue;
                }
                compared += 1;
                let got_id = ids.ids[y * w + x];
                let got_z = depth.values[y * w + x] as f64;
                match cast(&cam, &shapes, px, py) {
                    Some(hit) => {
                        if got_id == hit.object {
                            agree += 1;
                            let rel = (got_z - hit.depth).abs() / hit.depth;
                            worst_depth = worst_depth.max(rel);
                            depth_checked += 1;
                            ensure(rel <= 1e-4, || format!("scene {scene} pixel ({x},{y}): depth {got_z} vs {}", hit.depth))?;
                        }
                    }
                    None => {
                        if got_id == IdBuffer::BACKGROUND && got_z.is_infinite() {
                            agree += 1;
                        }
                    }
                }
            }
        }
    }
    let rate = agree as f64 / compared as f64;
    ensure(compared > 10_000, || format!("only {compared} interior pixels"))?;
    ensure(rate >= 0.999, || format!("id agreement {:.4}% over {compared} pixels", rate * 100.0))?;
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "{compared} interior pixels, {:.3}% id agreement, worst depth {worst_depth:.1e} over {depth_checked}, {:.2?}",
        rate * 100.0,
        start.elapsed()
    ))
}

fn keypoint_projection() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let skeleton: Vec<Joint> = (0..JOINT_COUNT).map(|i| Joint { name: format!("j{i}"), parent: if i == 0 { -1 } else { 0 } }).collect();
    let joint_map: BTreeMap<String, String> = JOINT_NAMES.iter().enumerate().map(|(i, n)| (n.to_string(), format!("j{i}"))).collect();
    let (mut checked, mut worst) = (0usize, 0.0f64);
    while checked < 1000 {
        let (w, h) = (rng.random_range(64..1024usize), rng.random_range(64..1024usize));
        let eye = v(rng.random_range(-5.0..5.0), rng.random_range(0.0..3.0), rng.random_range(-5.0..5.0));
        let pose = previz_core::geometry::look_at(&eye, &v(0.0, 1.0, 0.0), &Vec3::y()).unwrap();
        let intr = CameraIntrinsics::default().with_focal(rng.random_range(15.0..100.0)).with_aspect(w as f64 / h as f64);
        let joints: Vec<Vec3> =
            (0..JOINT_COUNT).map(|_| v(rng.random_range(-2.0..2.0), rng.random_range(0.0..2.0), rng.random_range(-2.0..2.0))).collect();
        let character = Character::new(
            "c",
            "c",
            skeleton.clone(),
            AnimationClip { fps: 24, frames: vec![joints.clone()] },
            joint_map.clone(),
            0.05,
            1.8,
        )
        .map_err(|e| e.to_string())?;
        let set = project_keypoints(&character, 0.0, &pose, &intr, w, h);
        // round trip through the exported keypoint document
        let doc: KeypointDocument =
            serde_json::from_str(&KeypointDocument::new(0, std::slice::from_ref(&set)).to_json()).map_err(|e| e.to_string())?;
        let set: KeypointSet = doc.to_sets()?.remove(0);
        // K [R|t] with fx = f / sensor * W and the inverted camera-to-world matrix
        let inv = Matrix4::from_row_slice(&pose.to_matrix()).try_inverse().ok_or("singular pose")?;
        let fx = intr.focal_mm / intr.sensor_width_mm * w as f64;
        for (k, p) in joints.iter().enumerate() {
            let c = inv * Vector4::new(p.x, p.y, p.z, 1.0);
            let z = -c.z;
            let kp = set.joints[k];
            if z <= 0.0 {
                ensure(kp.pixel.is_none() && !kp.visible, || format!("joint behind camera reported {kp:?}"))?;
                continue;
            }
            let (u, vv) = (w as f64 / 2.0 + fx * c.x / z, h as f64 / 2.0 - fx * c.y / z);
            let (px, py) = kp.pixel.ok_or("missing keypoint")?;
            let err = (px - u).abs().max((py - vv).abs());
            worst = worst.max(err);
            ensure(err <= 1e-6, || format!("joint {k}: ({px}, {py}) vs ({u}, {vv})"))?;
            let inside = (0.0..=w as f64).contains(&u) && (0.0..=h as f64).contains(&vv);
            ensure(kp.visible == inside, || format!("joint {k}: visibility {} vs {inside}", kp.visible))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} joints, worst {worst:.1e} px"))
}

fn files_under(dir: &Path) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for e in fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        let name = e.file_name().to_string_lossy().to_string();
        if e.file_type().unwrap().is_dir() {
            out.extend(files_under(&e.path()).into_iter().map(|f| format!("{name}/{f}")));
        } else {
            out.insert(name);
        }
    }
    out
}

fn bundle_laws() -> Result<String, String> {
    let scene = demo_scene();
    let asset = generate(&demo_board("push_in").unwrap()).map_err(|e| e.to_string())?;
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    let opts = ExportOptions::new(512, 512);
    let start = Instant::now();
    let manifest = export_bundle(&scene, &asset, &opts, &a, &|_, _| {}).map_err(|e| e.to_string())?;
    let first = start.elapsed();
    within(first, 60.0)?;
    export_bundle(&scene, &asset, &opts, &b, &|_, _| {}).map_err(|e| e.to_string())?;

    let on_disk = files_under(&a);
    let n = asset.frames();
    let expected = n * (3 + scene.objects().len()) + n + 1;
    ensure(n == 48 && on_disk.len() == expected, || format!("{} files for {n} frames, expected {expected}", on_disk.len()))?;
    ensure(on_disk == manifest.files().into_iter().collect(), || "manifest does not list the files on disk".into())?;
    ensure(BundleManifest::load(&a).map_err(|e| e.to_string())? == manifest, || "manifest reload differs".into())?;

    for (rec, pose) in manifest.frames.iter().zip(&asset.poses) {
        let m = pose.to_matrix();
        ensure(rec.pose.iter().zip(&m).all(|(x, y)| x.to_bits() == y.to_bits()), || format!("frame {} matrix differs", rec.index))?;
        ensure(Pose::from_matrix(&rec.pose).map_err(|e| e.to_string())? == *pose, || "matrix does not round trip".into())?;
    }

    for f in &manifest.frames {
        let depth = decode_pfm(&fs::read(a.join(&f.depth)).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let masks = f
            .masks
            .iter()
            .map(|r| decode_pgm(&fs::read(a.join(&r.file)).map_err(|e| e.to_string())?).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        for (p, z) in depth.values.iter().enumerate() {
            let hits = masks.iter().filter(|m| m.values[p] == 255).count();
            ensure(masks.iter().all(|m| m.values[p] == 0 || m.values[p] == 255), || "non-binary mask".into())?;
            ensure(hits == usize::from(z.is_finite()), || format!("frame {} pixel {p}: {hits} masks, depth {z}", f.index))?;
        }
    }

    ensure(on_disk == files_under(&b), || "second run produced different files".into())?;
    for f in &on_disk {
        ensure(fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap(), || format!("{f} differs between runs"))?;
    }
    Ok(format!("{} files, 48 frames at 512x512 in {first:.2?}, byte-identical rerun", on_disk.len()))
}

fn fixture(width: usize, depths: &[f32], ids: &[u32], labels: &[&str]) -> FrameRender {
    let height = depths.len() / width;
    FrameRender {
        depth: DepthBuffer { width, height, values: depths.to_vec() },
        ids: IdBuffer { width, height, ids: ids.to_vec(), labels: labels.iter().map(|s| s.to_string()).collect() },
        keypoints: Vec::new(),
    }
}

fn collage_laws() -> Result<String, String> {
    // single-layer idempotence on disk
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let src = root.path().join("src");
    let mut asset: ShotAsset = generate(&demo_board("arc").unwrap()).map_err(|e| e.to_string())?;
    asset.poses.truncate(6);
    asset.focals.truncate(6);
    export_bundle(&demo_scene(), &asset, &ExportOptions::new(64, 48), &src, &|_, _| {}).map_err(|e| e.to_string())?;
    let out = root.path().join("out");
    let spec = CollageSpec {
        layers: vec![CollageLayer { bundle: src.clone(), start: 0, end: None, objects: None }],
        creation_tag: String::new(),
    };
    let m = collage_bundles(&spec, &out).map_err(|e| e.to_string())?;
    let frame_files: Vec<_> = m.files.iter().filter(|f| f.starts_with("frames/")).collect();
    ensure(frame_files.len() == 6 * 8, || format!("{} frame files", frame_files.len()))?;
    for f in &frame_files {
        ensure(fs::read(src.join(f)).ok() == fs::read(out.join(f)).ok(), || format!("{f} not byte-identical"))?;
    }

    // min-depth winner on constructed two-layer fixtures
    let inf = f32::INFINITY;
    let bg = IdBuffer::BACKGROUND;
    let l0 = fixture(3, &[1.0, 5.0, inf, 2.0, 7.0, 3.0], &[0, 1, bg, 0, 1, 1], &["x", "y"]);
    let l1 = fixture(3, &[2.0, 4.0, 6.0, 2.0, inf, 9.0], &[0, 0, 0, 1, bg, 0], &["z", "x"]);
    let c = composite(&[LayerFrame { render: &l0, objects: None }, LayerFrame { render: &l1, objects: None }]).map_err(|e| e.to_string())?;
    ensure(c.depth.values == vec![1.0, 4.0, 6.0, 2.0, 7.0, 3.0], || format!("depth {:?}", c.depth.values))?;
    let names: Vec<_> = (0..6).map(|p| c.ids.label_at(p % 3, p / 3).unwrap_or("-").to_string()).collect();
    ensure(names == ["x", "z", "z", "x", "y", "y"], || format!("ids {names:?}"))?;

    // selecting objects drops the rest of the layer
    let only_y = vec!["y".to_string()];
    let c = composite(&[LayerFrame { render: &l0, objects: Some(&only_y) }, LayerFrame { render: &l1, objects: None }])
        .map_err(|e| e.to_string())?;
    ensure(c.depth.values == vec![2.0, 4.0, 6.0, 2.0, 7.0, 3.0], || format!("selected depth {:?}", c.depth.values))?;
    let names: Vec<_> = (0..6).map(|p| c.ids.label_at(p % 3, p / 3).unwrap_or("-").to_string()).collect();
    ensure(names == ["z", "z", "z", "x", "y", "y"], || format!("selected ids {names:?}"))?;
    Ok(format!("{} frame files identical; fixtures composite by min depth", frame_files.len()))
}

fn max_matrix_diff(a: &Pose, b: &Pose) -> f64 {
    a.to_matrix().iter().zip(b.to_matrix()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Dense-sampled path length of one behavior.
fn path_length(asset_positions: impl Iterator<Item = Vec3>) -> f64 {
    let pts: Vec<Vec3> = asset_positions.collect();
    pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

fn frame_count_and_anchoring() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut boards: Vec<Storyboard> = BOARD_NAMES.iter().map(|n| demo_board(n).unwrap()).collect();
    for i in 0..60 {
        boards.push(random_shot_board(&mut rng, &format!("s{i}")));
        boards.push(random_frame_board(&mut rng, &format!("f{i}")));
    }
    let mut segments = 0;
    for board in &boards {
        let asset = generate(board).map_err(|e| format!("{}: {e}", board.id))?;
        let rig = &board.rig;
        if board.keyframes.is_empty() {
            let counts: Vec<usize> = board.behaviors.iter().map(|b| behavior_frame_count(b.duration_s, board.fps)).collect();
            let expected: usize = board.behaviors.iter().map(|b| ((b.duration_s * board.fps as f64).round() as usize).max(2)).sum();
            ensure(asset.frames() == expected && counts.iter().sum::<usize>() == expected, || {
                format!("{}: {} frames, expected {expected}", board.id, asset.frames())
            })?;
            let initial = board.initial.clone().unwrap();
            ensure(asset.poses[0] == initial.resolve(rig).unwrap(), || format!("{}: first frame not anchored", board.id))?;
            let mut state = initial;
            let mut offset = 0;
            for (k, (b, n)) in board.behaviors.iter().zip(&counts).enumerate() {
                let end = chain_end_state(std::slice::from_ref(b), &state, rig).unwrap();
                let first = &asset.poses[offset];
                let last = &asset.poses[offset + n - 1];
                ensure(*first == state.resolve(rig).unwrap(), || format!("{}: behavior {k} start not anchored", board.id))?;
                if b.track.is_none() {
                    let diff = max_matrix_diff(last, &end.resolve(rig).unwrap());
                    ensure(diff <= 1e-12, || format!("{}: behavior {k} end off by {diff:e}", board.id))?;
                }
                if offset > 0 && b.track.is_none() && board.behaviors[k - 1].track.is_none() {
                    let diff = max_matrix_diff(&asset.poses[offset - 1], first);
                    ensure(diff <= 1e-12, || format!("{}: junction {k} off by {diff:e}", board.id))?;
                }
                // no teleports: step bounded by twice the mean step along the densely sampled path
                if *n > 2 {
                    let dense = (0..=400).map(|j| {
                        previz_core::behaviors::sample(b, &state, rig, j as f64 / 400.0).unwrap().resolve(rig).unwrap().translation
                    });
                    let bound = 2.0 * path_length(dense) / (*n - 1) as f64;
                    for j in offset + 1..offset + n {
                        let step = (asset.poses[j].translation - asset.poses[j - 1].translation).norm();
                        ensure(step <= bound + 1e-12, || format!("{}: frame {j} jumps {step} > {bound}", board.id))?;
                    }
                }
                segments += 1;
                state = end;
                offset += n;
            }
        } else {
            let last = board.keyframes.last().unwrap().frame as usize;
            ensure(asset.frames() == last + 1, || format!("{}: {} frames, expected {}", board.id, asset.frames(), last + 1))?;
            for k in &board.keyframes {
                let f = k.frame as usize;
                ensure(asset.cine_params[f] == k.params, || format!("{}: keyframe {f} params not reproduced", board.id))?;
                ensure(asset.poses[f] == to_pose(rig, &k.params).unwrap(), || format!("{}: keyframe {f} pose not reproduced", board.id))?;
                segments += 1;
            }
        }
    }

    // the [PUSH_IN, ARC] junction
    let board = Storyboard::shot(
        "junction",
        CineRig::new(v(-1.0, 0.0, 0.0), v(1.0, 0.0, 0.0)),
        CineSpaceParams::orbit(5.0, 0.3, 0.2).into(),
        vec![CameraBehavior::push_in(1.0, PushRange::Medium), CameraBehavior::new(BehaviorKind::Arc, 1.0, 0.9)],
    );
    let asset = generate(&board).map_err(|e| e.to_string())?;
    let diff = max_matrix_diff(&asset.poses[23], &asset.poses[24]);
    ensure(asset.frames() == 48 && diff <= 1e-12, || format!("junction off by {diff:e}"))?;
    Ok(format!("{} boards, {segments} segments, PUSH_IN/ARC junction {diff:.1e}", boards.len() + 1))
}

/// round(65535 * n) for n = (far - z) * near / ((far - near) * z), in integer millimeters.
fn depth16_oracle(z_mm: u128, near_mm: u128, far_mm: u128) -> u16 {
    let num = 65535 * (far_mm - z_mm) * near_mm;
    let den = (far_mm - near_mm) * z_mm;
    ((2 * num + den) / (2 * den)) as u16
}

fn depth_encoding() -> Result<String, String> {
    let golden = depth16_oracle(1000, 100, 100_000);
    let got = depth16_value(1.0, 0.1, 100.0).map_err(|e| e.to_string())?;
    ensure(got == golden && golden == 6494, || format!("z = 1 m encodes to {got}, oracle {golden}"))?;
    for z_mm in [100u128, 250, 999, 1001, 5000, 42_000, 99_999, 100_000] {
        let got = depth16_value(z_mm as f64 / 1000.0, 0.1, 100.0).map_err(|e| e.to_string())?;
        ensure(got == depth16_oracle(z_mm, 100, 100_000), || format!("z = {z_mm} mm: {got}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..100_000 {
        let near = rng.random_range(0.01..1.0);
        let far = near + rng.random_range(1.0..1000.0);
        let (a, b) = (rng.random_range(near..far), rng.random_range(near..far));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (va, vb) = (depth16_value(lo, near, far).unwrap(), depth16_value(hi, near, far).unwrap());
        ensure(va >= vb, || format!("not monotone: {lo} -> {va}, {hi} -> {vb}"))?;
    }
    ensure(depth16_value(0.1, 0.1, 100.0).unwrap() == 65535 && depth16_value(100.0, 0.1, 100.0).unwrap() == 0, || "range ends".into())?;
    Ok(format!("z = 1 m -> {golden}; 100000 monotone pairs"))
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 10] = [
        ("two-shot framing", two_shot_framing),
        ("round trip", round_trip),
        ("dolly-zoom constancy", dolly_zoom_constancy),
        ("rigidity", rigidity),
        ("rasterizer vs ray-cast oracle", rasterizer_vs_raycast),
        ("keypoint projection", keypoint_projection),
        ("bundle laws", bundle_laws),
        ("collage laws", collage_laws),
        ("frame-count and anchoring laws", frame_count_and_anchoring),
        ("depth encoding", depth_encoding),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name} ({:.2?}): {detail}", start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({:.2?}): {why}", start.elapsed());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
