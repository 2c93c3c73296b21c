//! Conditioning bundle export.
//!
//! Layout of a bundle directory:
//!
//! ```text
//! manifest.json                  written last; its presence marks a complete export
//! frames/NNNN_depth.pfm          metric depth, f32
//! frames/NNNN_depth16.pgm        inverse-depth normalized, 16-bit
//! frames/NNNN_pose.ppm           OpenPose-style pose map
//! frames/NNNN_mask_<id>.pgm      one 8-bit mask per scene object
//! frames/NNNN_keypoints.json     projected template joints per character
//! ```

use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{CameraIntrinsics, Pose};
use crate::scene::{SceneDoc, SceneObject};
use crate::storyboard::ShotAsset;

use super::depth::encode_depth16;
use super::netpbm::{encode_pfm, encode_pgm16, encode_pgm8, encode_ppm};
use super::pose_map::{project_keypoints, render_pose_map, KeypointDocument, KeypointSet};
use super::raster::rasterize;
use super::{check_dimensions, masks_from_ids, DepthBuffer, GroundTruthError, IdBuffer};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BUNDLE_FORMAT: &str = "previz-bundle/1";

/// Prompt targets that are not scene objects.
pub const ENVIRONMENT_TARGET: &str = "environment";
pub const SHOT_TARGET: &str = "shot";

pub fn depth_file(frame: usize) -> String {
    format!("frames/{frame:04}_depth.pfm")
}

pub fn depth16_file(frame: usize) -> String {
    format!("frames/{frame:04}_depth16.pgm")
}

pub fn pose_file(frame: usize) -> String {
    format!("frames/{frame:04}_pose.ppm")
}

pub fn mask_file(frame: usize, object_id: &str) -> String {
    format!("frames/{frame:04}_mask_{object_id}.pgm")
}

pub fn keypoints_file(frame: usize) -> String {
    format!("frames/{frame:04}_keypoints.json")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBinding {
    /// A scene object id, `environment`, or `shot`.
    pub target: String,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportOptions {
    pub width: usize,
    pub height: usize,
    /// Sensor and clipping planes; focal length comes from the asset and aspect from the image size.
    pub intrinsics: CameraIntrinsics,
    pub prompts: Vec<PromptBinding>,
    pub creation_tag: String,
}

impl ExportOptions {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            intrinsics: CameraIntrinsics::default(),
            prompts: Vec::new(),
            creation_tag: String::new(),
        }
    }

    pub fn frame_intrinsics(&self, focal_mm: f64) -> CameraIntrinsics {
        frame_intrinsics(&self.intrinsics, focal_mm, self.width, self.height)
    }
}

pub fn frame_intrinsics(base: &CameraIntrinsics, focal_mm: f64, width: usize, height: usize) -> CameraIntrinsics {
    base.with_focal(focal_mm).with_aspect(width as f64 / height as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicsRecord {
    pub sensor_width_mm: f64,
    pub aspect: f64,
    pub near_m: f64,
    pub far_m: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub object_id: String,
    pub name: String,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub target: String,
    pub prompt: String,
    /// `%04d` stands for the frame index.
    pub mask_pattern: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskRecord {
    pub object_id: String,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: usize,
    pub t_s: f64,
    /// Camera-to-world, row-major.
    pub pose: [f64; 16],
    pub focal_mm: f64,
    pub depth: String,
    pub depth16: String,
    pub pose_map: String,
    pub masks: Vec<MaskRecord>,
    pub keypoints: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub format: String,
    pub creation_tag: String,
    pub asset_id: String,
    pub fps: u32,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
    pub intrinsics: IntrinsicsRecord,
    pub objects: Vec<ObjectRecord>,
    pub prompts: Vec<PromptRecord>,
    pub frames: Vec<FrameRecord>,
}

impl BundleManifest {
    pub fn load(dir: &Path) -> Result<Self, GroundTruthError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| GroundTruthError::io(&path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| GroundTruthError::Io {
            path: path.display().to_string(),
            message: format!("{}: {}", e.path(), e.inner()),
        })
    }

    /// Every file a completed bundle must contain, manifest included.
    pub fn files(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .frames
            .iter()
            .flat_map(|f| {
                [f.depth.clone(), f.depth16.clone(), f.pose_map.clone(), f.keypoints.clone()]
                    .into_iter()
                    .chain(f.masks.iter().map(|m| m.file.clone()))
            })
            .collect();
        out.push(MANIFEST_FILE.to_string());
        out
    }
}

/// Everything rendered for one frame, before encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRender {
    pub depth: DepthBuffer,
    pub ids: IdBuffer,
    pub keypoints: Vec<KeypointSet>,
}

pub fn render_frame(
    scene: &SceneDoc,
    t_s: f64,
    pose: &Pose,
    intr: &CameraIntrinsics,
    width: usize,
    height: usize,
) -> Result<FrameRender, GroundTruthError> {
    let (depth, ids) = rasterize(scene, t_s, pose, intr, width, height)?;
    let keypoints = scene
        .characters()
        .map(|c| project_keypoints(c, t_s, pose, intr, width, height))
        .collect();
    Ok(FrameRender { depth, ids, keypoints })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedFrame {
    pub depth: Vec<u8>,
    pub depth16: Vec<u8>,
    pub pose_map: Vec<u8>,
    /// One mask per label, in label order.
    pub masks: Vec<(String, Vec<u8>)>,
    pub keypoints: Vec<u8>,
}

impl EncodedFrame {
    /// `(relative path, bytes)` pairs in a fixed order.
    pub fn files(&self, frame: usize) -> Vec<(String, &[u8])> {
        let mut out = vec![
            (depth_file(frame), self.depth.as_slice()),
            (depth16_file(frame), self.depth16.as_slice()),
            (pose_file(frame), self.pose_map.as_slice()),
        ];
        out.extend(self.masks.iter().map(|(id, m)| (mask_file(frame, id), m.as_slice())));
        out.push((keypoints_file(frame), self.keypoints.as_slice()));
        out
    }
}

pub fn encode_frame(frame: usize, render: &FrameRender, near: f64, far: f64) -> Result<EncodedFrame, GroundTruthError> {
    let (w, h) = (render.depth.width, render.depth.height);
    let netpbm = |e: super::netpbm::NetpbmError| GroundTruthError::Invalid(e.to_string());
    let depth = encode_pfm(w, h, &render.depth.values).map_err(netpbm)?;
    let depth16 = encode_pgm16(w, h, &encode_depth16(&render.depth, near, far)?).map_err(netpbm)?;
    let pose_map = encode_ppm(w, h, &render_pose_map(&render.keypoints, w, h)).map_err(netpbm)?;
    let masks = render
        .ids
        .labels
        .iter()
        .map(|id| Ok((id.clone(), encode_pgm8(w, h, &masks_from_ids(&render.ids, id)?).map_err(netpbm)?)))
        .collect::<Result<_, GroundTruthError>>()?;
    let keypoints = KeypointDocument::new(frame, &render.keypoints).to_json().into_bytes();
    Ok(EncodedFrame {
        depth,
        depth16,
        pose_map,
        masks,
        keypoints,
    })
}

pub(crate) fn write_frame_files(out_dir: &Path, frame: usize, encoded: &EncodedFrame) -> Result<(), String> {
    for (name, bytes) in encoded.files(frame) {
        let path = out_dir.join(&name);
        fs::write(&path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub(crate) fn write_atomically(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), GroundTruthError> {
    let tmp = dir.join(format!("{name}.tmp"));
    let path = dir.join(name);
    fs::write(&tmp, bytes).map_err(|e| GroundTruthError::io(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| GroundTruthError::io(&path, e))
}

pub(crate) fn prepare_output(out_dir: &Path) -> Result<(), GroundTruthError> {
    let frames = out_dir.join("frames");
    fs::create_dir_all(&frames).map_err(|e| GroundTruthError::io(&frames, e))?;
    let manifest = out_dir.join(MANIFEST_FILE);
    match fs::remove_file(&manifest) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(GroundTruthError::io(&manifest, e)),
    }
}

fn prompt_records(scene: &SceneDoc, prompts: &[PromptBinding]) -> Result<Vec<PromptRecord>, GroundTruthError> {
    prompts
        .iter()
        .map(|p| {
            let mask_pattern = match p.target.as_str() {
                ENVIRONMENT_TARGET | SHOT_TARGET => None,
                id if scene.get(id).is_some() => Some(format!("frames/%04d_mask_{id}.pgm")),
                id => return Err(GroundTruthError::UnknownObject(id.to_string())),
            };
            Ok(PromptRecord {
                target: p.target.clone(),
                prompt: p.prompt.clone(),
                mask_pattern,
            })
        })
        .collect()
}

/// Renders and writes every frame of `asset` in parallel, then the manifest.
///
/// `progress(done, total)` is called after each frame; it may run on any worker thread.
pub fn export_bundle(
    scene: &SceneDoc,
    asset: &ShotAsset,
    opts: &ExportOptions,
    out_dir: &Path,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<BundleManifest, GroundTruthError> {
    check_dimensions(opts.width, opts.height)?;
    let n = asset.frames();
    if n == 0 {
        return Err(GroundTruthError::Invalid("asset has no frames".into()));
    }
    if asset.focals.len() != n || asset.fps == 0 {
        return Err(GroundTruthError::Invalid("asset focals/fps are inconsistent".into()));
    }
    opts.frame_intrinsics(asset.focals[0]).validate()?;
    let prompts = prompt_records(scene, &opts.prompts)?;
    prepare_output(out_dir)?;

    let (near, far) = (opts.intrinsics.near_m, opts.intrinsics.far_m);
    let done = AtomicUsize::new(0);
    (0..n).into_par_iter().try_for_each(|i| {
        let fail = |message: String| GroundTruthError::Frame {
            frame: i,
            message,
            completed: done.load(Ordering::SeqCst),
        };
        let t = i as f64 / asset.fps as f64;
        let intr = opts.frame_intrinsics(asset.focals[i]);
        let render =
            render_frame(scene, t, &asset.poses[i], &intr, opts.width, opts.height).map_err(|e| fail(e.to_string()))?;
        let encoded = encode_frame(i, &render, near, far).map_err(|e| fail(e.to_string()))?;
        write_frame_files(out_dir, i, &encoded).map_err(fail)?;
        let count = done.fetch_add(1, Ordering::SeqCst) + 1;
        progress(count, n);
        Ok::<(), GroundTruthError>(())
    })?;

    let objects: Vec<ObjectRecord> = scene
        .objects()
        .iter()
        .map(|o| ObjectRecord {
            object_id: o.object_id().to_string(),
            name: o.name().to_string(),
            kind: match o {
                SceneObject::Mesh(_) => "mesh",
                SceneObject::Character(_) => "character",
            }
            .to_string(),
        })
        .collect();
    let frames = (0..n)
        .map(|i| FrameRecord {
            index: i,
            t_s: i as f64 / asset.fps as f64,
            pose: asset.poses[i].to_matrix(),
            focal_mm: asset.focals[i],
            depth: depth_file(i),
            depth16: depth16_file(i),
            pose_map: pose_file(i),
            masks: objects
                .iter()
                .map(|o| MaskRecord {
                    object_id: o.object_id.clone(),
                    file: mask_file(i, &o.object_id),
                })
                .collect(),
            keypoints: keypoints_file(i),
        })
        .collect();
    let manifest = BundleManifest {
        format: BUNDLE_FORMAT.to_string(),
        creation_tag: opts.creation_tag.clone(),
        asset_id: asset.id.clone(),
        fps: asset.fps,
        frame_count: n,
        width: opts.width,
        height: opts.height,
        intrinsics: IntrinsicsRecord {
            sensor_width_mm: opts.intrinsics.sensor_width_mm,
            aspect: opts.width as f64 / opts.height as f64,
            near_m: near,
            far_m: far,
        },
        objects,
        prompts,
        frames,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifests always serialize");
    write_atomically(out_dir, MANIFEST_FILE, text.as_bytes())?;
    Ok(manifest)
}
