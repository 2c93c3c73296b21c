//! Compositing exported frames from several shots or times into one.
//!
//! Per pixel, among layers whose selected objects cover it, the layer with
//! the smallest metric depth wins (the earlier layer on ties). A character's
//! skeleton is kept unless it is visible in its own layer yet wins no pixel
//! of the composite.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::export::{encode_frame, prepare_output, write_atomically, write_frame_files, FrameRender, MANIFEST_FILE};
use super::netpbm::{decode_pfm, decode_pgm};
use super::pose_map::KeypointDocument;
use super::{DepthBuffer, GroundTruthError, IdBuffer};
use crate::groundtruth::export::BundleManifest;

/// One layer of one output frame: a rendered frame and the objects taken from it.
#[derive(Debug, Clone, Copy)]
pub struct LayerFrame<'a> {
    pub render: &'a FrameRender,
    /// `None` selects every object in the frame.
    pub objects: Option<&'a [String]>,
}

pub fn composite(layers: &[LayerFrame<'_>]) -> Result<FrameRender, GroundTruthError> {
    let first = layers
        .first()
        .ok_or_else(|| GroundTruthError::Invalid("collage needs at least one layer".into()))?;
    let (width, height) = (first.render.depth.width, first.render.depth.height);
    let mut labels: Vec<String> = Vec::new();
    // Per layer: composite label for each of its own labels, or None when unselected.
    let mut remap: Vec<Vec<Option<u32>>> = Vec::with_capacity(layers.len());
    for (li, layer) in layers.iter().enumerate() {
        let r = layer.render;
        if (r.depth.width, r.depth.height) != (width, height) || (r.ids.width, r.ids.height) != (width, height) {
            return Err(GroundTruthError::Layer {
                layer: li,
                message: format!(
                    "size {}x{} does not match {width}x{height}",
                    r.depth.width, r.depth.height
                ),
            });
        }
        if let Some(objs) = layer.objects {
            if let Some(missing) = objs.iter().find(|o| !r.ids.labels.contains(o)) {
                return Err(GroundTruthError::Layer {
                    layer: li,
                    message: format!("unknown object_id `{missing}`"),
                });
            }
        }
        let map = r
            .ids
            .labels
            .iter()
            .map(|l| {
                let selected = layer.objects.is_none_or(|objs| objs.contains(l));
                selected.then(|| match labels.iter().position(|x| x == l) {
                    Some(i) => i as u32,
                    None => {
                        labels.push(l.clone());
                        (labels.len() - 1) as u32
                    }
                })
            })
            .collect();
        remap.push(map);
    }

    let mut depth = DepthBuffer::background(width, height);
    let mut ids = IdBuffer::background(width, height, labels);
    let mut wins = vec![vec![false; remap.iter().map(Vec::len).max().unwrap_or(0)]; layers.len()];
    for p in 0..width * height {
        let mut best: Option<(usize, f32)> = None;
        for (li, layer) in layers.iter().enumerate() {
            let own = layer.render.ids.ids[p];
            if own == IdBuffer::BACKGROUND || remap[li][own as usize].is_none() {
                continue;
            }
            let z = layer.render.depth.values[p];
            if best.is_none_or(|(_, bz)| z < bz) {
                best = Some((li, z));
            }
        }
        if let Some((li, z)) = best {
            let own = layers[li].render.ids.ids[p] as usize;
            depth.values[p] = z;
            ids.ids[p] = remap[li][own].expect("selected");
            wins[li][own] = true;
        }
    }

    let mut keypoints = Vec::new();
    for (li, layer) in layers.iter().enumerate() {
        let r = layer.render;
        for set in &r.keypoints {
            let Some(own) = r.ids.labels.iter().position(|l| *l == set.object_id) else {
                continue;
            };
            if remap[li][own].is_none() {
                continue;
            }
            let visible_in_layer = r.ids.ids.contains(&(own as u32));
            if !visible_in_layer || wins[li][own] {
                keypoints.push(set.clone());
            }
        }
    }
    Ok(FrameRender { depth, ids, keypoints })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollageLayer {
    /// Directory of an exported bundle.
    pub bundle: PathBuf,
    /// First frame taken from the bundle.
    #[serde(default)]
    pub start: usize,
    /// One past the last frame; defaults to the end of the bundle.
    #[serde(default)]
    pub end: Option<usize>,
    #[serde(default)]
    pub objects: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollageSpec {
    pub layers: Vec<CollageLayer>,
    #[serde(default)]
    pub creation_tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollageLayerRecord {
    pub bundle: String,
    pub asset_id: String,
    pub start: usize,
    pub end: usize,
    pub objects: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollageManifest {
    pub format: String,
    pub creation_tag: String,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
    pub near_m: f64,
    pub far_m: f64,
    pub layers: Vec<CollageLayerRecord>,
    pub files: Vec<String>,
}

pub const COLLAGE_FORMAT: &str = "previz-collage/1";

/// Rebuilds a frame's buffers from the files of an exported bundle.
pub fn load_bundle_frame(dir: &Path, manifest: &BundleManifest, frame: usize) -> Result<FrameRender, GroundTruthError> {
    let rec = manifest.frames.get(frame).ok_or_else(|| {
        GroundTruthError::Invalid(format!("frame {frame} is outside the bundle ({} frames)", manifest.frame_count))
    })?;
    let read = |name: &str| {
        let path = dir.join(name);
        fs::read(&path).map_err(|e| GroundTruthError::io(&path, e))
    };
    let bad = |name: &str, e: &dyn std::fmt::Display| GroundTruthError::Io {
        path: dir.join(name).display().to_string(),
        message: e.to_string(),
    };
    let img = decode_pfm(&read(&rec.depth)?).map_err(|e| bad(&rec.depth, &e))?;
    let (w, h) = (manifest.width, manifest.height);
    if (img.width, img.height) != (w, h) {
        return Err(bad(&rec.depth, &"size does not match the manifest"));
    }
    let labels: Vec<String> = rec.masks.iter().map(|m| m.object_id.clone()).collect();
    let mut ids = IdBuffer::background(w, h, labels);
    for (k, m) in rec.masks.iter().enumerate() {
        let mask = decode_pgm(&read(&m.file)?).map_err(|e| bad(&m.file, &e))?;
        if (mask.width, mask.height) != (w, h) {
            return Err(bad(&m.file, &"size does not match the manifest"));
        }
        for (p, &v) in mask.values.iter().enumerate() {
            if v != 0 {
                if ids.ids[p] != IdBuffer::BACKGROUND {
                    return Err(bad(&m.file, &format!("pixel {p} is claimed by two masks")));
                }
                ids.ids[p] = k as u32;
            }
        }
    }
    let text = read(&rec.keypoints)?;
    let doc: KeypointDocument = serde_json::from_slice(&text).map_err(|e| bad(&rec.keypoints, &e))?;
    let keypoints = doc.to_sets().map_err(|e| bad(&rec.keypoints, &e))?;
    Ok(FrameRender {
        depth: DepthBuffer {
            width: w,
            height: h,
            values: img.values,
        },
        ids,
        keypoints,
    })
}

/// Composites frame ranges of exported bundles into a new directory.
pub fn collage_bundles(spec: &CollageSpec, out_dir: &Path) -> Result<CollageManifest, GroundTruthError> {
    if spec.layers.is_empty() {
        return Err(GroundTruthError::Invalid("collage needs at least one layer".into()));
    }
    let manifests = spec
        .layers
        .iter()
        .map(|l| BundleManifest::load(&l.bundle))
        .collect::<Result<Vec<_>, _>>()?;
    let (width, height) = (manifests[0].width, manifests[0].height);
    let mut ranges = Vec::with_capacity(spec.layers.len());
    for (li, (layer, m)) in spec.layers.iter().zip(&manifests).enumerate() {
        let err = |message: String| GroundTruthError::Layer { layer: li, message };
        if (m.width, m.height) != (width, height) {
            return Err(err(format!("size {}x{} does not match {width}x{height}", m.width, m.height)));
        }
        let end = layer.end.unwrap_or(m.frame_count);
        if layer.start >= end || end > m.frame_count {
            return Err(err(format!(
                "frame range {}..{end} is empty or exceeds the bundle's {} frames",
                layer.start, m.frame_count
            )));
        }
        ranges.push((layer.start, end));
    }
    let count = ranges[0].1 - ranges[0].0;
    if let Some(li) = ranges.iter().position(|(s, e)| e - s != count) {
        return Err(GroundTruthError::Layer {
            layer: li,
            message: format!("frame range has {} frames but layer 0 has {count}", ranges[li].1 - ranges[li].0),
        });
    }

    let (near, far) = (manifests[0].intrinsics.near_m, manifests[0].intrinsics.far_m);
    prepare_output(out_dir)?;
    let mut files = Vec::new();
    for k in 0..count {
        let renders = spec
            .layers
            .iter()
            .zip(&manifests)
            .zip(&ranges)
            .map(|((l, m), (s, _))| load_bundle_frame(&l.bundle, m, s + k))
            .collect::<Result<Vec<_>, _>>()?;
        let layer_frames: Vec<LayerFrame> = renders
            .iter()
            .zip(&spec.layers)
            .map(|(render, l)| LayerFrame {
                render,
                objects: l.objects.as_deref(),
            })
            .collect();
        let out = composite(&layer_frames)?;
        let encoded = encode_frame(k, &out, near, far)?;
        write_frame_files(out_dir, k, &encoded).map_err(|message| GroundTruthError::Frame {
            frame: k,
            message,
            completed: k,
        })?;
        files.extend(encoded.files(k).into_iter().map(|(name, _)| name));
    }
    files.push(MANIFEST_FILE.to_string());
    let manifest = CollageManifest {
        format: COLLAGE_FORMAT.to_string(),
        creation_tag: spec.creation_tag.clone(),
        frame_count: count,
        width,
        height,
        near_m: near,
        far_m: far,
        layers: spec
            .layers
            .iter()
            .zip(&manifests)
            .zip(&ranges)
            .map(|((l, m), (s, e))| CollageLayerRecord {
                bundle: l.bundle.display().to_string(),
                asset_id: m.asset_id.clone(),
                start: *s,
                end: *e,
                objects: l.objects.clone(),
            })
            .collect(),
        files,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifests always serialize");
    write_atomically(out_dir, MANIFEST_FILE, text.as_bytes())?;
    Ok(manifest)
}
