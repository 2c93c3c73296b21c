//! Ground-truth rendering and export: depth, object masks and pose maps.

pub mod collage;
pub mod depth;
pub mod export;
pub mod netpbm;
pub mod pose_map;
pub mod preview;
pub mod raster;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::scene::SceneDoc;

pub use collage::{collage_bundles, composite, CollageLayer, CollageSpec, LayerFrame};
pub use depth::encode_depth16;
pub use export::{export_bundle, BundleManifest, ExportOptions, PromptBinding};
pub use pose_map::{project_keypoints, render_pose_map, Keypoint, KeypointSet};
pub use raster::rasterize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundTruthError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    Dimensions { width: usize, height: usize },
    #[error("unknown object_id `{0}`")]
    UnknownObject(String),
    #[error("near ({near}) must be positive and below far ({far})")]
    DepthRange { near: f64, far: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("frame {frame}: {message} ({completed} frames completed before the failure)")]
    Frame {
        frame: usize,
        message: String,
        completed: usize,
    },
    #[error("invalid export: {0}")]
    Invalid(String),
    #[error("layer {layer}: {message}")]
    Layer { layer: usize, message: String },
}

impl GroundTruthError {
    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        GroundTruthError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub(crate) fn check_dimensions(width: usize, height: usize) -> Result<(), GroundTruthError> {
    if width == 0 || height == 0 {
        return Err(GroundTruthError::Dimensions { width, height });
    }
    Ok(())
}

/// Metric depth along the camera's viewing axis; `f32::INFINITY` marks background.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthBuffer {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl DepthBuffer {
    pub fn background(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![f32::INFINITY; width * height],
        }
    }

    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }
}

/// Per-pixel index into `labels`, or [`IdBuffer::BACKGROUND`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdBuffer {
    pub width: usize,
    pub height: usize,
    pub ids: Vec<u32>,
    pub labels: Vec<String>,
}

impl IdBuffer {
    pub const BACKGROUND: u32 = u32::MAX;

    pub fn background(width: usize, height: usize, labels: Vec<String>) -> Self {
        Self {
            width,
            height,
            ids: vec![Self::BACKGROUND; width * height],
            labels,
        }
    }

    pub fn for_scene(scene: &SceneDoc, width: usize, height: usize) -> Self {
        Self::background(width, height, scene.object_ids().map(str::to_string).collect())
    }

    pub fn label_at(&self, x: usize, y: usize) -> Option<&str> {
        match self.ids[y * self.width + x] {
            Self::BACKGROUND => None,
            i => Some(&self.labels[i as usize]),
        }
    }
}

/// Binary mask of one object: 255 where the pixel belongs to it, 0 elsewhere.
pub fn masks_from_ids(ids: &IdBuffer, object_id: &str) -> Result<Vec<u8>, GroundTruthError> {
    let index = ids
        .labels
        .iter()
        .position(|l| l == object_id)
        .ok_or_else(|| GroundTruthError::UnknownObject(object_id.to_string()))? as u32;
    Ok(ids.ids.iter().map(|&i| if i == index { 255 } else { 0 }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn buffer() -> IdBuffer {
        IdBuffer {
            width: 3,
            height: 1,
            ids: vec![0, IdBuffer::BACKGROUND, 1],
            labels: vec!["a".into(), "b".into()],
        }
    }

    #[test]
    fn masks_select_one_object() {
        let ids = buffer();
        assert_eq!(masks_from_ids(&ids, "a").unwrap(), vec![255, 0, 0]);
        assert_eq!(masks_from_ids(&ids, "b").unwrap(), vec![0, 0, 255]);
        assert_eq!(masks_from_ids(&ids, "c"), Err(GroundTruthError::UnknownObject("c".into())));
    }

    #[test]
    fn background_only_gives_empty_masks() {
        let ids = IdBuffer::background(4, 4, vec!["a".into()]);
        assert!(masks_from_ids(&ids, "a").unwrap().iter().all(|&v| v == 0));
        assert_eq!(ids.label_at(1, 1), None);
    }

    #[test]
    fn masks_partition_the_foreground() {
        let ids = buffer();
        let masks: Vec<_> = ids.labels.iter().map(|l| masks_from_ids(&ids, l).unwrap()).collect();
        for p in 0..3 {
            let hits = masks.iter().filter(|m| m[p] == 255).count();
            assert_eq!(hits, usize::from(ids.ids[p] != IdBuffer::BACKGROUND));
        }
    }
}
