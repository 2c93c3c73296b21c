//! Single-frame preview images, encoded exactly as the exporter encodes them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::{CameraIntrinsics, Pose};
use crate::scene::SceneDoc;

use super::export::{encode_frame, render_frame};
use super::netpbm::encode_ppm;
use super::{check_dimensions, GroundTruthError, IdBuffer};

pub const MAX_PREVIEW_DIM: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PreviewLayer {
    Depth16,
    IdColor,
    PoseMap,
}

impl PreviewLayer {
    pub const ALL: [PreviewLayer; 3] = [PreviewLayer::Depth16, PreviewLayer::IdColor, PreviewLayer::PoseMap];

    pub fn name(self) -> &'static str {
        match self {
            PreviewLayer::Depth16 => "DEPTH16",
            PreviewLayer::IdColor => "ID_COLOR",
            PreviewLayer::PoseMap => "POSEMAP",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Self::name).join(", ")
    }
}

impl fmt::Display for PreviewLayer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownLayer(pub String);

impl fmt::Display for UnknownLayer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown layer `{}` (valid layers: {})", self.0, PreviewLayer::valid_names())
    }
}

impl std::error::Error for UnknownLayer {}

impl FromStr for PreviewLayer {
    type Err = UnknownLayer;

    fn from_str(s: &str) -> Result<Self, UnknownLayer> {
        Self::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| UnknownLayer(s.to_string()))
    }
}

/// Distinct, stable color for the object at `index` in scene order (golden-angle hues).
pub fn id_color(index: u32) -> [u8; 3] {
    let hue = (index as f64 * 137.507_764_050_037_85).rem_euclid(360.0) / 60.0;
    let (s, v) = (0.65, 0.95);
    let c = v * s;
    let x = c * (1.0 - (hue % 2.0 - 1.0).abs());
    let (r, g, b) = match hue as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|k| ((k + m) * 255.0).round() as u8)
}

pub fn id_color_image(ids: &IdBuffer) -> Vec<u8> {
    let mut rgb = Vec::with_capacity(ids.ids.len() * 3);
    for &i in &ids.ids {
        rgb.extend_from_slice(&if i == IdBuffer::BACKGROUND { [0, 0, 0] } else { id_color(i) });
    }
    rgb
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreviewImage {
    pub width: usize,
    pub height: usize,
    /// `pgm16` or `ppm`.
    pub format: &'static str,
    pub bytes: Vec<u8>,
}

pub fn render_preview(
    scene: &SceneDoc,
    t_s: f64,
    pose: &Pose,
    intr: &CameraIntrinsics,
    width: usize,
    height: usize,
    layer: PreviewLayer,
) -> Result<PreviewImage, GroundTruthError> {
    check_dimensions(width, height)?;
    if width > MAX_PREVIEW_DIM || height > MAX_PREVIEW_DIM {
        return Err(GroundTruthError::Invalid(format!(
            "preview size {width}x{height} exceeds {MAX_PREVIEW_DIM}x{MAX_PREVIEW_DIM}"
        )));
    }
    let render = render_frame(scene, t_s, pose, intr, width, height)?;
    let (format, bytes) = match layer {
        PreviewLayer::Depth16 => ("pgm16", encode_frame(0, &render, intr.near_m, intr.far_m)?.depth16),
        PreviewLayer::PoseMap => ("ppm", encode_frame(0, &render, intr.near_m, intr.far_m)?.pose_map),
        PreviewLayer::IdColor => (
            "ppm",
            encode_ppm(width, height, &id_color_image(&render.ids)).map_err(|e| GroundTruthError::Invalid(e.to_string()))?,
        ),
    };
    Ok(PreviewImage {
        width,
        height,
        format,
        bytes,
    })
}
