//! Keypoint projection and OpenPose-style pose map drawing.

use serde::{Deserialize, Serialize};

use crate::geometry::{ndc_to_pixel, project_to_ndc, CameraIntrinsics, Pose};
use crate::openpose::{COLORS, JOINT_COUNT, JOINT_NAMES, LIMBS};
use crate::scene::{joints_at_time, Character};

pub const DISC_RADIUS_PX: f64 = 4.0;
pub const LIMB_THICKNESS_PX: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Keypoint {
    /// Continuous pixel position; `None` when unmapped or behind the camera.
    pub pixel: Option<(f64, f64)>,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeypointSet {
    pub object_id: String,
    pub joints: [Keypoint; JOINT_COUNT],
}

pub fn project_keypoints(
    character: &Character,
    t_s: f64,
    pose: &Pose,
    intr: &CameraIntrinsics,
    width: usize,
    height: usize,
) -> KeypointSet {
    let positions = joints_at_time(character, t_s);
    let (w, h) = (width as f64, height as f64);
    let mut joints = [Keypoint::default(); JOINT_COUNT];
    for (slot, joint) in character.template_joints().iter().enumerate() {
        let Some(j) = joint else { continue };
        if let Ok(ndc) = project_to_ndc(&positions[*j], pose, intr) {
            let (px, py) = ndc_to_pixel(ndc.x, ndc.y, w, h);
            let inside = (0.0..=w).contains(&px) && (0.0..=h).contains(&py);
            joints[slot] = Keypoint {
                pixel: Some((px, py)),
                visible: inside,
            };
        }
    }
    KeypointSet {
        object_id: character.object_id.clone(),
        joints,
    }
}

/// Draws limbs, then joint discs, for each set in order onto a black RGB image.
pub fn render_pose_map(sets: &[KeypointSet], width: usize, height: usize) -> Vec<u8> {
    let mut rgb = vec![0u8; width * height * 3];
    for set in sets {
        let at = |k: usize| match set.joints[k] {
            Keypoint {
                pixel: Some(p),
                visible: true,
            } => Some(p),
            _ => None,
        };
        for (i, &(a, b)) in LIMBS.iter().enumerate() {
            if let (Some(p), Some(q)) = (at(a), at(b)) {
                stamp(&mut rgb, width, height, p, q, LIMB_THICKNESS_PX / 2.0, COLORS[i]);
            }
        }
        for (k, color) in COLORS.iter().enumerate() {
            if let Some(p) = at(k) {
                stamp(&mut rgb, width, height, p, p, DISC_RADIUS_PX, *color);
            }
        }
    }
    rgb
}

/// Fills every pixel whose center lies within `radius` of the segment `p`-`q`.
fn stamp(rgb: &mut [u8], width: usize, height: usize, p: (f64, f64), q: (f64, f64), radius: f64, color: [u8; 3]) {
    let lo_x = (p.0.min(q.0) - radius - 0.5).floor().max(0.0) as usize;
    let lo_y = (p.1.min(q.1) - radius - 0.5).floor().max(0.0) as usize;
    let hi_x = ((p.0.max(q.0) + radius).ceil().max(0.0) as usize).min(width);
    let hi_y = ((p.1.max(q.1) + radius).ceil().max(0.0) as usize).min(height);
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let len2 = dx * dx + dy * dy;
    for y in lo_y..hi_y {
        let cy = y as f64 + 0.5;
        for x in lo_x..hi_x {
            let cx = x as f64 + 0.5;
            let s = if len2 > 0.0 {
                (((cx - p.0) * dx + (cy - p.1) * dy) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let (ex, ey) = (cx - (p.0 + s * dx), cy - (p.1 + s * dy));
            if ex * ex + ey * ey <= radius * radius {
                let i = (y * width + x) * 3;
                rgb[i..i + 3].copy_from_slice(&color);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRecord {
    pub name: String,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterKeypoints {
    pub object_id: String,
    pub joints: Vec<JointRecord>,
}

/// Per-frame keypoint document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointDocument {
    pub frame: usize,
    pub characters: Vec<CharacterKeypoints>,
}

impl KeypointDocument {
    pub fn new(frame: usize, sets: &[KeypointSet]) -> Self {
        let characters = sets
            .iter()
            .map(|s| CharacterKeypoints {
                object_id: s.object_id.clone(),
                joints: s
                    .joints
                    .iter()
                    .zip(JOINT_NAMES)
                    .map(|(k, name)| JointRecord {
                        name: name.to_string(),
                        x: k.pixel.map(|p| p.0),
                        y: k.pixel.map(|p| p.1),
                        visible: k.visible,
                    })
                    .collect(),
            })
            .collect();
        Self { frame, characters }
    }

    pub fn to_sets(&self) -> Result<Vec<KeypointSet>, String> {
        self.characters
            .iter()
            .map(|c| {
                if c.joints.len() != JOINT_COUNT {
                    return Err(format!("{}: expected {JOINT_COUNT} joints, found {}", c.object_id, c.joints.len()));
                }
                let mut joints = [Keypoint::default(); JOINT_COUNT];
                for (slot, (rec, name)) in joints.iter_mut().zip(c.joints.iter().zip(JOINT_NAMES)) {
                    if rec.name != name {
                        return Err(format!("{}: expected joint `{name}`, found `{}`", c.object_id, rec.name));
                    }
                    *slot = Keypoint {
                        pixel: rec.x.zip(rec.y),
                        visible: rec.visible,
                    };
                }
                Ok(KeypointSet {
                    object_id: c.object_id.clone(),
                    joints,
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("keypoint documents always serialize")
    }
}
