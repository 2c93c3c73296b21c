//! Storyboards, shot assets and the timeline.
//!
//! A storyboard compiles into a [`ShotAsset`]: one camera pose and focal
//! length per frame. In shot mode the frames come from a chain of camera
//! behaviors; in frame mode from interpolated keyframes.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behaviors::{self, join, BehaviorError, CameraBehavior, ShotState, Violation};
use crate::cinespace::{self, CineRig, CineSpaceParams, Easing};
use crate::geometry::{Pose, RIGIDITY_TOLERANCE};

/// Maximum gap between a tracking curve's first point and the camera it starts from.
pub const TRACK_START_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GenerationMode {
    Shot,
    Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub frame: u32,
    pub params: CineSpaceParams,
    #[serde(default)]
    pub easing_to_next: Easing,
}

fn default_fps() -> u32 {
    24
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Storyboard {
    pub id: String,
    /// Scene camera this storyboard was bound to, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<String>,
    pub rig: CineRig,
    /// Initial camera state; required in shot mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<ShotState>,
    pub mode: GenerationMode,
    #[serde(default)]
    pub behaviors: Vec<CameraBehavior>,
    #[serde(default)]
    pub keyframes: Vec<Keyframe>,
    #[serde(default = "default_fps")]
    pub fps: u32,
}

impl Storyboard {
    pub fn shot(id: impl Into<String>, rig: CineRig, initial: ShotState, behaviors: Vec<CameraBehavior>) -> Self {
        Self {
            id: id.into(),
            camera: None,
            rig,
            initial: Some(initial),
            mode: GenerationMode::Shot,
            behaviors,
            keyframes: Vec::new(),
            fps: default_fps(),
        }
    }

    pub fn frames(id: impl Into<String>, rig: CineRig, keyframes: Vec<Keyframe>) -> Self {
        Self {
            id: id.into(),
            camera: None,
            rig,
            initial: None,
            mode: GenerationMode::Frame,
            behaviors: Vec::new(),
            keyframes,
            fps: default_fps(),
        }
    }

    /// Collects every static violation (chaining is checked during generation).
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.id.is_empty() {
            out.push(Violation::new("id", "must not be empty"));
        }
        if self.fps == 0 {
            out.push(Violation::new("fps", "must be positive"));
        }
        if let Err(e) = self.rig.validate() {
            out.push(Violation::new("rig", e.to_string()));
        }
        match self.mode {
            GenerationMode::Shot => {
                match &self.initial {
                    None => out.push(Violation::new("initial", "shot mode requires an initial camera state")),
                    Some(s) => {
                        if let Err(e) = s.cine.validate() {
                            out.push(Violation::new("initial.cine", e.to_string()));
                        }
                    }
                }
                if self.behaviors.is_empty() {
                    out.push(Violation::new("behaviors", "shot mode requires at least one behavior"));
                }
                for (i, b) in self.behaviors.iter().enumerate() {
                    if let Err(vs) = behaviors::validate(b) {
                        out.extend(vs.into_iter().map(|v| v.prefixed(&format!("behaviors[{i}]"))));
                    }
                }
            }
            GenerationMode::Frame => {
                if self.keyframes.len() < 2 {
                    out.push(Violation::new("keyframes", "frame mode requires at least two keyframes"));
                }
                if let Some(first) = self.keyframes.first() {
                    if first.frame != 0 {
                        out.push(Violation::new("keyframes[0].frame", "first keyframe must be at frame 0"));
                    }
                }
                for (i, pair) in self.keyframes.windows(2).enumerate() {
                    if pair[1].frame <= pair[0].frame {
                        out.push(Violation::new(
                            format!("keyframes[{}].frame", i + 1),
                            "keyframe frames must be strictly increasing",
                        ));
                    }
                }
                for (i, k) in self.keyframes.iter().enumerate() {
                    if let Err(e) = k.params.validate() {
                        out.push(Violation::new(format!("keyframes[{i}].params"), e.to_string()));
                    }
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// Where a frame of an asset came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSource {
    pub storyboard: String,
    pub local_frame: u32,
}

/// Generated per-frame camera data. Immutable once produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotAsset {
    pub id: String,
    pub fps: u32,
    pub poses: Vec<Pose>,
    pub focals: Vec<f64>,
    pub cine_params: Vec<CineSpaceParams>,
    pub provenance: Vec<FrameSource>,
}

impl ShotAsset {
    pub fn frames(&self) -> usize {
        self.poses.len()
    }

    pub fn duration_s(&self) -> f64 {
        self.frames() as f64 / self.fps as f64
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoryboardError {
    #[error("invalid storyboard: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("wrong mode: expected {expected:?}")]
    WrongMode { expected: GenerationMode },
    #[error("behaviors[{index}]: {source}")]
    Behavior {
        index: usize,
        #[source]
        source: BehaviorError,
    },
    #[error("timeline is empty")]
    EmptyTimeline,
    #[error("timeline references unknown storyboard `{0}`")]
    MissingAsset(String),
    #[error("timeline lists storyboard `{0}` more than once")]
    DuplicateId(String),
    #[error("asset `{id}` runs at {found} fps but the timeline is {expected} fps")]
    FpsMismatch { id: String, expected: u32, found: u32 },
}

/// Frames contributed by a behavior of the given duration (at least two).
pub fn behavior_frame_count(duration_s: f64, fps: u32) -> usize {
    ((duration_s * fps as f64).round() as usize).max(2)
}

pub fn generate(board: &Storyboard) -> Result<ShotAsset, StoryboardError> {
    match board.mode {
        GenerationMode::Shot => generate_shot_mode(board),
        GenerationMode::Frame => generate_frame_mode(board),
    }
}

pub fn generate_shot_mode(board: &Storyboard) -> Result<ShotAsset, StoryboardError> {
    if board.mode != GenerationMode::Shot {
        return Err(StoryboardError::WrongMode {
            expected: GenerationMode::Shot,
        });
    }
    board.validate().map_err(StoryboardError::Invalid)?;
    let rig = &board.rig;
    let mut state = board.initial.clone().expect("validated");
    let mut asset = empty_asset(board);
    let mut local = 0u32;
    for (index, behavior) in board.behaviors.iter().enumerate() {
        let wrap = |source: BehaviorError| StoryboardError::Behavior { index, source };
        if let Some(track) = &behavior.track {
            let from = state.base_pose(rig).map_err(wrap)?.translation;
            let gap = (track.control_points()[0] - from).norm();
            if gap > TRACK_START_TOLERANCE {
                return Err(StoryboardError::Invalid(vec![Violation::new(
                    format!("behaviors[{index}].track"),
                    format!("track must start at the camera position (off by {gap:.3e} m)"),
                )]));
            }
        }
        let n = behavior_frame_count(behavior.duration_s, board.fps);
        for j in 0..n {
            let u = j as f64 / (n - 1) as f64;
            let s = behaviors::sample(behavior, &state, rig, u).map_err(wrap)?;
            let pose = s.resolve(rig).map_err(wrap)?;
            asset.poses.push(pose);
            asset.focals.push(s.focal_mm());
            asset.cine_params.push(s.cine);
            asset.provenance.push(FrameSource {
                storyboard: board.id.clone(),
                local_frame: local,
            });
            local += 1;
        }
        state = behaviors::end_state(behavior, &state, rig).map_err(wrap)?;
    }
    Ok(asset)
}

pub fn generate_frame_mode(board: &Storyboard) -> Result<ShotAsset, StoryboardError> {
    if board.mode != GenerationMode::Frame {
        return Err(StoryboardError::WrongMode {
            expected: GenerationMode::Frame,
        });
    }
    board.validate().map_err(StoryboardError::Invalid)?;
    let keys = &board.keyframes;
    let last = keys.last().expect("validated").frame;
    let mut asset = empty_asset(board);
    let mut seg = 0;
    for j in 0..=last {
        while seg + 2 < keys.len() && j >= keys[seg + 1].frame {
            seg += 1;
        }
        let (a, b) = (&keys[seg], &keys[seg + 1]);
        let s = (j - a.frame) as f64 / (b.frame - a.frame) as f64;
        let params = cinespace::interpolate(&a.params, &b.params, s, a.easing_to_next);
        let pose = cinespace::to_pose(&board.rig, &params).map_err(|e| {
            StoryboardError::Invalid(vec![Violation::new(format!("frame {j}"), e.to_string())])
        })?;
        asset.poses.push(pose);
        asset.focals.push(params.focal_mm);
        asset.cine_params.push(params);
        asset.provenance.push(FrameSource {
            storyboard: board.id.clone(),
            local_frame: j,
        });
    }
    Ok(asset)
}

fn empty_asset(board: &Storyboard) -> ShotAsset {
    ShotAsset {
        id: board.id.clone(),
        fps: board.fps,
        poses: Vec::new(),
        focals: Vec::new(),
        cine_params: Vec::new(),
        provenance: Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Timeline {
    pub storyboards: Vec<String>,
    #[serde(default = "default_fps")]
    pub fps: u32,
}

/// Concatenates assets in timeline order, keeping per-frame provenance.
pub fn assemble_timeline(
    timeline: &Timeline,
    assets: &HashMap<String, ShotAsset>,
) -> Result<ShotAsset, StoryboardError> {
    if timeline.storyboards.is_empty() {
        return Err(StoryboardError::EmptyTimeline);
    }
    let mut seen = HashSet::new();
    let mut out = ShotAsset {
        id: timeline.storyboards.join("+"),
        fps: timeline.fps,
        poses: Vec::new(),
        focals: Vec::new(),
        cine_params: Vec::new(),
        provenance: Vec::new(),
    };
    for id in &timeline.storyboards {
        if !seen.insert(id) {
            return Err(StoryboardError::DuplicateId(id.clone()));
        }
        let asset = assets.get(id).ok_or_else(|| StoryboardError::MissingAsset(id.clone()))?;
        if asset.fps != timeline.fps {
            return Err(StoryboardError::FpsMismatch {
                id: id.clone(),
                expected: timeline.fps,
                found: asset.fps,
            });
        }
        out.poses.extend_from_slice(&asset.poses);
        out.focals.extend_from_slice(&asset.focals);
        out.cine_params.extend_from_slice(&asset.cine_params);
        out.provenance.extend(asset.provenance.iter().cloned());
    }
    if timeline.storyboards.len() == 1 {
        out.id = timeline.storyboards[0].clone();
    }
    Ok(out)
}

/// Wire form of a shot asset; matrices are row-major camera-to-world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetDocument {
    pub id: String,
    pub fps: u32,
    pub frames: usize,
    pub poses: Vec<[f64; 16]>,
    pub focals: Vec<f64>,
    pub cine_params: Vec<CineSpaceParams>,
    pub provenance: Vec<FrameSource>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl From<&ShotAsset> for AssetDocument {
    fn from(a: &ShotAsset) -> Self {
        Self {
            id: a.id.clone(),
            fps: a.fps,
            frames: a.frames(),
            poses: a.poses.iter().map(Pose::to_matrix).collect(),
            focals: a.focals.clone(),
            cine_params: a.cine_params.clone(),
            provenance: a.provenance.clone(),
        }
    }
}

impl TryFrom<AssetDocument> for ShotAsset {
    type Error = SchemaError;

    fn try_from(doc: AssetDocument) -> Result<Self, SchemaError> {
        let err = |path: String, message: String| SchemaError { path, message };
        if doc.fps == 0 {
            return Err(err("fps".into(), "must be positive".into()));
        }
        for (name, len) in [
            ("poses", doc.poses.len()),
            ("focals", doc.focals.len()),
            ("cine_params", doc.cine_params.len()),
            ("provenance", doc.provenance.len()),
        ] {
            if len != doc.frames {
                return Err(err(name.into(), format!("has {len} entries but frames = {}", doc.frames)));
            }
        }
        let poses = doc
            .poses
            .iter()
            .enumerate()
            .map(|(i, m)| Pose::from_matrix(m).map_err(|e| err(format!("poses[{i}]"), e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(i) = doc.focals.iter().position(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(err(format!("focals[{i}]"), "must be positive".into()));
        }
        Ok(ShotAsset {
            id: doc.id,
            fps: doc.fps,
            poses,
            focals: doc.focals,
            cine_params: doc.cine_params,
            provenance: doc.provenance,
        })
    }
}

pub fn save_asset(asset: &ShotAsset) -> String {
    serde_json::to_string_pretty(&AssetDocument::from(asset)).expect("asset documents always serialize")
}

pub fn load_asset(document: &str) -> Result<ShotAsset, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let doc: AssetDocument = serde_path_to_error::deserialize(de).map_err(|e| SchemaError {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    ShotAsset::try_from(doc)
}

/// Checks every pose of an asset against the rigidity tolerance.
pub fn asset_is_rigid(asset: &ShotAsset) -> bool {
    asset.poses.iter().all(|p| p.is_rigid(RIGIDITY_TOLERANCE))
}
