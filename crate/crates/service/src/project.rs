//! Authoritative project state and the documents exchanged over the wire.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use previz_core::cinespace::{apply_preset, to_pose, CineRig, CineSpaceError, CineSpaceParams, ShotPreset};
use previz_core::demo::{demo_board, demo_params, demo_rig, demo_scene, BOARD_NAMES};
use previz_core::geometry::{project_to_ndc, CameraIntrinsics, Pose, Vec3};
use previz_core::scene::{valid_object_id, SceneDoc};
use previz_core::storyboard::{Storyboard, Timeline};

use crate::error::{join_path, ApiError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraState {
    pub rig: CineRig,
    pub params: CineSpaceParams,
}

impl CameraState {
    pub fn validate(&self) -> Result<(), ApiError> {
        let wrap = |prefix: &str, e: CineSpaceError| match e {
            CineSpaceError::Invalid { field, message } => ApiError::validation(join_path(prefix, field), message),
            other => ApiError::validation(prefix, other.to_string()),
        };
        self.rig.validate().map_err(|e| wrap("rig", e))?;
        self.params.validate().map_err(|e| wrap("params", e))?;
        self.pose().map(|_| ()).map_err(|e| wrap("params", e))
    }

    pub fn pose(&self) -> Result<Pose, CineSpaceError> {
        to_pose(&self.rig, &self.params)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub scene: SceneDoc,
    pub cameras: BTreeMap<String, CameraState>,
    pub storyboards: BTreeMap<String, Storyboard>,
    pub timeline: Timeline,
    pub revision: u64,
}

impl Project {
    /// Demo scene, one camera named `main` and the demo storyboards bound to it.
    pub fn demo() -> Self {
        let storyboards = BOARD_NAMES
            .iter()
            .map(|name| {
                let mut board = demo_board(name).expect("demo board");
                board.camera = Some("main".into());
                (name.to_string(), board)
            })
            .collect();
        Self {
            scene: demo_scene(),
            cameras: BTreeMap::from([(
                "main".to_string(),
                CameraState {
                    rig: demo_rig(),
                    params: demo_params(),
                },
            )]),
            storyboards,
            timeline: empty_timeline(),
            revision: 1,
        }
    }

    pub fn validate(&self) -> Result<(), ApiError> {
        for (id, cam) in &self.cameras {
            if !valid_object_id(id) {
                return Err(ApiError::validation(format!("cameras[{id}]"), "ids may only use letters, digits, `_` and `-`"));
            }
            cam.validate().map_err(|e| prefixed(e, &format!("cameras[{id}]")))?;
        }
        for (id, board) in &self.storyboards {
            self.validate_storyboard(board).map_err(|e| prefixed(e, &format!("storyboards[{id}]")))?;
            if board.id != *id {
                return Err(ApiError::validation(
                    format!("storyboards[{id}].id"),
                    format!("storyboard is stored under `{id}` but named `{}`", board.id),
                ));
            }
        }
        let mut seen = HashSet::new();
        for (i, id) in self.timeline.storyboards.iter().enumerate() {
            let path = format!("timeline.storyboards[{i}]");
            if !self.storyboards.contains_key(id) {
                return Err(ApiError::validation(path, format!("unknown storyboard `{id}`")));
            }
            if !seen.insert(id) {
                return Err(ApiError::validation(path, format!("storyboard `{id}` is listed twice")));
            }
        }
        if self.timeline.fps == 0 {
            return Err(ApiError::validation("timeline.fps", "must be positive"));
        }
        Ok(())
    }

    /// Checks a storyboard on its own and against this project's cameras.
    pub fn validate_storyboard(&self, board: &Storyboard) -> Result<(), ApiError> {
        if !valid_object_id(&board.id) {
            return Err(ApiError::validation("id", "ids may only use letters, digits, `_` and `-`"));
        }
        board.validate().map_err(|v| ApiError::violations("", &v))?;
        if let Some(cam) = &board.camera {
            if !self.cameras.contains_key(cam) {
                return Err(ApiError::validation("camera", format!("unknown camera `{cam}`")));
            }
        }
        Ok(())
    }

    pub fn document(&self) -> ProjectDocument {
        ProjectDocument {
            revision: self.revision,
            scene: self.scene.clone(),
            cameras: self.cameras.clone(),
            storyboards: self.storyboards.clone(),
            timeline: self.timeline.clone(),
        }
    }
}

fn prefixed(mut e: ApiError, prefix: &str) -> ApiError {
    e.body.field_path = Some(join_path(prefix, e.body.field_path.as_deref().unwrap_or("")));
    e
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectDocument {
    pub revision: u64,
    pub scene: SceneDoc,
    pub cameras: BTreeMap<String, CameraState>,
    #[serde(default)]
    pub storyboards: BTreeMap<String, Storyboard>,
    #[serde(default = "empty_timeline")]
    pub timeline: Timeline,
}

fn empty_timeline() -> Timeline {
    Timeline {
        storyboards: Vec::new(),
        fps: 24,
    }
}

impl ProjectDocument {
    /// The project this document describes, at `revision`.
    pub fn into_project(self, revision: u64) -> Project {
        Project {
            scene: self.scene,
            cameras: self.cameras,
            storyboards: self.storyboards,
            timeline: self.timeline,
            revision,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigPatch {
    pub subject_a: Option<Vec3>,
    pub subject_b: Option<Vec3>,
    pub blend: Option<f64>,
    pub rig_yaw: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsPatch {
    pub d: Option<f64>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    #[serde(alias = "focal_mm")]
    pub focal: Option<f64>,
    pub screen_offset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraPatch {
    pub revision: u64,
    #[serde(default)]
    pub rig: RigPatch,
    #[serde(default)]
    pub params: ParamsPatch,
    /// Applied after `params`; overrides `d`.
    #[serde(default)]
    pub preset: Option<ShotPreset>,
    #[serde(default)]
    pub subject_height_m: Option<f64>,
}

pub const DEFAULT_SUBJECT_HEIGHT_M: f64 = 1.8;

impl CameraPatch {
    pub fn apply(&self, cam: &CameraState) -> Result<CameraState, ApiError> {
        let r = &self.rig;
        let p = &self.params;
        let rig = CineRig {
            subject_a: r.subject_a.unwrap_or(cam.rig.subject_a),
            subject_b: r.subject_b.unwrap_or(cam.rig.subject_b),
            blend: r.blend.unwrap_or(cam.rig.blend),
            rig_yaw: r.rig_yaw.unwrap_or(cam.rig.rig_yaw),
        };
        let mut params = CineSpaceParams {
            d: p.d.unwrap_or(cam.params.d),
            theta: p.theta.unwrap_or(cam.params.theta),
            phi: p.phi.unwrap_or(cam.params.phi),
            focal_mm: p.focal.unwrap_or(cam.params.focal_mm),
            screen_offset: p.screen_offset.unwrap_or(cam.params.screen_offset),
        };
        if let Some(preset) = self.preset {
            let height = self.subject_height_m.unwrap_or(DEFAULT_SUBJECT_HEIGHT_M);
            params = apply_preset(&params, preset, height).map_err(|e| match e {
                CineSpaceError::Invalid { field, message } => ApiError::validation(field, message),
                other => ApiError::validation("preset", other.to_string()),
            })?;
        }
        let next = CameraState { rig, params };
        next.validate()?;
        Ok(next)
    }
}

/// Projection of one subject into the camera, for on-screen framing feedback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectNdc {
    pub x: f64,
    pub y: f64,
    pub depth: f64,
    pub in_frame: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraView {
    pub id: String,
    pub revision: u64,
    pub camera: CameraState,
    /// Camera-to-world, row-major.
    pub pose: [f64; 16],
    pub position: Vec3,
    /// `None` when the subject is behind the camera.
    pub ndc_a: Option<SubjectNdc>,
    pub ndc_b: Option<SubjectNdc>,
}

impl CameraView {
    /// Subjects are projected with the camera's focal length at the given aspect.
    pub fn new(id: &str, revision: u64, camera: &CameraState, aspect: f64) -> Result<Self, ApiError> {
        let pose = camera.pose().map_err(|e| ApiError::validation("params", e.to_string()))?;
        let intr = CameraIntrinsics::default().with_focal(camera.params.focal_mm).with_aspect(aspect);
        let ndc = |p: &Vec3| {
            project_to_ndc(p, &pose, &intr).ok().map(|n| SubjectNdc {
                x: n.x,
                y: n.y,
                depth: n.depth,
                in_frame: n.x.abs() <= 1.0 && n.y.abs() <= 1.0,
            })
        };
        Ok(Self {
            id: id.to_string(),
            revision,
            camera: camera.clone(),
            pose: pose.to_matrix(),
            position: pose.translation,
            ndc_a: ndc(&camera.rig.subject_a),
            ndc_b: ndc(&camera.rig.subject_b),
        })
    }
}
