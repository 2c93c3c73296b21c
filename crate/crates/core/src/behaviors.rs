//! Camera behaviors and the sampler that advances a camera state through one.

use std::fmt;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cinespace::{self, wrap_angle, CineRig, CineSpaceError, CineSpaceParams, Easing};
use crate::geometry::{look_at, world_up, BezierCurve, GeometryError, Pose, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BehaviorKind {
    Static,
    PushIn,
    PullOut,
    ZoomIn,
    ZoomOut,
    DollyZoom,
    PanLeft,
    PanRight,
    TiltUp,
    TiltDown,
    Truck,
    BoomUp,
    BoomDown,
    Arc,
    Tracking,
}

impl BehaviorKind {
    pub const ALL: [BehaviorKind; 15] = [
        BehaviorKind::Static,
        BehaviorKind::PushIn,
        BehaviorKind::PullOut,
        BehaviorKind::ZoomIn,
        BehaviorKind::ZoomOut,
        BehaviorKind::DollyZoom,
        BehaviorKind::PanLeft,
        BehaviorKind::PanRight,
        BehaviorKind::TiltUp,
        BehaviorKind::TiltDown,
        BehaviorKind::Truck,
        BehaviorKind::BoomUp,
        BehaviorKind::BoomDown,
        BehaviorKind::Arc,
        BehaviorKind::Tracking,
    ];
}

/// How a tracking camera is oriented while it travels along its curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OrientationMode {
    #[default]
    LookAtQ,
    /// Keeps the orientation the camera had when the behavior started.
    Fixed,
    /// Looks along the direction of travel.
    Tangent,
}

/// Drop-down presets for PUSH_IN / PULL_OUT, as a fraction of the current distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PushRange {
    Small,
    Medium,
    Large,
}

impl PushRange {
    pub fn fraction(self) -> f64 {
        match self {
            PushRange::Small => 0.25,
            PushRange::Medium => 0.5,
            PushRange::Large => 0.75,
        }
    }
}

/// One camera movement within a storyboard.
///
/// `magnitude` depends on the kind: fraction of `d` for PUSH_IN/PULL_OUT and
/// DOLLY_ZOOM, radians for PAN/TILT/ARC, meters for TRUCK/BOOM, focal ratio
/// for ZOOM. TRUCK and ARC are signed (positive = left / counter-clockwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraBehavior {
    pub kind: BehaviorKind,
    pub duration_s: f64,
    #[serde(default)]
    pub magnitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track: Option<BezierCurve>,
    #[serde(default)]
    pub orientation_mode: OrientationMode,
    #[serde(default)]
    pub easing: Easing,
}

impl CameraBehavior {
    pub fn new(kind: BehaviorKind, duration_s: f64, magnitude: f64) -> Self {
        Self {
            kind,
            duration_s,
            magnitude,
            track: None,
            orientation_mode: OrientationMode::default(),
            easing: Easing::default(),
        }
    }

    pub fn push_in(duration_s: f64, range: PushRange) -> Self {
        Self::new(BehaviorKind::PushIn, duration_s, range.fraction())
    }

    pub fn tracking(duration_s: f64, track: BezierCurve, orientation_mode: OrientationMode) -> Self {
        Self {
            track: Some(track),
            orientation_mode,
            ..Self::new(BehaviorKind::Tracking, duration_s, 0.0)
        }
    }

    pub fn with_easing(mut self, easing: Easing) -> Self {
        self.easing = easing;
        self
    }
}

/// A violated invariant, addressed by field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn prefixed(mut self, prefix: &str) -> Self {
        self.path = if self.path.is_empty() {
            prefix.to_string()
        } else {
            format!("{prefix}.{}", self.path)
        };
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BehaviorError {
    #[error("invalid behavior: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("u = {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error(transparent)]
    CineSpace(#[from] CineSpaceError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("behavior {index}: {source}")]
    InChain {
        index: usize,
        #[source]
        source: Box<BehaviorError>,
    },
}

pub(crate) fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Returns every violated invariant of `behavior`.
pub fn validate(behavior: &CameraBehavior) -> Result<(), Vec<Violation>> {
    use BehaviorKind::*;
    let mut out = Vec::new();
    let m = behavior.magnitude;
    if !(behavior.duration_s.is_finite() && behavior.duration_s > 0.0) {
        out.push(Violation::new("duration_s", "duration must be positive"));
    }
    if !m.is_finite() {
        out.push(Violation::new("magnitude", "magnitude must be finite"));
    }
    match (behavior.kind, &behavior.track) {
        (Tracking, None) => out.push(Violation::new("track", "missing track")),
        (Tracking, Some(_)) => {}
        (_, Some(_)) => out.push(Violation::new("track", "track is only valid for TRACKING")),
        (_, None) => {}
    }
    if behavior.kind != Tracking && behavior.orientation_mode != OrientationMode::LookAtQ {
        out.push(Violation::new("orientation_mode", "orientation mode is only valid for TRACKING"));
    }
    if m.is_finite() {
        match behavior.kind {
            PushIn if m >= 1.0 => out.push(Violation::new(
                "magnitude",
                "push-in magnitude must be < 1 (the camera would cross the subject)",
            )),
            PushIn | PullOut if m <= 0.0 => {
                out.push(Violation::new("magnitude", "push range must be positive"))
            }
            DollyZoom if m >= 1.0 => out.push(Violation::new(
                "magnitude",
                "dolly-zoom magnitude must be < 1 (the camera would cross the subject)",
            )),
            ZoomIn | ZoomOut if m <= 1.0 => {
                out.push(Violation::new("magnitude", "zoom ratio must exceed 1"))
            }
            PanLeft | PanRight | TiltUp | TiltDown | BoomUp | BoomDown if m < 0.0 => out.push(
                Violation::new("magnitude", "direction is given by the kind; magnitude must be ≥ 0"),
            ),
            _ => {}
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// A tracking curve bound to the camera, with the current curve parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackBinding {
    pub curve: BezierCurve,
    pub orientation: OrientationMode,
    pub u: f64,
    /// Orientation at the start of the tracking behavior (used by `FIXED`).
    pub anchor_rotation: Matrix3<f64>,
}

/// Full camera state between frames: CineSpace coordinates plus the
/// pose-level offsets accumulated by PAN/TILT/TRUCK/BOOM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotState {
    pub cine: CineSpaceParams,
    #[serde(default)]
    pub pan_offset: f64,
    #[serde(default)]
    pub tilt_offset: f64,
    #[serde(default)]
    pub truck_offset: f64,
    #[serde(default)]
    pub boom_offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track: Option<TrackBinding>,
}

impl From<CineSpaceParams> for ShotState {
    fn from(cine: CineSpaceParams) -> Self {
        Self {
            cine,
            pan_offset: 0.0,
            tilt_offset: 0.0,
            truck_offset: 0.0,
            boom_offset: 0.0,
            track: None,
        }
    }
}

impl ShotState {
    pub fn focal_mm(&self) -> f64 {
        self.cine.focal_mm
    }

    /// Camera pose before truck/boom/pan/tilt offsets are applied.
    pub fn base_pose(&self, rig: &CineRig) -> Result<Pose, BehaviorError> {
        let Some(track) = &self.track else {
            return Ok(cinespace::to_pose(rig, &self.cine)?);
        };
        let position = track.curve.point(track.u)?;
        let look_at_q = || -> Result<Pose, BehaviorError> {
            let pose = look_at(&position, &rig.center(), &world_up())?;
            Ok(pose.rotated_local(&Vec3::y(), self.cine.screen_offset))
        };
        match track.orientation {
            OrientationMode::LookAtQ => look_at_q(),
            OrientationMode::Fixed => Ok(Pose {
                rotation: track.anchor_rotation,
                translation: position,
            }),
            OrientationMode::Tangent => {
                let tangent = track.curve.tangent(track.u)?;
                // a stalled or vertical tangent has no usable heading
                match look_at(&position, &(position + tangent), &world_up()) {
                    Ok(pose) => Ok(pose),
                    Err(_) => look_at_q(),
                }
            }
        }
    }

    /// Resolves to a pose: base pose, then truck along camera right and boom
    /// along world up, then pan about camera up and tilt about camera right.
    pub fn resolve(&self, rig: &CineRig) -> Result<Pose, BehaviorError> {
        let mut pose = self.base_pose(rig)?;
        if self.truck_offset != 0.0 {
            pose.translation += pose.right() * self.truck_offset;
        }
        if self.boom_offset != 0.0 {
            pose.translation += world_up() * self.boom_offset;
        }
        Ok(pose
            .rotated_local(&Vec3::y(), self.pan_offset)
            .rotated_local(&Vec3::x(), self.tilt_offset))
    }

    /// Converts a state that ended on a tracking curve back into orbit
    /// coordinates around the rig, so later behaviors can continue from it.
    pub fn detach_track(&self, rig: &CineRig) -> Result<ShotState, BehaviorError> {
        if self.track.is_none() {
            return Ok(self.clone());
        }
        let base = self.base_pose(rig)?;
        let coords = cinespace::from_pose(rig, &base)?;
        if coords.at_pole {
            return Err(CineSpaceError::Invalid {
                field: "track",
                message: "tracking ended on the rig's vertical axis".into(),
            }
            .into());
        }
        Ok(ShotState {
            cine: coords.with(&self.cine),
            track: None,
            ..self.clone()
        })
    }
}

/// Compensating focal length that keeps subjects near Q the same size on screen.
pub fn dolly_zoom_focal(f0: f64, d0: f64, d: f64) -> Result<f64, BehaviorError> {
    for (name, v) in [("f0", f0), ("d0", d0), ("d", d)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(BehaviorError::Invalid(vec![Violation::new(
                name,
                format!("must be positive, got {v}"),
            )]));
        }
    }
    Ok(f0 * d / d0)
}

/// Advances `start` through `behavior` to normalized time `u`.
pub fn sample(
    behavior: &CameraBehavior,
    start: &ShotState,
    rig: &CineRig,
    u: f64,
) -> Result<ShotState, BehaviorError> {
    use BehaviorKind::*;
    validate(behavior).map_err(BehaviorError::Invalid)?;
    if !(0.0..=1.0).contains(&u) {
        return Err(BehaviorError::OutOfRange(u));
    }
    if u == 0.0 {
        return Ok(start.clone());
    }
    let e = behavior.easing.apply(u);
    let m = behavior.magnitude;
    let c0 = start.cine;
    let mut s = start.clone();
    match behavior.kind {
        Static => {}
        PushIn => s.cine.d = c0.d * (1.0 - m * e),
        PullOut => s.cine.d = c0.d * (1.0 + m * e),
        ZoomIn => s.cine.focal_mm = c0.focal_mm * (1.0 + (m - 1.0) * e),
        ZoomOut => s.cine.focal_mm = c0.focal_mm / (1.0 + (m - 1.0) * e),
        DollyZoom => {
            s.cine.d = c0.d * (1.0 - m * e);
            s.cine.focal_mm = dolly_zoom_focal(c0.focal_mm, c0.d, s.cine.d)?;
        }
        PanLeft => s.pan_offset = start.pan_offset + m * e,
        PanRight => s.pan_offset = start.pan_offset - m * e,
        TiltUp => s.tilt_offset = start.tilt_offset + m * e,
        TiltDown => s.tilt_offset = start.tilt_offset - m * e,
        // positive magnitude moves left, i.e. against camera right
        Truck => s.truck_offset = start.truck_offset - m * e,
        BoomUp => s.boom_offset = start.boom_offset + m * e,
        BoomDown => s.boom_offset = start.boom_offset - m * e,
        Arc => s.cine.theta = wrap_angle(c0.theta + m * e),
        Tracking => {
            let curve = behavior.track.clone().expect("validated");
            let anchor = start.base_pose(rig)?.rotation;
            s.track = Some(TrackBinding {
                curve,
                orientation: behavior.orientation_mode,
                u: e,
                anchor_rotation: anchor,
            });
        }
    }
    Ok(s)
}

/// State handed to the next behavior once `behavior` has completed.
pub fn end_state(
    behavior: &CameraBehavior,
    start: &ShotState,
    rig: &CineRig,
) -> Result<ShotState, BehaviorError> {
    sample(behavior, start, rig, 1.0)?.detach_track(rig)
}

/// Folds `behaviors` left to right, each starting where the previous ended.
pub fn chain_end_state(
    behaviors: &[CameraBehavior],
    start: &ShotState,
    rig: &CineRig,
) -> Result<ShotState, BehaviorError> {
    behaviors
        .iter()
        .enumerate()
        .try_fold(start.clone(), |state, (index, b)| {
            end_state(b, &state, rig).map_err(|source| BehaviorError::InChain {
                index,
                source: Box::new(source),
            })
        })
}
