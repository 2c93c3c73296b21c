//! Two-subject orbit camera space.
//!
//! A [`CineRig`] holds two subjects A and B and a center Q placed between
//! them. [`CineSpaceParams`] place a camera on the sphere of radius `d`
//! around Q: `theta` is the horizontal angle measured from the horizontal
//! perpendicular to AB, `phi` the elevation. The camera always aims at Q,
//! so both subjects stay in the picture over a wide range of parameters.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, lerp, look_at, world_up, GeometryError, Pose, Vec3};

/// Below this separation the rig collapses to a single-subject sphere around A.
pub const DEGENERATE_SEPARATION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CineSpaceError {
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("camera position coincides with the rig center")]
    AtCenter,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn invalid(field: &'static str, message: impl Into<String>) -> CineSpaceError {
    CineSpaceError::Invalid {
        field,
        message: message.into(),
    }
}

fn default_blend() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CineRig {
    pub subject_a: Vec3,
    pub subject_b: Vec3,
    /// Position of Q along A→B.
    #[serde(default = "default_blend")]
    pub blend: f64,
    /// Rotation of the whole space about the vertical axis through Q.
    #[serde(default)]
    pub rig_yaw: f64,
}

/// Orthonormal basis of the rig: `h1` is θ's zero direction, `h2` the
/// horizontal projection of A→B, `w` world up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigFrame {
    pub h1: Vec3,
    pub h2: Vec3,
    pub w: Vec3,
}

impl CineRig {
    pub fn new(subject_a: Vec3, subject_b: Vec3) -> Self {
        Self {
            subject_a,
            subject_b,
            blend: 0.5,
            rig_yaw: 0.0,
        }
    }

    /// A rig with both subjects at the same point: plain spherical orbit.
    pub fn single(subject: Vec3) -> Self {
        Self::new(subject, subject)
    }

    pub fn validate(&self) -> Result<(), CineSpaceError> {
        if !self.subject_a.iter().all(|c| c.is_finite()) {
            return Err(invalid("subject_a", "must be finite"));
        }
        if !self.subject_b.iter().all(|c| c.is_finite()) {
            return Err(invalid("subject_b", "must be finite"));
        }
        if !(0.0..=1.0).contains(&self.blend) {
            return Err(invalid("blend", format!("must lie in [0, 1], got {}", self.blend)));
        }
        if !self.rig_yaw.is_finite() {
            return Err(invalid("rig_yaw", "must be finite"));
        }
        Ok(())
    }

    pub fn separation(&self) -> f64 {
        (self.subject_b - self.subject_a).norm()
    }

    pub fn is_degenerate(&self) -> bool {
        self.separation() < DEGENERATE_SEPARATION
    }

    /// Q = (1 − blend)·A + blend·B
    pub fn center(&self) -> Vec3 {
        geometry::lerp_vec(&self.subject_a, &self.subject_b, self.blend)
    }

    pub fn frame(&self) -> RigFrame {
        let w = world_up();
        let ab = self.subject_b - self.subject_a;
        let len = ab.norm();
        let axis = if len < DEGENERATE_SEPARATION { Vec3::x() } else { ab / len };
        // AB along the vertical: fall back to +Z before yaw
        let h1 = if axis.dot(&w).abs() > 1.0 - 1e-6 {
            Vec3::z()
        } else {
            axis.cross(&w).normalize()
        };
        let h2 = w.cross(&h1);
        if self.rig_yaw == 0.0 {
            return RigFrame { h1, h2, w };
        }
        let yaw = Rotation3::from_axis_angle(&Vec3::y_axis(), self.rig_yaw);
        RigFrame {
            h1: yaw * h1,
            h2: yaw * h2,
            w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CineSpaceParams {
    /// Camera distance to Q, meters.
    pub d: f64,
    pub theta: f64,
    pub phi: f64,
    #[serde(rename = "focal", alias = "focal_mm")]
    pub focal_mm: f64,
    #[serde(default)]
    pub screen_offset: f64,
}

impl Default for CineSpaceParams {
    fn default() -> Self {
        Self {
            d: 5.0,
            theta: 0.0,
            phi: 0.0,
            focal_mm: 36.0,
            screen_offset: 0.0,
        }
    }
}

impl CineSpaceParams {
    /// Orbit coordinates with default focal length and no screen offset; θ is wrapped into [0, 2π).
    pub fn orbit(d: f64, theta: f64, phi: f64) -> Self {
        Self {
            d,
            theta: wrap_angle(theta),
            phi,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CineSpaceError> {
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(invalid("d", format!("must be positive, got {}", self.d)));
        }
        if !self.theta.is_finite() {
            return Err(invalid("theta", "must be finite"));
        }
        if !(self.phi.is_finite() && self.phi.abs() < FRAC_PI_2) {
            return Err(invalid("phi", format!("must lie strictly inside ±π/2, got {}", self.phi)));
        }
        if !(self.focal_mm.is_finite() && self.focal_mm > 0.0) {
            return Err(invalid("focal", format!("must be positive, got {}", self.focal_mm)));
        }
        if !self.screen_offset.is_finite() {
            return Err(invalid("screen_offset", "must be finite"));
        }
        Ok(())
    }
}

/// Wraps an angle into [0, 2π).
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Signed shortest rotation from `from` to `to`, in (−π, π].
pub fn shortest_arc(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Absolute circular distance between two angles.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    shortest_arc(a, b).abs()
}

/// Unit direction from Q to the camera for the given orbit angles.
pub fn orbit_direction(frame: &RigFrame, theta: f64, phi: f64) -> Vec3 {
    (frame.h1 * theta.cos() + frame.h2 * theta.sin()) * phi.cos() + frame.w * phi.sin()
}

pub fn camera_position(rig: &CineRig, params: &CineSpaceParams) -> Vec3 {
    rig.center() + orbit_direction(&rig.frame(), params.theta, params.phi) * params.d
}

/// Places the camera on the rig sphere, aims it at Q and applies the screen offset.
///
/// A positive `screen_offset` turns the camera to its left about its own up
/// axis, which moves Q towards the right of the frame.
pub fn to_pose(rig: &CineRig, params: &CineSpaceParams) -> Result<Pose, CineSpaceError> {
    rig.validate()?;
    params.validate()?;
    let eye = camera_position(rig, params);
    let pose = look_at(&eye, &rig.center(), &world_up())?;
    Ok(pose.rotated_local(&Vec3::y(), params.screen_offset))
}

/// Orbit coordinates recovered from a camera position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitCoords {
    pub d: f64,
    pub theta: f64,
    pub phi: f64,
    /// Camera sits on the rig's vertical axis; θ is meaningless and reported as 0.
    pub at_pole: bool,
}

impl OrbitCoords {
    /// Combines with the intrinsic/framing fields of `base`.
    pub fn with(&self, base: &CineSpaceParams) -> CineSpaceParams {
        CineSpaceParams {
            d: self.d,
            theta: self.theta,
            phi: self.phi,
            ..*base
        }
    }
}

pub fn from_pose(rig: &CineRig, pose: &Pose) -> Result<OrbitCoords, CineSpaceError> {
    from_position(rig, &pose.translation)
}

pub fn from_position(rig: &CineRig, position: &Vec3) -> Result<OrbitCoords, CineSpaceError> {
    rig.validate()?;
    let offset = position - rig.center();
    let d = offset.norm();
    if !(d > 0.0) {
        return Err(CineSpaceError::AtCenter);
    }
    let dir = offset / d;
    let frame = rig.frame();
    let vertical = dir.dot(&frame.w).clamp(-1.0, 1.0);
    if vertical.abs() > 1.0 - 1e-9 {
        return Ok(OrbitCoords {
            d,
            theta: 0.0,
            phi: FRAC_PI_2.copysign(vertical),
            at_pole: true,
        });
    }
    let (x, y) = (dir.dot(&frame.h1), dir.dot(&frame.h2));
    // atan2 form of asin(vertical); better conditioned near the poles
    let phi = vertical.atan2(x.hypot(y));
    Ok(OrbitCoords {
        d,
        theta: wrap_angle(y.atan2(x)),
        phi,
        at_pole: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Easing {
    Linear,
    #[default]
    Smoothstep,
}

impl Easing {
    pub fn apply(self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self {
            Easing::Linear => s,
            Easing::Smoothstep => s * s * (3.0 - 2.0 * s),
        }
    }
}

/// Component-wise interpolation; θ travels along the shortest arc.
///
/// `s` is clamped to [0, 1]. Both endpoints are reproduced exactly.
pub fn interpolate(
    a: &CineSpaceParams,
    b: &CineSpaceParams,
    s: f64,
    easing: Easing,
) -> CineSpaceParams {
    let e = easing.apply(s);
    let theta = if e == 1.0 {
        b.theta
    } else if e == 0.0 {
        a.theta
    } else {
        wrap_angle(a.theta + shortest_arc(a.theta, b.theta) * e)
    };
    CineSpaceParams {
        d: lerp(a.d, b.d, e),
        theta,
        phi: lerp(a.phi, b.phi, e),
        focal_mm: lerp(a.focal_mm, b.focal_mm, e),
        screen_offset: lerp(a.screen_offset, b.screen_offset, e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ShotPreset {
    Long,
    Medium,
    CloseUp,
}

impl ShotPreset {
    pub const ALL: [ShotPreset; 3] = [ShotPreset::Long, ShotPreset::Medium, ShotPreset::CloseUp];

    /// Camera distance as a multiple of subject height.
    pub fn distance_multiplier(self) -> f64 {
        match self {
            ShotPreset::Long => 4.0,
            ShotPreset::Medium => 1.5,
            ShotPreset::CloseUp => 0.6,
        }
    }
}

/// Distance `d` for a preset framing of a subject of the given height.
pub fn preset_distance(preset: ShotPreset, subject_height_m: f64) -> Result<f64, CineSpaceError> {
    if !(subject_height_m.is_finite() && subject_height_m > 0.0) {
        return Err(invalid(
            "subject_height_m",
            format!("must be positive, got {subject_height_m}"),
        ));
    }
    Ok(preset.distance_multiplier() * subject_height_m)
}

/// Applies a preset to `params`, leaving angles and focal length untouched.
pub fn apply_preset(
    params: &CineSpaceParams,
    preset: ShotPreset,
    subject_height_m: f64,
) -> Result<CineSpaceParams, CineSpaceError> {
    Ok(CineSpaceParams {
        d: preset_distance(preset, subject_height_m)?,
        ..*params
    })
}
