//! Scene documents: static triangle meshes and skeletal characters.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use nalgebra::{Matrix3, Rotation3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{lerp_vec, Vec3};
use crate::openpose::{self, JOINT_COUNT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("duplicate object_id `{0}`")]
    DuplicateId(String),
    #[error("object_id `{0}` must be non-empty and use only letters, digits, `_` or `-`")]
    InvalidId(String),
    #[error("scene has no objects")]
    Empty,
    #[error("{object}: {message}")]
    Invalid { object: String, message: String },
    #[error("{object}: joint_map entry `{template}` -> `{target}` does not name a skeleton joint")]
    DanglingJointMap {
        object: String,
        template: String,
        target: String,
    },
    #[error("{file}:{line}: {message}")]
    Obj { file: String, line: usize, message: String },
    #[error("cannot read `{file}`: {message}")]
    Io { file: String, message: String },
}

impl SceneError {
    fn invalid(object: &str, message: impl Into<String>) -> Self {
        SceneError::Invalid {
            object: object.to_string(),
            message: message.into(),
        }
    }
}

/// Rigid transform with uniform scale; rotation is an axis-angle vector in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transform {
    #[serde(default = "Vec3::zeros")]
    pub translation: Vec3,
    #[serde(default = "Vec3::zeros")]
    pub rotation: Vec3,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Transform {
    fn default() -> Self {
        Self {
            translation: Vec3::zeros(),
            rotation: Vec3::zeros(),
            scale: 1.0,
        }
    }
}

impl Transform {
    pub fn matrix(&self) -> Matrix3<f64> {
        Rotation3::new(self.rotation).into_inner() * self.scale
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.matrix() * p + self.translation
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticMesh {
    pub object_id: String,
    pub name: String,
    /// Vertex positions in object space.
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub transform: Transform,
}

impl StaticMesh {
    pub fn world_vertices(&self) -> Vec<Vec3> {
        let m = self.transform.matrix();
        self.vertices.iter().map(|v| m * v + self.transform.translation).collect()
    }

    fn validate(&self) -> Result<(), SceneError> {
        let id = &self.object_id;
        if let Some(i) = self.vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(SceneError::invalid(id, format!("vertex {i} is not finite")));
        }
        let n = self.vertices.len() as u32;
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= n) {
                return Err(SceneError::invalid(
                    id,
                    format!("triangle {t} references vertex {bad} but the mesh has {n}"),
                ));
            }
        }
        let t = &self.transform;
        if !(t.scale.is_finite() && t.scale > 0.0) {
            return Err(SceneError::invalid(id, "transform scale must be positive"));
        }
        if !(t.translation.iter().chain(t.rotation.iter()).all(|c| c.is_finite())) {
            return Err(SceneError::invalid(id, "transform must be finite"));
        }
        let area = |tri: &[u32; 3]| {
            let [a, b, c] = tri.map(|i| self.vertices[i as usize]);
            (b - a).cross(&(c - a)).norm()
        };
        if !self.triangles.iter().any(|tri| area(tri) > 0.0) {
            return Err(SceneError::invalid(id, "mesh has no non-degenerate triangles"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Joint {
    pub name: String,
    /// Index of the parent joint, or -1 for the root.
    pub parent: i32,
}

/// World-space joint positions sampled at a fixed rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnimationClip {
    pub fps: u32,
    pub frames: Vec<Vec<Vec3>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Character {
    pub object_id: String,
    pub name: String,
    pub skeleton: Vec<Joint>,
    pub clip: AnimationClip,
    /// OpenPose template name -> skeleton joint name.
    pub joint_map: BTreeMap<String, String>,
    pub bone_radius_m: f64,
    pub subject_height_m: f64,
    template: [Option<usize>; JOINT_COUNT],
}

impl Character {
    pub fn new(
        object_id: impl Into<String>,
        name: impl Into<String>,
        skeleton: Vec<Joint>,
        clip: AnimationClip,
        joint_map: BTreeMap<String, String>,
        bone_radius_m: f64,
        subject_height_m: f64,
    ) -> Result<Self, SceneError> {
        let mut c = Self {
            object_id: object_id.into(),
            name: name.into(),
            skeleton,
            clip,
            joint_map,
            bone_radius_m,
            subject_height_m,
            template: [None; JOINT_COUNT],
        };
        c.template = c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<[Option<usize>; JOINT_COUNT], SceneError> {
        let id = self.object_id.as_str();
        let n = self.skeleton.len();
        if n == 0 {
            return Err(SceneError::invalid(id, "skeleton has no joints"));
        }
        let mut roots = 0;
        for (i, j) in self.skeleton.iter().enumerate() {
            match j.parent {
                -1 => roots += 1,
                p if p >= 0 && (p as usize) < n && p as usize != i => {}
                p => return Err(SceneError::invalid(id, format!("joint `{}` has invalid parent {p}", j.name))),
            }
        }
        if roots != 1 {
            return Err(SceneError::invalid(id, format!("skeleton must have exactly one root, found {roots}")));
        }
        for start in 0..n {
            let mut cur = start;
            for _ in 0..=n {
                match self.skeleton[cur].parent {
                    -1 => break,
                    p => cur = p as usize,
                }
            }
            if self.skeleton[cur].parent != -1 {
                return Err(SceneError::invalid(id, "skeleton parents contain a cycle"));
            }
        }
        let mut by_name = HashMap::new();
        for (i, j) in self.skeleton.iter().enumerate() {
            if by_name.insert(j.name.as_str(), i).is_some() {
                return Err(SceneError::invalid(id, format!("duplicate joint name `{}`", j.name)));
            }
        }
        if self.clip.fps == 0 {
            return Err(SceneError::invalid(id, "clip fps must be positive"));
        }
        if self.clip.frames.is_empty() {
            return Err(SceneError::invalid(id, "clip has no frames"));
        }
        for (f, frame) in self.clip.frames.iter().enumerate() {
            if frame.len() != n {
                return Err(SceneError::invalid(
                    id,
                    format!("clip frame {f} has {} positions for {n} joints", frame.len()),
                ));
            }
            if !frame.iter().all(|p| p.iter().all(|c| c.is_finite())) {
                return Err(SceneError::invalid(id, format!("clip frame {f} is not finite")));
            }
        }
        if !(self.bone_radius_m.is_finite() && self.bone_radius_m > 0.0) {
            return Err(SceneError::invalid(id, "bone_radius_m must be positive"));
        }
        if !(self.subject_height_m.is_finite() && self.subject_height_m > 0.0) {
            return Err(SceneError::invalid(id, "subject_height_m must be positive"));
        }
        let mut template = [None; JOINT_COUNT];
        for (key, target) in &self.joint_map {
            let slot = openpose::joint_index(key)
                .ok_or_else(|| SceneError::invalid(id, format!("`{key}` is not an OpenPose template joint")))?;
            let joint = by_name.get(target.as_str()).ok_or_else(|| SceneError::DanglingJointMap {
                object: id.to_string(),
                template: key.clone(),
                target: target.clone(),
            })?;
            template[slot] = Some(*joint);
        }
        Ok(template)
    }

    /// Skeleton joint driving each OpenPose template slot.
    pub fn template_joints(&self) -> &[Option<usize>; JOINT_COUNT] {
        &self.template
    }

    pub fn duration_s(&self) -> f64 {
        (self.clip.frames.len() - 1) as f64 / self.clip.fps as f64
    }
}

/// Joint positions at time `t_s`, linearly interpolated and clamped to the clip.
pub fn joints_at_time(character: &Character, t_s: f64) -> Vec<Vec3> {
    let frames = &character.clip.frames;
    let last = frames.len() - 1;
    let f = (t_s * character.clip.fps as f64).max(0.0);
    if f >= last as f64 {
        return frames[last].clone();
    }
    let k = f.floor() as usize;
    let s = f - k as f64;
    if s == 0.0 {
        return frames[k].clone();
    }
    frames[k].iter().zip(&frames[k + 1]).map(|(a, b)| lerp_vec(a, b, s)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub p0: Vec3,
    pub p1: Vec3,
    pub radius: f64,
}

/// One capsule per bone, from each joint's parent to the joint.
pub fn bone_capsules(character: &Character, t_s: f64) -> Vec<Capsule> {
    let joints = joints_at_time(character, t_s);
    character
        .skeleton
        .iter()
        .enumerate()
        .filter(|(_, j)| j.parent >= 0)
        .map(|(i, j)| Capsule {
            p0: joints[j.parent as usize],
            p1: joints[i],
            radius: character.bone_radius_m,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum SceneObject {
    Mesh(StaticMesh),
    Character(Character),
}

impl SceneObject {
    pub fn object_id(&self) -> &str {
        match self {
            SceneObject::Mesh(m) => &m.object_id,
            SceneObject::Character(c) => &c.object_id,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            SceneObject::Mesh(m) => &m.name,
            SceneObject::Character(c) => &c.name,
        }
    }
}

impl PartialEq for SceneObject {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SceneObject::Mesh(a), SceneObject::Mesh(b)) => a == b,
            (SceneObject::Character(a), SceneObject::Character(b)) => a == b,
            _ => false,
        }
    }
}

/// A validated, immutable scene with O(1) lookup by object id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SceneDocument", try_from = "SceneDocument")]
pub struct SceneDoc {
    objects: Vec<SceneObject>,
    index: HashMap<String, usize>,
}

pub fn valid_object_id(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

impl SceneDoc {
    pub fn new(objects: Vec<SceneObject>) -> Result<Self, SceneError> {
        if objects.is_empty() {
            return Err(SceneError::Empty);
        }
        let mut index = HashMap::with_capacity(objects.len());
        for (i, o) in objects.iter().enumerate() {
            let id = o.object_id();
            if !valid_object_id(id) {
                return Err(SceneError::InvalidId(id.to_string()));
            }
            if index.insert(id.to_string(), i).is_some() {
                return Err(SceneError::DuplicateId(id.to_string()));
            }
            if let SceneObject::Mesh(m) = o {
                m.validate()?;
            }
        }
        Ok(Self { objects, index })
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn get(&self, object_id: &str) -> Option<&SceneObject> {
        self.index.get(object_id).map(|&i| &self.objects[i])
    }

    pub fn position(&self, object_id: &str) -> Option<usize> {
        self.index.get(object_id).copied()
    }

    pub fn object_ids(&self) -> impl Iterator<Item = &str> {
        self.objects.iter().map(SceneObject::object_id)
    }

    pub fn characters(&self) -> impl Iterator<Item = &Character> {
        self.objects.iter().filter_map(|o| match o {
            SceneObject::Character(c) => Some(c),
            SceneObject::Mesh(_) => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn include(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) / 2.0
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }
}

pub fn scene_bounds(scene: &SceneDoc, t_s: f64) -> Result<Aabb, SceneError> {
    let mut b = Aabb::empty();
    for o in scene.objects() {
        match o {
            SceneObject::Mesh(m) => m.world_vertices().iter().for_each(|v| b.include(v)),
            SceneObject::Character(c) => {
                let r = Vec3::repeat(c.bone_radius_m);
                for p in joints_at_time(c, t_s) {
                    b.include(&(p - r));
                    b.include(&(p + r));
                }
            }
        }
    }
    if b.min.x > b.max.x {
        return Err(SceneError::Empty);
    }
    Ok(b)
}

// Wire format.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    #[serde(default = "meters")]
    pub units: String,
    pub objects: Vec<ObjectDocument>,
}

fn meters() -> String {
    "meters".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ObjectDocument {
    Mesh(MeshDocument),
    Character(CharacterDocument),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDocument {
    pub object_id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec3>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triangles: Option<Vec<[u32; 3]>>,
    /// Path of an OBJ file, relative to the scene document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obj: Option<String>,
    #[serde(default)]
    pub transform: Transform,
}

fn default_height() -> f64 {
    1.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterDocument {
    pub object_id: String,
    #[serde(default)]
    pub name: String,
    pub skeleton: Vec<Joint>,
    pub clip: AnimationClip,
    #[serde(default)]
    pub joint_map: BTreeMap<String, String>,
    pub bone_radius_m: f64,
    #[serde(default = "default_height")]
    pub subject_height_m: f64,
}

impl From<SceneDoc> for SceneDocument {
    fn from(scene: SceneDoc) -> Self {
        let objects = scene
            .objects
            .into_iter()
            .map(|o| match o {
                SceneObject::Mesh(m) => ObjectDocument::Mesh(MeshDocument {
                    object_id: m.object_id,
                    name: m.name,
                    vertices: Some(m.vertices),
                    triangles: Some(m.triangles),
                    obj: None,
                    transform: m.transform,
                }),
                SceneObject::Character(c) => ObjectDocument::Character(CharacterDocument {
                    object_id: c.object_id,
                    name: c.name,
                    skeleton: c.skeleton,
                    clip: c.clip,
                    joint_map: c.joint_map,
                    bone_radius_m: c.bone_radius_m,
                    subject_height_m: c.subject_height_m,
                }),
            })
            .collect();
        SceneDocument {
            units: meters(),
            objects,
        }
    }
}

impl TryFrom<SceneDocument> for SceneDoc {
    type Error = SceneError;

    fn try_from(doc: SceneDocument) -> Result<Self, SceneError> {
        resolve(doc, &|file: &str| {
            Err(SceneError::Io {
                file: file.to_string(),
                message: "OBJ references need a base directory".into(),
            })
        })
    }
}

fn resolve(doc: SceneDocument, read: &dyn Fn(&str) -> Result<String, SceneError>) -> Result<SceneDoc, SceneError> {
    if doc.units != "meters" {
        return Err(SceneError::Schema {
            path: "units".into(),
            message: format!("unsupported units `{}` (expected `meters`)", doc.units),
        });
    }
    let mut objects = Vec::with_capacity(doc.objects.len());
    for o in doc.objects {
        objects.push(match o {
            ObjectDocument::Mesh(m) => {
                let name = if m.name.is_empty() { m.object_id.clone() } else { m.name };
                let (vertices, triangles) = match (m.obj, m.vertices, m.triangles) {
                    (Some(file), None, None) => parse_obj(&read(&file)?, &file)?,
                    (None, Some(v), Some(t)) => (v, t),
                    _ => {
                        return Err(SceneError::invalid(
                            &m.object_id,
                            "mesh needs either `obj` or both `vertices` and `triangles`",
                        ))
                    }
                };
                SceneObject::Mesh(StaticMesh {
                    object_id: m.object_id,
                    name,
                    vertices,
                    triangles,
                    transform: m.transform,
                })
            }
            ObjectDocument::Character(c) => {
                let name = if c.name.is_empty() { c.object_id.clone() } else { c.name };
                SceneObject::Character(Character::new(
                    c.object_id,
                    name,
                    c.skeleton,
                    c.clip,
                    c.joint_map,
                    c.bone_radius_m,
                    c.subject_height_m,
                )?)
            }
        });
    }
    SceneDoc::new(objects)
}

/// Parses a scene document, reading OBJ references through `read`.
pub fn load_scene_with(
    text: &str,
    read: &dyn Fn(&str) -> Result<String, SceneError>,
) -> Result<SceneDoc, SceneError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: SceneDocument = serde_path_to_error::deserialize(de).map_err(|e| SceneError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    resolve(doc, read)
}

/// Parses a scene document with OBJ paths relative to `base_dir`.
pub fn load_scene(text: &str, base_dir: Option<&Path>) -> Result<SceneDoc, SceneError> {
    load_scene_with(text, &|file: &str| {
        let path = match base_dir {
            Some(dir) => dir.join(file),
            None => Path::new(file).to_path_buf(),
        };
        std::fs::read_to_string(&path).map_err(|e| SceneError::Io {
            file: path.display().to_string(),
            message: e.to_string(),
        })
    })
}

pub fn load_scene_file(path: &Path) -> Result<SceneDoc, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|e| SceneError::Io {
        file: path.display().to_string(),
        message: e.to_string(),
    })?;
    load_scene(&text, path.parent())
}

/// Reads `v` and triangular `f` records; normals, texture coordinates and grouping are ignored.
pub fn parse_obj(text: &str, file: &str) -> Result<(Vec<Vec3>, Vec<[u32; 3]>), SceneError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| SceneError::Obj {
            file: file.to_string(),
            line,
            message,
        };
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(kind) = tokens.next() else { continue };
        let rest: Vec<&str> = tokens.collect();
        match kind {
            "v" => {
                if rest.len() < 3 || rest.len() > 4 {
                    return Err(err(format!("vertex needs 3 coordinates, found {}", rest.len())));
                }
                let mut c = [0.0; 3];
                for (slot, tok) in c.iter_mut().zip(&rest) {
                    *slot = tok
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(format!("bad coordinate `{tok}`")))?;
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            "f" => {
                if rest.len() != 3 {
                    return Err(err(format!("triangles only: face has {} vertices", rest.len())));
                }
                let mut tri = [0u32; 3];
                for (slot, tok) in tri.iter_mut().zip(&rest) {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| err(format!("bad face index `{tok}`")))?;
                    let count = vertices.len() as i64;
                    let resolved = match i {
                        i if i > 0 && i <= count => i - 1,
                        i if i < 0 && -i <= count => count + i,
                        _ => return Err(err(format!("face index {i} out of range (have {count} vertices)"))),
                    };
                    *slot = resolved as u32;
                }
                faces.push(tri);
            }
            "vn" | "vt" | "vp" | "o" | "g" | "s" | "usemtl" | "mtllib" => {}
            other => return Err(err(format!("unsupported record `{other}`"))),
        }
    }
    if faces.is_empty() {
        return Err(SceneError::Obj {
            file: file.to_string(),
            line: text.lines().count(),
            message: "no faces".into(),
        });
    }
    Ok((vertices, faces))
}
