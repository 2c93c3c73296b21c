//! A small built-in scene and storyboards for smoke tests and examples.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::Rotation3;

use crate::behaviors::{BehaviorKind, CameraBehavior, PushRange};
use crate::cinespace::{CineRig, CineSpaceParams, Easing};
use crate::geometry::Vec3;
use crate::scene::{AnimationClip, Character, Joint, SceneDoc, SceneObject, StaticMesh, Transform};
use crate::storyboard::{Keyframe, Storyboard};

pub const DEMO_FPS: u32 = 24;
pub const BOARD_NAMES: [&str; 5] = ["push_in", "arc", "dolly_zoom", "push_arc", "keyframes"];

const GROUND_Y: f64 = -1.0;

/// Rest pose, character facing +Z with feet at the origin: (name, parent, position).
const SKELETON: [(&str, i32, [f64; 3]); 19] = [
    ("pelvis", -1, [0.0, 0.95, 0.0]),
    ("neck", 0, [0.0, 1.50, 0.0]),
    ("head", 1, [0.0, 1.64, 0.10]),
    ("r_shoulder", 1, [-0.20, 1.45, 0.0]),
    ("r_elbow", 3, [-0.25, 1.17, 0.0]),
    ("r_wrist", 4, [-0.27, 0.92, 0.03]),
    ("l_shoulder", 1, [0.20, 1.45, 0.0]),
    ("l_elbow", 6, [0.25, 1.17, 0.0]),
    ("l_wrist", 7, [0.27, 0.92, 0.03]),
    ("r_hip", 0, [-0.10, 0.92, 0.0]),
    ("r_knee", 9, [-0.11, 0.50, 0.02]),
    ("r_ankle", 10, [-0.12, 0.08, 0.0]),
    ("l_hip", 0, [0.10, 0.92, 0.0]),
    ("l_knee", 12, [0.11, 0.50, 0.02]),
    ("l_ankle", 13, [0.12, 0.08, 0.0]),
    ("r_eye", 2, [-0.035, 1.69, 0.09]),
    ("l_eye", 2, [0.035, 1.69, 0.09]),
    ("r_ear", 15, [-0.075, 1.67, 0.0]),
    ("l_ear", 16, [0.075, 1.67, 0.0]),
];

const TEMPLATE_MAP: [(&str, &str); 18] = [
    ("nose", "head"),
    ("neck", "neck"),
    ("right_shoulder", "r_shoulder"),
    ("right_elbow", "r_elbow"),
    ("right_wrist", "r_wrist"),
    ("left_shoulder", "l_shoulder"),
    ("left_elbow", "l_elbow"),
    ("left_wrist", "l_wrist"),
    ("right_hip", "r_hip"),
    ("right_knee", "r_knee"),
    ("right_ankle", "r_ankle"),
    ("left_hip", "l_hip"),
    ("left_knee", "l_knee"),
    ("left_ankle", "l_ankle"),
    ("right_eye", "r_eye"),
    ("left_eye", "l_eye"),
    ("right_ear", "r_ear"),
    ("left_ear", "l_ear"),
];

/// Swings each limb chain about its root joint; `phase` offsets the gait cycle.
fn walk_cycle(base: Vec3, yaw: f64, phase: f64, frames: usize) -> Vec<Vec<Vec3>> {
    let rest: Vec<Vec3> = SKELETON.iter().map(|(_, _, p)| Vec3::new(p[0], p[1], p[2])).collect();
    let turn = Rotation3::from_axis_angle(&Vec3::y_axis(), yaw);
    // (root joint, chain joints, swing amplitude in radians, sign)
    let chains: [(usize, [usize; 2], f64, f64); 4] = [
        (3, [4, 5], 0.45, 1.0),
        (6, [7, 8], 0.45, -1.0),
        (9, [10, 11], 0.35, -1.0),
        (12, [13, 14], 0.35, 1.0),
    ];
    (0..frames)
        .map(|f| {
            let t = f as f64 / DEMO_FPS as f64;
            let cycle = TAU * t / 2.0 + phase;
            let mut pose = rest.clone();
            for (root, joints, amp, sign) in chains {
                let swing = Rotation3::from_axis_angle(&Vec3::x_axis(), sign * amp * cycle.sin());
                for j in joints {
                    pose[j] = rest[root] + swing * (rest[j] - rest[root]);
                }
            }
            let bob = 0.02 * (2.0 * cycle).cos();
            pose.iter().map(|p| base + turn * (p + Vec3::new(0.0, bob, 0.0))).collect()
        })
        .collect()
}

fn character(id: &str, name: &str, base: Vec3, yaw: f64, phase: f64) -> Character {
    let skeleton = SKELETON
        .iter()
        .map(|(n, parent, _)| Joint {
            name: n.to_string(),
            parent: *parent,
        })
        .collect();
    let joint_map: BTreeMap<String, String> =
        TEMPLATE_MAP.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    Character::new(
        id,
        name,
        skeleton,
        AnimationClip {
            fps: DEMO_FPS,
            frames: walk_cycle(base, yaw, phase, 2 * DEMO_FPS as usize + 1),
        },
        joint_map,
        0.06,
        1.8,
    )
    .expect("demo character is valid")
}

fn unit_box() -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let vertices = (0..8)
        .map(|i| Vec3::new((i & 1) as f64 - 0.5, ((i >> 1) & 1) as f64 - 0.5, ((i >> 2) & 1) as f64 - 0.5))
        .collect();
    let faces = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let triangles = faces.iter().flat_map(|[a, b, c, d]| [[*a, *b, *c], [*a, *c, *d]]).collect();
    (vertices, triangles)
}

/// Ground plane, a crate and two walking characters either side of the origin.
pub fn demo_scene() -> SceneDoc {
    let (box_v, box_t) = unit_box();
    SceneDoc::new(vec![
        SceneObject::Mesh(StaticMesh {
            object_id: "ground".into(),
            name: "Ground".into(),
            vertices: vec![
                Vec3::new(-10.0, 0.0, -10.0),
                Vec3::new(10.0, 0.0, -10.0),
                Vec3::new(10.0, 0.0, 10.0),
                Vec3::new(-10.0, 0.0, 10.0),
            ],
            triangles: vec![[0, 2, 1], [0, 3, 2]],
            transform: Transform {
                translation: Vec3::new(0.0, GROUND_Y, 0.0),
                ..Default::default()
            },
        }),
        SceneObject::Mesh(StaticMesh {
            object_id: "crate".into(),
            name: "Crate".into(),
            vertices: box_v,
            triangles: box_t,
            transform: Transform {
                translation: Vec3::new(0.4, GROUND_Y + 0.4, -3.0),
                rotation: Vec3::new(0.0, 0.5, 0.0),
                scale: 0.8,
            },
        }),
        SceneObject::Character(character("alice", "Alice", Vec3::new(-1.0, GROUND_Y, 0.0), 0.3, 0.0)),
        SceneObject::Character(character("bob", "Bob", Vec3::new(1.0, GROUND_Y, 0.0), -0.3, FRAC_PI_2)),
    ])
    .expect("demo scene is valid")
}

/// The two subjects sit at x = -1 and x = +1; Q is the origin.
pub fn demo_rig() -> CineRig {
    CineRig::new(Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0))
}

pub fn demo_params() -> CineSpaceParams {
    CineSpaceParams::orbit(5.0, 0.0, 0.0)
}

pub fn demo_board(name: &str) -> Option<Storyboard> {
    let rig = demo_rig();
    let shot = |behaviors| Storyboard::shot(name, rig, demo_params().into(), behaviors);
    Some(match name {
        "push_in" => shot(vec![CameraBehavior::push_in(2.0, PushRange::Medium)]),
        "arc" => shot(vec![CameraBehavior::new(BehaviorKind::Arc, 2.0, FRAC_PI_2)]),
        "dolly_zoom" => shot(vec![CameraBehavior::new(BehaviorKind::DollyZoom, 2.0, 0.5)]),
        "push_arc" => shot(vec![
            CameraBehavior::push_in(1.0, PushRange::Small),
            CameraBehavior::new(BehaviorKind::Arc, 1.0, 0.8),
        ]),
        "keyframes" => Storyboard::frames(
            name,
            rig,
            vec![
                Keyframe {
                    frame: 0,
                    params: CineSpaceParams::orbit(4.0, -0.5, 0.05),
                    easing_to_next: Easing::Smoothstep,
                },
                Keyframe {
                    frame: 24,
                    params: CineSpaceParams::orbit(5.0, 0.0, 0.2),
                    easing_to_next: Easing::Linear,
                },
                Keyframe {
                    frame: 47,
                    params: CineSpaceParams::orbit(6.0, 0.6, 0.1),
                    easing_to_next: Easing::Smoothstep,
                },
            ],
        ),
        _ => return None,
    })
}
