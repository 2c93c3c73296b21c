//! Camera planning for previsualization.

pub mod behaviors;
pub mod cinespace;
pub mod demo;
pub mod geometry;
pub mod groundtruth;
pub mod openpose;
pub mod scene;
pub mod storyboard;
