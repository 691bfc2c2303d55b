//! Kinematic tabletop world: scene state, suction pick-and-place, rendering and
//! the pose/zone success predicates.

mod config;
mod geometry;
mod kinematics;
mod matching;
mod object;
mod render;
mod scene;

use thiserror::Error;

pub use config::{NoiseChannels, WorkspaceConfig, DEFAULT_NOISE_SIGMA, DEFAULT_TRANSPORT_SUBSTEPS};
pub use geometry::{wrap_angle, wrap_angle_period, Pose, Rect};
pub use kinematics::{execute, Action, Execution, Transport};
pub use matching::{
    overlap_fraction, pose_match, pose_within, yaw_error, zone_match, PoseTolerance, DEFAULT_ZONE_THRESHOLD,
};
pub use object::{
    BlockSize, Color, ObjectId, ObjectInstance, ObjectKind, BIG_BLOCK_EDGE, BOWL_DIAMETER, BOWL_HEIGHT,
    SMALL_BLOCK_EDGE, ZONE_EDGE, ZONE_HEIGHT,
};
pub use render::{render, render_clean, ColorRaster, DepthRaster, TABLE_RGB};
pub use scene::SceneState;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("no such object {0}")]
    NoSuchObject(ObjectId),
    #[error("object {id} is a {found}, expected {expected}")]
    WrongKind {
        id: ObjectId,
        expected: &'static str,
        found: ObjectKind,
    },
    #[error("invalid workspace config: {0}")]
    InvalidConfig(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("png: {0}")]
    Png(String),
}
