//! Procedural articulated humans: a COCO-17 skeleton, forward kinematics,
//! capsule-per-bone bodies and a small library of looping pose clips.
//!
//! Humans are built facing local -Z with their left side at local +X and
//! the pelvis at the local origin. Asset and clip files are JSON; see
//! [`HumanAsset::from_json`] and [`PoseClip::from_json`].

mod asset;
mod kinematics;
mod pose;
mod skeleton;

pub use asset::{builtin_assets, BoneCapsule, HumanAsset, DEFAULT_SELF_OCCLUSION};
pub use kinematics::{body_primitives, forward_kinematics, joint_positions, BodyPrimitive};
pub use pose::{builtin_pose_library, Pose, PoseClip};
pub use skeleton::{
    builtin_skeleton, keypoint_index, mirror_name, mirrored_keypoint, Joint, Skeleton,
    COCO_KEYPOINTS, COCO_SKELETON, NUM_KEYPOINTS,
};

use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HumanoidError {
    #[error("skeleton: {0}")]
    Skeleton(String),
    #[error("asset: {0}")]
    Asset(String),
    #[error("pose clip: {0}")]
    Clip(String),
    #[error("pose has {got} joint rotations, skeleton has {expected} joints")]
    PoseMismatch { expected: usize, got: usize },
    #[error("parse error at {0}")]
    Parse(String),
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
}

pub(crate) fn read_file(path: &Path) -> Result<String, HumanoidError> {
    std::fs::read_to_string(path)
        .map_err(|e| HumanoidError::Io { path: path.to_owned(), message: e.to_string() })
}

/// Loads an asset JSON file.
pub fn load_asset(path: &Path) -> Result<HumanAsset, HumanoidError> {
    HumanAsset::from_json(&read_file(path)?)
}

/// Loads a pose-clip JSON file.
pub fn load_clip(path: &Path) -> Result<PoseClip, HumanoidError> {
    PoseClip::from_json(&read_file(path)?)
}
