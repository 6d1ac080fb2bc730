//! Seeded, order-independent parameter sampling and the randomizer catalog.
//!
//! Every randomizer draws from its own [`RngStream`], keyed by the master
//! seed, the frame index and the randomizer's stable id. All distributions
//! are uniform; lights additionally use a Bernoulli on/off switch.

mod catalog;
mod sampling;
mod stream;

pub use catalog::{
    AnimationConfig, CameraConfig, ClothingConfig, EulerRanges, LightConfig, MovingLightConfig,
    ObjectGroupConfig, PlacementConfig, PostProcessConfig, RandomizerCatalog, SunConfig,
    TextureConfig,
};
pub use sampling::{
    bernoulli, poisson_disk, sample_in_volume, sample_int, sample_pose_reference, sample_uniform,
    IntRange, ParamRange, POISSON_ATTEMPTS,
};
pub use stream::RngStream;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RandomizeError {
    #[error("pose library is empty")]
    EmptyLibrary,
    #[error("pose clip {0} has no frames")]
    EmptyClip(usize),
}
