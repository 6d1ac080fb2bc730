//! Deterministic, config-driven synthetic data generation for human-centric
//! vision: randomized scenes of posed capsule humanoids and primitive
//! occluders, a z-buffered software rasterizer, COCO keypoint labels, dataset
//! statistics and a plateau learning-rate schedule.

pub mod coco_io;
pub mod config;
pub mod geometry;
pub mod humanoid;
pub mod label;
pub mod lrsched;
pub mod pipeline;
pub mod randomize;
pub mod scene;
pub mod stats;
mod scalar;

pub use scalar::Real;

pub type Vec3 = geometry::Vec3<f64>;
pub type Vec3f = geometry::Vec3<f32>;
pub type Rotation = geometry::Rotation<f64>;
pub type Rotationf = geometry::Rotation<f32>;
pub type Transform = geometry::Transform<f64>;
pub type Transformf = geometry::Transform<f32>;
pub type CameraModel = geometry::CameraModel<f64>;
pub type CameraModelf = geometry::CameraModel<f32>;
pub type Primitive = geometry::Primitive<f64>;
pub type Aabb = geometry::Aabb<f64>;
