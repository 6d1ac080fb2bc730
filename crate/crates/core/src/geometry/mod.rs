//! Vectors, rigid transforms, the pinhole camera, shape primitives and exact
//! ray tests.
//!
//! World frame is right-handed with +Y up. Cameras look along their local +Z.
//! Everything here is generic over [`Real`](crate::Real); the crate root
//! exports `f64` aliases used by the rest of the pipeline.

mod camera;
mod primitive;
mod rotation;
mod transform;
mod vector;

pub use camera::{
    focal_from_fov, fov_from_focal, sensor_from_fov, CameraModel, Projected, DEFAULT_NEAR_PLANE,
};
pub use primitive::{
    Mesh, Primitive, PrimitiveKind, CAPSULE_RINGS, CAPSULE_SEGMENTS, CYLINDER_SEGMENTS,
    SPHERE_RINGS, SPHERE_SEGMENTS,
};
pub use rotation::Rotation;
pub use transform::Transform;
pub use vector::{Aabb, Vec3};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: String },
}
