use serde::{Deserialize, Serialize};

use super::{GeometryError, Rotation, Vec3};
use crate::scalar::Real;

/// Scale, then rotate, then translate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transform<T> {
    pub translation: Vec3<T>,
    pub rotation: Rotation<T>,
    pub scale: Vec3<T>,
}

impl<T: Real> Default for Transform<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Transform<T> {
    pub fn identity() -> Self {
        Self {
            translation: Vec3::zero(),
            rotation: Rotation::identity(),
            scale: Vec3::splat(T::one()),
        }
    }

    pub fn new(translation: Vec3<T>, rotation: Rotation<T>, scale: Vec3<T>) -> Result<Self, GeometryError> {
        let t = Self { translation, rotation, scale };
        t.validate()?;
        Ok(t)
    }

    pub fn from_translation(translation: Vec3<T>) -> Self {
        Self { translation, ..Self::identity() }
    }

    pub fn from_rotation(rotation: Rotation<T>) -> Self {
        Self { rotation, ..Self::identity() }
    }

    pub fn rigid(translation: Vec3<T>, rotation: Rotation<T>) -> Self {
        Self { translation, rotation, scale: Vec3::splat(T::one()) }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let s = self.scale;
        if !(s.x > T::zero() && s.y > T::zero() && s.z > T::zero()) || !s.is_finite() {
            return Err(GeometryError::InvalidParameter {
                name: "scale",
                value: format!("{:?}", s.to_array()),
            });
        }
        if !self.translation.is_finite() {
            return Err(GeometryError::InvalidParameter {
                name: "translation",
                value: format!("{:?}", self.translation.to_array()),
            });
        }
        Ok(())
    }

    #[inline]
    pub fn apply_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.translation + self.rotation.rotate(p.mul_elem(self.scale))
    }

    #[inline]
    pub fn apply_vector(&self, v: Vec3<T>) -> Vec3<T> {
        self.rotation.rotate(v.mul_elem(self.scale))
    }

    #[inline]
    pub fn inverse_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.inverse().rotate(p - self.translation).div_elem(self.scale)
    }

    #[inline]
    pub fn inverse_vector(&self, v: Vec3<T>) -> Vec3<T> {
        self.rotation.inverse().rotate(v).div_elem(self.scale)
    }

    /// Normal transform (inverse transpose) for a local-space normal.
    #[inline]
    pub fn apply_normal(&self, n: Vec3<T>) -> Vec3<T> {
        self.rotation.rotate(n.div_elem(self.scale)).normalized()
    }

    /// `self` after `inner`, for rigid-or-uniformly-scaled `self`.
    ///
    /// Exact when `self.scale` is uniform; non-uniform outer scale combined
    /// with inner rotation is not representable as a single `Transform`.
    pub fn then_inner(&self, inner: &Self) -> Self {
        Self {
            translation: self.apply_point(inner.translation),
            rotation: self.rotation.compose(inner.rotation),
            scale: self.scale.mul_elem(inner.scale),
        }
    }
}
