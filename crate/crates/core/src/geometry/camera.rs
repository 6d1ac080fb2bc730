use serde::{Deserialize, Serialize};

use super::{GeometryError, Rotation, Vec3};
use crate::scalar::Real;

/// Default near clipping distance in meters.
pub const DEFAULT_NEAR_PLANE: f64 = 0.01;

/// Full field of view (degrees) of a physical camera with a square sensor.
pub fn fov_from_focal<T: Real>(focal_length: T, sensor_size: T) -> Result<T, GeometryError> {
    positive("focal_length", focal_length)?;
    positive("sensor_size", sensor_size)?;
    let half = (sensor_size / (T::lit(2.0) * focal_length)).atan();
    Ok((T::lit(2.0) * half).to_degrees())
}

/// Focal length (same unit as `sensor_size`) producing the given full FoV.
pub fn focal_from_fov<T: Real>(fov_deg: T, sensor_size: T) -> Result<T, GeometryError> {
    positive("sensor_size", sensor_size)?;
    if !(fov_deg > T::zero() && fov_deg < T::lit(180.0)) {
        return Err(GeometryError::InvalidParameter { name: "fov", value: fov_deg.to_string() });
    }
    Ok(sensor_size / (T::lit(2.0) * (fov_deg.to_radians() * T::lit(0.5)).tan()))
}

/// Sensor size that yields `fov_deg` at `focal_length`.
pub fn sensor_from_fov<T: Real>(fov_deg: T, focal_length: T) -> Result<T, GeometryError> {
    positive("focal_length", focal_length)?;
    if !(fov_deg > T::zero() && fov_deg < T::lit(180.0)) {
        return Err(GeometryError::InvalidParameter { name: "fov", value: fov_deg.to_string() });
    }
    Ok(T::lit(2.0) * focal_length * (fov_deg.to_radians() * T::lit(0.5)).tan())
}

fn positive<T: Real>(name: &'static str, v: T) -> Result<(), GeometryError> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::InvalidParameter { name, value: v.to_string() })
    }
}

/// Pinhole camera with a square sensor spanning the image width.
///
/// The camera looks along its local +Z axis with local +Y up. Camera-local +X
/// maps to increasing `u` (image right) and +Y to decreasing `v` (image rows
/// grow downward). Pixel `(i, j)` covers `[i, i+1) x [j, j+1)`, so the image
/// center is `(W/2, H/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel<T> {
    pub position: Vec3<T>,
    pub rotation: Rotation<T>,
    /// mm
    pub focal_length: T,
    /// mm, square
    pub sensor_size: T,
    pub image_width: u32,
    pub image_height: u32,
    /// m
    pub near_plane: T,
}

/// A point in front of the near plane, in pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projected<T> {
    pub u: T,
    pub v: T,
    /// Distance along the camera forward axis.
    pub depth: T,
}

impl<T: Real> CameraModel<T> {
    pub fn new(
        position: Vec3<T>,
        rotation: Rotation<T>,
        focal_length: T,
        sensor_size: T,
        image_width: u32,
        image_height: u32,
    ) -> Result<Self, GeometryError> {
        let cam = Self {
            position,
            rotation,
            focal_length,
            sensor_size,
            image_width,
            image_height,
            near_plane: T::lit(DEFAULT_NEAR_PLANE),
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        positive("focal_length", self.focal_length)?;
        positive("sensor_size", self.sensor_size)?;
        positive("near_plane", self.near_plane)?;
        if self.image_width == 0 || self.image_height == 0 {
            return Err(GeometryError::InvalidParameter {
                name: "image_size",
                value: format!("{}x{}", self.image_width, self.image_height),
            });
        }
        if !self.position.is_finite() {
            return Err(GeometryError::InvalidParameter {
                name: "position",
                value: format!("{:?}", self.position.to_array()),
            });
        }
        Ok(())
    }

    pub fn fov_deg(&self) -> T {
        fov_from_focal(self.focal_length, self.sensor_size).unwrap_or_else(|_| T::nan())
    }

    /// Focal length in pixels (same horizontally and vertically).
    #[inline]
    pub fn focal_px(&self) -> T {
        self.focal_length / self.sensor_size * T::lit(self.image_width as f64)
    }

    #[inline]
    pub fn principal_point(&self) -> (T, T) {
        (
            T::lit(self.image_width as f64 * 0.5),
            T::lit(self.image_height as f64 * 0.5),
        )
    }

    pub fn forward(&self) -> Vec3<T> {
        self.rotation.rotate(Vec3::unit_z())
    }

    #[inline]
    pub fn world_to_camera(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.inverse().rotate(p - self.position)
    }

    #[inline]
    pub fn camera_to_world(&self, p: Vec3<T>) -> Vec3<T> {
        self.position + self.rotation.rotate(p)
    }

    /// Projects a camera-space point; `None` at or behind the near plane.
    #[inline]
    pub fn project_camera_space(&self, pc: Vec3<T>) -> Option<Projected<T>> {
        if !(pc.z > self.near_plane) {
            return None;
        }
        let f = self.focal_px();
        let (cx, cy) = self.principal_point();
        Some(Projected { u: cx + f * pc.x / pc.z, v: cy - f * pc.y / pc.z, depth: pc.z })
    }

    /// Projects a world point; `None` at or behind the near plane.
    pub fn project(&self, p: Vec3<T>) -> Option<Projected<T>> {
        self.project_camera_space(self.world_to_camera(p))
    }

    /// World point at pixel `(u, v)` and forward depth `depth`.
    pub fn unproject(&self, u: T, v: T, depth: T) -> Vec3<T> {
        let f = self.focal_px();
        let (cx, cy) = self.principal_point();
        let pc = Vec3::new((u - cx) * depth / f, -(v - cy) * depth / f, depth);
        self.camera_to_world(pc)
    }

    /// Unit world-space ray through pixel coordinate `(u, v)`.
    pub fn ray(&self, u: T, v: T) -> (Vec3<T>, Vec3<T>) {
        let f = self.focal_px();
        let (cx, cy) = self.principal_point();
        let d = Vec3::new((u - cx) / f, -(v - cy) / f, T::one());
        (self.position, self.rotation.rotate(d).normalized())
    }

    pub fn cast<U: Real>(&self) -> CameraModel<U> {
        CameraModel {
            position: self.position.cast(),
            rotation: self.rotation.cast(),
            focal_length: U::lit(self.focal_length.to_f64_lossy()),
            sensor_size: U::lit(self.sensor_size.to_f64_lossy()),
            image_width: self.image_width,
            image_height: self.image_height,
            near_plane: U::lit(self.near_plane.to_f64_lossy()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fov_examples() {
        assert!((fov_from_focal(18.0, 36.0).unwrap() - 90.0f64).abs() < 1e-12);
        // 2*atan(0.5) = 53.13010235415598 deg
        assert!((fov_from_focal(36.0, 36.0).unwrap() - 53.130_102_354_155_98f64).abs() < 1e-9);
        assert!(fov_from_focal(0.0, 36.0).is_err());
        assert!(fov_from_focal(18.0, -1.0).is_err());
        assert!(focal_from_fov(0.0, 36.0).is_err());
    }

    #[test]
    fn fov_shrinks_with_sensor() {
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            let sensor = 36.0 * 0.7f64.powi(k);
            let fov = fov_from_focal(50.0, sensor).unwrap();
            assert!(fov < prev && fov > 0.0);
            prev = fov;
        }
        assert!(prev < 1e-3);
    }

    fn cam90() -> CameraModel<f64> {
        CameraModel::new(Vec3::zero(), Rotation::identity(), 18.0, 36.0, 640, 640).unwrap()
    }

    #[test]
    fn optical_axis_maps_to_center() {
        let p = cam90().project(Vec3::new(0.0, 0.0, 5.0)).unwrap();
        assert_eq!((p.u, p.v, p.depth), (320.0, 320.0, 5.0));
    }

    #[test]
    fn frustum_edge_at_45_degrees() {
        let p = cam90().project(Vec3::new(1.0, 0.0, 1.0)).unwrap();
        assert!((p.u - 640.0).abs() < 1e-12);
        let p = cam90().project(Vec3::new(0.0, 1.0, 1.0)).unwrap();
        assert!(p.v.abs() < 1e-12);
    }

    #[test]
    fn behind_camera_is_none() {
        let cam = cam90();
        assert!(cam.project(Vec3::new(0.0, 0.0, -1.0)).is_none());
        assert!(cam.project(Vec3::new(0.0, 0.0, 0.005)).is_none());
        assert!(cam.project(Vec3::new(0.0, 0.0, 0.02)).is_some());
    }

    #[test]
    fn invalid_camera_rejected() {
        assert!(CameraModel::new(Vec3::<f64>::zero(), Rotation::identity(), 18.0, 36.0, 0, 10).is_err());
        assert!(CameraModel::new(Vec3::<f64>::zero(), Rotation::identity(), -1.0, 36.0, 10, 10).is_err());
    }

    /// Reference pipeline: 4x4 view matrix then 3x4 intrinsics, homogeneous divide.
    fn matrix_project(cam: &CameraModel<f64>, p: Vec3<f64>) -> (f64, f64, f64) {
        let r = cam.rotation.to_matrix();
        let c = cam.position;
        // world->camera = R^T (p - c)
        let mut view = [[0.0f64; 4]; 4];
        for i in 0..3 {
            for j in 0..3 {
                view[i][j] = r[j][i];
            }
            view[i][3] = -(r[0][i] * c.x + r[1][i] * c.y + r[2][i] * c.z);
        }
        view[3][3] = 1.0;
        let f = cam.focal_length / cam.sensor_size * cam.image_width as f64;
        let (cx, cy) = (cam.image_width as f64 / 2.0, cam.image_height as f64 / 2.0);
        let k = [[f, 0.0, cx, 0.0], [0.0, -f, cy, 0.0], [0.0, 0.0, 1.0, 0.0]];
        let ph = [p.x, p.y, p.z, 1.0];
        let mut pc = [0.0; 4];
        for i in 0..4 {
            pc[i] = (0..4).map(|j| view[i][j] * ph[j]).sum();
        }
        let mut img = [0.0; 3];
        for i in 0..3 {
            img[i] = (0..4).map(|j| k[i][j] * pc[j]).sum();
        }
        (img[0] / img[2], img[1] / img[2], pc[2])
    }

    proptest! {
        #[test]
        fn matches_matrix_pipeline(
            px in -3.0..3.0f64, py in -3.0..3.0f64, pz in -3.0..3.0f64,
            pitch in -40.0..40.0f64, yaw in -180.0..180.0f64, roll in -30.0..30.0f64,
            x in -20.0..20.0f64, y in -20.0..20.0f64, z in 1.0..30.0f64,
            focal in 10.0..80.0f64,
        ) {
            let cam = CameraModel::new(
                Vec3::new(px, py, pz),
                Rotation::from_euler_deg(pitch, yaw, roll),
                focal, 36.0, 640, 480,
            ).unwrap();
            let world = cam.camera_to_world(Vec3::new(x * z / 20.0, y * z / 20.0, z));
            let got = cam.project(world).unwrap();
            let (u, v, d) = matrix_project(&cam, world);
            prop_assert!((got.u - u).abs() < 1e-9, "u {} vs {}", got.u, u);
            prop_assert!((got.v - v).abs() < 1e-9, "v {} vs {}", got.v, v);
            prop_assert!((got.depth - d).abs() < 1e-9);
        }

        #[test]
        fn unproject_then_project_is_identity(
            u in 0.0..640.0f64, v in 0.0..480.0f64, depth in 0.05..100.0f64,
            yaw in -180.0..180.0f64, pitch in -60.0..60.0f64,
        ) {
            let cam = CameraModel::new(
                Vec3::new(1.0, 1.5, -2.0),
                Rotation::from_euler_deg(pitch, yaw, 0.0),
                35.0, 36.0, 640, 480,
            ).unwrap();
            let p = cam.project(cam.unproject(u, v, depth)).unwrap();
            prop_assert!((p.u - u).abs() < 1e-6 && (p.v - v).abs() < 1e-6);
            prop_assert!((p.depth - depth).abs() < 1e-9 * depth.max(1.0));
        }

        #[test]
        fn focal_fov_roundtrip(focal in 1.0..500.0f64, sensor in 1.0..70.0f64) {
            let fov = fov_from_focal(focal, sensor).unwrap();
            let back = focal_from_fov(fov, sensor).unwrap();
            prop_assert!((back - focal).abs() <= 1e-12 * focal);
            let s = sensor_from_fov(fov, focal).unwrap();
            prop_assert!((s - sensor).abs() < 1e-9);
        }
    }
}
