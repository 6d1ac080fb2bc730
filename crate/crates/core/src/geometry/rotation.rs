use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::scalar::Real;

/// Unit quaternion rotation. Composition renormalizes so the norm stays 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Default for Rotation<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Rotation<T> {
    pub fn identity() -> Self {
        Self { w: T::one(), x: T::zero(), y: T::zero(), z: T::zero() }
    }

    /// Builds from raw components and normalizes. A zero quaternion becomes identity.
    pub fn from_quaternion(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }.renormalized()
    }

    /// Rotation of `angle` radians about `axis` (need not be unit).
    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Self {
        let a = axis.normalized();
        let half = angle * T::lit(0.5);
        let s = half.sin();
        Self { w: half.cos(), x: a.x * s, y: a.y * s, z: a.z * s }.renormalized()
    }

    pub fn about_x(angle: T) -> Self {
        Self::from_axis_angle(Vec3::unit_x(), angle)
    }

    pub fn about_y(angle: T) -> Self {
        Self::from_axis_angle(Vec3::unit_y(), angle)
    }

    pub fn about_z(angle: T) -> Self {
        Self::from_axis_angle(Vec3::unit_z(), angle)
    }

    /// Euler angles in degrees applied as `Ry(yaw) * Rx(pitch) * Rz(roll)`.
    pub fn from_euler_deg(pitch: T, yaw: T, roll: T) -> Self {
        Self::about_y(yaw.to_radians())
            .compose(Self::about_x(pitch.to_radians()))
            .compose(Self::about_z(roll.to_radians()))
    }

    /// Shortest-arc rotation taking direction `from` onto direction `to`.
    pub fn from_to(from: Vec3<T>, to: Vec3<T>) -> Self {
        let a = from.normalized();
        let b = to.normalized();
        let d = a.dot(b);
        if d < T::lit(-1.0 + 1e-12) {
            // Antiparallel: half turn about any axis perpendicular to `a`.
            let mut axis = Vec3::unit_x().cross(a);
            if axis.norm_squared() < T::lit(1e-12) {
                axis = Vec3::unit_z().cross(a);
            }
            return Self::from_axis_angle(axis, T::PI());
        }
        let c = a.cross(b);
        Self { w: T::one() + d, x: c.x, y: c.y, z: c.z }.renormalized()
    }

    pub fn norm(&self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn renormalized(self) -> Self {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Self { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
        } else {
            Self::identity()
        }
    }

    /// `self * rhs`: applies `rhs` first, then `self`.
    pub fn compose(self, rhs: Self) -> Self {
        let (a, b) = (self, rhs);
        Self {
            w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        }
        .renormalized()
    }

    pub fn inverse(self) -> Self {
        Self { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    #[inline]
    pub fn rotate(&self, v: Vec3<T>) -> Vec3<T> {
        // v' = v + 2w (q x v) + 2 q x (q x v)
        let q = Vec3::new(self.x, self.y, self.z);
        let two = T::lit(2.0);
        let t = q.cross(v) * two;
        v + t * self.w + q.cross(t)
    }

    /// Row-major 3x3 rotation matrix.
    pub fn to_matrix(&self) -> [[T; 3]; 3] {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let one = T::one();
        let two = T::lit(2.0);
        [
            [one - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)],
            [two * (x * y + w * z), one - two * (x * x + z * z), two * (y * z - w * x)],
            [two * (x * z - w * y), two * (y * z + w * x), one - two * (x * x + y * y)],
        ]
    }

    /// Conjugation by the reflection `x -> -x`: the rotation seen in a mirror
    /// placed on the sagittal (YZ) plane.
    pub fn mirrored_x(self) -> Self {
        Self { w: self.w, x: self.x, y: -self.y, z: -self.z }
    }

    /// Swing-twist split about Y: returns the magnitude of the non-Y ("swing")
    /// part as an angle in radians. Zero for pure Y rotations.
    pub fn tilt_from_y(&self) -> T {
        let up = self.rotate(Vec3::unit_y());
        up.y.max(-T::one()).min(T::one()).acos()
    }

    pub fn angle_to(&self, other: &Self) -> T {
        let d = (self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z).abs();
        T::lit(2.0) * d.min(T::one()).acos()
    }

    pub fn cast<U: Real>(self) -> Rotation<U> {
        Rotation {
            w: U::lit(self.w.to_f64_lossy()),
            x: U::lit(self.x.to_f64_lossy()),
            y: U::lit(self.y.to_f64_lossy()),
            z: U::lit(self.z.to_f64_lossy()),
        }
    }
}

impl<T: Real> Mul for Rotation<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.compose(rhs)
    }
}

impl<T: Real> Mul<Vec3<T>> for Rotation<T> {
    type Output = Vec3<T>;
    fn mul(self, rhs: Vec3<T>) -> Vec3<T> {
        self.rotate(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: Vec3<f64>, b: Vec3<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn quarter_turn_about_y_maps_z_to_x() {
        let r = Rotation::about_y(FRAC_PI_2);
        assert!(close(r.rotate(Vec3::unit_z()), Vec3::unit_x(), 1e-12));
        assert!(close(r.rotate(Vec3::unit_x()), -Vec3::unit_z(), 1e-12));
    }

    #[test]
    fn matrix_matches_rotate() {
        let r = Rotation::from_euler_deg(20.0, -35.0, 10.0);
        let m = r.to_matrix();
        let v = Vec3::new(0.3, -1.2, 2.0);
        let mv = Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        );
        assert!(close(mv, r.rotate(v), 1e-12));
    }

    #[test]
    fn works_in_single_precision() {
        let r = Rotation::<f32>::about_x(std::f32::consts::FRAC_PI_2);
        let v = r.rotate(Vec3::unit_y());
        assert!((v - Vec3::unit_z()).norm() < 1e-6);
    }

    #[test]
    fn from_to_aligns_directions() {
        let cases = [
            (Vec3::unit_y(), Vec3::new(0.3, -0.2, 0.9)),
            (Vec3::unit_y(), -Vec3::unit_y()),
            (Vec3::unit_x(), -Vec3::unit_x()),
            (Vec3::unit_y(), Vec3::unit_y()),
        ];
        for (a, b) in cases {
            let r = Rotation::from_to(a, b);
            assert!(close(r.rotate(a), b.normalized(), 1e-12), "{a:?} -> {b:?}");
        }
    }

    #[test]
    fn pure_yaw_has_no_tilt() {
        assert!(Rotation::about_y(1.3f64).tilt_from_y() < 1e-7);
        assert!((Rotation::about_x(0.4f64).tilt_from_y() - 0.4).abs() < 1e-9);
    }

    fn arb_rotation() -> impl Strategy<Value = Rotation<f64>> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("nonzero", |(w, x, y, z)| w * w + x * x + y * y + z * z > 1e-3)
            .prop_map(|(w, x, y, z)| Rotation::from_quaternion(w, x, y, z))
    }

    proptest! {
        #[test]
        fn composition_stays_unit(a in arb_rotation(), b in arb_rotation(), c in arb_rotation()) {
            let ab_c = (a * b) * c;
            let a_bc = a * (b * c);
            prop_assert!((ab_c.norm() - 1.0).abs() < 1e-9);
            prop_assert!((a_bc.norm() - 1.0).abs() < 1e-9);
            prop_assert!(ab_c.angle_to(&a_bc) < 1e-7);
        }

        #[test]
        fn rotation_preserves_length(r in arb_rotation(), x in -5.0..5.0f64, y in -5.0..5.0f64, z in -5.0..5.0f64) {
            let v = Vec3::new(x, y, z);
            prop_assert!((r.rotate(v).norm() - v.norm()).abs() < 1e-9);
            prop_assert!(close(r.inverse().rotate(r.rotate(v)), v, 1e-9));
        }

        #[test]
        fn mirror_commutes_with_reflection(r in arb_rotation(), x in -5.0..5.0f64, y in -5.0..5.0f64, z in -5.0..5.0f64) {
            let reflect = |v: Vec3<f64>| Vec3::new(-v.x, v.y, v.z);
            let v = Vec3::new(x, y, z);
            prop_assert!(close(r.mirrored_x().rotate(reflect(v)), reflect(r.rotate(v)), 1e-9));
        }
    }
}
