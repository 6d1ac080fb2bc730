use serde::{Deserialize, Serialize};

use super::{GeometryError, Transform, Vec3};
use crate::scalar::Real;

/// Capsule tessellation: segments around the axis.
pub const CAPSULE_SEGMENTS: usize = 24;
/// Capsule tessellation: latitude rings (split evenly between the two caps).
pub const CAPSULE_RINGS: usize = 12;
pub const SPHERE_SEGMENTS: usize = 32;
pub const SPHERE_RINGS: usize = 16;
pub const CYLINDER_SEGMENTS: usize = 24;

/// Shape in its local frame.
///
/// All shapes are centered on the local origin. Cylinders and capsules are
/// aligned with local Y. A quad lies in the local XY plane, faces -Z and is
/// two-sided.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive<T> {
    Box { size: Vec3<T> },
    Sphere { radius: T },
    Cylinder { radius: T, height: T },
    /// Segment from `-half_length` to `+half_length` on Y, swept by `radius`.
    Capsule { radius: T, half_length: T },
    Quad { width: T, height: T },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Box,
    Sphere,
    Cylinder,
    Capsule,
    Quad,
}

/// Indexed triangle mesh. Closed meshes have outward (counter-clockwise seen
/// from outside in a right-handed frame) winding.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh<T> {
    pub vertices: Vec<Vec3<T>>,
    pub triangles: Vec<[u32; 3]>,
    pub closed: bool,
}

impl<T: Real> Primitive<T> {
    pub fn kind(&self) -> PrimitiveKind {
        match self {
            Primitive::Box { .. } => PrimitiveKind::Box,
            Primitive::Sphere { .. } => PrimitiveKind::Sphere,
            Primitive::Cylinder { .. } => PrimitiveKind::Cylinder,
            Primitive::Capsule { .. } => PrimitiveKind::Capsule,
            Primitive::Quad { .. } => PrimitiveKind::Quad,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let dims: Vec<T> = match *self {
            Primitive::Box { size } => size.to_array().to_vec(),
            Primitive::Sphere { radius } => vec![radius],
            Primitive::Cylinder { radius, height } => vec![radius, height],
            Primitive::Capsule { radius, half_length } => vec![radius, half_length],
            Primitive::Quad { width, height } => vec![width, height],
        };
        if dims.iter().all(|d| *d > T::zero() && d.is_finite()) {
            Ok(())
        } else {
            Err(GeometryError::InvalidParameter {
                name: "primitive dimensions",
                value: format!("{self:?}"),
            })
        }
    }

    /// Local-frame bounding box.
    pub fn local_bounds(&self) -> (Vec3<T>, Vec3<T>) {
        let half = T::lit(0.5);
        let e = match *self {
            Primitive::Box { size } => size * half,
            Primitive::Sphere { radius } => Vec3::splat(radius),
            Primitive::Cylinder { radius, height } => Vec3::new(radius, height * half, radius),
            Primitive::Capsule { radius, half_length } => Vec3::new(radius, half_length + radius, radius),
            Primitive::Quad { width, height } => Vec3::new(width * half, height * half, T::zero()),
        };
        (-e, e)
    }

    /// Nearest positive ray parameter where the world ray hits this primitive.
    ///
    /// `dir` must be unit length; the returned distance is then in world units.
    pub fn ray_intersect(&self, xf: &Transform<T>, origin: Vec3<T>, dir: Vec3<T>) -> Option<T> {
        // Affine map to the local frame preserves the ray parameter.
        let o = xf.inverse_point(origin);
        let d = xf.inverse_vector(dir);
        let hit = match *self {
            Primitive::Sphere { radius } => sphere_hit(o, d, Vec3::zero(), radius),
            Primitive::Box { size } => box_hit(o, d, size * T::lit(0.5)),
            Primitive::Cylinder { radius, height } => {
                let h = height * T::lit(0.5);
                nearest(cylinder_side_hit(o, d, radius, h), cylinder_cap_hits(o, d, radius, h))
            }
            Primitive::Capsule { radius, half_length } => {
                let side = cylinder_side_hit(o, d, radius, half_length);
                let top = sphere_hit(o, d, Vec3::new(T::zero(), half_length, T::zero()), radius);
                let bottom = sphere_hit(o, d, Vec3::new(T::zero(), -half_length, T::zero()), radius);
                nearest(nearest(side, top), bottom)
            }
            Primitive::Quad { width, height } => {
                if d.z == T::zero() {
                    None
                } else {
                    let t = -o.z / d.z;
                    let p = o + d * t;
                    let half = T::lit(0.5);
                    (t > T::zero() && p.x.abs() <= width * half && p.y.abs() <= height * half).then_some(t)
                }
            }
        };
        hit.filter(|t| t.is_finite() && *t > T::zero())
    }

    /// Local-frame triangle mesh at the documented resolution.
    pub fn tessellate(&self) -> Mesh<T> {
        match *self {
            Primitive::Box { size } => box_mesh(size * T::lit(0.5)),
            Primitive::Sphere { radius } => {
                let profile = (0..=SPHERE_RINGS)
                    .map(|i| {
                        if i == 0 || i == SPHERE_RINGS {
                            let y = if i == 0 { radius } else { -radius };
                            return (y, T::zero());
                        }
                        let phi = T::PI() * T::lit(i as f64 / SPHERE_RINGS as f64);
                        (radius * phi.cos(), radius * phi.sin())
                    })
                    .collect::<Vec<_>>();
                lathe(&profile, SPHERE_SEGMENTS)
            }
            Primitive::Cylinder { radius, height } => {
                let h = height * T::lit(0.5);
                let profile = vec![(h, T::zero()), (h, radius), (-h, radius), (-h, T::zero())];
                lathe(&profile, CYLINDER_SEGMENTS)
            }
            Primitive::Capsule { radius, half_length } => {
                let per_cap = CAPSULE_RINGS / 2;
                let mut profile = Vec::with_capacity(CAPSULE_RINGS + 2);
                for i in 0..=per_cap {
                    let phi = T::FRAC_PI_2() * T::lit(i as f64 / per_cap as f64);
                    profile.push((half_length + radius * phi.cos(), radius * phi.sin()));
                }
                for i in (0..=per_cap).rev() {
                    let phi = T::FRAC_PI_2() * T::lit(i as f64 / per_cap as f64);
                    profile.push((-half_length - radius * phi.cos(), radius * phi.sin()));
                }
                lathe(&profile, CAPSULE_SEGMENTS)
            }
            Primitive::Quad { width, height } => {
                let (w, h) = (width * T::lit(0.5), height * T::lit(0.5));
                Mesh {
                    vertices: vec![
                        Vec3::new(-w, -h, T::zero()),
                        Vec3::new(w, -h, T::zero()),
                        Vec3::new(w, h, T::zero()),
                        Vec3::new(-w, h, T::zero()),
                    ],
                    // Normal -Z.
                    triangles: vec![[0, 2, 1], [0, 3, 2]],
                    closed: false,
                }
            }
        }
    }
}

fn nearest<T: Real>(a: Option<T>, b: Option<T>) -> Option<T> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Smallest positive root of `a t^2 + 2 b t + c = 0`.
fn smallest_positive_root<T: Real>(a: T, b: T, c: T) -> Option<T> {
    if a <= T::zero() {
        return None;
    }
    let disc = b * b - a * c;
    if disc < T::zero() {
        return None;
    }
    let sq = disc.sqrt();
    // Numerically stable pair.
    let q = if b > T::zero() { -(b + sq) } else { -b + sq };
    let (r0, r1) = if q == T::zero() { (T::zero(), T::zero()) } else { (q / a, c / q) };
    let (lo, hi) = if r0 < r1 { (r0, r1) } else { (r1, r0) };
    if lo > T::zero() {
        Some(lo)
    } else if hi > T::zero() {
        Some(hi)
    } else {
        None
    }
}

fn sphere_hit<T: Real>(o: Vec3<T>, d: Vec3<T>, center: Vec3<T>, r: T) -> Option<T> {
    let oc = o - center;
    smallest_positive_root(d.dot(d), oc.dot(d), oc.dot(oc) - r * r)
}

fn box_hit<T: Real>(o: Vec3<T>, d: Vec3<T>, half: Vec3<T>) -> Option<T> {
    let mut t_near = T::neg_infinity();
    let mut t_far = T::infinity();
    for axis in 0..3 {
        let (oa, da, ha) = (o[axis], d[axis], half[axis]);
        if da == T::zero() {
            if oa < -ha || oa > ha {
                return None;
            }
            continue;
        }
        let t0 = (-ha - oa) / da;
        let t1 = (ha - oa) / da;
        let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        t_near = t_near.max(lo);
        t_far = t_far.min(hi);
        if t_near > t_far {
            return None;
        }
    }
    if t_near > T::zero() {
        Some(t_near)
    } else if t_far > T::zero() {
        Some(t_far)
    } else {
        None
    }
}

fn cylinder_side_hit<T: Real>(o: Vec3<T>, d: Vec3<T>, r: T, half_h: T) -> Option<T> {
    let a = d.x * d.x + d.z * d.z;
    let b = o.x * d.x + o.z * d.z;
    let c = o.x * o.x + o.z * o.z - r * r;
    if a <= T::zero() {
        return None;
    }
    let disc = b * b - a * c;
    if disc < T::zero() {
        return None;
    }
    let sq = disc.sqrt();
    let mut best: Option<T> = None;
    for t in [(-b - sq) / a, (-b + sq) / a] {
        if t > T::zero() && (o.y + d.y * t).abs() <= half_h {
            best = nearest(best, Some(t));
        }
    }
    best
}

fn cylinder_cap_hits<T: Real>(o: Vec3<T>, d: Vec3<T>, r: T, half_h: T) -> Option<T> {
    if d.y == T::zero() {
        return None;
    }
    let mut best = None;
    for y in [half_h, -half_h] {
        let t = (y - o.y) / d.y;
        let p = o + d * t;
        if t > T::zero() && p.x * p.x + p.z * p.z <= r * r {
            best = nearest(best, Some(t));
        }
    }
    best
}

/// Revolves a (y, radius) profile ordered top to bottom about Y. Profile end
/// points with zero radius collapse to poles.
fn lathe<T: Real>(profile: &[(T, T)], segments: usize) -> Mesh<T> {
    let mut vertices = Vec::new();
    let mut rings: Vec<Vec<u32>> = Vec::with_capacity(profile.len());
    for &(y, r) in profile {
        if r == T::zero() {
            rings.push(vec![vertices.len() as u32]);
            vertices.push(Vec3::new(T::zero(), y, T::zero()));
        } else {
            let ring = (0..segments)
                .map(|k| {
                    let th = T::TAU() * T::lit(k as f64 / segments as f64);
                    vertices.push(Vec3::new(r * th.cos(), y, r * th.sin()));
                    (vertices.len() - 1) as u32
                })
                .collect();
            rings.push(ring);
        }
    }
    let mut triangles = Vec::new();
    for pair in rings.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        for k in 0..segments {
            let k1 = (k + 1) % segments;
            match (a.len(), b.len()) {
                (1, 1) => {}
                (1, _) => triangles.push([a[0], b[k], b[k1]]),
                (_, 1) => triangles.push([a[k], b[0], a[k1]]),
                _ => {
                    triangles.push([a[k], b[k], b[k1]]);
                    triangles.push([a[k], b[k1], a[k1]]);
                }
            }
        }
    }
    let mut mesh = Mesh { vertices, triangles, closed: true };
    orient_outward(&mut mesh);
    mesh
}

fn box_mesh<T: Real>(h: Vec3<T>) -> Mesh<T> {
    let vertices = (0..8)
        .map(|i| {
            Vec3::new(
                if i & 1 == 0 { -h.x } else { h.x },
                if i & 2 == 0 { -h.y } else { h.y },
                if i & 4 == 0 { -h.z } else { h.z },
            )
        })
        .collect();
    let quads: [[u32; 4]; 6] = [
        [0, 1, 3, 2],
        [4, 6, 7, 5],
        [0, 4, 5, 1],
        [2, 3, 7, 6],
        [0, 2, 6, 4],
        [1, 5, 7, 3],
    ];
    let triangles = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
    let mut mesh = Mesh { vertices, triangles, closed: true };
    orient_outward(&mut mesh);
    mesh
}

/// All closed primitives are convex and contain the origin, so the outward
/// normal of every face points away from it.
fn orient_outward<T: Real>(mesh: &mut Mesh<T>) {
    for tri in &mut mesh.triangles {
        let [a, b, c] = tri.map(|i| mesh.vertices[i as usize]);
        let n = (b - a).cross(c - a);
        let centroid = (a + b + c) / T::lit(3.0);
        if n.dot(centroid) < T::zero() {
            tri.swap(1, 2);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rotation;

    const FWD: Vec3<f64> = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    fn at_origin() -> Transform<f64> {
        Transform::identity()
    }

    #[test]
    fn unit_sphere_hit() {
        let t = Primitive::Sphere { radius: 1.0 }
            .ray_intersect(&at_origin(), Vec3::new(0.0, 0.0, -2.0), FWD)
            .unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_box_hit() {
        let t = Primitive::Box { size: Vec3::splat(1.0) }
            .ray_intersect(&at_origin(), Vec3::new(0.0, 0.0, -2.0), FWD)
            .unwrap();
        assert!((t - 1.5).abs() < 1e-12);
    }

    #[test]
    fn capsule_side_reduces_to_circle() {
        let cap = Primitive::Capsule { radius: 0.3, half_length: 1.0 };
        for d in [0.5, 2.0, 7.25] {
            let t = cap
                .ray_intersect(&at_origin(), Vec3::new(0.0, 0.4, -d), FWD)
                .unwrap();
            assert!((t - (d - 0.3)).abs() < 1e-12);
        }
        // Through the top cap sphere.
        let t = cap.ray_intersect(&at_origin(), Vec3::new(0.0, 1.0, -2.0), FWD).unwrap();
        assert!((t - 1.7).abs() < 1e-12);
        assert!(cap.ray_intersect(&at_origin(), Vec3::new(0.0, 1.31, -2.0), FWD).is_none());
    }

    #[test]
    fn cylinder_caps_and_side() {
        let cyl = Primitive::Cylinder { radius: 0.5, height: 2.0 };
        let t = cyl.ray_intersect(&at_origin(), Vec3::new(0.1, 5.0, 0.0), -Vec3::unit_y()).unwrap();
        assert!((t - 4.0).abs() < 1e-12);
        let t = cyl.ray_intersect(&at_origin(), Vec3::new(0.0, 0.0, -3.0), FWD).unwrap();
        assert!((t - 2.5).abs() < 1e-12);
        assert!(cyl.ray_intersect(&at_origin(), Vec3::new(0.0, 1.2, -3.0), FWD).is_none());
    }

    #[test]
    fn quad_is_two_sided() {
        let q = Primitive::Quad { width: 2.0, height: 2.0 };
        let xf = Transform::from_translation(Vec3::new(0.0, 0.0, 3.0));
        assert!((q.ray_intersect(&xf, Vec3::zero(), FWD).unwrap() - 3.0).abs() < 1e-12);
        assert!((q.ray_intersect(&xf, Vec3::new(0.0, 0.0, 5.0), -FWD).unwrap() - 2.0).abs() < 1e-12);
        assert!(q.ray_intersect(&xf, Vec3::new(1.5, 0.0, 0.0), FWD).is_none());
    }

    #[test]
    fn scaled_and_rotated_sphere_is_ellipsoid() {
        let xf = Transform::new(
            Vec3::new(0.0, 0.0, 10.0),
            Rotation::about_y(std::f64::consts::FRAC_PI_2),
            Vec3::new(3.0, 1.0, 1.0),
        )
        .unwrap();
        // Local X (long axis) now points along world -Z.
        let t = Primitive::Sphere { radius: 1.0 }.ray_intersect(&xf, Vec3::zero(), FWD).unwrap();
        assert!((t - 7.0).abs() < 1e-9);
    }

    #[test]
    fn inside_origin_hits_exit() {
        let t = Primitive::Sphere { radius: 2.0 }.ray_intersect(&at_origin(), Vec3::zero(), FWD).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn validate_rejects_non_positive_dims() {
        assert!(Primitive::Sphere { radius: 0.0f64 }.validate().is_err());
        assert!(Primitive::Capsule { radius: 0.1f64, half_length: -1.0 }.validate().is_err());
        assert!(Primitive::Box { size: Vec3::new(1.0f64, 1.0, 1.0) }.validate().is_ok());
    }

    fn closed_mesh_checks(p: Primitive<f64>, expected_tris: usize) {
        let m = p.tessellate();
        assert_eq!(m.triangles.len(), expected_tris, "{p:?}");
        // Every edge shared by exactly two triangles in opposite directions.
        let mut edges = std::collections::HashMap::new();
        for t in &m.triangles {
            for k in 0..3 {
                *edges.entry((t[k], t[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        for (&(a, b), &n) in &edges {
            assert_eq!(n, 1, "duplicate directed edge in {p:?}");
            assert_eq!(edges.get(&(b, a)), Some(&1), "open edge in {p:?}");
        }
        for t in &m.triangles {
            let [a, b, c] = t.map(|i| m.vertices[i as usize]);
            assert!((b - a).cross(c - a).dot(a + b + c) > 0.0, "inward face in {p:?}");
        }
    }

    #[test]
    fn tessellations_are_closed_and_outward() {
        closed_mesh_checks(Primitive::Box { size: Vec3::new(1.0, 2.0, 0.5) }, 12);
        closed_mesh_checks(Primitive::Sphere { radius: 0.7 }, 2 * SPHERE_SEGMENTS * (SPHERE_RINGS - 1));
        closed_mesh_checks(Primitive::Cylinder { radius: 0.4, height: 1.3 }, 4 * CYLINDER_SEGMENTS);
        closed_mesh_checks(
            Primitive::Capsule { radius: 0.1, half_length: 0.3 },
            2 * CAPSULE_SEGMENTS * (CAPSULE_RINGS + 1) - 2 * CAPSULE_SEGMENTS,
        );
    }

    #[test]
    fn capsule_vertices_on_surface() {
        let (r, hl) = (0.2f64, 0.5f64);
        let m = Primitive::Capsule { radius: r, half_length: hl }.tessellate();
        for v in m.vertices {
            let axis_y = v.y.clamp(-hl, hl);
            let dist = (v - Vec3::new(0.0, axis_y, 0.0)).norm();
            assert!((dist - r).abs() < 1e-12);
        }
    }
}
