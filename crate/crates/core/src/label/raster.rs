use crate::geometry::Mesh;
use crate::scene::{Light, Material, SceneSpec};
use crate::{CameraModel, Primitive, Transform, Vec3};

use super::shade;

pub const SEMANTIC_BACKGROUND: u8 = 0;
pub const SEMANTIC_PERSON: u8 = 1;
pub const SEMANTIC_OBJECT: u8 = 2;

/// Per-pixel render output, row-major.
///
/// `depth` is the distance along the camera's forward axis (+inf where
/// nothing was hit). The wall has finite depth but instance and semantic id 0.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameBuffers {
    pub width: u32,
    pub height: u32,
    pub depth: Vec<f32>,
    pub instance_id: Vec<u16>,
    pub semantic_id: Vec<u8>,
    /// Linear RGB in `[0, 1]`; absent for label-only renders.
    pub rgb: Option<Vec<[f32; 3]>>,
}

impl FrameBuffers {
    pub fn empty(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            depth: vec![f32::INFINITY; n],
            instance_id: vec![0; n],
            semantic_id: vec![SEMANTIC_BACKGROUND; n],
            rgb: None,
        }
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }
}

/// One drawable primitive with its ids.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Surface {
    pub instance_id: u16,
    pub semantic_id: u8,
    pub primitive: Primitive,
    pub transform: Transform,
    pub material: Material,
}

/// Wall, human capsules and objects of a scene, in that order.
pub fn scene_surfaces(scene: &SceneSpec) -> Vec<Surface> {
    let mut out = Vec::with_capacity(1 + scene.humans.len() * 16 + scene.objects.len());
    out.push(Surface {
        instance_id: 0,
        semantic_id: SEMANTIC_BACKGROUND,
        primitive: scene.wall.primitive,
        transform: scene.wall.transform,
        material: scene.wall.material,
    });
    for h in &scene.humans {
        for b in &h.body {
            out.push(Surface {
                instance_id: instance_u16(h.instance_id),
                semantic_id: SEMANTIC_PERSON,
                primitive: b.primitive,
                transform: b.transform,
                material: h.material,
            });
        }
    }
    for o in &scene.objects {
        out.push(Surface {
            instance_id: instance_u16(o.instance_id),
            semantic_id: SEMANTIC_OBJECT,
            primitive: o.primitive,
            transform: o.transform,
            material: o.material,
        });
    }
    out
}

fn instance_u16(id: u32) -> u16 {
    u16::try_from(id).expect("instance ids are validated to fit in 16 bits")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RenderOptions {
    /// Compute shaded RGB in addition to the label buffers.
    pub shade: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { shade: true }
    }
}

/// Renders every surface of `scene` with shading.
pub fn rasterize(scene: &SceneSpec) -> FrameBuffers {
    rasterize_with(scene, &RenderOptions::default())
}

pub fn rasterize_with(scene: &SceneSpec, options: &RenderOptions) -> FrameBuffers {
    let surfaces = scene_surfaces(scene);
    let lights = options.shade.then_some(scene.lights.as_slice());
    render_surfaces(&scene.camera, &surfaces, lights)
}

/// Z-buffers the tessellated surfaces. With `lights`, also shades RGB.
pub fn render_surfaces(camera: &CameraModel, surfaces: &[Surface], lights: Option<&[Light]>) -> FrameBuffers {
    let mut r = Raster::new(camera, lights.is_some());
    for (k, s) in surfaces.iter().enumerate() {
        let mesh = s.primitive.tessellate();
        r.draw_mesh(&mesh, s, k as u32);
    }
    let Raster { mut out, normals, surface_of, .. } = r;
    if let Some(lights) = lights {
        out.rgb = Some(shade::shade(camera, &out, surfaces, &normals, &surface_of, lights));
    }
    out
}

const NO_SURFACE: u32 = u32::MAX;

struct Raster<'a> {
    camera: &'a CameraModel,
    /// World to camera rotation.
    to_camera: crate::Rotation,
    f: f64,
    cx: f64,
    cy: f64,
    out: FrameBuffers,
    /// World-space face normal per pixel (shading only).
    normals: Vec<[f32; 3]>,
    surface_of: Vec<u32>,
    shading: bool,
}

impl<'a> Raster<'a> {
    fn new(camera: &'a CameraModel, shading: bool) -> Self {
        let out = FrameBuffers::empty(camera.image_width, camera.image_height);
        let n = if shading { out.depth.len() } else { 0 };
        let (cx, cy) = camera.principal_point();
        Self {
            camera,
            to_camera: camera.rotation.inverse(),
            f: camera.focal_px(),
            cx,
            cy,
            out,
            normals: vec![[0.0; 3]; n],
            surface_of: vec![NO_SURFACE; n],
            shading,
        }
    }

    fn draw_mesh(&mut self, mesh: &Mesh<f64>, s: &Surface, surface_index: u32) {
        let cam: Vec<Vec3> = mesh
            .vertices
            .iter()
            .map(|&v| self.to_camera.rotate(s.transform.apply_point(v) - self.camera.position))
            .collect();
        for t in &mesh.triangles {
            let [a, b, c] = t.map(|i| cam[i as usize]);
            let mut n = (b - a).cross(c - a);
            let facing = n.dot(a);
            if mesh.closed {
                if facing >= 0.0 {
                    continue;
                }
            } else if facing > 0.0 {
                n = -n;
            }
            let normal = if self.shading {
                let w = self.camera.rotation.rotate(n).normalized();
                [w.x as f32, w.y as f32, w.z as f32]
            } else {
                [0.0; 3]
            };
            self.draw_triangle([a, b, c], s, surface_index, normal);
        }
    }

    fn draw_triangle(&mut self, tri: [Vec3; 3], s: &Surface, surface_index: u32, normal: [f32; 3]) {
        let near = self.camera.near_plane;
        if tri.iter().all(|p| p.z > near) {
            self.fill(tri, s, surface_index, normal);
            return;
        }
        if tri.iter().all(|p| p.z <= near) {
            return;
        }
        // Sutherland-Hodgman against z = near; at most 4 vertices remain.
        let mut poly: Vec<Vec3> = Vec::with_capacity(4);
        for i in 0..3 {
            let (p, q) = (tri[i], tri[(i + 1) % 3]);
            let (pin, qin) = (p.z > near, q.z > near);
            if pin {
                poly.push(p);
            }
            if pin != qin {
                let t = (near - p.z) / (q.z - p.z);
                let mut x = p.lerp(q, t);
                // Keep the clipped vertex strictly in front of the plane.
                x.z = x.z.max(near * (1.0 + 1e-12));
                poly.push(x);
            }
        }
        for k in 1..poly.len().saturating_sub(1) {
            self.fill([poly[0], poly[k], poly[k + 1]], s, surface_index, normal);
        }
    }

    fn fill(&mut self, tri: [Vec3; 3], s: &Surface, surface_index: u32, normal: [f32; 3]) {
        let (w, h) = (self.out.width as i64, self.out.height as i64);
        let sx = tri.map(|p| self.cx + self.f * p.x / p.z);
        let sy = tri.map(|p| self.cy - self.f * p.y / p.z);
        let inv_z = tri.map(|p| 1.0 / p.z);
        let area = (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sy[1] - sy[0]) * (sx[2] - sx[0]);
        if area == 0.0 || !area.is_finite() {
            return;
        }
        let min_x = sx.iter().copied().fold(f64::INFINITY, f64::min);
        let max_x = sx.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_y = sy.iter().copied().fold(f64::INFINITY, f64::min);
        let max_y = sy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Pixel i is sampled at i + 0.5.
        let x0 = ((min_x - 0.5).ceil() as i64).max(0);
        let x1 = ((max_x - 0.5).floor() as i64).min(w - 1);
        let y0 = ((min_y - 0.5).ceil() as i64).max(0);
        let y1 = ((max_y - 0.5).floor() as i64).min(h - 1);
        if x0 > x1 || y0 > y1 {
            return;
        }
        let sign = area.signum();
        let inv_area = 1.0 / area.abs();
        // Edge function for the edge opposite vertex k, scaled so that
        // inside points are >= 0 regardless of winding.
        let edge = |k: usize| {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let a = -(sy[j] - sy[i]) * sign;
            let b = (sx[j] - sx[i]) * sign;
            let c = -(a * sx[i] + b * sy[i]);
            (a, b, c)
        };
        let e = [edge(0), edge(1), edge(2)];
        for y in y0..=y1 {
            let py = y as f64 + 0.5;
            let px0 = x0 as f64 + 0.5;
            let mut wv = e.map(|(a, b, c)| a * px0 + b * py + c);
            let row = y as usize * w as usize;
            for x in x0..=x1 {
                if wv[0] >= 0.0 && wv[1] >= 0.0 && wv[2] >= 0.0 {
                    let iz = (wv[0] * inv_z[0] + wv[1] * inv_z[1] + wv[2] * inv_z[2]) * inv_area;
                    let z = (1.0 / iz) as f32;
                    let i = row + x as usize;
                    if z < self.out.depth[i] {
                        self.out.depth[i] = z;
                        self.out.instance_id[i] = s.instance_id;
                        self.out.semantic_id[i] = s.semantic_id;
                        if self.shading {
                            self.normals[i] = normal;
                            self.surface_of[i] = surface_index;
                        }
                    }
                }
                for k in 0..3 {
                    wv[k] += e[k].0;
                }
            }
        }
    }
}

/// Ray-cast reference render of the exact (untessellated) primitives.
///
/// Returns per-pixel `(instance_id, depth)` sampled at pixel centers, with
/// `depth = inf` for misses. Slow; meant for tests.
pub fn ray_cast_oracle(camera: &CameraModel, surfaces: &[Surface]) -> Vec<(u16, f64)> {
    let forward = camera.forward();
    let mut out = Vec::with_capacity(camera.image_width as usize * camera.image_height as usize);
    for y in 0..camera.image_height {
        for x in 0..camera.image_width {
            let (o, d) = camera.ray(x as f64 + 0.5, y as f64 + 0.5);
            let mut best = (0u16, f64::INFINITY);
            for s in surfaces {
                if let Some(t) = s.primitive.ray_intersect(&s.transform, o, d) {
                    let z = t * d.dot(forward);
                    if z > camera.near_plane && z < best.1 {
                        best = (s.instance_id, z);
                    }
                }
            }
            out.push(best);
        }
    }
    out
}
