//! Rendering and annotation of one frame.
//!
//! [`rasterize`] turns a [`SceneSpec`] into label buffers (and optionally
//! shaded RGB); [`annotate_frame`] derives COCO records from the scene and
//! those buffers. Pixel-level results are exact with respect to the
//! tessellated geometry, not the analytic shapes.

mod image_io;
mod raster;
mod shade;

use serde::{Deserialize, Serialize};

pub use image_io::{encode_pgm16, encode_png, write_pgm16, write_png};
pub use raster::{
    rasterize, rasterize_with, ray_cast_oracle, render_surfaces, scene_surfaces, FrameBuffers, RenderOptions, Surface,
    SEMANTIC_BACKGROUND, SEMANTIC_OBJECT, SEMANTIC_PERSON,
};
pub use shade::{albedo, hsv, post_process, AMBIENT, BACKGROUND_RGB};

use crate::coco_io::{Bbox3d, RleMask, RunBuilder, OCCLUDER_CATEGORY_ID, PERSON_CATEGORY_ID};
use crate::humanoid::NUM_KEYPOINTS;
use crate::scene::{ObjectRole, SceneSpec};
use crate::{CameraModel, Rotation, Vec3};

/// Which instances and keypoints receive annotations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelingScheme {
    /// Instances with at least one visible pixel; keypoints keep their state.
    #[default]
    VisibleOnly,
    /// As `VisibleOnly`, but occluded keypoints are reported as visible.
    VisibleAndOccluded,
    /// Every instance, even when fully hidden.
    AllObjects,
}

/// Other-instance occlusion tolerance, relative to the surface depth.
pub const DEPTH_EPSILON: f64 = 1e-4;

pub const NOT_LABELED: u8 = 0;
pub const OCCLUDED: u8 = 1;
pub const VISIBLE: u8 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct KeypointLabel {
    pub u: f64,
    pub v: f64,
    /// 0 not labeled, 1 labeled but hidden, 2 visible.
    pub state: u8,
}

/// Projects a keypoint and decides its visibility against the depth buffer.
///
/// Points behind the camera or outside the image get `(0, 0, 0)`. The pixel
/// containing the projection is compared: a nearer surface of any other
/// instance (the wall included) hides the point; its own surface hides it
/// only with self-occlusion on and a depth gap beyond `self_occlusion_distance`.
/// An empty pixel counts as visible.
pub fn classify_keypoint(
    kp_world: Vec3,
    kp_instance: u16,
    buffers: &FrameBuffers,
    camera: &CameraModel,
    self_occlusion_distance: f64,
    self_occlusion_enabled: bool,
) -> KeypointLabel {
    let hidden = KeypointLabel::default();
    let Some(p) = camera.project(kp_world) else { return hidden };
    let (w, h) = (buffers.width as f64, buffers.height as f64);
    if !(p.u >= 0.0 && p.u < w && p.v >= 0.0 && p.v < h) {
        return hidden;
    }
    let i = buffers.index(p.u as u32, p.v as u32);
    let surface = buffers.depth[i] as f64;
    let state = if surface.is_infinite() {
        VISIBLE
    } else if buffers.instance_id[i] != kp_instance || buffers.semantic_id[i] == SEMANTIC_BACKGROUND {
        if p.depth > surface + DEPTH_EPSILON * surface {
            OCCLUDED
        } else {
            VISIBLE
        }
    } else if self_occlusion_enabled && p.depth - surface > self_occlusion_distance {
        OCCLUDED
    } else {
        VISIBLE
    };
    KeypointLabel { u: p.u, v: p.v, state }
}

/// Pixel count and tight bounds `[x0, y0, x1, y1]` (inclusive) of one id.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InstancePixels {
    pub count: u64,
    pub bounds: Option<[u32; 4]>,
}

impl InstancePixels {
    /// `(x, y, w, h)`.
    pub fn bbox(&self) -> Option<[u32; 4]> {
        self.bounds.map(|[x0, y0, x1, y1]| [x0, y0, x1 - x0 + 1, y1 - y0 + 1])
    }
}

/// One pass over the instance buffer; indexed by instance id, length
/// `max_id + 1`. Entry 0 covers background and wall pixels.
pub fn instance_pixels(buffers: &FrameBuffers, max_id: u16) -> Vec<InstancePixels> {
    let mut out = vec![InstancePixels::default(); max_id as usize + 1];
    for y in 0..buffers.height {
        let row = &buffers.instance_id[buffers.index(0, y)..][..buffers.width as usize];
        for (x, &id) in row.iter().enumerate() {
            let Some(e) = out.get_mut(id as usize) else { continue };
            e.count += 1;
            let x = x as u32;
            e.bounds = Some(match e.bounds {
                None => [x, y, x, y],
                Some([x0, y0, x1, y1]) => [x0.min(x), y0.min(y), x1.max(x), y1.max(y)],
            });
        }
    }
    out
}

/// Tight `(x, y, w, h)` of the pixels carrying `instance_id`.
pub fn extract_bbox(buffers: &FrameBuffers, instance_id: u16) -> Option<[u32; 4]> {
    instance_pixels(buffers, instance_id)[instance_id as usize].bbox()
}

/// Column-major RLE of one instance. `bounds` limits the scan and must
/// contain every pixel of the instance.
pub fn instance_mask(buffers: &FrameBuffers, instance_id: u16, bounds: Option<[u32; 4]>) -> RleMask {
    let (w, h) = (buffers.width, buffers.height);
    let mut b = RunBuilder::default();
    let Some([x0, y0, x1, y1]) = bounds else {
        b.push(false, w * h);
        return b.finish(h, w);
    };
    b.push(false, x0 * h);
    for x in x0..=x1 {
        b.push(false, y0);
        for y in y0..=y1 {
            b.push(buffers.instance_id[buffers.index(x, y)] == instance_id, 1);
        }
        b.push(false, h - 1 - y1);
    }
    b.push(false, (w - 1 - x1) * h);
    b.finish(h, w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Person,
    Occluder,
}

impl Category {
    pub fn coco_id(self) -> u32 {
        match self {
            Category::Person => PERSON_CATEGORY_ID,
            Category::Occluder => OCCLUDER_CATEGORY_ID,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnotationRecord {
    pub instance_id: u16,
    pub category: Category,
    /// `(x, y, w, h)` in pixels.
    pub bbox: [u32; 4],
    pub bbox3d: Bbox3d,
    /// All zero for non-person categories.
    pub keypoints: [KeypointLabel; NUM_KEYPOINTS],
    pub num_keypoints: u32,
    /// Visible pixels.
    pub area: u64,
    pub mask: RleMask,
}

impl AnnotationRecord {
    /// Flat `(u, v, state)` list as stored in COCO.
    pub fn keypoint_values(&self) -> Vec<f64> {
        self.keypoints.iter().flat_map(|k| [k.u, k.v, k.state as f64]).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LabelOptions {
    pub scheme: LabelingScheme,
    pub self_occlusion: bool,
    pub annotate_occluders: bool,
}

/// Annotations for every included instance, humans first, in id order.
pub fn annotate_frame(scene: &SceneSpec, buffers: &FrameBuffers, options: &LabelOptions) -> Vec<AnnotationRecord> {
    let max_id = scene.instance_count() as u16;
    let pixels = instance_pixels(buffers, max_id);
    let all = options.scheme == LabelingScheme::AllObjects;
    let mut out = Vec::new();
    for h in &scene.humans {
        let id = h.instance_id as u16;
        let px = pixels[id as usize];
        if px.count == 0 && !all {
            continue;
        }
        let mut keypoints = std::array::from_fn(|k| {
            classify_keypoint(h.keypoints[k], id, buffers, &scene.camera, h.self_occlusion[k], options.self_occlusion)
        });
        if options.scheme == LabelingScheme::VisibleAndOccluded {
            for k in &mut keypoints {
                if k.state == OCCLUDED {
                    k.state = VISIBLE;
                }
            }
        }
        let vertices = h.body.iter().flat_map(|b| {
            let mesh = b.primitive.tessellate();
            let xf = b.transform;
            mesh.vertices.into_iter().map(move |v| xf.apply_point(v))
        });
        let rot = h.transform.rotation;
        let local = h.body.iter().flat_map(|b| {
            let r = match b.primitive {
                crate::geometry::Primitive::Capsule { radius, .. } => radius,
                _ => 0.0,
            };
            let (a, c) = b.endpoints;
            [a, c].into_iter().flat_map(move |p| {
                let q = rot.inverse().rotate(p - h.transform.translation);
                [q - Vec3::splat(r), q + Vec3::splat(r)]
            })
        });
        let bbox3d = oriented_box(h.transform.translation, rot, local);
        out.push(record(buffers, &scene.camera, id, Category::Person, px, keypoints, bbox3d, vertices));
    }
    if options.annotate_occluders {
        for o in scene.objects.iter().filter(|o| o.role == ObjectRole::Occluder) {
            let id = o.instance_id as u16;
            let px = pixels[id as usize];
            if px.count == 0 && !all {
                continue;
            }
            let (lo, hi) = o.primitive.local_bounds();
            let s = o.transform.scale;
            let bbox3d = oriented_box(o.transform.translation, o.transform.rotation, [lo.mul_elem(s), hi.mul_elem(s)]);
            let xf = o.transform;
            let vertices = o.primitive.tessellate().vertices.into_iter().map(move |v| xf.apply_point(v));
            let keypoints = [KeypointLabel::default(); NUM_KEYPOINTS];
            out.push(record(buffers, &scene.camera, id, Category::Occluder, px, keypoints, bbox3d, vertices));
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn record(
    buffers: &FrameBuffers,
    camera: &CameraModel,
    id: u16,
    category: Category,
    px: InstancePixels,
    keypoints: [KeypointLabel; NUM_KEYPOINTS],
    bbox3d: Bbox3d,
    vertices: impl Iterator<Item = Vec3>,
) -> AnnotationRecord {
    let bbox = px.bbox().unwrap_or_else(|| projected_bbox(camera, vertices));
    AnnotationRecord {
        instance_id: id,
        category,
        bbox,
        bbox3d,
        num_keypoints: keypoints.iter().filter(|k| k.state > 0).count() as u32,
        keypoints,
        area: px.count,
        mask: instance_mask(buffers, id, px.bounds),
    }
}

/// Integer image-clipped bounds of projected points; zero-sized when nothing
/// lands in front of the camera and inside the image.
pub fn projected_bbox(camera: &CameraModel, points: impl Iterator<Item = Vec3>) -> [u32; 4] {
    let (w, h) = (camera.image_width as f64, camera.image_height as f64);
    let (mut u0, mut v0, mut u1, mut v1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points.filter_map(|p| camera.project(p)) {
        u0 = u0.min(p.u);
        v0 = v0.min(p.v);
        u1 = u1.max(p.u);
        v1 = v1.max(p.v);
    }
    let (u0, v0) = (u0.clamp(0.0, w).floor(), v0.clamp(0.0, h).floor());
    let (u1, v1) = (u1.clamp(0.0, w).ceil(), v1.clamp(0.0, h).ceil());
    if !(u1 > u0 && v1 > v0) {
        return [0; 4];
    }
    [u0 as u32, v0 as u32, (u1 - u0) as u32, (v1 - v0) as u32]
}

/// Box around points given in the frame `(origin, rotation)`.
fn oriented_box(origin: Vec3, rotation: Rotation, local: impl IntoIterator<Item = Vec3>) -> Bbox3d {
    let mut it = local.into_iter();
    let first = it.next().unwrap_or_else(Vec3::zero);
    let (lo, hi) = it.fold((first, first), |(lo, hi), p| (lo.min_elem(p), hi.max_elem(p)));
    let c = (lo + hi) * 0.5;
    let e = hi - lo;
    let corners = std::array::from_fn(|k| {
        let sx = if k & 1 == 0 { -0.5 } else { 0.5 };
        let sy = if k & 2 == 0 { -0.5 } else { 0.5 };
        let sz = if k & 4 == 0 { -0.5 } else { 0.5 };
        (origin + rotation.rotate(c + Vec3::new(e.x * sx, e.y * sy, e.z * sz))).to_array()
    });
    Bbox3d {
        center: (origin + rotation.rotate(c)).to_array(),
        extent: e.to_array(),
        rotation: [rotation.w, rotation.x, rotation.y, rotation.z],
        corners,
    }
}
