//! Per-frame scene assembly.
//!
//! [`SceneBuilder::build_frame`] applies the randomizers in a fixed order,
//! each drawing from its own stream:
//!
//! 1. background placement, then background scale and rotation
//! 2. occluder placement, scale and rotation
//! 3. foreground placement, scale, Y rotation
//! 4. animation
//! 5. textures and hue offsets (wall, objects), then clothing
//! 6. sun
//! 7. point-light color, intensity and on/off
//! 8. moving-light position and rotation
//! 9. camera
//! 10. post-process
//!
//! Because every randomizer owns its stream, frames are independent of each
//! other and of the order in which they are generated.

use serde::Serialize;

use crate::config::{AssetSource, ConfigError, ScenarioConfig, Violations};
use crate::geometry::{sensor_from_fov, PrimitiveKind};
use crate::humanoid::{
    body_primitives, builtin_assets, builtin_pose_library, forward_kinematics, load_asset, load_clip, BodyPrimitive,
    HumanAsset, Pose, PoseClip, NUM_KEYPOINTS,
};
use crate::randomize::{
    bernoulli, poisson_disk, sample_in_volume, sample_int, sample_pose_reference, sample_uniform,
    EulerRanges, ObjectGroupConfig, RngStream,
};
use crate::{CameraModel, Primitive, Rotation, Transform, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LightKind {
    Directional,
    Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Light {
    pub kind: LightKind,
    /// Point lights only.
    pub position: Vec3,
    /// Directional lights only: direction the light travels (unit).
    pub direction: Vec3,
    pub color: [f64; 3],
    pub intensity: f64,
    pub enabled: bool,
}

/// Post-process parameters; [`PostParams::NEUTRAL`] leaves an image unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PostParams {
    /// EV offset; pixels scale by `2^exposure`.
    pub exposure: f64,
    /// Gain about mid-gray 0.5.
    pub contrast: f64,
    /// 0 is grayscale, 1 unchanged.
    pub saturation: f64,
    /// Corner darkening in `[0, 1]`.
    pub vignette: f64,
    /// Warm (+) / cool (-) channel gain offset.
    pub white_balance: f64,
}

impl PostParams {
    pub const NEUTRAL: PostParams =
        PostParams { exposure: 0.0, contrast: 1.0, saturation: 1.0, vignette: 0.0, white_balance: 0.0 };
}

impl Default for PostParams {
    fn default() -> Self {
        Self::NEUTRAL
    }
}

/// Surface appearance: procedural texture index plus a hue rotation in degrees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Material {
    pub texture_id: u32,
    pub hue: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Wall {
    pub primitive: Primitive,
    pub transform: Transform,
    pub material: Material,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HumanInstance {
    pub instance_id: u32,
    /// Index into [`SceneAssets::humans`].
    pub asset: usize,
    pub clip: usize,
    pub clip_frame: usize,
    pub pose: Pose,
    /// Root transform: translation, Y rotation, uniform scale.
    pub transform: Transform,
    pub material: Material,
    /// World-space COCO keypoints of the posed body.
    pub keypoints: [Vec3; NUM_KEYPOINTS],
    pub body: Vec<BodyPrimitive>,
    /// Per keypoint, m.
    pub self_occlusion: [f64; NUM_KEYPOINTS],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectRole {
    Background,
    Occluder,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ObjectInstance {
    pub instance_id: u32,
    pub role: ObjectRole,
    pub primitive: Primitive,
    pub transform: Transform,
    pub material: Material,
}

/// One frame's fully resolved world.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SceneSpec {
    pub frame_index: u64,
    pub camera: CameraModel,
    /// The sun first, then the moving point light, then the six stationary ones.
    pub lights: Vec<Light>,
    pub wall: Wall,
    pub humans: Vec<HumanInstance>,
    pub objects: Vec<ObjectInstance>,
    pub post: PostParams,
}

impl SceneSpec {
    /// Humans get ids `1..=n`, then occluders, then background objects.
    pub fn instance_count(&self) -> usize {
        self.humans.len() + self.objects.len()
    }
}

/// Humanoid assets and their pose clips, retargeted per asset.
#[derive(Clone, Debug)]
pub struct SceneAssets {
    pub humans: Vec<HumanAsset>,
    /// `clips[asset][clip]`; clip order is the same for every asset.
    pub clips: Vec<Vec<PoseClip>>,
}

impl SceneAssets {
    pub fn builtin() -> Self {
        Self::from_parts(builtin_assets(), builtin_pose_library()).expect("built-in clips fit built-in assets")
    }

    pub fn from_parts(humans: Vec<HumanAsset>, clips: Vec<PoseClip>) -> Result<Self, String> {
        let mut table = Vec::with_capacity(humans.len());
        for h in &humans {
            let row = clips
                .iter()
                .map(|c| c.retarget(h.skeleton()).map_err(|e| format!("asset `{}`: {e}", h.name)))
                .collect::<Result<Vec<_>, _>>()?;
            table.push(row);
        }
        Ok(Self { humans, clips: table })
    }

    pub fn clip_names(&self) -> Vec<&str> {
        self.clips.first().map(|r| r.iter().map(|c| c.name.as_str()).collect()).unwrap_or_default()
    }
}

/// Checks a config, including loading every asset and clip file. Returns all
/// violations found, or the loaded assets.
pub fn validate_config(config: &ScenarioConfig) -> Result<SceneAssets, Violations> {
    let mut out = config.violations();
    let humans = load_list(&config.assets.humans, "assets.humans", &mut out, builtin_assets, load_asset);
    let clips = load_list(&config.assets.clips, "assets.clips", &mut out, builtin_pose_library, load_clip);
    if humans.as_ref().is_some_and(Vec::is_empty) {
        out.push("assets.humans", "no humanoid assets");
    }
    if clips.as_ref().is_some_and(Vec::is_empty) {
        out.push("assets.clips", "pose library is empty");
    }
    let r = &config.randomizers;
    if let Some(clips) = &clips {
        for (i, name) in r.animation.clips.iter().enumerate() {
            if !clips.iter().any(|c| &c.name == name) {
                out.push(format!("randomizers.animation.clips[{i}]"), format!("no clip named `{name}`"));
            }
        }
    }
    let assets = match (humans, clips) {
        (Some(h), Some(c)) if !h.is_empty() && !c.is_empty() => match SceneAssets::from_parts(h, c) {
            Ok(a) => Some(a),
            Err(e) => {
                out.push("assets.clips", e);
                None
            }
        },
        _ => None,
    };
    match assets {
        Some(a) if out.is_empty() => Ok(a),
        _ => Err(out),
    }
}

fn load_list<T, E: std::fmt::Display>(
    src: &AssetSource,
    path: &str,
    out: &mut Violations,
    builtin: impl Fn() -> Vec<T>,
    load: impl Fn(&std::path::Path) -> Result<T, E>,
) -> Option<Vec<T>> {
    match src {
        AssetSource::Builtin(_) => Some(builtin()),
        AssetSource::Files(files) => {
            let mut items = Vec::new();
            let mut ok = true;
            for (i, f) in files.iter().enumerate() {
                match load(f) {
                    Ok(x) => items.push(x),
                    Err(e) => {
                        ok = false;
                        out.push(format!("{path}[{i}]"), e.to_string());
                    }
                }
            }
            ok.then_some(items)
        }
    }
}

/// Stream ids, one per randomizer.
mod ids {
    pub const BACKGROUND_PLACEMENT: &str = "background_placement";
    pub const BACKGROUND_SCALE: &str = "background_scale";
    pub const BACKGROUND_ROTATION: &str = "background_rotation";
    pub const OCCLUDER_PLACEMENT: &str = "occluder_placement";
    pub const OCCLUDER_SCALE: &str = "occluder_scale";
    pub const OCCLUDER_ROTATION: &str = "occluder_rotation";
    pub const FOREGROUND_PLACEMENT: &str = "foreground_placement";
    pub const FOREGROUND_SCALE: &str = "foreground_scale";
    pub const FOREGROUND_ROTATION: &str = "foreground_rotation";
    pub const ANIMATION: &str = "animation";
    pub const TEXTURE: &str = "texture";
    pub const CLOTHING: &str = "clothing";
    pub const SUN: &str = "sun";
    pub const LIGHTS: &str = "lights";
    pub const MOVING_LIGHT: &str = "moving_light";
    pub const CAMERA: &str = "camera";
    pub const POST_PROCESS: &str = "post_process";
}

/// A validated config with its assets, ready to produce frames.
#[derive(Clone, Debug)]
pub struct SceneBuilder {
    config: ScenarioConfig,
    assets: SceneAssets,
    /// Clip indices the animation randomizer may choose from.
    clip_pool: Vec<usize>,
}

struct Placed {
    role: ObjectRole,
    position: Vec3,
    kind: PrimitiveKind,
    scale: f64,
    rotation: Rotation,
}

impl SceneBuilder {
    pub fn new(config: ScenarioConfig) -> Result<Self, ConfigError> {
        let assets = validate_config(&config).map_err(ConfigError::Invalid)?;
        Ok(Self::with_assets(config, assets))
    }

    /// Uses already loaded assets; the config is assumed valid.
    pub fn with_assets(config: ScenarioConfig, assets: SceneAssets) -> Self {
        let names = assets.clip_names();
        let wanted = &config.randomizers.animation.clips;
        let clip_pool = (0..names.len()).filter(|&i| wanted.is_empty() || wanted.iter().any(|w| w == names[i])).collect();
        Self { config, assets, clip_pool }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn assets(&self) -> &SceneAssets {
        &self.assets
    }

    pub fn asset_of(&self, human: &HumanInstance) -> &HumanAsset {
        &self.assets.humans[human.asset]
    }

    pub fn build_frame(&self, master_seed: u64, frame_index: u64) -> SceneSpec {
        let cfg = &self.config;
        let r = &cfg.randomizers;
        let stream = |id: &str| RngStream::new(master_seed, frame_index, id);

        let background = place_group(
            &r.background_objects,
            ObjectRole::Background,
            [stream(ids::BACKGROUND_PLACEMENT), stream(ids::BACKGROUND_SCALE), stream(ids::BACKGROUND_ROTATION)],
        );
        let occluders = place_group(
            &r.occluders,
            ObjectRole::Occluder,
            [stream(ids::OCCLUDER_PLACEMENT), stream(ids::OCCLUDER_SCALE), stream(ids::OCCLUDER_ROTATION)],
        );

        let mut s = stream(ids::FOREGROUND_PLACEMENT);
        let fp = &r.foreground_placement;
        let count = sample_int(fp.count, &mut s) as usize;
        let roots = poisson_disk(&fp.volume, fp.separation, count, &mut s);
        let asset_choice: Vec<usize> = roots.iter().map(|_| s.index(self.assets.humans.len())).collect();
        let mut s = stream(ids::FOREGROUND_SCALE);
        let scales: Vec<f64> = roots.iter().map(|_| sample_uniform(r.foreground_scale, &mut s)).collect();
        let mut s = stream(ids::FOREGROUND_ROTATION);
        let yaws: Vec<f64> = roots.iter().map(|_| sample_uniform(r.foreground_rotation, &mut s)).collect();

        let mut s = stream(ids::ANIMATION);
        let frames_per_clip: Vec<usize> = self.clip_pool.iter().map(|&c| self.assets.clips[0][c].frames.len()).collect();
        let poses: Vec<(usize, usize)> = roots
            .iter()
            .map(|_| {
                let (k, f) = sample_pose_reference(&frames_per_clip, &mut s).expect("validated pose library");
                (self.clip_pool[k], f)
            })
            .collect();

        let mut s = stream(ids::TEXTURE);
        let material = |s: &mut RngStream| Material {
            texture_id: s.index(r.texture.texture_count as usize) as u32,
            hue: sample_uniform(r.texture.hue_offset, s),
        };
        let wall_material = material(&mut s);
        let object_materials: Vec<Material> =
            background.iter().chain(&occluders).map(|_| material(&mut s)).collect();
        let mut s = stream(ids::CLOTHING);
        let clothing: Vec<Material> = asset_choice
            .iter()
            .map(|&a| Material {
                texture_id: s.index(r.clothing.texture_count as usize) as u32,
                hue: self.assets.humans[a].clothing_hue + sample_uniform(r.clothing.hue_offset, &mut s),
            })
            .collect();

        let mut s = stream(ids::SUN);
        let intensity = sample_uniform(r.sun.intensity, &mut s);
        let el = sample_uniform(r.sun.elevation, &mut s).to_radians();
        let az = sample_uniform(r.sun.orientation, &mut s).to_radians();
        let toward_sun = Vec3::new(el.cos() * az.sin(), el.sin(), el.cos() * az.cos());
        let mut lights = vec![Light {
            kind: LightKind::Directional,
            position: Vec3::zero(),
            direction: -toward_sun,
            color: [1.0; 3],
            intensity,
            enabled: true,
        }];

        let mut s = stream(ids::LIGHTS);
        let lc = &r.lights;
        let point_positions = std::iter::once(Vec3::zero()).chain(cfg.layout.stationary_lights.iter().copied());
        for position in point_positions {
            let color = [
                sample_uniform(lc.red, &mut s),
                sample_uniform(lc.green, &mut s),
                sample_uniform(lc.blue, &mut s),
            ];
            let intensity = sample_uniform(lc.intensity, &mut s);
            let enabled = bernoulli(lc.on_probability, &mut s);
            lights.push(Light { kind: LightKind::Point, position, direction: Vec3::zero(), color, intensity, enabled });
        }
        let mut s = stream(ids::MOVING_LIGHT);
        lights[1].position = sample_in_volume(&r.moving_light.volume, &mut s);
        lights[1].direction = sample_euler(&r.moving_light.rotation, &mut s).rotate(Vec3::unit_z());

        let mut s = stream(ids::CAMERA);
        let cc = &r.camera;
        let position = sample_in_volume(&cc.volume, &mut s);
        let rotation = sample_euler(&cc.rotation, &mut s);
        let focal = sample_uniform(cc.focal_length, &mut s);
        let fov = sample_uniform(cc.fov, &mut s);
        let sensor = sensor_from_fov(fov, focal).expect("validated camera ranges");
        let camera = CameraModel::new(position, rotation, focal, sensor, cfg.image_width, cfg.image_height)
            .expect("validated camera");

        let mut s = stream(ids::POST_PROCESS);
        let pc = &r.post_process;
        let post = PostParams {
            exposure: sample_uniform(pc.exposure, &mut s),
            contrast: sample_uniform(pc.contrast, &mut s),
            saturation: sample_uniform(pc.saturation, &mut s),
            vignette: sample_uniform(pc.vignette, &mut s),
            white_balance: sample_uniform(pc.white_balance, &mut s),
        };

        let humans: Vec<HumanInstance> = roots
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let (clip, clip_frame) = poses[i];
                let a = asset_choice[i];
                let asset = &self.assets.humans[a];
                let pose = self.assets.clips[a][clip].frames[clip_frame].clone();
                let transform = Transform {
                    translation: p,
                    rotation: Rotation::about_y(yaws[i].to_radians()),
                    scale: Vec3::splat(scales[i]),
                };
                // Clips were retargeted to this asset when loaded.
                let keypoints = forward_kinematics(asset, &pose, &transform).expect("retargeted pose");
                let body = body_primitives(asset, &pose, &transform).expect("retargeted pose");
                HumanInstance {
                    instance_id: i as u32 + 1,
                    asset: a,
                    clip,
                    clip_frame,
                    pose,
                    transform,
                    material: clothing[i],
                    keypoints,
                    body,
                    self_occlusion: *asset.self_occlusion(),
                }
            })
            .collect();

        // Materials were drawn background-first; ids go occluders-first.
        let (bg_mats, occ_mats) = object_materials.split_at(background.len());
        let objects = occluders
            .iter()
            .zip(occ_mats)
            .chain(background.iter().zip(bg_mats))
            .enumerate()
            .map(|(k, (p, m))| ObjectInstance {
                instance_id: (humans.len() + k) as u32 + 1,
                role: p.role,
                primitive: unit_primitive(p.kind, p.scale),
                transform: Transform::rigid(p.position, p.rotation),
                material: *m,
            })
            .collect();

        let wall = &cfg.layout.wall;
        SceneSpec {
            frame_index,
            camera,
            lights,
            wall: Wall {
                primitive: Primitive::Quad { width: wall.width, height: wall.height },
                transform: Transform::from_translation(wall.center),
                material: wall_material,
            },
            humans,
            objects,
            post,
        }
    }
}

fn sample_euler(e: &EulerRanges, s: &mut RngStream) -> Rotation {
    let pitch = sample_uniform(e.pitch, s);
    let yaw = sample_uniform(e.yaw, s);
    let roll = sample_uniform(e.roll, s);
    Rotation::from_euler_deg(pitch, yaw, roll)
}

fn place_group(group: &ObjectGroupConfig, role: ObjectRole, streams: [RngStream; 3]) -> Vec<Placed> {
    let [mut place, mut scale, mut rot] = streams;
    let count = sample_int(group.placement.count, &mut place) as usize;
    if count == 0 || group.kinds.is_empty() {
        return Vec::new();
    }
    let points = poisson_disk(&group.placement.volume, group.placement.separation, count, &mut place);
    let kinds: Vec<PrimitiveKind> = points.iter().map(|_| group.kinds[place.index(group.kinds.len())]).collect();
    let scales: Vec<f64> = points.iter().map(|_| sample_uniform(group.scale, &mut scale)).collect();
    points
        .into_iter()
        .zip(kinds)
        .zip(scales)
        .map(|((position, kind), scale)| Placed { role, position, kind, scale, rotation: sample_euler(&group.rotation, &mut rot) })
        .collect()
}

/// A primitive fitting a cube of edge `size`.
pub fn unit_primitive(kind: PrimitiveKind, size: f64) -> Primitive {
    match kind {
        PrimitiveKind::Box => Primitive::Box { size: Vec3::splat(size) },
        PrimitiveKind::Sphere => Primitive::Sphere { radius: 0.5 * size },
        PrimitiveKind::Cylinder => Primitive::Cylinder { radius: 0.5 * size, height: size },
        PrimitiveKind::Capsule => Primitive::Capsule { radius: 0.25 * size, half_length: 0.25 * size },
        PrimitiveKind::Quad => Primitive::Quad { width: size, height: size },
    }
}
