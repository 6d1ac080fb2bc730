use serde::{Deserialize, Serialize};

use super::{IntRange, ParamRange};
use crate::config::Violations;
use crate::geometry::PrimitiveKind;
use crate::{Aabb, Vec3};

/// One configuration block per randomizer. Every block has a default, so a
/// config may omit any of them.
///
/// The default ranges are this project's own choices for visibly diverse
/// scenes; they are not taken from any published table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomizerCatalog {
    pub background_objects: ObjectGroupConfig,
    pub occluders: ObjectGroupConfig,
    pub foreground_placement: PlacementConfig,
    /// Uniform scale applied to each human.
    pub foreground_scale: ParamRange,
    /// Degrees about world Y.
    pub foreground_rotation: ParamRange,
    pub animation: AnimationConfig,
    pub texture: TextureConfig,
    pub clothing: ClothingConfig,
    pub sun: SunConfig,
    pub lights: LightConfig,
    pub moving_light: MovingLightConfig,
    pub camera: CameraConfig,
    pub post_process: PostProcessConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementConfig {
    pub volume: Aabb,
    /// Minimum distance between placed objects (m).
    pub separation: f64,
    pub count: IntRange,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerRanges {
    pub pitch: ParamRange,
    pub yaw: ParamRange,
    pub roll: ParamRange,
}

impl EulerRanges {
    pub const FULL: EulerRanges = EulerRanges {
        pitch: ParamRange::new(0.0, 360.0),
        yaw: ParamRange::new(0.0, 360.0),
        roll: ParamRange::new(0.0, 360.0),
    };
}

/// Background objects or occluders: placement, scale and rotation randomizers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectGroupConfig {
    pub placement: PlacementConfig,
    /// Uniform scale of the unit-sized primitive (m).
    pub scale: ParamRange,
    /// Degrees, each axis independent.
    pub rotation: EulerRanges,
    pub kinds: Vec<PrimitiveKind>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnimationConfig {
    /// Restrict to these clip names; empty means the whole library.
    pub clips: Vec<String>,
}

/// Texture and hue-offset randomizers for the wall and primitive objects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextureConfig {
    pub texture_count: u32,
    /// Degrees.
    pub hue_offset: ParamRange,
}

/// Clothing texture and hue randomizer for humans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClothingConfig {
    pub texture_count: u32,
    /// Degrees, added to the asset's base clothing hue.
    pub hue_offset: ParamRange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SunConfig {
    pub intensity: ParamRange,
    /// Degrees above the horizon.
    pub elevation: ParamRange,
    /// Degrees about Y.
    pub orientation: ParamRange,
}

/// Color, intensity and on/off state of every point light.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightConfig {
    pub red: ParamRange,
    pub green: ParamRange,
    pub blue: ParamRange,
    pub intensity: ParamRange,
    pub on_probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovingLightConfig {
    pub volume: Aabb,
    pub rotation: EulerRanges,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub volume: Aabb,
    /// Degrees.
    pub rotation: EulerRanges,
    /// mm
    pub focal_length: ParamRange,
    /// Full horizontal FoV in degrees; together with the focal length this
    /// fixes the sensor size.
    pub fov: ParamRange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostProcessConfig {
    /// EV
    pub exposure: ParamRange,
    pub contrast: ParamRange,
    pub saturation: ParamRange,
    pub vignette: ParamRange,
    pub white_balance: ParamRange,
}

impl Default for RandomizerCatalog {
    fn default() -> Self {
        Self {
            background_objects: ObjectGroupConfig {
                placement: PlacementConfig {
                    volume: Aabb::new(Vec3::new(-9.0, -1.0, 13.0), Vec3::new(9.0, 5.0, 15.0)),
                    separation: 1.5,
                    count: IntRange::new(4, 14),
                },
                scale: ParamRange::new(0.5, 2.0),
                rotation: EulerRanges::FULL,
                kinds: vec![PrimitiveKind::Box, PrimitiveKind::Sphere, PrimitiveKind::Cylinder],
            },
            occluders: ObjectGroupConfig {
                placement: PlacementConfig {
                    volume: Aabb::new(Vec3::new(-4.0, -0.5, 2.5), Vec3::new(4.0, 2.5, 10.0)),
                    separation: 1.2,
                    count: IntRange::new(0, 5),
                },
                scale: ParamRange::new(0.3, 1.1),
                rotation: EulerRanges::FULL,
                kinds: vec![
                    PrimitiveKind::Box,
                    PrimitiveKind::Sphere,
                    PrimitiveKind::Cylinder,
                    PrimitiveKind::Capsule,
                ],
            },
            foreground_placement: PlacementConfig {
                volume: Aabb::new(Vec3::new(-3.5, 0.4, 3.0), Vec3::new(3.5, 1.3, 11.0)),
                separation: 0.9,
                count: IntRange::new(1, 10),
            },
            foreground_scale: ParamRange::new(0.9, 1.1),
            foreground_rotation: ParamRange::new(0.0, 360.0),
            animation: AnimationConfig::default(),
            texture: TextureConfig { texture_count: 16, hue_offset: ParamRange::new(-180.0, 180.0) },
            clothing: ClothingConfig { texture_count: 16, hue_offset: ParamRange::new(-60.0, 60.0) },
            sun: SunConfig {
                intensity: ParamRange::new(0.3, 1.2),
                elevation: ParamRange::new(15.0, 90.0),
                orientation: ParamRange::new(0.0, 360.0),
            },
            lights: LightConfig {
                red: ParamRange::new(0.5, 1.0),
                green: ParamRange::new(0.5, 1.0),
                blue: ParamRange::new(0.5, 1.0),
                intensity: ParamRange::new(4.0, 20.0),
                on_probability: 0.8,
            },
            moving_light: MovingLightConfig {
                volume: Aabb::new(Vec3::new(-5.0, 0.5, -2.0), Vec3::new(5.0, 5.0, 10.0)),
                rotation: EulerRanges::FULL,
            },
            camera: CameraConfig {
                volume: Aabb::new(Vec3::new(-1.5, 0.3, -1.5), Vec3::new(1.5, 1.8, 0.0)),
                rotation: EulerRanges {
                    pitch: ParamRange::new(-6.0, 10.0),
                    yaw: ParamRange::new(-12.0, 12.0),
                    roll: ParamRange::new(-5.0, 5.0),
                },
                focal_length: ParamRange::new(20.0, 50.0),
                fov: ParamRange::new(40.0, 70.0),
            },
            post_process: PostProcessConfig {
                exposure: ParamRange::new(-1.0, 1.0),
                contrast: ParamRange::new(0.8, 1.2),
                saturation: ParamRange::new(0.7, 1.3),
                vignette: ParamRange::new(0.0, 0.5),
                white_balance: ParamRange::new(-0.5, 0.5),
            },
        }
    }
}

impl RandomizerCatalog {
    pub(crate) fn validate(&self, path: &str, out: &mut Violations) {
        self.background_objects.validate(&format!("{path}.background_objects"), out);
        self.occluders.validate(&format!("{path}.occluders"), out);
        self.foreground_placement.validate(&format!("{path}.foreground_placement"), out);
        out.range(&format!("{path}.foreground_scale"), self.foreground_scale);
        out.positive_range(&format!("{path}.foreground_scale"), self.foreground_scale);
        out.range(&format!("{path}.foreground_rotation"), self.foreground_rotation);

        let p = format!("{path}.texture");
        out.range(&format!("{p}.hue_offset"), self.texture.hue_offset);
        if self.texture.texture_count == 0 {
            out.push(format!("{p}.texture_count"), "must be at least 1");
        }
        let p = format!("{path}.clothing");
        out.range(&format!("{p}.hue_offset"), self.clothing.hue_offset);
        if self.clothing.texture_count == 0 {
            out.push(format!("{p}.texture_count"), "must be at least 1");
        }

        let p = format!("{path}.sun");
        out.range(&format!("{p}.intensity"), self.sun.intensity);
        out.non_negative_range(&format!("{p}.intensity"), self.sun.intensity);
        out.range(&format!("{p}.elevation"), self.sun.elevation);
        out.range(&format!("{p}.orientation"), self.sun.orientation);

        let p = format!("{path}.lights");
        for (name, r) in [
            ("red", self.lights.red),
            ("green", self.lights.green),
            ("blue", self.lights.blue),
        ] {
            out.range(&format!("{p}.{name}"), r);
            if r.is_valid() && (r.min < 0.0 || r.max > 1.0) {
                out.push(format!("{p}.{name}"), "color channel must lie in [0, 1]");
            }
        }
        out.range(&format!("{p}.intensity"), self.lights.intensity);
        out.non_negative_range(&format!("{p}.intensity"), self.lights.intensity);
        out.probability(&format!("{p}.on_probability"), self.lights.on_probability);

        let p = format!("{path}.moving_light");
        out.volume(&format!("{p}.volume"), &self.moving_light.volume);
        out.euler(&format!("{p}.rotation"), &self.moving_light.rotation);

        let p = format!("{path}.camera");
        out.volume(&format!("{p}.volume"), &self.camera.volume);
        out.euler(&format!("{p}.rotation"), &self.camera.rotation);
        out.range(&format!("{p}.focal_length"), self.camera.focal_length);
        out.positive_range(&format!("{p}.focal_length"), self.camera.focal_length);
        out.range(&format!("{p}.fov"), self.camera.fov);
        if self.camera.fov.is_valid() && !(self.camera.fov.min > 0.0 && self.camera.fov.max < 180.0) {
            out.push(format!("{p}.fov"), "field of view must lie in (0, 180) degrees");
        }

        let p = format!("{path}.post_process");
        let pp = &self.post_process;
        out.range(&format!("{p}.exposure"), pp.exposure);
        out.range(&format!("{p}.contrast"), pp.contrast);
        out.non_negative_range(&format!("{p}.contrast"), pp.contrast);
        out.range(&format!("{p}.saturation"), pp.saturation);
        out.non_negative_range(&format!("{p}.saturation"), pp.saturation);
        out.range(&format!("{p}.vignette"), pp.vignette);
        if pp.vignette.is_valid() && (pp.vignette.min < 0.0 || pp.vignette.max > 1.0) {
            out.push(format!("{p}.vignette"), "vignette strength must lie in [0, 1]");
        }
        out.range(&format!("{p}.white_balance"), pp.white_balance);
    }
}

impl PlacementConfig {
    fn validate(&self, path: &str, out: &mut Violations) {
        out.volume(&format!("{path}.volume"), &self.volume);
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            out.push(format!("{path}.separation"), format!("must be > 0, got {}", self.separation));
        }
        if !self.count.is_valid() {
            out.push(
                format!("{path}.count"),
                format!("inverted range [{}, {}]", self.count.min, self.count.max),
            );
        }
    }
}

impl ObjectGroupConfig {
    fn validate(&self, path: &str, out: &mut Violations) {
        self.placement.validate(&format!("{path}.placement"), out);
        out.range(&format!("{path}.scale"), self.scale);
        out.positive_range(&format!("{path}.scale"), self.scale);
        out.euler(&format!("{path}.rotation"), &self.rotation);
        if self.kinds.is_empty() && self.placement.count.max > 0 {
            out.push(format!("{path}.kinds"), "no primitive kinds to spawn");
        }
        if self.kinds.contains(&PrimitiveKind::Quad) {
            out.push(format!("{path}.kinds"), "quads are reserved for the wall");
        }
    }
}
