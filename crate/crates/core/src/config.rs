//! Scenario configuration: the JSON document driving `generate`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::label::LabelingScheme;
use crate::randomize::{EulerRanges, ParamRange, RandomizerCatalog};
use crate::{Aabb, Vec3};

pub const SCHEMA_VERSION: u32 = 1;

/// The shipped default scenario, identical to [`ScenarioConfig::default`].
pub const DEFAULT_CONFIG_JSON: &str = include_str!("../config/default_scenario.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub frame_count: u32,
    #[serde(default = "default_image_size")]
    pub image_width: u32,
    #[serde(default = "default_image_size")]
    pub image_height: u32,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub assets: AssetConfig,
    #[serde(default)]
    pub layout: SceneLayout,
    #[serde(default)]
    pub randomizers: RandomizerCatalog,
}

fn default_image_size() -> u32 {
    640
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Dataset root; `annotations.json` is written here.
    pub dir: PathBuf,
    /// Shaded RGB frames under `images/`.
    pub emit_rgb: bool,
    /// 16-bit instance and semantic PGMs under `masks/`.
    pub emit_masks: bool,
    /// RLE segmentation inside each annotation.
    pub emit_segmentation: bool,
    pub scheme: LabelingScheme,
    pub self_occlusion: bool,
    /// Also annotate occluder primitives (category 2).
    pub annotate_occluders: bool,
    /// Apply the randomized post-process to RGB output.
    pub post_process: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("dataset"),
            emit_rgb: false,
            emit_masks: false,
            emit_segmentation: true,
            scheme: LabelingScheme::VisibleOnly,
            self_occlusion: true,
            annotate_occluders: false,
            post_process: true,
        }
    }
}

/// Where humanoid assets and pose clips come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AssetSource {
    Builtin(BuiltinTag),
    Files(Vec<PathBuf>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinTag {
    Builtin,
}

impl Default for AssetSource {
    fn default() -> Self {
        AssetSource::Builtin(BuiltinTag::Builtin)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssetConfig {
    pub humans: AssetSource,
    pub clips: AssetSource,
}

/// Static parts of the scene that randomizers act on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneLayout {
    pub wall: WallConfig,
    /// Positions of the six stationary point lights.
    pub stationary_lights: Vec<Vec3>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallConfig {
    pub center: Vec3,
    pub width: f64,
    pub height: f64,
}

impl Default for SceneLayout {
    fn default() -> Self {
        Self {
            wall: WallConfig { center: Vec3::new(0.0, 3.0, 16.0), width: 60.0, height: 30.0 },
            stationary_lights: vec![
                Vec3::new(-6.0, 4.0, 2.0),
                Vec3::new(0.0, 4.5, 2.0),
                Vec3::new(6.0, 4.0, 2.0),
                Vec3::new(-6.0, 4.0, 10.0),
                Vec3::new(0.0, 4.5, 10.0),
                Vec3::new(6.0, 4.0, 10.0),
            ],
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            frame_count: 100,
            image_width: 640,
            image_height: 640,
            output: OutputConfig::default(),
            assets: AssetConfig::default(),
            layout: SceneLayout::default(),
            randomizers: RandomizerCatalog::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config:\n{0}")]
    Invalid(Violations),
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    /// Reads a config file; relative asset paths resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for src in [&mut cfg.assets.humans, &mut cfg.assets.clips] {
            if let AssetSource::Files(files) = src {
                for f in files.iter_mut() {
                    if f.is_relative() {
                        *f = base.join(&*f);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Structural checks that need no asset loading. See
    /// [`crate::scene::validate_config`] for the complete check.
    pub fn violations(&self) -> Violations {
        let mut out = Violations::default();
        if self.schema_version != SCHEMA_VERSION {
            out.push(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            );
        }
        if self.frame_count == 0 {
            out.push("frame_count", "must be at least 1");
        }
        if self.image_width == 0 || self.image_height == 0 {
            out.push("image_width", "image dimensions must be at least 1");
        }
        if self.image_width > u16::MAX as u32 || self.image_height > u16::MAX as u32 {
            out.push("image_width", "image dimensions must fit in 16 bits");
        }
        let r = &self.randomizers;
        let max_instances = [r.foreground_placement.count.max, r.occluders.placement.count.max, r.background_objects.placement.count.max]
            .iter()
            .map(|&c| c as u64)
            .sum::<u64>();
        if max_instances > u16::MAX as u64 {
            out.push("randomizers", format!("up to {max_instances} instances per frame; at most 65535 are supported"));
        }
        let wall = &self.layout.wall;
        if !(wall.width > 0.0 && wall.height > 0.0) {
            out.push("layout.wall", "wall width and height must be > 0");
        }
        if !wall.center.is_finite() {
            out.push("layout.wall.center", "must be finite");
        }
        if self.layout.stationary_lights.len() != 6 {
            out.push(
                "layout.stationary_lights",
                format!("expected 6 stationary lights, got {}", self.layout.stationary_lights.len()),
            );
        }
        for (i, p) in self.layout.stationary_lights.iter().enumerate() {
            if !p.is_finite() {
                out.push(format!("layout.stationary_lights[{i}]"), "must be finite");
            }
        }
        for (name, src) in [("assets.humans", &self.assets.humans), ("assets.clips", &self.assets.clips)] {
            if let AssetSource::Files(f) = src {
                if f.is_empty() {
                    out.push(name, "empty file list");
                }
            }
        }
        self.randomizers.validate("randomizers", &mut out);
        out
    }
}

/// One failed check, addressed by its dotted field path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

/// Every violation found, in field order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Violations(pub Vec<Violation>);

impl Violations {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Violation> {
        self.0.iter()
    }

    pub fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation { path: path.into(), message: message.into() });
    }

    pub(crate) fn range(&mut self, path: &str, r: ParamRange) {
        if !r.is_valid() {
            self.push(path, format!("invalid range [{}, {}]", r.min, r.max));
        }
    }

    pub(crate) fn positive_range(&mut self, path: &str, r: ParamRange) {
        if r.is_valid() && r.min <= 0.0 {
            self.push(path, format!("values must be > 0, got min {}", r.min));
        }
    }

    pub(crate) fn non_negative_range(&mut self, path: &str, r: ParamRange) {
        if r.is_valid() && r.min < 0.0 {
            self.push(path, format!("values must be >= 0, got min {}", r.min));
        }
    }

    pub(crate) fn probability(&mut self, path: &str, p: f64) {
        if !(0.0..=1.0).contains(&p) {
            self.push(path, format!("probability must lie in [0, 1], got {p}"));
        }
    }

    pub(crate) fn volume(&mut self, path: &str, v: &Aabb) {
        if !(v.min.is_finite() && v.max.is_finite()) {
            self.push(path, "volume corners must be finite");
        } else if v.min.x > v.max.x || v.min.y > v.max.y || v.min.z > v.max.z {
            self.push(path, "volume min exceeds max");
        }
    }

    pub(crate) fn euler(&mut self, path: &str, e: &EulerRanges) {
        self.range(&format!("{path}.pitch"), e.pitch);
        self.range(&format!("{path}.yaw"), e.yaw);
        self.range(&format!("{path}.roll"), e.roll);
    }
}

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.0 {
            writeln!(f, "  {}: {}", v.path, v.message)?;
        }
        Ok(())
    }
}
