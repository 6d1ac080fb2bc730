use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{builtin_skeleton, HumanoidError, Skeleton, COCO_KEYPOINTS, NUM_KEYPOINTS};

/// Self-occlusion distance (m) used for every keypoint unless overridden.
pub const DEFAULT_SELF_OCCLUSION: f64 = 0.15;

/// A capsule spanning two joints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoneCapsule {
    pub from: String,
    pub to: String,
    /// m, before height scaling.
    pub radius: f64,
}

/// A humanoid: skeleton, capsule body and labeling thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AssetFile", into = "AssetFile")]
pub struct HumanAsset {
    pub name: String,
    skeleton: Skeleton,
    bones: Vec<BoneCapsule>,
    bone_joints: Vec<(usize, usize)>,
    /// Per COCO keypoint, m.
    self_occlusion: [f64; NUM_KEYPOINTS],
    /// Degrees.
    pub clothing_hue: f64,
    height_scale: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssetFile {
    name: String,
    skeleton: Skeleton,
    bones: Vec<BoneCapsule>,
    #[serde(default = "default_self_occlusion")]
    self_occlusion_default: f64,
    #[serde(default)]
    self_occlusion: BTreeMap<String, f64>,
    #[serde(default)]
    clothing_hue: f64,
    #[serde(default = "one")]
    height_scale: f64,
}

fn default_self_occlusion() -> f64 {
    DEFAULT_SELF_OCCLUSION
}

fn one() -> f64 {
    1.0
}

impl TryFrom<AssetFile> for HumanAsset {
    type Error = HumanoidError;

    fn try_from(f: AssetFile) -> Result<Self, Self::Error> {
        let mut thresholds = [f.self_occlusion_default; NUM_KEYPOINTS];
        for (name, d) in &f.self_occlusion {
            let k = super::keypoint_index(name).ok_or_else(|| {
                HumanoidError::Asset(format!("self_occlusion names unknown keypoint `{name}`"))
            })?;
            thresholds[k] = *d;
        }
        HumanAsset::new(f.name, f.skeleton, f.bones, thresholds, f.clothing_hue, f.height_scale)
    }
}

impl From<HumanAsset> for AssetFile {
    fn from(a: HumanAsset) -> Self {
        AssetFile {
            name: a.name,
            skeleton: a.skeleton,
            bones: a.bones,
            self_occlusion_default: DEFAULT_SELF_OCCLUSION,
            self_occlusion: COCO_KEYPOINTS
                .iter()
                .zip(a.self_occlusion)
                .map(|(n, d)| ((*n).to_owned(), d))
                .collect(),
            clothing_hue: a.clothing_hue,
            height_scale: a.height_scale,
        }
    }
}

impl HumanAsset {
    pub fn new(
        name: String,
        skeleton: Skeleton,
        bones: Vec<BoneCapsule>,
        self_occlusion: [f64; NUM_KEYPOINTS],
        clothing_hue: f64,
        height_scale: f64,
    ) -> Result<Self, HumanoidError> {
        let mut bone_joints = Vec::with_capacity(bones.len());
        for b in &bones {
            let lookup = |n: &str| {
                skeleton.joint_index(n).ok_or_else(|| {
                    HumanoidError::Asset(format!("bone {}-{} references unknown joint `{n}`", b.from, b.to))
                })
            };
            let pair = (lookup(&b.from)?, lookup(&b.to)?);
            if pair.0 == pair.1 {
                return Err(HumanoidError::Asset(format!("bone {}-{} has identical endpoints", b.from, b.to)));
            }
            if !(b.radius > 0.0 && b.radius.is_finite()) {
                return Err(HumanoidError::Asset(format!(
                    "bone {}-{} radius must be > 0, got {}",
                    b.from, b.to, b.radius
                )));
            }
            bone_joints.push(pair);
        }
        if bones.is_empty() {
            return Err(HumanoidError::Asset(format!("asset `{name}` has no bones")));
        }
        if let Some(k) = self_occlusion.iter().position(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(HumanoidError::Asset(format!(
                "self-occlusion distance for `{}` must be >= 0, got {}",
                COCO_KEYPOINTS[k], self_occlusion[k]
            )));
        }
        if !(height_scale > 0.0 && height_scale.is_finite()) {
            return Err(HumanoidError::Asset(format!("height_scale must be > 0, got {height_scale}")));
        }
        if !clothing_hue.is_finite() {
            return Err(HumanoidError::Asset("clothing_hue must be finite".into()));
        }
        Ok(Self { name, skeleton, bones, bone_joints, self_occlusion, clothing_hue, height_scale })
    }

    pub fn from_json(text: &str) -> Result<Self, HumanoidError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            // Validation failures surface as custom serde errors at the root.
            HumanoidError::Parse(format!("{}: {}", e.path(), e.inner()))
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("asset serializes")
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn bones(&self) -> &[BoneCapsule] {
        &self.bones
    }

    /// Joint indices of each bone's endpoints.
    pub fn bone_joints(&self) -> &[(usize, usize)] {
        &self.bone_joints
    }

    pub fn self_occlusion(&self) -> &[f64; NUM_KEYPOINTS] {
        &self.self_occlusion
    }

    pub fn height_scale(&self) -> f64 {
        self.height_scale
    }

    pub fn with_height_scale(mut self, s: f64) -> Result<Self, HumanoidError> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(HumanoidError::Asset(format!("height_scale must be > 0, got {s}")));
        }
        self.height_scale = s;
        Ok(self)
    }

    pub fn with_self_occlusion(mut self, d: [f64; NUM_KEYPOINTS]) -> Result<Self, HumanoidError> {
        if let Some(k) = d.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(HumanoidError::Asset(format!(
                "self-occlusion distance for `{}` must be >= 0, got {}",
                COCO_KEYPOINTS[k], d[k]
            )));
        }
        self.self_occlusion = d;
        Ok(self)
    }
}

const BUILTIN_BONES: &[(&str, &str, f64)] = &[
    ("pelvis", "spine", 0.13),
    ("spine", "neck", 0.14),
    ("neck", "head", 0.05),
    ("head", "head_top", 0.095),
    ("left_shoulder", "right_shoulder", 0.06),
    ("left_hip", "right_hip", 0.09),
    ("left_shoulder", "left_elbow", 0.05),
    ("right_shoulder", "right_elbow", 0.05),
    ("left_elbow", "left_wrist", 0.04),
    ("right_elbow", "right_wrist", 0.04),
    ("left_hip", "left_knee", 0.075),
    ("right_hip", "right_knee", 0.075),
    ("left_knee", "left_ankle", 0.055),
    ("right_knee", "right_ankle", 0.055),
    ("left_ankle", "left_toe", 0.04),
    ("right_ankle", "right_toe", 0.04),
];

/// Four built-in humans, roughly 1.55 m to 1.90 m tall, with different
/// girths and clothing hues.
pub fn builtin_assets() -> Vec<HumanAsset> {
    const VARIANTS: [(&str, f64, f64, f64); 4] = [
        ("builtin_small", 0.88, 0.95, 20.0),
        ("builtin_medium", 0.95, 1.06, 140.0),
        ("builtin_tall", 1.01, 0.98, 220.0),
        ("builtin_xtall", 1.08, 1.02, 300.0),
    ];
    VARIANTS
        .iter()
        .map(|&(name, height, girth, hue)| {
            let bones = BUILTIN_BONES
                .iter()
                .map(|&(a, b, r)| BoneCapsule { from: a.into(), to: b.into(), radius: r * girth })
                .collect();
            HumanAsset::new(
                name.into(),
                builtin_skeleton(),
                bones,
                [DEFAULT_SELF_OCCLUSION; NUM_KEYPOINTS],
                hue,
                height,
            )
            .expect("built-in asset is valid")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_variants_span_heights() {
        let assets = builtin_assets();
        assert_eq!(assets.len(), 4);
        // Standing height: ankle bottom to the top of the head capsule.
        for a in &assets {
            let sk = a.skeleton();
            let up = |from: usize| {
                let mut y = 0.0;
                let mut j = Some(from);
                while let Some(i) = j {
                    y += sk.joints()[i].offset.y;
                    j = sk.parent(i);
                }
                y
            };
            let head_r = a.bones()[3].radius;
            let foot_r = a.bones()[14].radius;
            let top = up(sk.joint_index("head_top").unwrap()) + head_r * 1.0;
            let bottom = up(sk.joint_index("left_ankle").unwrap()) - foot_r;
            let h = (top - bottom) * a.height_scale();
            assert!((1.5..=1.95).contains(&h), "{}: {h}", a.name);
        }
    }

    #[test]
    fn json_roundtrip() {
        for a in builtin_assets() {
            let back = HumanAsset::from_json(&a.to_json_pretty()).unwrap();
            assert_eq!(back, a);
        }
    }

    #[test]
    fn json_defaults_and_overrides() {
        let a = &builtin_assets()[0];
        let mut v: serde_json::Value = serde_json::from_str(&a.to_json_pretty()).unwrap();
        let obj = v.as_object_mut().unwrap();
        obj.remove("height_scale");
        obj.insert("self_occlusion".into(), serde_json::json!({"nose": 0.3}));
        let b = HumanAsset::from_json(&v.to_string()).unwrap();
        assert_eq!(b.height_scale(), 1.0);
        assert_eq!(b.self_occlusion()[0], 0.3);
        assert_eq!(b.self_occlusion()[1], DEFAULT_SELF_OCCLUSION);
    }

    #[test]
    fn rejects_bad_bones() {
        let sk = builtin_skeleton();
        let th = [DEFAULT_SELF_OCCLUSION; NUM_KEYPOINTS];
        let bad_joint = vec![BoneCapsule { from: "pelvis".into(), to: "tail".into(), radius: 0.1 }];
        let err = HumanAsset::new("x".into(), sk.clone(), bad_joint, th, 0.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("tail"));
        let bad_radius = vec![BoneCapsule { from: "pelvis".into(), to: "spine".into(), radius: 0.0 }];
        assert!(HumanAsset::new("x".into(), sk.clone(), bad_radius, th, 0.0, 1.0).is_err());
        let ok = vec![BoneCapsule { from: "pelvis".into(), to: "spine".into(), radius: 0.1 }];
        let mut neg = th;
        neg[4] = -0.1;
        let err = HumanAsset::new("x".into(), sk, ok, neg, 0.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("right_ear"));
    }

    #[test]
    fn parse_error_has_path() {
        let err = HumanAsset::from_json(r#"{"name":"x","skeleton":[],"bones":[{"from":"a"}]}"#).unwrap_err();
        assert!(matches!(err, HumanoidError::Parse(_)), "{err}");
    }
}
