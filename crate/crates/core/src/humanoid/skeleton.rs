use serde::{Deserialize, Serialize};

use super::HumanoidError;
use crate::Vec3;

/// COCO keypoint names in annotation order.
pub const COCO_KEYPOINTS: [&str; 17] = [
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
];

/// COCO person skeleton edges, 1-based keypoint indices.
pub const COCO_SKELETON: [[u32; 2]; 19] = [
    [16, 14],
    [14, 12],
    [17, 15],
    [15, 13],
    [12, 13],
    [6, 12],
    [7, 13],
    [6, 7],
    [6, 8],
    [7, 9],
    [8, 10],
    [9, 11],
    [2, 3],
    [1, 2],
    [1, 3],
    [2, 4],
    [3, 5],
    [4, 6],
    [5, 7],
];

pub const NUM_KEYPOINTS: usize = 17;

pub fn keypoint_index(name: &str) -> Option<usize> {
    COCO_KEYPOINTS.iter().position(|k| *k == name)
}

/// Index of the left/right counterpart of a keypoint (itself for the nose).
pub fn mirrored_keypoint(index: usize) -> usize {
    let name = COCO_KEYPOINTS[index];
    keypoint_index(&mirror_name(name)).unwrap_or(index)
}

/// Swaps a `left_` / `right_` prefix.
pub fn mirror_name(name: &str) -> String {
    if let Some(rest) = name.strip_prefix("left_") {
        format!("right_{rest}")
    } else if let Some(rest) = name.strip_prefix("right_") {
        format!("left_{rest}")
    } else {
        name.to_owned()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Joint {
    pub name: String,
    /// Parent joint name; `None` for the root.
    pub parent: Option<String>,
    /// Offset from the parent joint in the rest pose (m, before height scaling).
    pub offset: Vec3,
}

/// Topologically sorted joint hierarchy with exactly one root at index 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Joint>", into = "Vec<Joint>")]
pub struct Skeleton {
    joints: Vec<Joint>,
    parents: Vec<Option<usize>>,
    keypoints: [usize; NUM_KEYPOINTS],
    mirror: Vec<usize>,
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>) -> Result<Self, HumanoidError> {
        let index_of = |name: &str, upto: usize| joints[..upto].iter().position(|j| j.name == name);
        let mut parents = Vec::with_capacity(joints.len());
        for (i, j) in joints.iter().enumerate() {
            if index_of(&j.name, i).is_some() {
                return Err(HumanoidError::Skeleton(format!("duplicate joint `{}`", j.name)));
            }
            if !j.offset.is_finite() {
                return Err(HumanoidError::Skeleton(format!("joint `{}` has non-finite offset", j.name)));
            }
            match &j.parent {
                None if i == 0 => parents.push(None),
                None => {
                    return Err(HumanoidError::Skeleton(format!(
                        "joint `{}` is a second root; only the first joint may lack a parent",
                        j.name
                    )))
                }
                Some(p) => match index_of(p, i) {
                    Some(pi) => parents.push(Some(pi)),
                    None => {
                        return Err(HumanoidError::Skeleton(format!(
                            "joint `{}` references parent `{p}` that is not declared before it",
                            j.name
                        )))
                    }
                },
            }
        }
        if joints.is_empty() {
            return Err(HumanoidError::Skeleton("no joints".into()));
        }
        let mut keypoints = [0usize; NUM_KEYPOINTS];
        for (k, name) in COCO_KEYPOINTS.iter().enumerate() {
            keypoints[k] = index_of(name, joints.len())
                .ok_or_else(|| HumanoidError::Skeleton(format!("missing COCO keypoint joint `{name}`")))?;
        }
        let mirror = joints
            .iter()
            .enumerate()
            .map(|(i, j)| index_of(&mirror_name(&j.name), joints.len()).unwrap_or(i))
            .collect();
        Ok(Self { joints, parents, keypoints, mirror })
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn parent(&self, joint: usize) -> Option<usize> {
        self.parents[joint]
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// Joint index of each COCO keypoint.
    pub fn keypoint_joints(&self) -> &[usize; NUM_KEYPOINTS] {
        &self.keypoints
    }

    /// Left/right counterpart of each joint.
    pub fn mirror_joint(&self, joint: usize) -> usize {
        self.mirror[joint]
    }

    pub fn joint_names(&self) -> impl Iterator<Item = &str> {
        self.joints.iter().map(|j| j.name.as_str())
    }
}

impl TryFrom<Vec<Joint>> for Skeleton {
    type Error = HumanoidError;
    fn try_from(joints: Vec<Joint>) -> Result<Self, Self::Error> {
        Self::new(joints)
    }
}

impl From<Skeleton> for Vec<Joint> {
    fn from(s: Skeleton) -> Self {
        s.joints
    }
}

/// The built-in humanoid topology in its rest pose: standing, arms down,
/// facing local -Z, left side at local +X, pelvis at the origin.
pub fn builtin_skeleton() -> Skeleton {
    const J: &[(&str, Option<&str>, [f64; 3])] = &[
        ("pelvis", None, [0.0, 0.0, 0.0]),
        ("spine", Some("pelvis"), [0.0, 0.22, 0.0]),
        ("neck", Some("spine"), [0.0, 0.30, 0.0]),
        ("head", Some("neck"), [0.0, 0.14, 0.0]),
        ("head_top", Some("head"), [0.0, 0.10, 0.0]),
        ("nose", Some("head"), [0.0, 0.03, -0.11]),
        ("left_eye", Some("head"), [0.035, 0.065, -0.085]),
        ("right_eye", Some("head"), [-0.035, 0.065, -0.085]),
        ("left_ear", Some("head"), [0.08, 0.04, 0.0]),
        ("right_ear", Some("head"), [-0.08, 0.04, 0.0]),
        ("left_shoulder", Some("neck"), [0.21, -0.03, 0.0]),
        ("right_shoulder", Some("neck"), [-0.21, -0.03, 0.0]),
        ("left_elbow", Some("left_shoulder"), [0.05, -0.28, 0.0]),
        ("right_elbow", Some("right_shoulder"), [-0.05, -0.28, 0.0]),
        ("left_wrist", Some("left_elbow"), [0.01, -0.25, 0.0]),
        ("right_wrist", Some("right_elbow"), [-0.01, -0.25, 0.0]),
        ("left_hip", Some("pelvis"), [0.10, -0.06, 0.0]),
        ("right_hip", Some("pelvis"), [-0.10, -0.06, 0.0]),
        ("left_knee", Some("left_hip"), [0.0, -0.40, 0.0]),
        ("right_knee", Some("right_hip"), [0.0, -0.40, 0.0]),
        ("left_ankle", Some("left_knee"), [0.0, -0.40, 0.0]),
        ("right_ankle", Some("right_knee"), [0.0, -0.40, 0.0]),
        ("left_toe", Some("left_ankle"), [0.0, -0.05, -0.14]),
        ("right_toe", Some("right_ankle"), [0.0, -0.05, -0.14]),
    ];
    let joints = J
        .iter()
        .map(|(name, parent, o)| Joint {
            name: (*name).into(),
            parent: parent.map(Into::into),
            offset: Vec3::from_array(*o),
        })
        .collect();
    Skeleton::new(joints).expect("built-in skeleton is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn joint(name: &str, parent: Option<&str>) -> Joint {
        Joint { name: name.into(), parent: parent.map(Into::into), offset: Vec3::new(0.0, 0.1, 0.0) }
    }

    #[test]
    fn builtin_has_all_keypoints_once() {
        let s = builtin_skeleton();
        for name in COCO_KEYPOINTS {
            assert_eq!(s.joint_names().filter(|n| *n == name).count(), 1, "{name}");
        }
        for i in 1..s.len() {
            assert!(s.parent(i).unwrap() < i);
        }
    }

    #[test]
    fn builtin_rest_pose_is_mirror_symmetric() {
        let s = builtin_skeleton();
        for (i, j) in s.joints().iter().enumerate() {
            let m = &s.joints()[s.mirror_joint(i)];
            assert_eq!(m.offset, Vec3::new(-j.offset.x, j.offset.y, j.offset.z), "{}", j.name);
        }
    }

    #[test]
    fn rejects_second_root_and_forward_parent() {
        let mut joints = builtin_skeleton().joints().to_vec();
        joints.push(joint("extra", None));
        assert!(matches!(Skeleton::new(joints), Err(HumanoidError::Skeleton(m)) if m.contains("second root")));
        let joints = vec![joint("a", None), joint("b", Some("c")), joint("c", Some("a"))];
        assert!(Skeleton::new(joints).is_err());
    }

    #[test]
    fn rejects_missing_keypoint() {
        let joints: Vec<_> =
            builtin_skeleton().joints().iter().filter(|j| j.name != "left_ear").cloned().collect();
        let err = Skeleton::new(joints).unwrap_err();
        assert!(err.to_string().contains("left_ear"));
    }

    #[test]
    fn json_roundtrip_by_parent_name() {
        let s = builtin_skeleton();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains(r#""parent":"left_shoulder""#));
        let back: Skeleton = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn mirrored_keypoints() {
        assert_eq!(COCO_KEYPOINTS[mirrored_keypoint(keypoint_index("left_wrist").unwrap())], "right_wrist");
        assert_eq!(mirrored_keypoint(0), 0);
    }
}
