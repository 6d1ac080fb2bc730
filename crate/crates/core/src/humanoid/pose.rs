use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{builtin_skeleton, HumanoidError, Skeleton};
use crate::{Rotation, Vec3};

/// Local joint rotations plus a root translation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub rotations: Vec<Rotation>,
    #[serde(default)]
    pub root_translation: Vec3,
}

impl Pose {
    pub fn identity(joint_count: usize) -> Self {
        Self { rotations: vec![Rotation::identity(); joint_count], root_translation: Vec3::zero() }
    }

    /// Pose reflected through the sagittal (YZ) plane: left and right joints
    /// trade rotations, each conjugated by the reflection.
    pub fn mirrored(&self, skeleton: &Skeleton) -> Self {
        let rotations = (0..self.rotations.len())
            .map(|j| self.rotations[skeleton.mirror_joint(j)].mirrored_x())
            .collect();
        let t = self.root_translation;
        Self { rotations, root_translation: Vec3::new(-t.x, t.y, t.z) }
    }

    /// Sets the local rotation of a named joint. Panics on unknown names,
    /// which only happens for programming errors in built-in clips.
    fn set(&mut self, skeleton: &Skeleton, joint: &str, rotation: Rotation) -> &mut Self {
        let i = skeleton.joint_index(joint).unwrap_or_else(|| panic!("unknown joint {joint}"));
        self.rotations[i] = rotation;
        self
    }
}

/// A named sequence of poses over a fixed joint list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseClip {
    pub name: String,
    pub fps: f64,
    /// Joint names the rotations refer to, in order.
    pub joints: Vec<String>,
    pub frames: Vec<Pose>,
}

impl PoseClip {
    pub fn validate(&self) -> Result<(), HumanoidError> {
        if self.frames.is_empty() {
            return Err(HumanoidError::Clip(format!("clip `{}` has no frames", self.name)));
        }
        if !(self.fps > 0.0) {
            return Err(HumanoidError::Clip(format!("clip `{}` has fps {}", self.name, self.fps)));
        }
        for (i, f) in self.frames.iter().enumerate() {
            if f.rotations.len() != self.joints.len() {
                return Err(HumanoidError::Clip(format!(
                    "clip `{}` frame {i} has {} rotations for {} joints",
                    self.name,
                    f.rotations.len(),
                    self.joints.len()
                )));
            }
        }
        Ok(())
    }

    /// Whether this clip drives exactly the joints of `skeleton`, in order.
    pub fn matches(&self, skeleton: &Skeleton) -> bool {
        self.joints.len() == skeleton.len() && self.joints.iter().map(String::as_str).eq(skeleton.joint_names())
    }

    /// Reorders the clip onto `skeleton`'s joints by name. Skeleton joints the
    /// clip does not drive keep the identity rotation.
    pub fn retarget(&self, skeleton: &Skeleton) -> Result<Self, HumanoidError> {
        if self.matches(skeleton) {
            return Ok(self.clone());
        }
        let mut map = Vec::with_capacity(self.joints.len());
        for name in &self.joints {
            let j = skeleton.joint_index(name).ok_or_else(|| {
                HumanoidError::Clip(format!("clip `{}` drives unknown joint `{name}`", self.name))
            })?;
            map.push(j);
        }
        let frames = self
            .frames
            .iter()
            .map(|f| {
                let mut p = Pose::identity(skeleton.len());
                p.root_translation = f.root_translation;
                for (src, &dst) in f.rotations.iter().zip(&map) {
                    p.rotations[dst] = *src;
                }
                p
            })
            .collect();
        Ok(Self {
            name: self.name.clone(),
            fps: self.fps,
            joints: skeleton.joint_names().map(Into::into).collect(),
            frames,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, HumanoidError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let clip: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| HumanoidError::Parse(format!("{}: {}", e.path(), e.inner())))?;
        clip.validate()?;
        Ok(clip)
    }
}

const FRAMES: usize = 16;

fn deg(d: f64) -> f64 {
    d.to_radians()
}

fn rx(d: f64) -> Rotation {
    Rotation::about_x(deg(d))
}

fn rz(d: f64) -> Rotation {
    Rotation::about_z(deg(d))
}

fn ry(d: f64) -> Rotation {
    Rotation::about_y(deg(d))
}

fn clip(name: &str, fps: f64, skeleton: &Skeleton, mut frame: impl FnMut(f64, &mut Pose)) -> PoseClip {
    let frames = (0..FRAMES)
        .map(|k| {
            let mut p = Pose::identity(skeleton.len());
            // Normalized phase in [0, 1).
            frame(k as f64 / FRAMES as f64, &mut p);
            p
        })
        .collect();
    PoseClip { name: name.into(), fps, joints: skeleton.joint_names().map(Into::into).collect(), frames }
}

/// Procedural clips for the built-in skeleton.
///
/// Positive rotation about X swings a hanging limb forward (toward -Z);
/// positive rotation about Z swings it toward +X.
pub fn builtin_pose_library() -> Vec<PoseClip> {
    let s = builtin_skeleton();
    let sk = &s;
    vec![
        clip("stand", 8.0, sk, |t, p| {
            let w = (TAU * t).sin();
            p.set(sk, "pelvis", rz(1.5 * w))
                .set(sk, "spine", rz(-1.5 * w))
                .set(sk, "head", ry(6.0 * w))
                .set(sk, "left_shoulder", rz(3.0 * w))
                .set(sk, "right_shoulder", rz(3.0 * w));
        }),
        clip("walk", 30.0, sk, |t, p| {
            let w = (TAU * t).sin();
            let c = (TAU * t).cos();
            p.set(sk, "left_hip", rx(25.0 * w))
                .set(sk, "right_hip", rx(-25.0 * w))
                .set(sk, "left_knee", rx(-(8.0 + 22.0 * (1.0 + c) * 0.5)))
                .set(sk, "right_knee", rx(-(8.0 + 22.0 * (1.0 - c) * 0.5)))
                .set(sk, "left_shoulder", rx(-20.0 * w))
                .set(sk, "right_shoulder", rx(20.0 * w))
                .set(sk, "left_elbow", rx(15.0))
                .set(sk, "right_elbow", rx(15.0))
                .set(sk, "pelvis", ry(5.0 * w));
            p.root_translation = Vec3::new(0.0, 0.02 * (2.0 * TAU * t).cos(), 0.0);
        }),
        clip("run", 30.0, sk, |t, p| {
            let w = (TAU * t).sin();
            let c = (TAU * t).cos();
            p.set(sk, "spine", rx(-12.0))
                .set(sk, "left_hip", rx(15.0 + 40.0 * w))
                .set(sk, "right_hip", rx(15.0 - 40.0 * w))
                .set(sk, "left_knee", rx(-(20.0 + 60.0 * (1.0 + c) * 0.5)))
                .set(sk, "right_knee", rx(-(20.0 + 60.0 * (1.0 - c) * 0.5)))
                .set(sk, "left_shoulder", rx(-45.0 * w))
                .set(sk, "right_shoulder", rx(45.0 * w))
                .set(sk, "left_elbow", rx(80.0))
                .set(sk, "right_elbow", rx(80.0));
            p.root_translation = Vec3::new(0.0, 0.05 * (2.0 * TAU * t).sin().abs(), 0.0);
        }),
        clip("sit", 8.0, sk, |t, p| {
            let w = (TAU * t).sin();
            p.set(sk, "left_hip", rx(90.0))
                .set(sk, "right_hip", rx(90.0))
                .set(sk, "left_knee", rx(-90.0 + 10.0 * w))
                .set(sk, "right_knee", rx(-90.0 - 10.0 * w))
                .set(sk, "spine", rx(-5.0 - 5.0 * w))
                .set(sk, "left_shoulder", rx(15.0))
                .set(sk, "right_shoulder", rx(15.0))
                .set(sk, "left_elbow", rx(55.0))
                .set(sk, "right_elbow", rx(55.0))
                .set(sk, "head", ry(20.0 * w));
        }),
        clip("crouch", 12.0, sk, |t, p| {
            let depth = 0.5 - 0.5 * (TAU * t).cos();
            p.set(sk, "pelvis", rx(-20.0 * depth))
                .set(sk, "spine", rx(-10.0 * depth))
                .set(sk, "left_hip", rx(20.0 + 80.0 * depth))
                .set(sk, "right_hip", rx(20.0 + 80.0 * depth))
                .set(sk, "left_knee", rx(-(30.0 + 90.0 * depth)))
                .set(sk, "right_knee", rx(-(30.0 + 90.0 * depth)))
                .set(sk, "left_ankle", rx(10.0 * depth))
                .set(sk, "right_ankle", rx(10.0 * depth))
                .set(sk, "left_shoulder", rx(30.0 * depth))
                .set(sk, "right_shoulder", rx(30.0 * depth));
            p.root_translation = Vec3::new(0.0, -0.35 * depth, 0.0);
        }),
        clip("reach", 10.0, sk, |t, p| {
            let lift = 150.0 * t / (1.0 - 1.0 / FRAMES as f64);
            p.set(sk, "right_shoulder", rx(lift))
                .set(sk, "right_elbow", rx(20.0 * (1.0 - t)))
                .set(sk, "left_shoulder", rx(20.0))
                .set(sk, "left_elbow", rx(30.0))
                .set(sk, "spine", rx(-10.0 * t))
                .set(sk, "head", rx(15.0 * t));
        }),
        clip("wave", 12.0, sk, |t, p| {
            let w = (TAU * t).sin();
            p.set(sk, "right_shoulder", rz(-150.0))
                .set(sk, "right_elbow", rx(35.0 + 30.0 * w))
                .set(sk, "left_shoulder", rz(5.0))
                .set(sk, "head", ry(-15.0));
        }),
        clip("jumping_jack", 20.0, sk, |t, p| {
            let open = 0.5 - 0.5 * (TAU * t).cos();
            p.set(sk, "left_shoulder", rz(15.0 + 150.0 * open))
                .set(sk, "right_shoulder", rz(-(15.0 + 150.0 * open)))
                .set(sk, "left_hip", rz(4.0 + 16.0 * open))
                .set(sk, "right_hip", rz(-(4.0 + 16.0 * open)))
                .set(sk, "left_ankle", rz(-(4.0 + 16.0 * open)))
                .set(sk, "right_ankle", rz(4.0 + 16.0 * open));
            p.root_translation = Vec3::new(0.0, 0.12 * (TAU * t).sin().abs(), 0.0);
        }),
        clip("bend", 10.0, sk, |t, p| {
            let b = 0.5 - 0.5 * (TAU * t).cos();
            p.set(sk, "spine", rx(-(15.0 + 45.0 * b)))
                .set(sk, "neck", rx(10.0 * b))
                .set(sk, "left_shoulder", rx(20.0 * b))
                .set(sk, "right_shoulder", rx(20.0 * b))
                .set(sk, "left_knee", rx(-10.0 * b))
                .set(sk, "right_knee", rx(-10.0 * b));
        }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_shape() {
        let lib = builtin_pose_library();
        let sk = builtin_skeleton();
        assert!(lib.len() >= 8);
        for c in &lib {
            assert!(c.frames.len() >= 8, "{}", c.name);
            assert!(c.matches(&sk));
            c.validate().unwrap();
        }
    }

    #[test]
    fn stand_starts_near_identity() {
        let stand = &builtin_pose_library()[0];
        assert_eq!(stand.name, "stand");
        for r in &stand.frames[0].rotations {
            assert!(r.angle_to(&Rotation::identity()) < 1e-9);
        }
    }

    #[test]
    fn clip_json_roundtrip_and_errors() {
        let c = builtin_pose_library().swap_remove(1);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(PoseClip::from_json(&text).unwrap(), c);

        let mut bad = c.clone();
        bad.frames.clear();
        let err = PoseClip::from_json(&serde_json::to_string(&bad).unwrap()).unwrap_err();
        assert!(err.to_string().contains("no frames"));

        let err = PoseClip::from_json(r#"{"name":"x","fps":1,"joints":[]}"#).unwrap_err();
        assert!(err.to_string().contains("frames"), "{err}");
    }
}
