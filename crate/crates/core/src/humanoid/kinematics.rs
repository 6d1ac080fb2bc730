use super::{HumanAsset, HumanoidError, Pose, NUM_KEYPOINTS};
use crate::geometry::Primitive as GPrimitive;
use crate::{Primitive, Rotation, Transform, Vec3};

/// World position of every skeleton joint.
///
/// Rest offsets and the pose's root translation are multiplied by the
/// asset's height scale; each joint's local rotation turns its children.
pub fn joint_positions(asset: &HumanAsset, pose: &Pose, root: &Transform) -> Result<Vec<Vec3>, HumanoidError> {
    let sk = asset.skeleton();
    if pose.rotations.len() != sk.len() {
        return Err(HumanoidError::PoseMismatch { expected: sk.len(), got: pose.rotations.len() });
    }
    let hs = asset.height_scale();
    let mut pos = Vec::with_capacity(sk.len());
    let mut rot: Vec<Rotation> = Vec::with_capacity(sk.len());
    for (j, joint) in sk.joints().iter().enumerate() {
        match sk.parent(j) {
            None => {
                pos.push(pose.root_translation * hs + joint.offset * hs);
                rot.push(pose.rotations[j]);
            }
            Some(p) => {
                pos.push(pos[p] + rot[p].rotate(joint.offset * hs));
                rot.push(rot[p].compose(pose.rotations[j]));
            }
        }
    }
    Ok(pos.into_iter().map(|p| root.apply_point(p)).collect())
}

/// World positions of the 17 COCO keypoints, in COCO order.
pub fn forward_kinematics(
    asset: &HumanAsset,
    pose: &Pose,
    root: &Transform,
) -> Result<[Vec3; NUM_KEYPOINTS], HumanoidError> {
    let joints = joint_positions(asset, pose, root)?;
    Ok(asset.skeleton().keypoint_joints().map(|j| joints[j]))
}

/// One posed bone capsule in world space.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct BodyPrimitive {
    pub primitive: Primitive,
    pub transform: Transform,
    /// Index into [`HumanAsset::bones`].
    pub bone: usize,
    /// World endpoints of the capsule's axis.
    pub endpoints: (Vec3, Vec3),
}

/// Shortest half length given to a capsule whose endpoints coincide.
const MIN_HALF_LENGTH: f64 = 1e-6;

/// One capsule per bone, ends at the posed joints. Radii scale with the
/// height scale and the geometric mean of the root scale.
pub fn body_primitives(
    asset: &HumanAsset,
    pose: &Pose,
    root: &Transform,
) -> Result<Vec<BodyPrimitive>, HumanoidError> {
    let joints = joint_positions(asset, pose, root)?;
    let s = root.scale;
    let radius_scale = asset.height_scale() * (s.x * s.y * s.z).cbrt();
    Ok(asset
        .bone_joints()
        .iter()
        .zip(asset.bones())
        .enumerate()
        .map(|(i, (&(a, b), bone))| {
            let (pa, pb) = (joints[a], joints[b]);
            let axis = pb - pa;
            let len = axis.norm();
            let rotation = if len > 0.0 { Rotation::from_to(Vec3::unit_y(), axis) } else { Rotation::identity() };
            BodyPrimitive {
                primitive: GPrimitive::Capsule {
                    radius: bone.radius * radius_scale,
                    half_length: (0.5 * len).max(MIN_HALF_LENGTH),
                },
                transform: Transform::rigid((pa + pb) * 0.5, rotation),
                bone: i,
                endpoints: (pa, pb),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use proptest::prelude::*;

    use super::*;
    use crate::humanoid::{builtin_assets, builtin_pose_library, keypoint_index, mirrored_keypoint, COCO_KEYPOINTS};

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn identity_pose_gives_cumulative_offsets() {
        let a = builtin_assets()[2].clone().with_height_scale(1.0).unwrap();
        let pose = Pose::identity(a.skeleton().len());
        let kp = forward_kinematics(&a, &pose, &Transform::identity()).unwrap();
        // pelvis -> left_hip -> left_knee -> left_ankle
        assert!(close(kp[keypoint_index("left_ankle").unwrap()], Vec3::new(0.10, -0.86, 0.0), 1e-12));
        // pelvis -> spine -> neck -> head -> nose
        assert!(close(kp[0], Vec3::new(0.0, 0.66 + 0.03, -0.11), 1e-12));
    }

    #[test]
    fn elbow_flexion_matches_two_link_chain() {
        let a = builtin_assets()[0].clone().with_height_scale(1.0).unwrap();
        let sk = a.skeleton();
        let mut pose = Pose::identity(sk.len());
        pose.rotations[sk.joint_index("left_elbow").unwrap()] = Rotation::about_x(FRAC_PI_2);
        let kp = forward_kinematics(&a, &pose, &Transform::identity()).unwrap();
        // Shoulder at (0.21, 0.49); upper arm (0.05, -0.28) unrotated;
        // forearm (0.01, -0.25) turned 90 degrees about X becomes (0.01, 0, -0.25).
        let shoulder = Vec3::new(0.21, 0.22 + 0.30 - 0.03, 0.0);
        let elbow = shoulder + Vec3::new(0.05, -0.28, 0.0);
        let wrist = elbow + Vec3::new(0.01, 0.0, -0.25);
        assert!(close(kp[keypoint_index("left_elbow").unwrap()], elbow, 1e-12));
        assert!(close(kp[keypoint_index("left_wrist").unwrap()], wrist, 1e-12));
    }

    #[test]
    fn pose_mismatch_is_an_error() {
        let a = &builtin_assets()[0];
        let err = forward_kinematics(a, &Pose::identity(3), &Transform::identity()).unwrap_err();
        assert_eq!(err, HumanoidError::PoseMismatch { expected: a.skeleton().len(), got: 3 });
    }

    #[test]
    fn capsules_follow_joints() {
        let a = &builtin_assets()[1];
        let clip = &builtin_pose_library()[7];
        let root = Transform::rigid(Vec3::new(1.0, 0.9, 5.0), Rotation::about_y(0.7));
        let joints = joint_positions(a, &clip.frames[4], &root).unwrap();
        let body = body_primitives(a, &clip.frames[4], &root).unwrap();
        assert_eq!(body.len(), a.bones().len());
        let sk = a.skeleton();
        let upper = body
            .iter()
            .find(|b| a.bones()[b.bone].from == "left_shoulder" && a.bones()[b.bone].to == "left_elbow")
            .unwrap();
        let Primitive::Capsule { half_length, .. } = upper.primitive else { panic!() };
        let top = upper.transform.apply_point(Vec3::new(0.0, -half_length, 0.0));
        let bottom = upper.transform.apply_point(Vec3::new(0.0, half_length, 0.0));
        assert!(close(top, joints[sk.joint_index("left_shoulder").unwrap()], 1e-9));
        assert!(close(bottom, joints[sk.joint_index("left_elbow").unwrap()], 1e-9));
    }

    #[test]
    fn capsule_surface_points_are_hit_by_rays() {
        let a = &builtin_assets()[3];
        let pose = &builtin_pose_library()[2].frames[5];
        let root = Transform::rigid(Vec3::new(0.0, 1.0, 4.0), Rotation::about_y(2.0));
        for part in body_primitives(a, pose, &root).unwrap() {
            let Primitive::Capsule { radius, half_length } = part.primitive else { panic!() };
            for k in 0..16 {
                let phi = k as f64 / 16.0 * std::f64::consts::TAU;
                let y = (k as f64 / 15.0 * 2.0 - 1.0) * half_length;
                let local = Vec3::new(radius * phi.cos(), y, radius * phi.sin());
                let outward = Vec3::new(phi.cos(), 0.0, phi.sin());
                let surface = part.transform.apply_point(local);
                let origin = part.transform.apply_point(local + outward * 0.5);
                let dir = (surface - origin).normalized();
                let t = part.primitive.ray_intersect(&part.transform, origin, dir).unwrap();
                assert!((t - 0.5).abs() < 1e-9, "bone {} t={t}", part.bone);
            }
        }
    }

    fn segment_distance(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> f64 {
        // Closest points between two segments, clamped parametrization.
        let d1 = q1 - p1;
        let d2 = q2 - p2;
        let r = p1 - p2;
        let a = d1.dot(d1);
        let e = d2.dot(d2);
        let f = d2.dot(r);
        let (s, t);
        if a <= 1e-15 && e <= 1e-15 {
            return r.norm();
        }
        if a <= 1e-15 {
            s = 0.0;
            t = (f / e).clamp(0.0, 1.0);
        } else {
            let c = d1.dot(r);
            if e <= 1e-15 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else {
                let b = d1.dot(d2);
                let denom = a * e - b * b;
                let s0 = if denom > 1e-15 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
                let t0 = (b * s0 + f) / e;
                if t0 < 0.0 {
                    t = 0.0;
                    s = (-c / a).clamp(0.0, 1.0);
                } else if t0 > 1.0 {
                    t = 1.0;
                    s = ((b - c) / a).clamp(0.0, 1.0);
                } else {
                    t = t0;
                    s = s0;
                }
            }
        }
        ((p1 + d1 * s) - (p2 + d2 * t)).norm()
    }

    /// Bones touching at a joint, or where one bone starts at the parent of
    /// the other's joint, are allowed to overlap.
    fn adjacent(a: &HumanAsset, i: usize, j: usize) -> bool {
        let sk = a.skeleton();
        let (a0, a1) = a.bone_joints()[i];
        let (b0, b1) = a.bone_joints()[j];
        let ends_a = [a0, a1];
        let ends_b = [b0, b1];
        ends_a.iter().any(|x| ends_b.contains(x))
            || ends_a.iter().any(|&x| sk.parent(x).is_some_and(|p| ends_b.contains(&p)))
            || ends_b.iter().any(|&x| sk.parent(x).is_some_and(|p| ends_a.contains(&p)))
    }

    #[test]
    fn builtin_clips_are_self_intersection_free() {
        let mut failures = Vec::new();
        for a in builtin_assets() {
            for clip in builtin_pose_library() {
                for (f, pose) in clip.frames.iter().enumerate() {
                    let body = body_primitives(&a, pose, &Transform::identity()).unwrap();
                    for i in 0..body.len() {
                        for j in i + 1..body.len() {
                            if adjacent(&a, i, j) {
                                continue;
                            }
                            let (Primitive::Capsule { radius: ra, .. }, Primitive::Capsule { radius: rb, .. }) =
                                (body[i].primitive, body[j].primitive)
                            else {
                                unreachable!()
                            };
                            let (p1, q1) = body[i].endpoints;
                            let (p2, q2) = body[j].endpoints;
                            let d = segment_distance(p1, q1, p2, q2);
                            if d < ra + rb {
                                failures.push(format!(
                                    "{} {} frame {f}: {}-{} / {}-{} overlap by {:.4}",
                                    a.name,
                                    clip.name,
                                    a.bones()[i].from,
                                    a.bones()[i].to,
                                    a.bones()[j].from,
                                    a.bones()[j].to,
                                    ra + rb - d
                                ));
                            }
                        }
                    }
                }
            }
        }
        assert!(failures.is_empty(), "{}", failures.join("\n"));
    }

    #[test]
    fn keypoints_stay_near_root() {
        for a in builtin_assets() {
            for clip in builtin_pose_library() {
                for pose in &clip.frames {
                    let kp = forward_kinematics(&a, pose, &Transform::identity()).unwrap();
                    for (k, p) in kp.iter().enumerate() {
                        assert!(p.is_finite() && p.norm() <= 2.5, "{} {} {}", a.name, clip.name, COCO_KEYPOINTS[k]);
                    }
                }
            }
        }
    }

    #[test]
    fn walk_alternates_ankles_along_stride() {
        // The stride runs along the facing axis (local Z); the lead foot flips
        // between the two halves of the cycle.
        let a = &builtin_assets()[2];
        let walk = builtin_pose_library().into_iter().find(|c| c.name == "walk").unwrap();
        let (l, r) = (keypoint_index("left_ankle").unwrap(), keypoint_index("right_ankle").unwrap());
        let lead: Vec<f64> = walk
            .frames
            .iter()
            .map(|p| {
                let kp = forward_kinematics(a, p, &Transform::identity()).unwrap();
                kp[l].z - kp[r].z
            })
            .collect();
        let n = lead.len();
        assert!(lead[n / 4] < -0.1, "left foot forward at quarter cycle: {}", lead[n / 4]);
        assert!(lead[3 * n / 4] > 0.1, "right foot forward at three quarters: {}", lead[3 * n / 4]);
        let sign_changes = (0..n).filter(|&i| (lead[i] > 0.0) != (lead[(i + 1) % n] > 0.0)).count();
        assert_eq!(sign_changes, 2);
    }

    fn arb_root() -> impl Strategy<Value = Transform> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64, -3.2..3.2f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("axis", |(_, _, _, _, x, y, z)| x * x + y * y + z * z > 1e-2)
            .prop_map(|(tx, ty, tz, ang, x, y, z)| {
                Transform::rigid(Vec3::new(tx, ty, tz), Rotation::from_axis_angle(Vec3::new(x, y, z), ang))
            })
    }

    proptest! {
        #[test]
        fn fk_is_rigid_motion_equivariant(clip in 0usize..9, frame in 0usize..16, asset in 0usize..4,
                                          root in arb_root(), outer in arb_root()) {
            let a = &builtin_assets()[asset];
            let pose = &builtin_pose_library()[clip].frames[frame];
            let base = forward_kinematics(a, pose, &root).unwrap();
            let moved = forward_kinematics(a, pose, &outer.then_inner(&root)).unwrap();
            for (p, q) in base.iter().zip(&moved) {
                prop_assert!(close(outer.apply_point(*p), *q, 1e-9));
            }
        }

        #[test]
        fn mirrored_pose_swaps_sides(clip in 0usize..9, frame in 0usize..16, asset in 0usize..4) {
            let a = &builtin_assets()[asset];
            let pose = &builtin_pose_library()[clip].frames[frame];
            let mirrored = pose.mirrored(a.skeleton());
            let kp = forward_kinematics(a, pose, &Transform::identity()).unwrap();
            let km = forward_kinematics(a, &mirrored, &Transform::identity()).unwrap();
            for k in 0..NUM_KEYPOINTS {
                let p = kp[mirrored_keypoint(k)];
                prop_assert!(close(km[k], Vec3::new(-p.x, p.y, p.z), 1e-9));
            }
        }

        #[test]
        fn height_scale_scales_distances(clip in 0usize..9, frame in 0usize..16, s in 0.5..2.0f64) {
            let base = builtin_assets()[1].clone();
            let scaled = base.clone().with_height_scale(base.height_scale() * s).unwrap();
            let pose = &builtin_pose_library()[clip].frames[frame];
            let root = Transform::rigid(Vec3::new(0.3, 1.0, 4.0), Rotation::about_y(0.4));
            let p = forward_kinematics(&base, pose, &root).unwrap();
            let q = forward_kinematics(&scaled, pose, &root).unwrap();
            for i in 0..NUM_KEYPOINTS {
                for j in i + 1..NUM_KEYPOINTS {
                    let d0 = p[i].distance(p[j]);
                    prop_assert!((q[i].distance(q[j]) - s * d0).abs() <= 1e-9 * (1.0 + d0));
                }
            }
        }
    }
}
