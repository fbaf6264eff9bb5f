use nalgebra::{Matrix3, UnitQuaternion};

use super::sequence::{KeypointSequence, PoseSequence};
use crate::error::{Error, Result};
use crate::math::{rotation_between, Quat, Vec3};
use crate::model::{Pose, Skeleton};

const MIN_BONE: f64 = 1e-6;
/// Child directions closer to collinear than this do not constrain twist.
const COLLINEAR: f64 = 1e-6;

/// Converts world keypoints (in skeleton joint order) to local joint rotations.
///
/// Each joint's world rotation is the minimal rotation carrying its canonical
/// child-bone direction onto the observed one; twist about the bone is set to
/// zero. Joints whose children span more than one direction (pelvis, upper
/// spine) are solved as a best-fit rotation over all child bones instead,
/// which also recovers their twist. Leaf joints get the identity.
pub fn keypoints_to_pose(kp: &KeypointSequence, skeleton: &Skeleton) -> Result<PoseSequence> {
    if kp.joint_count() != skeleton.len() {
        return Err(Error::Mismatch(format!(
            "keypoints have {} joints, skeleton has {}",
            kp.joint_count(),
            skeleton.len()
        )));
    }
    let frames = kp
        .frames
        .iter()
        .enumerate()
        .map(|(index, positions)| frame_to_pose(positions, skeleton, index))
        .collect::<Result<Vec<_>>>()?;
    PoseSequence::new(kp.fps, frames, "keypoints")
}

fn frame_to_pose(positions: &[Vec3], skeleton: &Skeleton, frame: usize) -> Result<Pose> {
    let joints = skeleton.joints();
    let mut world_rot: Vec<Quat> = Vec::with_capacity(joints.len());
    let mut local_rot = Vec::with_capacity(joints.len());

    for (j, joint) in joints.iter().enumerate() {
        let parent_rot = joint.parent.map_or(Quat::identity(), |p| world_rot[p]);

        // (canonical direction rotated by the parent, observed direction)
        let mut pairs: Vec<(Vec3, Vec3)> = Vec::new();
        for &c in skeleton.children(j) {
            let canonical = joints[c].offset;
            if canonical.norm() < MIN_BONE {
                continue;
            }
            let observed = positions[c] - positions[j];
            if observed.norm() < MIN_BONE {
                return Err(Error::DegenerateBone {
                    joint: joint.name.clone(),
                    frame,
                });
            }
            pairs.push(((parent_rot * canonical).normalize(), observed.normalize()));
        }

        let world = match pairs.as_slice() {
            [] => parent_rot,
            [(from, to), rest @ ..] if rest.iter().all(|(a, _)| a.cross(from).norm() < COLLINEAR) => {
                rotation_between(from, to) * parent_rot
            }
            _ => best_fit_rotation(&pairs) * parent_rot,
        };
        local_rot.push(parent_rot.inverse() * world);
        world_rot.push(world);
    }

    Ok(Pose {
        root_t: positions[0] - joints[0].offset,
        rots: local_rot,
    })
}

/// Rotation `R` minimizing `sum |R a - b|^2` over direction pairs (Kabsch).
fn best_fit_rotation(pairs: &[(Vec3, Vec3)]) -> Quat {
    let h: Matrix3<f64> = pairs.iter().map(|(a, b)| b * a.transpose()).sum();
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V^T"));
    let d = (u * v_t).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d));
    let r = u * correction * v_t;
    UnitQuaternion::from_matrix(&r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{forward_kinematics, humanoid};
    use proptest::prelude::*;

    fn positions_of(skeleton: &Skeleton, pose: &Pose) -> Vec<Vec3> {
        forward_kinematics(skeleton, pose)
            .unwrap()
            .iter()
            .map(|t| t.translation.vector)
            .collect()
    }

    #[test]
    fn rest_keypoints_give_identity() {
        let s = humanoid::skeleton(1.75);
        let kp = KeypointSequence::new(30.0, vec![s.rest_positions()]).unwrap();
        let seq = keypoints_to_pose(&kp, &s).unwrap();
        let pose = &seq.frames[0];
        assert!(pose.rots.iter().all(|q| q.angle() < 1e-9));
        assert!((pose.root_t - s.rest_positions()[0]).norm() < 1e-12);
    }

    #[test]
    fn rigid_body_rotation_lands_on_the_root() {
        let s = humanoid::skeleton(1.75);
        let g = Quat::from_axis_angle(&Vec3::z_axis(), std::f64::consts::FRAC_PI_4);
        let rotated: Vec<Vec3> = s.rest_positions().iter().map(|p| g * p).collect();
        let seq = keypoints_to_pose(&KeypointSequence::new(30.0, vec![rotated]).unwrap(), &s).unwrap();
        let pose = &seq.frames[0];
        assert!(pose.rots[0].angle_to(&g) < 1e-5);
        for q in &pose.rots[1..] {
            assert!(q.angle() < 1e-5);
        }
    }

    #[test]
    fn degenerate_bone_names_joint_and_frame() {
        let s = humanoid::skeleton(1.75);
        let good = s.rest_positions();
        let mut bad = good.clone();
        bad[humanoid::joint::L_KNEE] = bad[humanoid::joint::L_HIP];
        let kp = KeypointSequence::new(30.0, vec![good, bad]).unwrap();
        match keypoints_to_pose(&kp, &s) {
            Err(Error::DegenerateBone { joint, frame }) => {
                assert_eq!(joint, "left_hip");
                assert_eq!(frame, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    fn perpendicular_rotation(bone: Vec3, angle: f64, phase: f64) -> Quat {
        let helper = if bone.normalize().x.abs() < 0.9 { Vec3::x() } else { Vec3::z() };
        let e1 = bone.cross(&helper).normalize();
        let e2 = bone.cross(&e1).normalize();
        let axis = nalgebra::Unit::new_normalize(e1 * phase.cos() + e2 * phase.sin());
        Quat::from_axis_angle(&axis, angle)
    }

    proptest! {
        #[test]
        fn fk_round_trip_reproduces_positions(
            angles in proptest::collection::vec(-1.2f64..1.2, 24),
            phases in proptest::collection::vec(0.0f64..6.28, 24),
            root in proptest::array::uniform3(-1.0f64..1.0),
        ) {
            let s = humanoid::skeleton(1.7);
            let mut pose = s.rest_pose();
            pose.root_t = Vec3::new(root[0], root[1], root[2]);
            for j in 0..s.len() {
                let bone = s.children(j).first().map_or(Vec3::y(), |&c| s.joints()[c].offset);
                pose.rots[j] = perpendicular_rotation(bone, angles[j], phases[j]);
            }
            let observed = positions_of(&s, &pose);
            let kp = KeypointSequence::new(25.0, vec![observed.clone()]).unwrap();
            let recovered = keypoints_to_pose(&kp, &s).unwrap();
            let again = positions_of(&s, &recovered.frames[0]);
            for (a, b) in observed.iter().zip(&again) {
                prop_assert!((a - b).norm() < 1e-4, "{} vs {}", a, b);
            }
        }
    }
}
