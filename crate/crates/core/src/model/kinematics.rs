use nalgebra::{Point3, Translation3, UnitQuaternion};

use super::avatar::Avatar;
use super::skeleton::{Pose, Skeleton};
use crate::error::{Error, Result};
use crate::math::{Quat, Rigid, Vec3};

/// World transform of every joint for `pose`.
///
/// `world[j] = world[parent(j)] * T(offset_j) * R(rot_j)`, with the root
/// additionally translated by `pose.root_t`.
pub fn forward_kinematics(skeleton: &Skeleton, pose: &Pose) -> Result<Vec<Rigid>> {
    pose.check_matches(skeleton)?;
    let mut world: Vec<Rigid> = Vec::with_capacity(skeleton.len());
    for (joint, rot) in skeleton.joints().iter().zip(&pose.rots) {
        let w = match joint.parent {
            Some(p) => world[p] * Rigid::from_parts(Translation3::from(joint.offset), *rot),
            None => Rigid::from_parts(Translation3::from(pose.root_t + joint.offset), *rot),
        };
        world.push(w);
    }
    Ok(world)
}

/// A splat after skinning: world-space mean and orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct PosedSplat {
    pub mu: Vec3,
    pub rot: Quat,
    pub scale: Vec3,
    pub color: [f64; 3],
    pub opacity: f64,
}

impl PosedSplat {
    /// Applies a rigid transform to mean and orientation.
    pub fn transformed(&self, g: &Rigid) -> Self {
        Self {
            mu: g.transform_point(&Point3::from(self.mu)).coords,
            rot: renormalize(g.rotation * self.rot),
            ..self.clone()
        }
    }
}

/// Linear blend skinning of every splat of `avatar` for `pose`.
pub fn skin_avatar(avatar: &Avatar, pose: &Pose) -> Result<Vec<PosedSplat>> {
    let world = forward_kinematics(avatar.skeleton(), pose)?;
    skin_with_transforms(avatar, &world)
}

/// Skins `avatar` given explicit world joint transforms.
///
/// Means blend `w_k * M_k * mu` with `M_k = world_k * rest_world_k^-1`; the
/// orientation follows the dominant-weight joint only.
pub fn skin_with_transforms(avatar: &Avatar, world: &[Rigid]) -> Result<Vec<PosedSplat>> {
    let skeleton = avatar.skeleton();
    if world.len() != skeleton.len() {
        return Err(Error::Mismatch(format!(
            "{} joint transforms for {} joints",
            world.len(),
            skeleton.len()
        )));
    }
    let skinning: Vec<Rigid> = world
        .iter()
        .zip(skeleton.rest_world())
        .map(|(w, rest)| w * rest.inverse())
        .collect();

    Ok(avatar
        .splats()
        .iter()
        .map(|splat| {
            let canonical = Point3::from(splat.mu);
            let mu = splat
                .weights
                .iter()
                .fold(Vec3::zeros(), |acc, &(joint, w)| {
                    acc + skinning[joint].transform_point(&canonical).coords * w
                });
            let rotation = skinning[splat.dominant_joint()].rotation;
            PosedSplat {
                mu,
                rot: renormalize(rotation * splat.rot),
                scale: splat.scale,
                color: splat.color,
                opacity: splat.opacity,
            }
        })
        .collect())
}

fn renormalize(q: Quat) -> Quat {
    UnitQuaternion::new_normalize(q.into_inner())
}
