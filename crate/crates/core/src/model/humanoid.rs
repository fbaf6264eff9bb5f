//! The fixed 24-joint humanoid and a procedural splat body built on it.
//!
//! World axes: `+y` up, the body faces `+z`, its left side is `+x`. The
//! pelvis (root) sits at the origin in the canonical pose with the arms
//! hanging down.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Avatar, GaussianSplat, Joint, Skeleton};
use crate::error::Result;
use crate::math::{rotation_between, Vec3};

pub const JOINT_NAMES: [&str; 24] = [
    "pelvis",
    "spine1",
    "spine2",
    "spine3",
    "neck",
    "head",
    "left_clavicle",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "left_hand",
    "right_clavicle",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "right_hand",
    "left_hip",
    "left_knee",
    "left_ankle",
    "left_foot",
    "right_hip",
    "right_knee",
    "right_ankle",
    "right_foot",
];

/// Joint indices by name, for motion scripts.
pub mod joint {
    pub const PELVIS: usize = 0;
    pub const SPINE1: usize = 1;
    pub const SPINE2: usize = 2;
    pub const SPINE3: usize = 3;
    pub const NECK: usize = 4;
    pub const HEAD: usize = 5;
    pub const L_CLAVICLE: usize = 6;
    pub const L_SHOULDER: usize = 7;
    pub const L_ELBOW: usize = 8;
    pub const L_WRIST: usize = 9;
    pub const L_HAND: usize = 10;
    pub const R_CLAVICLE: usize = 11;
    pub const R_SHOULDER: usize = 12;
    pub const R_ELBOW: usize = 13;
    pub const R_WRIST: usize = 14;
    pub const R_HAND: usize = 15;
    pub const L_HIP: usize = 16;
    pub const L_KNEE: usize = 17;
    pub const L_ANKLE: usize = 18;
    pub const L_FOOT: usize = 19;
    pub const R_HIP: usize = 20;
    pub const R_KNEE: usize = 21;
    pub const R_ANKLE: usize = 22;
    pub const R_FOOT: usize = 23;
}

const PARENTS: [Option<usize>; 24] = [
    None,
    Some(0),
    Some(1),
    Some(2),
    Some(3),
    Some(4),
    Some(3),
    Some(6),
    Some(7),
    Some(8),
    Some(9),
    Some(3),
    Some(11),
    Some(12),
    Some(13),
    Some(14),
    Some(0),
    Some(16),
    Some(17),
    Some(18),
    Some(0),
    Some(20),
    Some(21),
    Some(22),
];

/// Canonical offsets for a 1.75 m body.
const OFFSETS: [[f64; 3]; 24] = [
    [0.0, 0.0, 0.0],
    [0.0, 0.10, 0.0],
    [0.0, 0.12, 0.0],
    [0.0, 0.12, 0.0],
    [0.0, 0.14, 0.0],
    [0.0, 0.10, 0.0],
    [0.04, 0.10, 0.0],
    [0.13, 0.0, 0.0],
    [0.0, -0.28, 0.0],
    [0.0, -0.25, 0.0],
    [0.0, -0.08, 0.0],
    [-0.04, 0.10, 0.0],
    [-0.13, 0.0, 0.0],
    [0.0, -0.28, 0.0],
    [0.0, -0.25, 0.0],
    [0.0, -0.08, 0.0],
    [0.09, -0.05, 0.0],
    [0.0, -0.42, 0.0],
    [0.0, -0.42, 0.0],
    [0.0, -0.05, 0.12],
    [-0.09, -0.05, 0.0],
    [0.0, -0.42, 0.0],
    [0.0, -0.42, 0.0],
    [0.0, -0.05, 0.12],
];

pub const REFERENCE_HEIGHT: f64 = 1.75;

/// The 24-joint skeleton scaled to `height` meters.
pub fn skeleton(height: f64) -> Skeleton {
    let k = height / REFERENCE_HEIGHT;
    let joints = JOINT_NAMES
        .iter()
        .zip(PARENTS)
        .zip(OFFSETS)
        .map(|((name, parent), o)| Joint {
            name: (*name).to_string(),
            parent,
            offset: Vec3::new(o[0], o[1], o[2]) * k,
        })
        .collect();
    Skeleton::new(joints).expect("the humanoid template is a valid skeleton")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Skin,
    Shirt,
    Pants,
    Shoes,
    Hair,
}

/// Appearance and body-shape parameters of a procedural identity.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyParams {
    pub height: f64,
    /// Multiplies limb and torso thickness.
    pub girth: f64,
    pub skin: [f64; 3],
    pub shirt: [f64; 3],
    pub pants: [f64; 3],
    pub shoes: [f64; 3],
    pub hair: [f64; 3],
    pub opacity: f64,
    pub splats_per_bone: usize,
}

impl Default for BodyParams {
    fn default() -> Self {
        Self {
            height: REFERENCE_HEIGHT,
            girth: 1.0,
            skin: [0.85, 0.66, 0.52],
            shirt: [0.20, 0.35, 0.70],
            pants: [0.25, 0.25, 0.30],
            shoes: [0.10, 0.10, 0.10],
            hair: [0.20, 0.12, 0.06],
            opacity: 0.95,
            splats_per_bone: 3,
        }
    }
}

impl BodyParams {
    /// Seeded random identity: height, girth and clothing colors vary.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut color = |lo: f64, hi: f64| -> [f64; 3] {
            [rng.gen_range(lo..hi), rng.gen_range(lo..hi), rng.gen_range(lo..hi)]
        };
        let shirt = color(0.05, 0.95);
        let pants = color(0.05, 0.7);
        let shoes = color(0.0, 0.4);
        let hair = color(0.0, 0.5);
        let tone: f64 = rng.gen_range(0.3..0.95);
        let skin = [tone, tone * 0.78, tone * 0.62];
        Self {
            height: rng.gen_range(1.55..1.92),
            girth: rng.gen_range(0.85..1.25),
            skin,
            shirt,
            pants,
            shoes,
            hair,
            opacity: rng.gen_range(0.85..0.98),
            splats_per_bone: 3,
        }
    }

    fn color(&self, region: Region) -> [f64; 3] {
        match region {
            Region::Skin => self.skin,
            Region::Shirt => self.shirt,
            Region::Pants => self.pants,
            Region::Shoes => self.shoes,
            Region::Hair => self.hair,
        }
    }
}

/// Bone from `joint` to its child `child`: thickness (x, z radii) and region.
struct Bone {
    joint: usize,
    child: usize,
    radii: (f64, f64),
    region: Region,
}

fn bones() -> Vec<Bone> {
    use joint::*;
    let b = |joint, child, rx, rz, region| Bone {
        joint,
        child,
        radii: (rx, rz),
        region,
    };
    vec![
        b(PELVIS, SPINE1, 0.13, 0.09, Region::Pants),
        b(SPINE1, SPINE2, 0.13, 0.09, Region::Shirt),
        b(SPINE2, SPINE3, 0.14, 0.09, Region::Shirt),
        b(SPINE3, NECK, 0.12, 0.08, Region::Shirt),
        b(NECK, HEAD, 0.045, 0.045, Region::Skin),
        b(L_CLAVICLE, L_SHOULDER, 0.05, 0.05, Region::Shirt),
        b(L_SHOULDER, L_ELBOW, 0.048, 0.048, Region::Shirt),
        b(L_ELBOW, L_WRIST, 0.038, 0.038, Region::Skin),
        b(L_WRIST, L_HAND, 0.035, 0.02, Region::Skin),
        b(R_CLAVICLE, R_SHOULDER, 0.05, 0.05, Region::Shirt),
        b(R_SHOULDER, R_ELBOW, 0.048, 0.048, Region::Shirt),
        b(R_ELBOW, R_WRIST, 0.038, 0.038, Region::Skin),
        b(R_WRIST, R_HAND, 0.035, 0.02, Region::Skin),
        b(PELVIS, L_HIP, 0.07, 0.08, Region::Pants),
        b(L_HIP, L_KNEE, 0.07, 0.07, Region::Pants),
        b(L_KNEE, L_ANKLE, 0.055, 0.055, Region::Pants),
        b(L_ANKLE, L_FOOT, 0.04, 0.03, Region::Shoes),
        b(PELVIS, R_HIP, 0.07, 0.08, Region::Pants),
        b(R_HIP, R_KNEE, 0.07, 0.07, Region::Pants),
        b(R_KNEE, R_ANKLE, 0.055, 0.055, Region::Pants),
        b(R_ANKLE, R_FOOT, 0.04, 0.03, Region::Shoes),
    ]
}

/// Builds a skinned splat body for `params`.
///
/// Each bone gets `splats_per_bone` ellipsoids along its length; splats in
/// the distal part of a bone blend in the child joint. The head is a small
/// cluster on the head joint.
pub fn build_avatar(id: &str, params: &BodyParams) -> Result<Avatar> {
    let skeleton = skeleton(params.height);
    let k = params.height / REFERENCE_HEIGHT;
    let rest = skeleton.rest_positions();
    let per_bone = params.splats_per_bone.max(1);
    let mut splats = Vec::new();

    for bone in bones() {
        let start = rest[bone.joint];
        let end = rest[bone.child];
        let axis = end - start;
        let length = axis.norm();
        let rot = rotation_between(&Vec3::y(), &axis.normalize());
        let along = (length / per_bone as f64 * 0.6).max(0.01 * k);
        let (rx, rz) = bone.radii;
        for n in 0..per_bone {
            let t = (n as f64 + 0.5) / per_bone as f64;
            let child_w = ((t - 0.6) / 0.8).clamp(0.0, 0.5);
            let mut weights = vec![(bone.joint, 1.0 - child_w)];
            if child_w > 0.0 {
                weights.push((bone.child, child_w));
            }
            splats.push(GaussianSplat {
                mu: start + axis * t,
                scale: Vec3::new(rx * params.girth * k, along, rz * params.girth * k),
                rot,
                color: params.color(bone.region),
                opacity: params.opacity,
                weights,
            });
        }
    }

    let head = rest[joint::HEAD];
    let head_parts = [
        (Vec3::new(0.0, 0.10, 0.0), 0.085, Region::Skin),
        (Vec3::new(0.0, 0.17, -0.015), 0.075, Region::Hair),
        (Vec3::new(0.0, 0.04, 0.02), 0.06, Region::Skin),
    ];
    let head_count = (per_bone / 3).max(1);
    for (centre, radius, region) in head_parts {
        for n in 0..head_count {
            let jitter = Vec3::new(0.0, 0.01 * n as f64, 0.0);
            splats.push(GaussianSplat {
                mu: head + (centre + jitter) * k,
                scale: Vec3::repeat(radius * k * params.girth.sqrt()),
                rot: crate::math::Quat::identity(),
                color: params.color(region),
                opacity: params.opacity,
                weights: vec![(joint::HEAD, 1.0)],
            });
        }
    }

    Avatar::new(id, skeleton, splats)
}

/// A camera that frames the humanoid (arms raised included) from the front,
/// optionally yawed about the vertical axis by `yaw` radians.
pub fn framing_camera(width: u32, height: u32, yaw: f64) -> crate::render::Camera {
    let distance = 3.2;
    let target = Vec3::new(0.0, -0.05, 0.0);
    let eye = target + Vec3::new(distance * yaw.sin(), 0.15, distance * yaw.cos());
    let focal = 0.58 * height.min(width) as f64 * distance / REFERENCE_HEIGHT;
    crate::render::Camera::look_at(eye, target, Vec3::y(), focal, width, height)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_has_24_joints_in_topological_order() {
        let s = skeleton(REFERENCE_HEIGHT);
        assert_eq!(s.len(), 24);
        assert_eq!(s.index_of("right_foot"), Some(joint::R_FOOT));
        assert_eq!(s.children(joint::PELVIS), &[joint::SPINE1, joint::L_HIP, joint::R_HIP]);
    }

    #[test]
    fn procedural_bodies_are_valid_and_seeded() {
        let a = build_avatar("a", &BodyParams::random(3)).unwrap();
        let b = build_avatar("a", &BodyParams::random(3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(BodyParams::random(3), BodyParams::random(4));
        assert!(a.splats().len() > 60);
    }
}
