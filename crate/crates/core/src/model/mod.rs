//! Avatar model: joint hierarchy, canonical splats, kinematics and skinning.

mod avatar;
pub mod humanoid;
mod kinematics;
mod skeleton;

pub use avatar::{Avatar, GaussianSplat, MAX_INFLUENCES};
pub use kinematics::{forward_kinematics, skin_avatar, skin_with_transforms, PosedSplat};
pub use skeleton::{Joint, Pose, Skeleton};
