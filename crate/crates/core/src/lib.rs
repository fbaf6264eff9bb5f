//! Controllable Gaussian-splat avatars and the pose-transfer video pipeline.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: skeletons, skinned splats, forward kinematics and linear blend skinning.
//! * [`pose`]: pose/keypoint sequences, retargeting keypoints to joint rotations, resampling.
//! * [`render`]: pinhole cameras, splat projection and front-to-back rasterization.
//! * [`fitting`]: photometric fitting of splat colors and opacities.
//! * [`compositor`]: placing white-background renders over background images.
//! * [`dataset`]: job planning, seeded background sampling, generation and manifests.

pub mod compositor;
pub mod dataset;
pub mod error;
pub mod fitting;
pub mod math;
pub mod model;
pub mod pose;
pub mod render;

pub use error::{Error, Result};
pub use nalgebra;
