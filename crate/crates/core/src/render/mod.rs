//! Perspective splat rendering to premultiplied RGBA framebuffers.

mod camera;
mod framebuffer;
mod project;
mod raster;
pub mod video;

use rayon::prelude::*;

pub use camera::Camera;
pub use framebuffer::{Framebuffer, RgbImage};
pub use project::{project_splat, project_splats, Splat2D, COVARIANCE_DILATION, NEAR_PLANE};
pub use raster::{rasterize, visit_pixel_contributions, DepthOrder, MAX_ALPHA, MIN_ALPHA, MIN_TRANSMITTANCE};

use crate::error::Result;
use crate::model::{skin_avatar, Avatar, Pose};
use crate::pose::PoseSequence;

pub const WHITE: [f64; 3] = [1.0, 1.0, 1.0];

/// Skins, projects and rasterizes one pose over white.
pub fn render_frame(avatar: &Avatar, pose: &Pose, cam: &Camera) -> Result<Framebuffer> {
    let posed = skin_avatar(avatar, pose)?;
    Ok(rasterize(&project_splats(&posed, cam), cam, WHITE))
}

/// One white-background frame per pose; frames render in parallel.
pub fn render_sequence(avatar: &Avatar, seq: &PoseSequence, cam: &Camera) -> Result<Vec<Framebuffer>> {
    seq.frames
        .par_iter()
        .map(|pose| render_frame(avatar, pose, cam))
        .collect()
}
