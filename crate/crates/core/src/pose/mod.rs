//! Pose and keypoint sequences, keypoint retargeting and temporal normalization.

mod resample;
mod retarget;
mod sequence;

pub use resample::resample;
pub use retarget::keypoints_to_pose;
pub use sequence::{KeypointSequence, NormalizationPolicy, PoseSequence};
