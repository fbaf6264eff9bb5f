use super::sequence::{NormalizationPolicy, PoseSequence};
use crate::math::slerp;
use crate::model::Pose;

/// Resamples `seq` to exactly `policy.frame_count()` frames at `policy.target_fps`.
///
/// Output frame `k` samples source time `k * duration / (N - 1)`, so both
/// endpoints are source frames. Rotations are slerped between the bracketing
/// source frames; the root translation is interpolated linearly.
pub fn resample(seq: &PoseSequence, policy: &NormalizationPolicy) -> PoseSequence {
    let target = policy.frame_count().max(2);
    let last = seq.frames.len() - 1;
    let frames = (0..target)
        .map(|k| {
            // Source frame position; exact integer when the grid lines up.
            let position = (k * last) as f64 / (target - 1) as f64;
            let lower = (position.floor() as usize).min(last);
            let frac = position - lower as f64;
            if frac == 0.0 || lower == last {
                return seq.frames[lower].clone();
            }
            interpolate(&seq.frames[lower], &seq.frames[lower + 1], frac)
        })
        .collect();
    PoseSequence {
        fps: policy.target_fps,
        frames,
        skeleton_ref: seq.skeleton_ref.clone(),
    }
}

fn interpolate(a: &Pose, b: &Pose, t: f64) -> Pose {
    Pose {
        root_t: a.root_t * (1.0 - t) + b.root_t * t,
        rots: a.rots.iter().zip(&b.rots).map(|(qa, qb)| slerp(qa, qb, t)).collect(),
    }
}
