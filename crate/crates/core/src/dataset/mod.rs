//! Dataset generation: every (reference, identity) pair yields one
//! white-background video plus `g` composites over sampled backgrounds.

mod generate;
mod manifest;
mod plan;
mod spec;

pub use generate::{generate, GenerateOptions, MANIFEST_FILE};
pub use manifest::{JobError, Manifest, ManifestEntry, VideoKind};
pub use plan::{mix_seed, plan_jobs, sample_background_indices, sample_backgrounds, splitmix64, Job, JobKind, PlanCounts};
pub use spec::{BackgroundEntry, CameraJitter, DatasetSpec, IdentityEntry, ReferenceEntry};
