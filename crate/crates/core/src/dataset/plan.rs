use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::spec::DatasetSpec;
use crate::error::{Error, Result};

/// One step of the SplitMix64 generator.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for position `(i, j)`: `splitmix(splitmix(splitmix(seed) ^ i) ^ j)`.
pub fn mix_seed(seed: u64, i: usize, j: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ i as u64) ^ j as u64)
}

/// `g` distinct indices into a pool of `pool` backgrounds for job `(i, j)`.
/// Depends only on `(seed, i, j)`, never on call order.
pub fn sample_background_indices(seed: u64, pool: usize, g: usize, i: usize, j: usize) -> Result<Vec<usize>> {
    if g > pool {
        return Err(Error::InvalidArgument(format!("cannot draw {g} backgrounds from a pool of {pool}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i, j));
    Ok(index::sample(&mut rng, pool, g).into_vec())
}

/// Background ids sampled for reference `i` and identity `j`.
pub fn sample_backgrounds(spec: &DatasetSpec, i: usize, j: usize) -> Result<Vec<String>> {
    Ok(sample_background_indices(spec.seed, spec.backgrounds.len(), spec.g, i, j)?
        .into_iter()
        .map(|k| spec.backgrounds[k].id.clone())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobKind {
    White,
    /// `slot` in `0..g`; `background` indexes the sorted pool.
    Composited { slot: usize, background: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub video_id: String,
    pub reference: usize,
    pub identity: usize,
    pub kind: JobKind,
}

impl Job {
    pub fn white_id(prefix: &str, i: usize, j: usize) -> String {
        format!("{prefix}{i:05}_{j:05}")
    }

    pub fn composited_id(prefix: &str, i: usize, j: usize, k: usize) -> String {
        format!("{prefix}{i:05}_{j:05}_{k:03}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanCounts {
    pub white: usize,
    pub composited: usize,
}

impl PlanCounts {
    /// `n_T * n_A` white and `n_T * n_A * g` composited videos.
    pub fn of(spec: &DatasetSpec) -> Self {
        let pairs = spec.n_references() * spec.n_identities();
        Self {
            white: pairs,
            composited: pairs * spec.g,
        }
    }
}

/// Jobs in `(i, j, k)` order: for each pair the white video, then its `g`
/// composites. Video ids sort in the same order.
pub fn plan_jobs(spec: &DatasetSpec) -> Result<Vec<Job>> {
    if spec.g > spec.backgrounds.len() {
        return Err(Error::invalid(
            "g",
            format!("g = {} exceeds the background pool of {}", spec.g, spec.backgrounds.len()),
        ));
    }
    let prefix = &spec.video_prefix;
    let counts = PlanCounts::of(spec);
    let mut jobs = Vec::with_capacity(counts.white + counts.composited);
    for i in 0..spec.n_references() {
        for j in 0..spec.n_identities() {
            jobs.push(Job {
                video_id: Job::white_id(prefix, i, j),
                reference: i,
                identity: j,
                kind: JobKind::White,
            });
            let picks = sample_background_indices(spec.seed, spec.backgrounds.len(), spec.g, i, j)?;
            for (slot, background) in picks.into_iter().enumerate() {
                jobs.push(Job {
                    video_id: Job::composited_id(prefix, i, j, slot),
                    reference: i,
                    identity: j,
                    kind: JobKind::Composited { slot, background },
                });
            }
        }
    }
    Ok(jobs)
}
