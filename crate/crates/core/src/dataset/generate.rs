use std::path::Path;

use rayon::prelude::*;

use super::manifest::{JobError, Manifest, ManifestEntry, VideoKind};
use super::plan::{plan_jobs, Job, JobKind};
use super::spec::DatasetSpec;
use crate::compositor::{composite_to_dir, BackgroundImage};
use crate::error::{self, Error, Result};
use crate::model::Avatar;
use crate::pose::{resample, PoseSequence};
use crate::render::{render_sequence, video};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, Copy, Default)]
pub struct GenerateOptions {
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
}

fn load_all<T: Send>(n: usize, load: impl Fn(usize) -> Result<T> + Sync) -> Vec<std::result::Result<T, String>> {
    (0..n).into_par_iter().map(|k| load(k).map_err(|e| e.to_string())).collect()
}

/// Renders, composites and indexes every planned video under
/// `spec.output_root`. A failing job is recorded in the manifest without
/// stopping the others; the returned error covers only setup and the manifest.
pub fn generate(spec: &DatasetSpec, options: GenerateOptions) -> Result<Manifest> {
    spec.validate()?;
    let jobs = plan_jobs(spec)?;
    let root = &spec.output_root;
    error::create_dir_all(root)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = options.jobs {
        if n == 0 {
            return Err(Error::InvalidArgument("jobs must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Internal(e.to_string()))?;

    let (references, identities, backgrounds) = pool.install(|| {
        let references = load_all(spec.references.len(), |i| {
            let seq = PoseSequence::load(&spec.references[i].pose)?;
            Ok(resample(&seq, &spec.normalization))
        });
        let identities = load_all(spec.identities.len(), |j| Avatar::load(&spec.identities[j].avatar));
        let backgrounds = load_all(spec.backgrounds.len(), |b| {
            let bg = BackgroundImage::load(&spec.backgrounds[b].path)?;
            BackgroundImage::new(spec.backgrounds[b].id.clone(), bg.image)
        });
        (references, identities, backgrounds)
    });

    let groups: Vec<&[Job]> = jobs.chunk_by(|a, b| (a.reference, a.identity) == (b.reference, b.identity)).collect();
    let outcomes: Vec<Vec<std::result::Result<ManifestEntry, JobError>>> = pool.install(|| {
        groups
            .par_iter()
            .map(|group| run_group(spec, root, group, &references, &identities, &backgrounds))
            .collect()
    });

    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for outcome in outcomes.into_iter().flatten() {
        match outcome {
            Ok(e) => entries.push(e),
            Err(e) => {
                log::warn!("{}: {}", e.video_id, e.error);
                errors.push(e);
            }
        }
    }
    let manifest = Manifest::new(entries, errors)?;
    manifest.write(&root.join(MANIFEST_FILE))?;
    Ok(manifest)
}

fn run_group(
    spec: &DatasetSpec,
    root: &Path,
    group: &[Job],
    references: &[std::result::Result<PoseSequence, String>],
    identities: &[std::result::Result<Avatar, String>],
    backgrounds: &[std::result::Result<BackgroundImage, String>],
) -> Vec<std::result::Result<ManifestEntry, JobError>> {
    let (i, j) = (group[0].reference, group[0].identity);
    let fail_all = |msg: &str| {
        group
            .iter()
            .map(|job| Err(JobError { video_id: job.video_id.clone(), error: msg.to_string() }))
            .collect()
    };
    let seq = match &references[i] {
        Ok(s) => s,
        Err(e) => return fail_all(&format!("reference `{}`: {e}", spec.references[i].id)),
    };
    let avatar = match &identities[j] {
        Ok(a) => a,
        Err(e) => return fail_all(&format!("identity `{}`: {e}", spec.identities[j].id)),
    };
    let camera = spec.camera_for(i, j);
    let frames = match render_sequence(avatar, seq, &camera) {
        Ok(f) => f,
        Err(e) => return fail_all(&e.to_string()),
    };
    let entry = |job: &Job, kind: VideoKind, background_id: Option<String>| ManifestEntry {
        video_id: job.video_id.clone(),
        kind,
        class_label: spec.references[i].class_label.clone(),
        reference_id: spec.references[i].id.clone(),
        identity_id: spec.identities[j].id.clone(),
        background_id,
        frames_dir: job.video_id.clone(),
        fps: seq.fps,
        num_frames: frames.len(),
        seed: spec.seed,
    };
    group
        .iter()
        .map(|job| {
            let dir = root.join(&job.video_id);
            let result = match job.kind {
                JobKind::White => video::write_framebuffers(&dir, &frames, seq.fps).map(|_| entry(job, VideoKind::White, None)),
                JobKind::Composited { background, .. } => match &backgrounds[background] {
                    Err(e) => Err(Error::InvalidArgument(format!("background `{}`: {e}", spec.backgrounds[background].id))),
                    Ok(bg) => composite_to_dir(&frames, bg, &spec.placement, seq.fps, &dir)
                        .map(|_| entry(job, VideoKind::Composited, Some(bg.id.clone()))),
                },
            };
            result.map_err(|e| JobError { video_id: job.video_id.clone(), error: e.to_string() })
        })
        .collect()
}
