use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use clap::{Args, ValueEnum};
use reenact_core::compositor::{composite_to_dir, BackgroundImage};
use reenact_core::dataset::{generate, splitmix64, DatasetSpec, GenerateOptions, PlanCounts, MANIFEST_FILE};
use reenact_core::fitting::{fit_colors, fit_opacities, FitReport, FitTarget};
use reenact_core::model::{humanoid, Avatar};
use reenact_core::pose::{keypoints_to_pose, resample, KeypointSequence, PoseSequence};
use reenact_core::render::{render_sequence, video, WHITE};
use reenact_eval::pool::{FeatureStore, VideoPool};
use reenact_eval::{ExperimentRegistry, Split};
use serde::Serialize;

use crate::config::RunConfig;
use crate::{discover, InputError};

/// Everything a subcommand may read; all writes go under `out`.
pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    /// `--seed` was given; it replaces the configured evaluation seeds.
    pub seed_override: bool,
    pub jobs: Option<usize>,
}

impl Context {
    pub fn out(&self) -> &Path {
        &self.config.paths.output
    }

    /// `out/<dir>/<name>`, refusing names that could escape the output root.
    fn output_path(&self, dir: &str, name: &str) -> Result<PathBuf> {
        let bad = name.is_empty()
            || name == "."
            || name == ".."
            || name.contains(['/', '\\', '\0']);
        if bad {
            return Err(InputError(format!("`{name}` is not a valid output name")).into());
        }
        let parent = self.out().join(dir);
        std::fs::create_dir_all(&parent).with_context(|| format!("creating {}", parent.display()))?;
        Ok(parent.join(name))
    }
}

pub trait Command {
    fn run(&self, ctx: &Context) -> Result<()>;
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let text = serde_json::to_string_pretty(value).context("serializing output")?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn name_seed(seed: u64, name: &str) -> u64 {
    name.bytes().fold(splitmix64(seed), |h, b| splitmix64(h ^ b as u64))
}

#[derive(Debug, Args)]
pub struct MakeAvatar {
    /// Identity name; the avatar is written to <out>/avatars/<id>.json.
    #[arg(long)]
    pub id: String,
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub splats_per_bone: Option<usize>,
}

impl Command for MakeAvatar {
    fn run(&self, ctx: &Context) -> Result<()> {
        let mut params = humanoid::BodyParams::random(name_seed(ctx.seed, &self.id));
        if let Some(h) = self.height {
            if !(h.is_finite() && (0.5..=2.5).contains(&h)) {
                return Err(InputError(format!("--height {h} outside [0.5, 2.5] m")).into());
            }
            params.height = h;
        }
        if let Some(n) = self.splats_per_bone {
            params.splats_per_bone = n;
        }
        let avatar = humanoid::build_avatar(&self.id, &params)?;
        let path = self.output_path(ctx)?;
        avatar.save(&path)?;
        log::info!("wrote {} ({} splats)", path.display(), avatar.splats().len());
        Ok(())
    }
}

impl MakeAvatar {
    fn output_path(&self, ctx: &Context) -> Result<PathBuf> {
        Ok(ctx.output_path("avatars", &self.id)?.with_extension("json"))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StreamKind {
    Identity,
    Reference,
}

#[derive(Debug, Args)]
pub struct PreparePose {
    /// Pose sequence (or keypoint sequence with --keypoints) to normalize.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "reference")]
    pub kind: StreamKind,
    /// Treat the input as 3-D keypoints of the built-in humanoid.
    #[arg(long)]
    pub keypoints: bool,
    /// Output name under <out>/poses; defaults to the input stem.
    #[arg(long)]
    pub name: Option<String>,
}

impl Command for PreparePose {
    fn run(&self, ctx: &Context) -> Result<()> {
        let seq = if self.keypoints {
            let kp = KeypointSequence::load(&self.input)?;
            keypoints_to_pose(&kp, &humanoid::skeleton(1.75))?
        } else {
            PoseSequence::load(&self.input)?
        };
        let policy = match self.kind {
            StreamKind::Identity => &ctx.config.normalization.identity,
            StreamKind::Reference => &ctx.config.normalization.reference,
        };
        let out = resample(&seq, policy);
        let name = self.name.clone().unwrap_or_else(|| file_stem(&self.input));
        let path = ctx.output_path("poses", &name)?.with_extension("json");
        out.save(&path)?;
        log::info!("wrote {} ({} frames @ {} fps)", path.display(), out.len(), out.fps);
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct Animate {
    #[arg(long)]
    pub avatar: PathBuf,
    #[arg(long)]
    pub pose: PathBuf,
    /// Output name under <out>/videos; defaults to <avatar>_<pose>.
    #[arg(long)]
    pub name: Option<String>,
}

impl Command for Animate {
    fn run(&self, ctx: &Context) -> Result<()> {
        let avatar = Avatar::load(&self.avatar)?;
        let seq = PoseSequence::load(&self.pose)?;
        let cam = &ctx.config.camera;
        let frames = render_sequence(&avatar, &seq, cam)?;
        let name = self
            .name
            .clone()
            .unwrap_or_else(|| format!("{}_{}", file_stem(&self.avatar), file_stem(&self.pose)));
        let dir = ctx.output_path("videos", &name)?;
        video::write_framebuffers(&dir, &frames, seq.fps)?;
        // Pose and camera alongside the frames make the video a fitting target.
        seq.save(&dir.join("pose.json"))?;
        cam.save(&dir.join("camera.json"))?;
        log::info!("wrote {} frames to {}", frames.len(), dir.display());
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct Composite {
    /// White-background video directory (as written by `animate`).
    #[arg(long)]
    pub video: PathBuf,
    #[arg(long)]
    pub background: PathBuf,
    /// Output name under <out>/composites; defaults to <video>_<background>.
    #[arg(long)]
    pub name: Option<String>,
}

impl Command for Composite {
    fn run(&self, ctx: &Context) -> Result<()> {
        let meta = video::read_meta(&self.video)?;
        let frames = video::read_framebuffers(&self.video, WHITE)?;
        let bg = BackgroundImage::load(&self.background)?;
        let name = self
            .name
            .clone()
            .unwrap_or_else(|| format!("{}_{}", file_stem(&self.video), bg.id));
        let dir = ctx.output_path("composites", &name)?;
        composite_to_dir(&frames, &bg, &ctx.config.placement, meta.fps, &dir)?;
        log::info!("wrote {} frames to {}", frames.len(), dir.display());
        Ok(())
    }
}

fn dataset_spec(ctx: &Context) -> Result<DatasetSpec> {
    let c = &ctx.config;
    let mut spec = DatasetSpec::new(
        c.classes.clone(),
        discover::references(&c.paths.poses)?,
        discover::identities(&c.paths.avatars)?,
        discover::backgrounds(&c.paths.backgrounds)?,
        c.g,
        ctx.seed,
        c.normalization.reference,
        c.camera.clone(),
        ctx.out().join("dataset"),
    )?;
    spec.camera_jitter = c.camera_jitter;
    spec.placement = c.placement;
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Args)]
pub struct GenDataset {}

impl Command for GenDataset {
    fn run(&self, ctx: &Context) -> Result<()> {
        let spec = dataset_spec(ctx)?;
        std::fs::create_dir_all(&spec.output_root).with_context(|| format!("creating {}", spec.output_root.display()))?;
        std::fs::write(spec.output_root.join("spec.json"), spec.to_document()).context("writing spec.json")?;
        let manifest = generate(&spec, GenerateOptions { jobs: ctx.jobs })?;
        log::info!(
            "{} videos written, {} failed; manifest at {}",
            manifest.entries.len(),
            manifest.errors.len(),
            spec.output_root.join(MANIFEST_FILE).display()
        );
        for e in &manifest.errors {
            log::warn!("{}: {}", e.video_id, e.error);
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct Fit {
    #[arg(long)]
    pub avatar: PathBuf,
    /// Directory with frames, pose.json and camera.json (as written by `animate`).
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    /// Output name; the avatar goes to <out>/avatars/<name>.json.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Serialize)]
struct FitSummary {
    seed: u64,
    colors: FitReport,
    opacities: FitReport,
}

impl Command for Fit {
    fn run(&self, ctx: &Context) -> Result<()> {
        let avatar = Avatar::load(&self.avatar)?;
        let target = FitTarget::load(&self.target)?;
        let (colored, colors) = fit_colors(&avatar, &target)?;
        let (fitted, opacities) = fit_opacities(&colored, &target, self.steps)?;
        let name = self.name.clone().unwrap_or_else(|| format!("{}_fit", avatar.id));
        let path = ctx.output_path("avatars", &name)?.with_extension("json");
        fitted.save(&path)?;
        let report = ctx.output_path("fit", &name)?.with_extension("json");
        log::info!(
            "loss {:.6} -> {:.6}; wrote {}",
            colors.initial_loss,
            opacities.final_loss,
            path.display()
        );
        write_json(&report, &FitSummary { seed: ctx.seed, colors, opacities })?;
        Ok(())
    }
}

fn run_experiments(ctx: &Context, names: &[&str]) -> Result<()> {
    let section = ctx
        .config
        .experiment
        .as_ref()
        .ok_or_else(|| InputError("config has no `experiment` section".into()))?;
    let mut protocol = section.protocol.clone();
    if ctx.seed_override {
        protocol.seeds = vec![ctx.seed];
    }
    let real = VideoPool::from_manifests(&section.real_manifests)?;
    let synthetic = VideoPool::from_manifest(&section.synthetic_manifest)?;
    let store = FeatureStore::extract(&[&real, &synthetic])?;
    let split = Split::new(&protocol, &real, &synthetic, &store)?;
    let registry = ExperimentRegistry::default();
    for name in names {
        let experiment = registry.get(name).expect("registered experiment");
        let result = experiment.run(&protocol, &split)?;
        let dir = ctx.output_path("eval", name)?;
        result.save(&dir)?;
        eprint!("{}", result.table());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalBaseline {}

impl Command for EvalBaseline {
    fn run(&self, ctx: &Context) -> Result<()> {
        run_experiments(ctx, &["baseline"])
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Shots {
    OneShot,
    FewShot,
    All,
}

#[derive(Debug, Args)]
pub struct EvalShots {
    #[arg(long, value_enum, default_value = "all")]
    pub experiment: Shots,
}

impl Command for EvalShots {
    fn run(&self, ctx: &Context) -> Result<()> {
        match self.experiment {
            Shots::OneShot => run_experiments(ctx, &["one-shot"]),
            Shots::FewShot => run_experiments(ctx, &["few-shot"]),
            Shots::All => run_experiments(ctx, &["one-shot", "few-shot"]),
        }
    }
}

#[derive(Debug, Args)]
pub struct Validate {}

impl Command for Validate {
    fn run(&self, ctx: &Context) -> Result<()> {
        let spec = dataset_spec(ctx)?;
        let mut joints = None;
        for r in &spec.references {
            let seq = PoseSequence::load(&r.pose)?;
            joints.get_or_insert(seq.joint_count());
            if joints != Some(seq.joint_count()) {
                return Err(InputError(format!("{}: reference joint counts differ", r.pose.display())).into());
            }
        }
        for a in &spec.identities {
            let avatar = Avatar::load(&a.avatar)?;
            if let Some(j) = joints {
                if avatar.skeleton().len() != j {
                    return Err(InputError(format!(
                        "{}: avatar has {} joints, references have {j}",
                        a.avatar.display(),
                        avatar.skeleton().len()
                    ))
                    .into());
                }
            }
        }
        for b in &spec.backgrounds {
            BackgroundImage::load(&b.path)?;
        }
        let counts = PlanCounts::of(&spec);
        println!(
            "references {}  identities {}  backgrounds {}  g {}",
            spec.n_references(),
            spec.n_identities(),
            spec.backgrounds.len(),
            spec.g
        );
        println!("white videos {}", counts.white);
        println!("composited videos {}", counts.composited);
        Ok(())
    }
}
