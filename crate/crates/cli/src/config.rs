use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use reenact_core::compositor::PlacementPolicy;
use reenact_core::dataset::CameraJitter;
use reenact_core::model::humanoid;
use reenact_core::pose::NormalizationPolicy;
use reenact_core::render::Camera;
use reenact_eval::ExperimentConfig;
use serde::Deserialize;

use crate::InputError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub avatars: PathBuf,
    pub poses: PathBuf,
    pub backgrounds: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    #[serde(default = "identity_policy")]
    pub identity: NormalizationPolicy,
    #[serde(default = "reference_policy")]
    pub reference: NormalizationPolicy,
}

fn identity_policy() -> NormalizationPolicy {
    NormalizationPolicy::IDENTITY
}

fn reference_policy() -> NormalizationPolicy {
    NormalizationPolicy::REFERENCE
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            identity: identity_policy(),
            reference: reference_policy(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub real_manifests: Vec<PathBuf>,
    pub synthetic_manifest: PathBuf,
    pub protocol: ExperimentConfig,
}

fn default_camera() -> Camera {
    humanoid::framing_camera(128, 128, 0.0)
}

fn default_g() -> usize {
    3
}

/// The shared configuration file of every subcommand.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default = "default_camera")]
    pub camera: Camera,
    #[serde(default)]
    pub placement: PlacementPolicy,
    #[serde(default = "default_g")]
    pub g: usize,
    #[serde(default)]
    pub camera_jitter: Option<CameraJitter>,
    #[serde(default)]
    pub classes: Option<Vec<String>>,
    #[serde(default)]
    pub experiment: Option<EvalSection>,
}

impl RunConfig {
    /// Parses, resolves paths relative to the file and checks invariants.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve(base);
        config
            .validate()
            .map_err(|e| InputError(format!("{}: {e:#}", path.display())))?;
        Ok(config)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.avatars);
        fix(&mut self.paths.poses);
        fix(&mut self.paths.backgrounds);
        fix(&mut self.paths.output);
        if let Some(e) = &mut self.experiment {
            e.real_manifests.iter_mut().for_each(fix);
            fix(&mut e.synthetic_manifest);
        }
    }

    fn validate(&self) -> Result<()> {
        if self.version != 1 {
            bail!("version: unsupported version {}", self.version);
        }
        for (field, dir) in [
            ("paths.avatars", &self.paths.avatars),
            ("paths.poses", &self.paths.poses),
            ("paths.backgrounds", &self.paths.backgrounds),
        ] {
            if !dir.is_dir() {
                bail!("{field}: directory {} does not exist", dir.display());
            }
        }
        self.normalization.identity.validate().context("normalization.identity")?;
        self.normalization.reference.validate().context("normalization.reference")?;
        self.camera.validate().context("camera")?;
        self.placement.validate().context("placement")?;
        if let Some(e) = &self.experiment {
            e.protocol.validate().context("experiment.protocol")?;
        }
        Ok(())
    }

    /// Applies `--out` and `--resolution`.
    pub fn apply_overrides(&mut self, out: Option<&Path>, resolution: Option<(u32, u32)>) {
        if let Some(out) = out {
            self.paths.output = out.to_path_buf();
        }
        if let Some((w, h)) = resolution {
            self.camera = self.camera.with_resolution(w, h);
        }
    }
}

pub fn parse_resolution(s: &str) -> std::result::Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w: u32 = w.parse().map_err(|_| format!("bad width in `{s}`"))?;
    let h: u32 = h.parse().map_err(|_| format!("bad height in `{s}`"))?;
    if w == 0 || h == 0 {
        return Err("resolution must be positive".into());
    }
    Ok((w, h))
}
