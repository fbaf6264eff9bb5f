//! A seeded desk-scale action benchmark: scripted motion classes rendered
//! on procedural identities and backgrounds.
//!
//! Synthetic training videos use ten training identities, a training
//! background pool and a clean camera. "Real" videos use three held-out
//! identities, held-out backgrounds and a jittered camera; one of them
//! supplies the real training pool, the other two the test pool.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reenact_core::dataset::{
    generate, mix_seed, BackgroundEntry, CameraJitter, DatasetSpec, GenerateOptions, IdentityEntry, ReferenceEntry,
    MANIFEST_FILE,
};
use reenact_core::math::{Quat, Vec3};
use reenact_core::model::humanoid::{self, joint};
use reenact_core::model::Pose;
use reenact_core::pose::{NormalizationPolicy, PoseSequence};
use reenact_core::render::{video, RgbImage};
use serde::{Deserialize, Serialize};

use crate::classifier::TrainConfig;
use crate::error::Result;
use crate::protocol::ExperimentConfig;

pub const CLASSES: [&str; 8] = ["wave_right", "wave_left", "clap", "kick", "squat", "jump", "bow", "raise_arms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfig {
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub clip_seconds: f64,
    pub fps: f64,
    pub camera_yaw: f64,
    pub synthetic_references_per_class: usize,
    pub training_identities: usize,
    pub synthetic_backgrounds: usize,
    /// Backgrounds per synthetic (reference, identity) pair.
    pub g: usize,
    pub real_train_references_per_class: usize,
    pub real_test_references_per_class: usize,
    pub real_backgrounds: usize,
    pub real_g: usize,
    pub jitter: CameraJitter,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            width: 64,
            height: 64,
            clip_seconds: 2.0,
            fps: 12.0,
            camera_yaw: 0.35,
            synthetic_references_per_class: 5,
            training_identities: 10,
            synthetic_backgrounds: 20,
            g: 4,
            real_train_references_per_class: 5,
            real_test_references_per_class: 4,
            real_backgrounds: 8,
            real_g: 2,
            jitter: CameraJitter {
                focal_frac: 0.08,
                rotation_deg: 3.0,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct ToyBenchmark {
    pub synthetic_manifest: PathBuf,
    /// Real training and real test manifests.
    pub real_manifests: Vec<PathBuf>,
    pub test_identities: Vec<String>,
    pub classes: Vec<String>,
}

impl ToyBenchmark {
    /// A protocol configuration sized to this benchmark's pools. The
    /// baseline adds as many synthetic videos per class as there are real ones.
    pub fn experiment_config(&self, config: &ToyConfig, seeds: Vec<u64>) -> ExperimentConfig {
        let n_real = config.real_train_references_per_class * config.real_g;
        ExperimentConfig {
            n_real,
            n_background: n_real,
            n_test: config.real_test_references_per_class * 2 * config.real_g,
            classes: self.classes.clone(),
            seeds,
            curve_steps: vec![0, 50, 100, 150, 200],
            test_identities: self.test_identities.clone(),
            training: TrainConfig::default(),
        }
    }

    /// Re-opens a benchmark previously built under `dir`.
    pub fn open(dir: &Path) -> Self {
        Self {
            synthetic_manifest: dir.join("syn").join(MANIFEST_FILE),
            real_manifests: vec![dir.join("rtr").join(MANIFEST_FILE), dir.join("rte").join(MANIFEST_FILE)],
            test_identities: vec!["R1".into(), "R2".into()],
            classes: CLASSES.iter().map(|c| c.to_string()).collect(),
        }
    }
}

/// Per-reference variation of a scripted motion.
#[derive(Debug, Clone, Copy)]
struct Style {
    duration: f64,
    phase: f64,
    amplitude: f64,
    tempo: f64,
    drift: f64,
    lean: f64,
}

impl Style {
    fn random(rng: &mut impl Rng) -> Self {
        Self {
            duration: rng.gen_range(1.6..2.5),
            phase: rng.gen_range(0.0..1.0),
            amplitude: rng.gen_range(0.8..1.2),
            tempo: rng.gen_range(0.8..1.25),
            drift: rng.gen_range(-0.12..0.12),
            lean: rng.gen_range(-0.08..0.08),
        }
    }
}

fn rx(a: f64) -> Quat {
    Quat::from_axis_angle(&Vec3::x_axis(), a)
}

fn ry(a: f64) -> Quat {
    Quat::from_axis_angle(&Vec3::y_axis(), a)
}

fn rz(a: f64) -> Quat {
    Quat::from_axis_angle(&Vec3::z_axis(), a)
}

/// Pose of class `class` at normalized time `u` in `[0, 1]`.
fn scripted_pose(class: usize, u: f64, s: &Style) -> Pose {
    let mut p = Pose::identity(humanoid::JOINT_NAMES.len());
    let a = s.amplitude;
    let osc = |cycles: f64| (2.0 * PI * (cycles * s.tempo * u + s.phase)).sin();
    // Smooth 0 -> 1 -> 0 envelope over the clip.
    let bump = (PI * u).sin().powi(2);
    p.root_t = Vec3::new(s.drift * (u - 0.5), 0.0, 0.0);
    p.rots[joint::SPINE1] = rz(s.lean);
    match CLASSES[class] {
        "wave_right" => {
            p.rots[joint::R_SHOULDER] = rz(-2.5 * a);
            p.rots[joint::R_ELBOW] = rz(-0.6 * a * osc(3.0));
        }
        "wave_left" => {
            p.rots[joint::L_SHOULDER] = rz(2.5 * a);
            p.rots[joint::L_ELBOW] = rz(0.6 * a * osc(3.0));
        }
        "clap" => {
            let open = 0.5 + 0.5 * osc(3.0);
            p.rots[joint::L_SHOULDER] = rx(-1.3 * a) * rz(0.9 * open);
            p.rots[joint::R_SHOULDER] = rx(-1.3 * a) * rz(-0.9 * open);
            p.rots[joint::L_ELBOW] = rx(-0.4);
            p.rots[joint::R_ELBOW] = rx(-0.4);
        }
        "kick" => {
            let k = (0.5 + 0.5 * osc(1.5)).powi(2);
            p.rots[joint::R_HIP] = rx(-1.3 * a * k);
            p.rots[joint::R_KNEE] = rx(1.8 * k * (1.0 - k));
            p.rots[joint::L_SHOULDER] = rz(0.4 * k);
            p.rots[joint::R_SHOULDER] = rz(-0.4 * k);
        }
        "squat" => {
            let d = 0.5 - 0.5 * (2.0 * PI * (1.5 * s.tempo * u + s.phase)).cos();
            let bend = 1.2 * a * d;
            p.rots[joint::L_HIP] = rx(-bend);
            p.rots[joint::R_HIP] = rx(-bend);
            p.rots[joint::L_KNEE] = rx(2.0 * bend);
            p.rots[joint::R_KNEE] = rx(2.0 * bend);
            p.rots[joint::L_ANKLE] = rx(-bend);
            p.rots[joint::R_ANKLE] = rx(-bend);
            p.rots[joint::L_SHOULDER] = rx(-1.2 * d);
            p.rots[joint::R_SHOULDER] = rx(-1.2 * d);
            let thigh = 0.42;
            p.root_t.y -= 2.0 * thigh * (1.0 - bend.cos());
        }
        "jump" => {
            let hop = (2.0 * PI * (2.0 * s.tempo * u + s.phase)).sin().max(0.0);
            p.root_t.y += 0.35 * a * hop;
            let crouch = 0.3 * (1.0 - hop);
            p.rots[joint::L_KNEE] = rx(crouch);
            p.rots[joint::R_KNEE] = rx(crouch);
            p.rots[joint::L_SHOULDER] = rz(1.2 * hop);
            p.rots[joint::R_SHOULDER] = rz(-1.2 * hop);
        }
        "bow" => {
            let b = 1.0 * a * bump;
            p.rots[joint::SPINE1] = rz(s.lean) * rx(0.6 * b);
            p.rots[joint::SPINE2] = rx(0.4 * b);
            p.rots[joint::NECK] = rx(0.3 * b);
        }
        "raise_arms" => {
            let r = 2.7 * a * bump;
            p.rots[joint::L_SHOULDER] = rz(r);
            p.rots[joint::R_SHOULDER] = rz(-r);
            p.rots[joint::SPINE3] = ry(0.1 * osc(1.0));
        }
        other => unreachable!("unknown toy class {other}"),
    }
    p
}

/// A 30 fps source clip of class `class`, to be normalized by the dataset spec.
pub fn scripted_sequence(class: usize, seed: u64) -> PoseSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let style = Style::random(&mut rng);
    let fps = 30.0;
    let n = (style.duration * fps).round() as usize;
    let frames = (0..n)
        .map(|k| scripted_pose(class, k as f64 / (n - 1) as f64, &style))
        .collect();
    PoseSequence::new(fps, frames, "humanoid24").expect("scripted clips are well formed")
}

/// A procedural texture: a tinted gradient with stripes and speckle.
pub fn procedural_background(width: u32, height: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: [f64; 3] = [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)];
    let tint: [f64; 3] = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
    let freq = rng.gen_range(2.0..9.0);
    let angle: f64 = rng.gen_range(0.0..PI);
    let contrast = rng.gen_range(0.0..0.15);
    let mut img = RgbImage::filled(width, height, base);
    for y in 0..height {
        for x in 0..width {
            let (u, v) = (x as f64 / width as f64, y as f64 / height as f64);
            let stripe = contrast * (2.0 * PI * freq * (u * angle.cos() + v * angle.sin())).sin();
            let noise = rng.gen_range(-0.03..0.03);
            let px = &mut img.pixels[(y * width + x) as usize];
            for c in 0..3 {
                px[c] = (base[c] + tint[c] * v + stripe + noise).clamp(0.0, 1.0);
            }
        }
    }
    img
}

struct Streams;

impl Streams {
    const SYNTHETIC_MOTION: usize = 11;
    const REAL_TRAIN_MOTION: usize = 12;
    const REAL_TEST_MOTION: usize = 13;
    const TRAINING_IDENTITY: usize = 21;
    const HELD_OUT_IDENTITY: usize = 22;
    const SYNTHETIC_BACKGROUND: usize = 31;
    const REAL_BACKGROUND: usize = 32;
}

fn write_references(dir: &Path, seed: u64, stream: usize, per_class: usize) -> Result<Vec<ReferenceEntry>> {
    let mut out = Vec::new();
    for (c, class) in CLASSES.iter().enumerate() {
        for r in 0..per_class {
            let path = dir.join(class).join(format!("{r:03}.json"));
            std::fs::create_dir_all(path.parent().expect("has parent")).map_err(|source| reenact_core::Error::Write {
                path: path.clone(),
                source,
            })?;
            scripted_sequence(c, mix_seed(seed, stream, c * 1000 + r)).save(&path)?;
            out.push(ReferenceEntry {
                id: format!("{class}/{r:03}"),
                class_label: class.to_string(),
                pose: path,
            });
        }
    }
    Ok(out)
}

fn write_identities(dir: &Path, seed: u64, stream: usize, names: &[String]) -> Result<Vec<IdentityEntry>> {
    names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let params = humanoid::BodyParams::random(mix_seed(seed, stream, k));
            let path = dir.join(format!("{name}.json"));
            humanoid::build_avatar(name, &params)?.save(&path)?;
            Ok(IdentityEntry {
                id: name.clone(),
                avatar: path,
            })
        })
        .collect()
}

fn write_backgrounds(dir: &Path, config: &ToyConfig, stream: usize, prefix: &str, count: usize) -> Result<Vec<BackgroundEntry>> {
    (0..count)
        .map(|k| {
            let id = format!("{prefix}{k:02}");
            let path = dir.join(format!("{id}.png"));
            let img = procedural_background(config.width, config.height, mix_seed(config.seed, stream, k));
            video::save_png_rgb(&path, &img)?;
            Ok(BackgroundEntry { id, path })
        })
        .collect()
}

/// Writes inputs and generates all three datasets under `dir`.
pub fn build_toy_benchmark(dir: &Path, config: &ToyConfig, options: GenerateOptions) -> Result<ToyBenchmark> {
    let seed = config.seed;
    let policy = NormalizationPolicy::new(config.clip_seconds, config.fps)?;
    let camera = humanoid::framing_camera(config.width, config.height, config.camera_yaw);
    let input = dir.join("inputs");
    for sub in ["poses/synthetic", "poses/real_train", "poses/real_test", "avatars", "backgrounds"] {
        std::fs::create_dir_all(input.join(sub)).map_err(|source| reenact_core::Error::Write {
            path: input.join(sub),
            source,
        })?;
    }

    let training: Vec<String> = (0..config.training_identities).map(|k| format!("T{k}")).collect();
    let held_out: Vec<String> = (0..3).map(|k| format!("R{k}")).collect();
    let training_ids = write_identities(&input.join("avatars"), seed, Streams::TRAINING_IDENTITY, &training)?;
    let held_out_ids = write_identities(&input.join("avatars"), seed, Streams::HELD_OUT_IDENTITY, &held_out)?;
    let synthetic_bgs = write_backgrounds(&input.join("backgrounds"), config, Streams::SYNTHETIC_BACKGROUND, "train", config.synthetic_backgrounds)?;
    let real_bgs = write_backgrounds(&input.join("backgrounds"), config, Streams::REAL_BACKGROUND, "heldout", config.real_backgrounds)?;

    let spec = |refs: Vec<ReferenceEntry>, ids: Vec<IdentityEntry>, bgs: Vec<BackgroundEntry>, g: usize, name: &str, stream: usize, jitter: bool| {
        let mut spec = DatasetSpec::new(
            Some(CLASSES.iter().map(|c| c.to_string()).collect()),
            refs,
            ids,
            bgs,
            g,
            mix_seed(seed, stream, 0),
            policy,
            camera.clone(),
            dir.join(name),
        )?;
        spec.video_prefix = format!("{name}_");
        if jitter {
            spec.camera_jitter = Some(config.jitter);
        }
        spec.validate()?;
        Ok::<_, crate::error::EvalError>(spec)
    };

    let synthetic = spec(
        write_references(&input.join("poses/synthetic"), seed, Streams::SYNTHETIC_MOTION, config.synthetic_references_per_class)?,
        training_ids,
        synthetic_bgs,
        config.g,
        "syn",
        41,
        false,
    )?;
    let real_train = spec(
        write_references(&input.join("poses/real_train"), seed, Streams::REAL_TRAIN_MOTION, config.real_train_references_per_class)?,
        held_out_ids[..1].to_vec(),
        real_bgs.clone(),
        config.real_g,
        "rtr",
        42,
        true,
    )?;
    let real_test = spec(
        write_references(&input.join("poses/real_test"), seed, Streams::REAL_TEST_MOTION, config.real_test_references_per_class)?,
        held_out_ids[1..].to_vec(),
        real_bgs,
        config.real_g,
        "rte",
        43,
        true,
    )?;

    for s in [&synthetic, &real_train, &real_test] {
        let manifest = generate(s, options)?;
        if let Some(e) = manifest.errors.first() {
            return Err(crate::error::EvalError::InvalidArgument(format!("toy generation failed for {}: {}", e.video_id, e.error)));
        }
    }
    Ok(ToyBenchmark::open(dir))
}
