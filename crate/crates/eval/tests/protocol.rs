use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reenact_core::dataset::{ManifestEntry, VideoKind};
use reenact_eval::classifier::TrainConfig;
use reenact_eval::features::FeatureVector;
use reenact_eval::pool::{FeatureStore, PooledVideo, VideoPool};
use reenact_eval::{Baseline, EvalError, Experiment, ExperimentConfig, ExperimentRegistry, ShotCurve, Split};

const CLASSES: [&str; 3] = ["clap", "jump", "wave"];

/// Class `c` features cluster around a class-specific mean; `noise` widens them.
fn add_videos(
    videos: &mut Vec<PooledVideo>,
    store: &mut FeatureStore,
    rng: &mut ChaCha8Rng,
    prefix: &str,
    identities: &[&str],
    per_class_identity: usize,
    shift: f64,
) {
    for (c, class) in CLASSES.iter().enumerate() {
        for id in identities {
            for k in 0..per_class_identity {
                let video_id = format!("{prefix}_{class}_{id}_{k:03}");
                let values = (0..6)
                    .map(|d| if d == c { 1.0 + shift } else { 0.0 } + rng.gen_range(-0.9..0.9))
                    .collect();
                store.insert(video_id.clone(), FeatureVector { values });
                videos.push(PooledVideo {
                    entry: ManifestEntry {
                        video_id: video_id.clone(),
                        kind: VideoKind::Composited,
                        class_label: class.to_string(),
                        reference_id: format!("{class}/{k}"),
                        identity_id: id.to_string(),
                        background_id: Some("bg".into()),
                        frames_dir: video_id,
                        fps: 12.0,
                        num_frames: 24,
                        seed: 0,
                    },
                    frames_dir: "unused".into(),
                });
            }
        }
    }
}

fn setup(per_class_synth: usize) -> (VideoPool, VideoPool, FeatureStore) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut store = FeatureStore::default();
    let mut real = Vec::new();
    let mut synth = Vec::new();
    add_videos(&mut real, &mut store, &mut rng, "rtr", &["R0"], 10, 0.3);
    add_videos(&mut real, &mut store, &mut rng, "rte", &["R1", "R2"], 10, 0.3);
    add_videos(&mut synth, &mut store, &mut rng, "syn", &["T0", "T1"], per_class_synth / 2, 0.0);
    (VideoPool::new(real).unwrap(), VideoPool::new(synth).unwrap(), store)
}

fn config() -> ExperimentConfig {
    ExperimentConfig {
        n_real: 3,
        n_background: 20,
        n_test: 15,
        classes: CLASSES.iter().map(|s| s.to_string()).collect(),
        seeds: vec![1, 2, 3],
        curve_steps: vec![0, 10, 20],
        test_identities: vec!["R1".into(), "R2".into()],
        training: TrainConfig { epochs: 100, ..TrainConfig::default() },
    }
}

#[test]
fn zero_synthetic_baseline_gives_equal_accuracies() {
    let (real, synth, store) = setup(40);
    let cfg = ExperimentConfig { n_background: 0, ..config() };
    let split = Split::new(&cfg, &real, &synth, &store).unwrap();
    let result = Baseline.run(&cfg, &split).unwrap();
    for s in &result.per_seed {
        assert_eq!(s.accuracies[0], s.accuracies[1]);
    }
    assert_eq!(result.columns.len(), 2);
}

#[test]
fn curve_step_zero_matches_real_only_baseline() {
    let (real, synth, store) = setup(40);
    let cfg = config();
    let split = Split::new(&cfg, &real, &synth, &store).unwrap();
    let curve = ShotCurve::new("few", 5).run(&cfg, &split).unwrap();
    assert_eq!(curve.config.n_real, 5);
    let base = Baseline.run(&ExperimentConfig { n_real: 5, n_background: 0, ..cfg.clone() }, &split).unwrap();
    for (c, b) in curve.per_seed.iter().zip(&base.per_seed) {
        assert_eq!(c.accuracies.len(), 3);
        assert_eq!(c.accuracies[0], b.accuracies[0]);
    }
}

#[test]
fn runs_are_deterministic() {
    let (real, synth, store) = setup(40);
    let cfg = config();
    let split = Split::new(&cfg, &real, &synth, &store).unwrap();
    let a = ShotCurve::new("one", 1).run(&cfg, &split).unwrap();
    let b = ShotCurve::new("one", 1).run(&cfg, &split).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn test_pool_is_disjoint_from_training() {
    let (real, synth, store) = setup(40);
    let split = Split::new(&config(), &real, &synth, &store).unwrap();
    assert_eq!(split.test.len(), 15 * 3);
    assert!(split.test.iter().all(|s| s.identity_id == "R1" || s.identity_id == "R2"));
    assert!(split.real.iter().flatten().all(|s| s.identity_id == "R0"));
    assert!(split.check_hygiene().is_ok());
}

#[test]
fn held_out_identity_in_synthetic_pool_is_a_leak() {
    let (real, _, mut store) = setup(40);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut leaky = Vec::new();
    add_videos(&mut leaky, &mut store, &mut rng, "syn", &["R1"], 2, 0.0);
    let synth = VideoPool::new(leaky).unwrap();
    assert!(matches!(Split::new(&config(), &real, &synth, &store), Err(EvalError::SplitLeak(_))));
}

#[test]
fn undersized_pools_are_rejected() {
    let (real, synth, store) = setup(4);
    let cfg = config();
    let split = Split::new(&cfg, &real, &synth, &store).unwrap();
    assert!(matches!(Baseline.run(&cfg, &split), Err(EvalError::InsufficientPool { pool: "synthetic", .. })));
    let cfg = ExperimentConfig { n_test: 50, ..config() };
    assert!(matches!(Split::new(&cfg, &real, &synth, &store), Err(EvalError::InsufficientPool { pool: "test", .. })));
}

#[test]
fn full_sized_config_is_accepted_when_pools_suffice() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut store = FeatureStore::default();
    let (mut real, mut synth) = (Vec::new(), Vec::new());
    add_videos(&mut real, &mut store, &mut rng, "rtr", &["R0"], 225, 0.0);
    add_videos(&mut real, &mut store, &mut rng, "rte", &["R1"], 50, 0.0);
    add_videos(&mut synth, &mut store, &mut rng, "syn", &["T0"], 225, 0.0);
    let cfg = ExperimentConfig {
        n_real: 225,
        n_background: 225,
        n_test: 50,
        seeds: vec![1],
        test_identities: vec!["R1".into()],
        training: TrainConfig { epochs: 5, ..TrainConfig::default() },
        ..config()
    };
    let split = Split::new(&cfg, &VideoPool::new(real).unwrap(), &VideoPool::new(synth).unwrap(), &store).unwrap();
    let result = Baseline.run(&cfg, &split).unwrap();
    assert_eq!(result.per_seed.len(), 1);
}

#[test]
fn synthetic_draws_are_nested() {
    let (real, synth, store) = setup(40);
    let split = Split::new(&config(), &real, &synth, &store).unwrap();
    let small: Vec<_> = split.synthetic_sample(9, 5).iter().map(|s| s.video_id.clone()).collect();
    let large: Vec<_> = split.synthetic_sample(9, 12).iter().map(|s| s.video_id.clone()).collect();
    for class in 0..3 {
        assert_eq!(small[class * 5..class * 5 + 5], large[class * 12..class * 12 + 5]);
    }
    assert_ne!(split.real_sample(1, 3), split.real_sample(2, 3));
}

#[test]
fn registry_knows_the_three_protocols() {
    let reg = ExperimentRegistry::default();
    assert_eq!(reg.names(), vec!["baseline", "one-shot", "few-shot"]);
    assert_eq!(reg.get("one-shot").unwrap().effective_config(&config()).n_real, 1);
    assert_eq!(reg.get("few-shot").unwrap().effective_config(&config()).n_real, 5);
    assert!(reg.get("zero-shot").is_none());
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(ExperimentConfig { n_test: 0, ..config() }.validate().is_err());
    assert!(ExperimentConfig { curve_steps: vec![0, 50, 50], ..config() }.validate().is_err());
    assert!(ExperimentConfig { seeds: vec![], ..config() }.validate().is_err());
}

#[test]
fn results_are_written_as_json_and_table() {
    let (real, synth, store) = setup(40);
    let cfg = config();
    let split = Split::new(&cfg, &real, &synth, &store).unwrap();
    let result = Baseline.run(&cfg, &split).unwrap();
    let dir = tempfile::tempdir().unwrap();
    result.save(dir.path()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("results.json")).unwrap()).unwrap();
    for key in ["experiment", "config", "per_seed", "mean", "std"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json["config"]["seeds"], serde_json::json!([1, 2, 3]));
    let table = std::fs::read_to_string(dir.path().join("results.txt")).unwrap();
    assert!(table.contains("real+synthetic"));
}
