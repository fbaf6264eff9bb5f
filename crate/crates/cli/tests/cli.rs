use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use reenact_core::dataset::Manifest;
use reenact_core::math::{Quat, Vec3};
use reenact_core::model::{humanoid, Pose};
use reenact_core::pose::PoseSequence;
use reenact_core::render::{video, RgbImage};
use serde_json::json;

fn reenact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reenact"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

/// poses/<class>/<r>.json, avatars/<id>.json, backgrounds/<k>.png
fn inputs(dir: &Path, classes: usize, per_class: usize, identities: usize, backgrounds: usize) {
    for c in 0..classes {
        let class_dir = dir.join(format!("poses/c{c:02}"));
        std::fs::create_dir_all(&class_dir).unwrap();
        for r in 0..per_class {
            let frames = (0..4)
                .map(|f| {
                    let mut p = Pose::identity(24);
                    let angle = (c as f64 + 1.0) * 0.2 * f as f64 + r as f64 * 0.05;
                    p.rots[humanoid::joint::R_SHOULDER] = Quat::from_axis_angle(&Vec3::z_axis(), angle);
                    p
                })
                .collect();
            let seq = PoseSequence::new(4.0, frames, "humanoid24").unwrap();
            seq.save(&class_dir.join(format!("r{r}.json"))).unwrap();
        }
    }
    std::fs::create_dir_all(dir.join("avatars")).unwrap();
    for j in 0..identities {
        let mut params = humanoid::BodyParams::random(j as u64);
        params.splats_per_bone = 1;
        let id = format!("a{j:02}");
        humanoid::build_avatar(&id, &params)
            .unwrap()
            .save(&dir.join(format!("avatars/{id}.json")))
            .unwrap();
    }
    std::fs::create_dir_all(dir.join("backgrounds")).unwrap();
    for k in 0..backgrounds {
        let shade = k as f64 / backgrounds.max(1) as f64;
        let img = RgbImage::filled(24, 24, [shade, 0.3, 1.0 - shade]);
        video::save_png_rgb(&dir.join(format!("backgrounds/b{k:02}.png")), &img).unwrap();
    }
}

fn base_config(dir: &Path) -> serde_json::Value {
    json!({
        "version": 1,
        "seed": 1,
        "g": 2,
        "paths": {"avatars": "avatars", "poses": "poses", "backgrounds": "backgrounds", "output": "out"},
        "normalization": {"reference": {"target_seconds": 0.6, "target_fps": 5.0}},
        "camera": serde_json::to_value(humanoid::framing_camera(24, 24, 0.0)).unwrap(),
        "_dir": dir.display().to_string(),
    })
}

fn write_config(dir: &Path, mut value: serde_json::Value) -> PathBuf {
    value.as_object_mut().unwrap().remove("_dir");
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}

#[test]
fn validate_previews_full_scale_counts() {
    let dir = tempfile::tempdir().unwrap();
    inputs(dir.path(), 16, 5, 15, 4);
    let mut cfg = base_config(dir.path());
    cfg["g"] = json!(3);
    let path = write_config(dir.path(), cfg);
    let out = reenact(&["validate", "--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("white videos 1200"), "{stdout}");
    assert!(stdout.contains("composited videos 3600"), "{stdout}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn gen_dataset_is_reproducible_from_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    inputs(dir.path(), 2, 1, 2, 3);
    let path = write_config(dir.path(), base_config(dir.path()));
    let cfg = path.to_str().unwrap();
    let mut manifests = Vec::new();
    for run in ["one", "two"] {
        let out_dir = dir.path().join(run);
        let out = reenact(&["gen-dataset", "--config", cfg, "--seed", "7", "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", text(&out.stderr));
        manifests.push(std::fs::read(out_dir.join("dataset/manifest.jsonl")).unwrap());
    }
    assert_eq!(manifests[0], manifests[1]);
    let m = Manifest::read(&dir.path().join("one/dataset/manifest.jsonl")).unwrap();
    assert_eq!(m.white().count(), 4);
    assert_eq!(m.composited().count(), 8);
    assert!(m.entries.iter().all(|e| e.seed == 7 && e.num_frames == 3));
    let first = m.entries.iter().find(|e| e.background_id.is_some()).unwrap();
    let frame = dir.path().join("one/dataset").join(&first.frames_dir).join("frame_000000.png");
    let again = dir.path().join("two/dataset").join(&first.frames_dir).join("frame_000000.png");
    assert_eq!(std::fs::read(frame).unwrap(), std::fs::read(again).unwrap());
    let spec = std::fs::read_to_string(dir.path().join("one/dataset/spec.json")).unwrap();
    let spec: serde_json::Value = serde_json::from_str(&spec).unwrap();
    assert_eq!(spec["seed"], json!(7));
}

#[test]
fn input_errors_exit_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    inputs(dir.path(), 1, 1, 1, 1);

    let missing = dir.path().join("nope.json");
    let out = reenact(&["validate", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("nope.json"));

    let out = reenact(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    let out = reenact(&["validate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("--config"));

    let mut cfg = base_config(dir.path());
    cfg["normalization"]["reference"]["target_fps"] = json!(-5.0);
    let path = write_config(dir.path(), cfg);
    let out = reenact(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.contains("normalization.reference") && err.contains("target_fps"), "{err}");

    let mut cfg = base_config(dir.path());
    cfg["gee"] = json!(3);
    let path = write_config(dir.path(), cfg);
    let out = reenact(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("gee"));

    // g larger than the single-background pool
    let path = write_config(dir.path(), base_config(dir.path()));
    let out = reenact(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", text(&out.stderr));

    let out = reenact(&["make-avatar", "--config", path.to_str().unwrap(), "--id", "../escape"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("out/escape.json").exists());
}

#[test]
fn single_video_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    inputs(dir.path(), 1, 1, 0, 1);
    let path = write_config(dir.path(), base_config(dir.path()));
    let cfg = path.to_str().unwrap();
    let out_dir = dir.path().join("out");
    let run = |args: &[&str]| {
        let mut all = args.to_vec();
        all.extend(["--config", cfg]);
        let out = reenact(&all);
        assert!(out.status.success(), "{args:?}: {}", text(&out.stderr));
    };

    run(&["make-avatar", "--id", "kim", "--splats-per-bone", "1"]);
    let avatar = out_dir.join("avatars/kim.json");
    assert!(avatar.is_file());

    let pose = dir.path().join("poses/c00/r0.json");
    run(&["prepare-pose", "--input", pose.to_str().unwrap(), "--name", "wave"]);
    let prepared = PoseSequence::load(&out_dir.join("poses/wave.json")).unwrap();
    assert_eq!((prepared.len(), prepared.fps), (3, 5.0));

    run(&["prepare-pose", "--input", pose.to_str().unwrap(), "--kind", "identity", "--name", "long"]);
    assert_eq!(PoseSequence::load(&out_dir.join("poses/long.json")).unwrap().len(), 324);

    let prepared = out_dir.join("poses/wave.json");
    run(&["animate", "--avatar", avatar.to_str().unwrap(), "--pose", prepared.to_str().unwrap(), "--resolution", "20x20"]);
    let white = out_dir.join("videos/kim_wave");
    let meta = video::read_meta(&white).unwrap();
    assert_eq!((meta.width, meta.height, meta.num_frames), (20, 20, 3));

    let bg = dir.path().join("backgrounds/b00.png");
    run(&["composite", "--video", white.to_str().unwrap(), "--background", bg.to_str().unwrap()]);
    assert_eq!(video::read_meta(&out_dir.join("composites/kim_wave_b00")).unwrap().num_frames, 3);

    run(&["fit", "--avatar", avatar.to_str().unwrap(), "--target", white.to_str().unwrap(), "--steps", "2", "--name", "refit"]);
    assert!(out_dir.join("avatars/refit.json").is_file());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("fit/refit.json")).unwrap()).unwrap();
    assert!(report["opacities"]["final_loss"].as_f64().unwrap() <= report["colors"]["initial_loss"].as_f64().unwrap());
}

#[test]
fn eval_commands_record_the_seed_override() {
    use reenact_core::dataset::GenerateOptions;
    use reenact_eval::toy::{build_toy_benchmark, ToyConfig};

    let dir = tempfile::tempdir().unwrap();
    inputs(dir.path(), 1, 1, 1, 1);
    let toy = ToyConfig {
        width: 24,
        height: 24,
        fps: 6.0,
        synthetic_references_per_class: 1,
        training_identities: 2,
        synthetic_backgrounds: 3,
        g: 2,
        real_train_references_per_class: 1,
        real_test_references_per_class: 1,
        real_backgrounds: 2,
        real_g: 1,
        ..ToyConfig::default()
    };
    let bench = build_toy_benchmark(&dir.path().join("toy"), &toy, GenerateOptions::default()).unwrap();
    let mut protocol = serde_json::to_value(bench.experiment_config(&toy, vec![1, 2])).unwrap();
    protocol["curve_steps"] = json!([0, 2]);
    protocol["training"] = json!({"epochs": 50});
    let mut cfg = base_config(dir.path());
    cfg["experiment"] = json!({
        "real_manifests": bench.real_manifests,
        "synthetic_manifest": bench.synthetic_manifest,
        "protocol": protocol,
    });
    let path = write_config(dir.path(), cfg);
    let cfg = path.to_str().unwrap();

    let out = reenact(&["eval-baseline", "--config", cfg, "--seed", "9"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let results = std::fs::read_to_string(dir.path().join("out/eval/baseline/results.json")).unwrap();
    let results: serde_json::Value = serde_json::from_str(&results).unwrap();
    assert_eq!(results["config"]["seeds"], json!([9]));
    assert_eq!(results["per_seed"].as_array().unwrap().len(), 1);

    let out = reenact(&["eval-shots", "--config", cfg, "--experiment", "one-shot"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let results = std::fs::read_to_string(dir.path().join("out/eval/one-shot/results.json")).unwrap();
    let results: serde_json::Value = serde_json::from_str(&results).unwrap();
    assert_eq!(results["config"]["seeds"], json!([1, 2]));
    assert_eq!(results["columns"].as_array().unwrap().len(), 2);
}
