use std::path::Path;
use std::time::Instant;

use reenact_core::dataset::{
    generate, plan_jobs, BackgroundEntry, DatasetSpec, GenerateOptions, IdentityEntry, Manifest, ReferenceEntry,
    VideoKind, MANIFEST_FILE,
};
use reenact_core::math::{Quat, Vec3};
use reenact_core::model::{humanoid, Pose};
use reenact_core::pose::{NormalizationPolicy, PoseSequence};
use reenact_core::render::{video, RgbImage};

struct Fixture {
    references: Vec<ReferenceEntry>,
    identities: Vec<IdentityEntry>,
    backgrounds: Vec<BackgroundEntry>,
}

fn fixture(dir: &Path, classes: usize, per_class: usize, identities: usize, pool: usize) -> Fixture {
    let mut references = Vec::new();
    for c in 0..classes {
        for r in 0..per_class {
            let frames = (0..6)
                .map(|f| {
                    let mut p = Pose::identity(24);
                    let angle = (c as f64 + 1.0) * 0.15 * f as f64 + r as f64 * 0.05;
                    p.rots[humanoid::joint::L_SHOULDER] = Quat::from_axis_angle(&Vec3::z_axis(), angle);
                    p
                })
                .collect();
            let path = dir.join(format!("poses/c{c:02}_{r}.json"));
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            PoseSequence::new(6.0, frames, "humanoid24").unwrap().save(&path).unwrap();
            references.push(ReferenceEntry { id: format!("c{c:02}/{r}"), class_label: format!("c{c:02}"), pose: path });
        }
    }
    let identities = (0..identities)
        .map(|j| {
            let path = dir.join(format!("avatars/a{j:02}.json"));
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            let mut params = humanoid::BodyParams::random(j as u64);
            params.splats_per_bone = 1;
            humanoid::build_avatar(&format!("a{j:02}"), &params).unwrap().save(&path).unwrap();
            IdentityEntry { id: format!("a{j:02}"), avatar: path }
        })
        .collect();
    let backgrounds = (0..pool)
        .map(|k| {
            let path = dir.join(format!("bg/b{k:02}.png"));
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            let shade = k as f64 / pool as f64;
            video::save_png_rgb(&path, &RgbImage::filled(32, 32, [shade, 0.5, 1.0 - shade])).unwrap();
            BackgroundEntry { id: format!("b{k:02}"), path }
        })
        .collect();
    Fixture { references, identities, backgrounds }
}

fn spec(f: &Fixture, g: usize, seed: u64, policy: NormalizationPolicy, out: &Path) -> DatasetSpec {
    DatasetSpec::new(
        None,
        f.references.clone(),
        f.identities.clone(),
        f.backgrounds.clone(),
        g,
        seed,
        policy,
        humanoid::framing_camera(32, 32, 0.0),
        out.to_path_buf(),
    )
    .unwrap()
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn smallest_spec_yields_one_white_and_one_composite() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture(dir.path(), 1, 1, 1, 1);
    let policy = NormalizationPolicy::new(1.0, 5.0).unwrap();
    let out = dir.path().join("out");
    let manifest = generate(&spec(&f, 1, 7, policy, &out), GenerateOptions::default()).unwrap();
    assert_eq!(manifest.entries.len(), 2);
    assert!(manifest.errors.is_empty());
    assert_eq!(manifest.white().count(), 1);
    let comp = manifest.composited().next().unwrap();
    assert_eq!(comp.background_id.as_deref(), Some("b00"));
    assert_eq!(comp.num_frames, 5);
    let frames = Manifest::frames_path(&out.join(MANIFEST_FILE), comp);
    assert_eq!(video::read_meta(&frames).unwrap().num_frames, 5);
    assert_eq!(Manifest::read(&out.join(MANIFEST_FILE)).unwrap(), manifest);
}

#[test]
fn rerun_is_byte_identical_regardless_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture(dir.path(), 2, 2, 2, 3);
    let policy = NormalizationPolicy::new(1.0, 4.0).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    generate(&spec(&f, 2, 99, policy, &a), GenerateOptions { jobs: Some(1) }).unwrap();
    generate(&spec(&f, 2, 99, policy, &b), GenerateOptions { jobs: Some(4) }).unwrap();
    let ta = tree_bytes(&a);
    // 4 references x 2 identities x (white + 2 composites), 4 frames + meta each.
    assert_eq!(ta.len(), 8 * 3 * (4 + 1) + 1);
    assert_eq!(ta, tree_bytes(&b));
    // Idempotent in place.
    generate(&spec(&f, 2, 99, policy, &a), GenerateOptions::default()).unwrap();
    assert_eq!(ta, tree_bytes(&a));
}

#[test]
fn failing_job_is_recorded_without_stopping_others() {
    let dir = tempfile::tempdir().unwrap();
    let mut f = fixture(dir.path(), 1, 2, 2, 2);
    f.identities[1].avatar = dir.path().join("missing.json");
    std::fs::write(&f.backgrounds[1].path, b"not a png").unwrap();
    let policy = NormalizationPolicy::new(1.0, 3.0).unwrap();
    let manifest = generate(&spec(&f, 2, 1, policy, &dir.path().join("out")), GenerateOptions::default()).unwrap();
    // Identity a01 fails for both references: 2 white + 4 composited.
    // Background b01 fails once per surviving pair.
    assert_eq!(manifest.entries.len() + manifest.errors.len(), 12);
    assert_eq!(manifest.errors.len(), 6 + 2);
    assert!(manifest.errors.iter().any(|e| e.error.contains("a01")));
    assert!(manifest.entries.iter().all(|e| e.identity_id == "a00"));
    assert!(manifest.entries.iter().all(|e| e.background_id.as_deref() != Some("b01")));
}

#[test]
fn labels_follow_their_references() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture(dir.path(), 3, 2, 1, 2);
    let policy = NormalizationPolicy::new(1.0, 3.0).unwrap();
    let manifest = generate(&spec(&f, 1, 5, policy, &dir.path().join("out")), GenerateOptions::default()).unwrap();
    for e in &manifest.entries {
        assert_eq!(e.reference_id.split('/').next().unwrap(), e.class_label);
    }
}

#[test]
fn full_scale_generation_at_desk_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture(dir.path(), 16, 5, 15, 20);
    let out = dir.path().join("out");
    let spec = spec(&f, 3, 2024, NormalizationPolicy::new(2.0, 2.0).unwrap(), &out);

    let start = Instant::now();
    let jobs = plan_jobs(&spec).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(jobs.len(), 4800);

    let manifest = generate(&spec, GenerateOptions::default()).unwrap();
    assert!(manifest.errors.is_empty());
    assert_eq!(manifest.entries.len(), 4800);
    assert_eq!(manifest.white().count(), 1200);
    assert_eq!(manifest.composited().count(), 3600);
    assert!(manifest.entries.iter().all(|e| (e.kind == VideoKind::Composited) == e.background_id.is_some()));

    let reread = Manifest::read(&out.join(MANIFEST_FILE)).unwrap();
    assert_eq!(reread, manifest);
    let ids: Vec<_> = reread.entries.iter().map(|e| e.video_id.as_str()).collect();
    let planned: Vec<_> = jobs.iter().map(|j| j.video_id.as_str()).collect();
    assert_eq!(ids, planned);
}
