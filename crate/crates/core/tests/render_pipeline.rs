use std::time::Instant;

use reenact_core::compositor::{composite_sequence, composite_to_dir, BackgroundImage, PlacementPolicy};
use reenact_core::math::{Quat, Rigid, Vec3};
use reenact_core::model::{humanoid, Pose};
use reenact_core::pose::{resample, NormalizationPolicy, PoseSequence};
use reenact_core::render::{render_frame, render_sequence, video, RgbImage};

fn waving(frames: usize) -> PoseSequence {
    let poses = (0..frames)
        .map(|f| {
            let t = f as f64 / frames as f64;
            let mut p = Pose::identity(24);
            p.root_t = Vec3::new(0.2 * t, 0.0, 0.0);
            p.rots[humanoid::joint::R_SHOULDER] = Quat::from_axis_angle(&Vec3::z_axis(), -2.5 * (t * 6.0).sin().abs());
            p.rots[humanoid::joint::L_KNEE] = Quat::from_axis_angle(&Vec3::x_axis(), 0.6 * t);
            p
        })
        .collect();
    PoseSequence::new(25.0, poses, "humanoid24").unwrap()
}

#[test]
fn rigid_motion_of_camera_and_scene_leaves_the_image_unchanged() {
    let avatar = humanoid::build_avatar("a", &humanoid::BodyParams::default()).unwrap();
    let cam = humanoid::framing_camera(128, 128, 0.3);
    let pose = waving(10).frames[7].clone();
    let g = Rigid::from_parts(Vec3::new(0.7, -1.2, 2.5).into(), Quat::from_euler_angles(0.4, -0.9, 1.3));
    let mut moved = pose.clone();
    moved.root_t = g.translation.vector + g.rotation * pose.root_t;
    moved.rots[0] = g.rotation * pose.rots[0];
    let start = Instant::now();
    let a = render_frame(&avatar, &pose, &cam).unwrap();
    let b = render_frame(&avatar, &moved, &cam.transformed(&g)).unwrap();
    assert!(start.elapsed().as_secs() < 30);
    let worst = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .flat_map(|(p, q)| (0..4).map(move |c| (p[c] - q[c]).abs()))
        .fold(0.0, f64::max);
    assert!(worst < 1e-5, "{worst}");
    assert!(a.alpha_bbox().is_some());
}

#[test]
fn five_hundred_frame_sequence_renders_and_composites() {
    let avatar = humanoid::build_avatar("a", &humanoid::BodyParams::random(1)).unwrap();
    let seq = resample(&waving(40), &NormalizationPolicy::REFERENCE);
    assert_eq!(seq.len(), 500);
    let cam = humanoid::framing_camera(32, 32, 0.0);
    let frames = render_sequence(&avatar, &seq, &cam).unwrap();
    assert_eq!(frames.len(), 500);

    let bg = BackgroundImage::new("room", RgbImage::filled(48, 40, [0.2, 0.5, 0.3])).unwrap();
    let out = composite_sequence(&frames, &bg, &PlacementPolicy::default()).unwrap();
    assert_eq!(out.len(), 500);
    assert!(out.iter().all(|f| f.pixels.iter().flatten().all(|c| (0.0..=1.0).contains(c))));

    let dir = tempfile::tempdir().unwrap();
    let meta = composite_to_dir(&frames, &bg, &PlacementPolicy::default(), seq.fps, &dir.path().join("a")).unwrap();
    composite_to_dir(&frames, &bg, &PlacementPolicy::default(), seq.fps, &dir.path().join("b")).unwrap();
    assert_eq!(meta.num_frames, 500);
    for i in [0, 123, 499] {
        let a = std::fs::read(video::frame_path(&dir.path().join("a"), i)).unwrap();
        let b = std::fs::read(video::frame_path(&dir.path().join("b"), i)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn rerendering_is_bit_identical() {
    let avatar = humanoid::build_avatar("a", &humanoid::BodyParams::default()).unwrap();
    let seq = PoseSequence::new(25.0, vec![Pose::identity(24)], "humanoid24").unwrap();
    let cam = humanoid::framing_camera(64, 64, 0.0);
    let a = render_sequence(&avatar, &seq, &cam).unwrap();
    let b = render_sequence(&avatar, &seq, &cam).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ground_line_at_bottom_edge_stays_in_bounds() {
    let avatar = humanoid::build_avatar("a", &humanoid::BodyParams::default()).unwrap();
    let seq = waving(4);
    let frames = render_sequence(&avatar, &seq, &humanoid::framing_camera(32, 32, 0.0)).unwrap();
    let policy = PlacementPolicy { ground_line: 1.0, ..PlacementPolicy::default() };
    let bg = BackgroundImage::new("bg", RgbImage::filled(40, 40, [0.0, 0.0, 1.0])).unwrap();
    let out = composite_sequence(&frames, &bg, &policy).unwrap();
    for f in &out {
        assert_eq!(f.pixels.len(), 40 * 40);
        // Foreground reaches the last row, and is not cut off above it.
        assert!((0..40).any(|x| f.pixel(x, 39) != [0.0, 0.0, 1.0]));
    }
}
