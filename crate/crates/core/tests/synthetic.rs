use egofields::features::{detect_and_describe, match_features, MatchConfig, SiftConfig};
use egofields::geometry::RigidPose;
use egofields::overlap::{estimate_homography, Homography, RansacConfig};
use egofields::synthetic::{presets, read_scene, write_sequence, Preset, SyntheticError};
use nalgebra::{Point2, Point3, UnitQuaternion, Vector3};

const W: f64 = 456.0;
const H: f64 = 256.0;

#[test]
fn static_camera_overlaps_are_one() {
    let s = presets::identical(5, 1);
    for i in 0..5 {
        for j in 0..5 {
            assert!((s.analytic_overlap(i, j).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn pure_rotation_homography_is_conjugated_rotation() {
    let mut s = presets::identical(2, 2);
    let r = UnitQuaternion::from_euler_angles(0.03, -0.08, 0.05);
    s.trajectory[1] = RigidPose::from_center(r, Point3::origin());
    let h = s.plane_homography(0, 0, 1).unwrap();
    let k = s.camera.k_matrix();
    let want = Homography::from_matrix(k * r.to_rotation_matrix().into_inner() * k.try_inverse().unwrap()).unwrap();
    assert!((h.matrix() - want.matrix()).norm() < 1e-12);

    // Warp consistency: sampling frame 0 through H^-1 reproduces frame 1 up
    // to interpolation error.
    let a = s.render(0).unwrap().image;
    let b = s.render(1).unwrap().image;
    let inv = h.inverse();
    let (mut total, mut n) = (0.0, 0);
    for y in (8..248).step_by(3) {
        for x in (8..448).step_by(3) {
            let q = inv.apply(&Point2::new(x as f64 + 0.5, y as f64 + 0.5)).unwrap();
            if q.x < 2.0 || q.y < 2.0 || q.x > W - 2.0 || q.y > H - 2.0 {
                continue;
            }
            let v = a.sample((q.x - 0.5) as f32, (q.y - 0.5) as f32);
            total += (v - b.get(x, y)).abs() as f64;
            n += 1;
        }
    }
    assert!(n > 5000);
    assert!(total / (n as f64) < 0.03, "mean abs warp error {}", total / n as f64);
}

fn below_runs(profile: &[f64], threshold: f64) -> usize {
    let mut runs = 0;
    let mut inside = false;
    for &v in profile {
        if v < threshold && !inside {
            runs += 1;
        }
        inside = v < threshold;
    }
    runs
}

#[test]
fn hot_spot_profile_has_two_low_runs() {
    let s = presets::hot_spot(3);
    assert_eq!(s.len(), 220);
    let profile: Vec<f64> = (1..s.len()).map(|i| s.analytic_overlap(i - 1, i).unwrap()).collect();
    assert_eq!(below_runs(&profile, 0.9), 2);
    assert!(profile[..99].iter().all(|v| *v > 0.98));
    assert!(profile[120..].iter().all(|v| *v > 0.98));
}

#[test]
fn panning_windows_are_k_frames() {
    let s = presets::panning(40, 8, 4);
    for m in 1..40 {
        let r = s.analytic_overlap(0, m).unwrap();
        assert_eq!(r >= 0.9, m < 8, "m = {m}, r = {r}");
    }
}

#[test]
fn estimated_homography_matches_analytic() {
    let s = presets::hot_spot_with(2, 10, 600.0, 5);
    let cfg = SiftConfig::default();
    let pairs = [(0, 2), (0, 3), (2, 4), (5, 6)];
    for (i, j) in pairs {
        let a = detect_and_describe(&s.render(i).unwrap().image, &cfg);
        let b = detect_and_describe(&s.render(j).unwrap().image, &cfg);
        let m = match_features(&a, &b, &MatchConfig::default());
        let fit = estimate_homography(&m, a.keypoints(), b.keypoints(), &RansacConfig::default()).unwrap();
        let truth = s.plane_homography(0, i, j).unwrap();
        let err = fit.homography.corner_transfer_error(&truth, W, H);
        assert!(err < 1.0, "pair ({i},{j}): corner error {err}");
    }
}

#[test]
fn rotated_and_scaled_views_stay_repeatable() {
    // <= 20 degrees of rotation and <= 1.2x scale: at least 40% of matches
    // are inliers of the analytic homography at 3 px.
    let mut s = presets::identical(3, 6);
    let roll = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 20f64.to_radians());
    s.trajectory[1] = RigidPose::from_center(roll, Point3::origin());
    s.trajectory[2] = RigidPose::from_center(UnitQuaternion::identity(), Point3::new(0.1, 0.0, 0.5));
    let cfg = SiftConfig::default();
    let f0 = detect_and_describe(&s.render(0).unwrap().image, &cfg);
    for j in [1, 2] {
        let fj = detect_and_describe(&s.render(j).unwrap().image, &cfg);
        let m = match_features(&f0, &fj, &MatchConfig::default());
        let truth = s.plane_homography(0, 0, j).unwrap();
        let good = m
            .pairs
            .iter()
            .filter(|p| {
                let (a, b) = (f0.keypoints()[p.a], fj.keypoints()[p.b]);
                let q = truth.apply(&Point2::new(a.x as f64, a.y as f64)).unwrap();
                (q - Point2::new(b.x as f64, b.y as f64)).norm() <= 3.0
            })
            .count();
        assert!(m.len() >= 20);
        assert!(
            good as f64 >= 0.4 * m.len() as f64,
            "frame {j}: {good}/{} inliers",
            m.len()
        );
    }
}

#[test]
fn vos_scene_has_masks_and_points() {
    let s = presets::vos_static(10, 7);
    let r = s.render(0).unwrap();
    let m = &r.masks[0];
    // 0.6 x 0.5 m patch at 2.5 m with f = 300 -> 72 x 60 px.
    assert!((m.count() as i64 - 72 * 60).abs() < 200, "{}", m.count());
    let recon = s.reconstruction(0.05, 4).unwrap();
    recon.validate().unwrap();
    assert_eq!(recon.registered_count(), 10);
    assert!(recon.points.len() > 100);
    assert!(egofields::geometry::mean_reprojection_error(&recon).unwrap() < 1e-9);
}

#[test]
fn object_leaves_the_view() {
    let s = presets::vos_leaving(30, 8);
    let counts: Vec<usize> = (0..30).map(|i| s.render(i).unwrap().masks[0].count()).collect();
    assert!(counts[0] > 1000);
    assert!(counts[15] == 0);
}

#[test]
fn camera_on_a_plane_is_rejected() {
    let mut s = presets::identical(2, 1);
    s.trajectory[1] = RigidPose::from_center(UnitQuaternion::identity(), Point3::new(1.0, 1.0, 3.0));
    assert!(matches!(
        s.validate(),
        Err(SyntheticError::CameraInsideGeometry { frame: 1 })
    ));
}

#[test]
fn presets_and_sequences_round_trip() {
    let p: Preset = serde_json::from_str(r#"{"preset": "vos_static", "frames": 3, "seed": 2}"#).unwrap();
    let s = p.build().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let layout = write_sequence(&s, dir.path()).unwrap();
    assert_eq!(read_scene(&layout.scene).unwrap(), s);
    let img = egofields::features::GrayImage::open(&layout.images.join(s.frame_name(2))).unwrap();
    assert_eq!((img.width(), img.height()), (456, 256));
    assert!(layout.object_masks(1).join(s.frame_name(0)).exists());
    assert_eq!(s.render(1).unwrap(), s.render(1).unwrap());
}
