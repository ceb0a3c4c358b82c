//! Acceptance suite. Each criterion prints one `PASS` or `FAIL` line; the
//! test fails if any criterion does.

mod common;

use std::collections::BTreeSet;
use std::convert::Infallible;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{oracles, random_reconstruction, recon_close, same_pose, MockSfm};
use egofields::benchmark::{filtering_study_video, generate_split, ActionSegment, Label, ScriptedSfm, SplitConfig};
use egofields::features::GrayImage;
use egofields::filtering::{compare_uniform, filter_frames, greedy_windows, FilterConfig, MemorySource};
use egofields::geometry::{backproject, mean_rotation, project, CameraIntrinsics, RegisteredFrame, RigidPose};
use egofields::metrics::{average_precision, boundary_f, jaccard, jf_mean, psnr, Raster, ScoreMap};
use egofields::overlap::{ransac_homography, visual_overlap, Homography, OverlapScore, RansacConfig};
use egofields::propagation::{fixed_in_2d, propagate_fixed_3d, BinaryMask, PropagationConfig};
use egofields::recon_io::{
    orchestrate_with, read_colmap_text, read_epic_fields_json, verify_counts, write_colmap_text,
    write_epic_fields_json, OrchestrateConfig, Stage, StageKind, VerifyConfig,
};
use egofields::synthetic::{presets, SyntheticScene};
use nalgebra::{Matrix3, Point2, Point3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const W: f64 = 456.0;
const H: f64 = 256.0;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 1 ------------------------------------------------------------------------

fn random_projective(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    Matrix3::new(
        1.0 + rng.random_range(-0.25..0.25),
        rng.random_range(-0.25..0.25),
        rng.random_range(-150.0..150.0),
        rng.random_range(-0.25..0.25),
        1.0 + rng.random_range(-0.25..0.25),
        rng.random_range(-100.0..100.0),
        rng.random_range(-8e-4..8e-4),
        rng.random_range(-1.2e-3..1.2e-3),
        1.0,
    )
}

/// Share of `side x side` jittered-grid points of the frame whose preimage under
/// `m` lies inside the frame.
fn monte_carlo_overlap(m: &Matrix3<f64>, rng: &mut ChaCha8Rng, side: usize) -> f64 {
    let inv = m.try_inverse().unwrap();
    let (cw, ch) = (W / side as f64, H / side as f64);
    let mut inside = 0usize;
    for gy in 0..side {
        for gx in 0..side {
            let x = (gx as f64 + rng.random::<f64>()) * cw;
            let y = (gy as f64 + rng.random::<f64>()) * ch;
            let v = inv * Vector3::new(x, y, 1.0);
            if v.z > 0.0 {
                let (u, w) = (v.x / v.z, v.y / v.z);
                if (0.0..=W).contains(&u) && (0.0..=H).contains(&w) {
                    inside += 1;
                }
            }
        }
    }
    inside as f64 / (side * side) as f64
}

fn overlap_fidelity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let (mut lo, mut hi) = (1.0f64, 0.0f64);
    for _ in 0..200 {
        let m = random_projective(&mut rng);
        let r = visual_overlap(&Homography::from_matrix(m).unwrap(), W, H);
        let mc = monte_carlo_overlap(&m, &mut rng, 1000);
        worst = worst.max((r - mc).abs());
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let elapsed = start.elapsed();
    check(
        worst <= 0.002 && elapsed < Duration::from_secs(60),
        format!("max |r - MC| = {worst:.5} over 200 homographies (r in [{lo:.3}, {hi:.3}]), {elapsed:.1?}"),
    )
}

// 2 ------------------------------------------------------------------------

fn homography_robustness() -> Outcome {
    let normal = Normal::new(0.0, 0.5).unwrap();
    let mut good = 0;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let truth = Homography::from_matrix(random_projective(&mut rng)).unwrap();
        let (mut src, mut dst) = (Vec::new(), Vec::new());
        while src.len() < 50 {
            let p = Point2::new(rng.random_range(0.0..W), rng.random_range(0.0..H));
            let q = truth.apply(&p).unwrap();
            src.push(p);
            dst.push(Point2::new(
                q.x + normal.sample(&mut rng),
                q.y + normal.sample(&mut rng),
            ));
        }
        for _ in 0..50 {
            src.push(Point2::new(rng.random_range(0.0..W), rng.random_range(0.0..H)));
            dst.push(Point2::new(rng.random_range(0.0..W), rng.random_range(0.0..H)));
        }
        let cfg = RansacConfig {
            seed: trial,
            ..Default::default()
        };
        if let Ok(fit) = ransac_homography(&src, &dst, &cfg) {
            if fit.homography.corner_transfer_error(&truth, W, H) < 1.0 {
                good += 1;
            }
        }
    }
    check(good >= 95, format!("{good}/100 trials with corner error < 1 px"))
}

// 3 ------------------------------------------------------------------------

fn analytic_kept(scene: &SyntheticScene, threshold: f64) -> Vec<usize> {
    let frames: Vec<usize> = (0..scene.len()).collect();
    let (w, _) = greedy_windows(&frames, threshold, usize::MAX, |i, j| -> Result<_, Infallible> {
        Ok(OverlapScore {
            r_tilde: scene.analytic_overlap(i, j).unwrap(),
            ..Default::default()
        })
    })
    .unwrap();
    w.iter().map(|w| w.anchor).collect()
}

fn filter_correctness() -> Outcome {
    let cfg = FilterConfig::default();
    let hot = presets::hot_spot(3);
    let want = analytic_kept(&hot, cfg.overlap_threshold);
    let got = filter_frames(&hot, &cfg).map_err(|e| e.to_string())?.kept;
    let boundaries_ok = got.len() == want.len() && got.iter().zip(&want).all(|(g, w)| g.abs_diff(*w) <= 1);

    let identical = filter_frames(&presets::identical(30, 1), &cfg)
        .map_err(|e| e.to_string())?
        .kept;
    let cut = filter_frames(&presets::abrupt_cut(20, 20, 2), &cfg)
        .map_err(|e| e.to_string())?
        .kept;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let long = presets::panning(1000, 9, 4);
    let start = Instant::now();
    let long_kept = pool
        .install(|| filter_frames(&long, &cfg))
        .map_err(|e| e.to_string())?
        .kept
        .len();
    let elapsed = start.elapsed();

    check(
        boundaries_ok && identical.len() == 1 && cut.len() == 2 && elapsed < Duration::from_secs(300),
        format!(
            "hot-spot kept {} vs analytic {} (within 1: {boundaries_ok}); identical keeps {}; abrupt cut keeps {}; \
             1000 frames in {elapsed:.1?} on one thread ({long_kept} kept)",
            got.len(),
            want.len(),
            identical.len(),
            cut.len()
        ),
    )
}

// 4 ------------------------------------------------------------------------

fn filter_value() -> Outcome {
    let mut wins = 0;
    let mut rows = Vec::new();
    for seed in 0..10 {
        let scene = presets::skewed(seed);
        let sfm = ScriptedSfm::new(&scene);
        let dir = tempfile::tempdir().unwrap();
        let row = filtering_study_video(&scene, &sfm, &OrchestrateConfig::default(), dir.path())
            .map_err(|e| e.to_string())?;
        if row.ours.points > row.uniform.points && row.uniform.kept <= row.ours.kept {
            wins += 1;
        }
        rows.push(format!("{}/{}", row.ours.points, row.uniform.points));
    }
    check(
        wins == 10,
        format!("{wins}/10 seeds with more points (ours/uniform: {})", rows.join(" ")),
    )
}

// 5 ------------------------------------------------------------------------

fn uniform_frames(n: usize) -> MemorySource {
    MemorySource {
        frames: (0..n)
            .map(|i| (format!("frame_{:010}.png", i + 1), GrayImage::filled(16, 16, 0.5)))
            .collect(),
    }
}

fn state_machine() -> Outcome {
    let rates = [0.69, 0.70, 0.71];
    let cfg = VerifyConfig::default();
    let mut failures = Vec::new();
    for r in rates {
        let v = verify_counts((r * 100.0f64).round() as usize, 100, &cfg);
        if v.accept != (r >= 0.70) {
            failures.push(format!("verify({r})"));
        }
    }
    let source = uniform_frames(100);
    for r1 in rates {
        for r2 in rates {
            let dir = tempfile::tempdir().unwrap();
            let backend = MockSfm::new(&[r1, r2, 1.0]);
            let config = OrchestrateConfig {
                workdir: dir.path().to_path_buf(),
                ..Default::default()
            };
            let mut thresholds = Vec::new();
            let (state, _) = orchestrate_with(&source, dir.path(), &backend, &config, &mut |attempt, c| {
                thresholds.push(c.overlap_threshold);
                Ok(compare_uniform(100, 10 * attempt as usize))
            })
            .map_err(|e| e.to_string())?;
            let (stage, attempts, want_thresholds) = if r1 >= 0.70 {
                (Stage::Accepted, 1, vec![0.90])
            } else if r2 >= 0.70 {
                (Stage::Accepted, 2, vec![0.90, 0.95])
            } else {
                (Stage::Rejected, 2, vec![0.90, 0.95])
            };
            let registers = backend
                .calls()
                .iter()
                .filter(|(k, _)| *k == StageKind::Register)
                .count();
            if state.stage != stage
                || state.attempt != attempts
                || thresholds != want_thresholds
                || registers != attempts as usize
            {
                failures.push(format!("({r1}, {r2}) -> {:?} attempt {}", state.stage, state.attempt));
            }
        }
    }
    check(
        failures.is_empty(),
        format!("3 verify cases and 9 rate pairs; mismatches: {failures:?}"),
    )
}

// 6 ------------------------------------------------------------------------

fn format_round_trips() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        let dir = tempfile::tempdir().unwrap();
        let multi = random_reconstruction(seed, false);
        write_colmap_text(&multi, &dir.path().join("multi")).unwrap();
        if let Err(e) = recon_close(&multi, &read_colmap_text(&dir.path().join("multi")).unwrap()) {
            failures.push(format!("colmap {seed}: {e}"));
        }

        let single = random_reconstruction(seed, true);
        let json = dir.path().join("model.json");
        write_epic_fields_json(&single, &json).unwrap();
        let back = read_epic_fields_json(&json).unwrap();
        let cams_ok = back
            .cameras
            .values()
            .zip(single.cameras.values())
            .all(|(a, b)| a.model() == b.model() && a.params().iter().zip(b.params()).all(|(x, y)| close(*x, *y)));
        let points_ok = back.points.len() == single.points.len()
            && back
                .points
                .iter()
                .zip(&single.points)
                .all(|(a, b)| (0..3).all(|k| close(a.position[k], b.position[k])));
        let poses_ok = single
            .frames
            .iter()
            .all(|f| back.frame(&f.name).is_some_and(|g| same_pose(&g.pose, &f.pose)));
        if !(cams_ok && points_ok && poses_ok && back.total_frame_count == single.total_frame_count) {
            failures.push(format!("epic {seed}"));
        }

        // COLMAP -> JSON -> COLMAP keeps every pose bit for bit.
        write_colmap_text(&single, &dir.path().join("single")).unwrap();
        let text = read_colmap_text(&dir.path().join("single")).unwrap();
        write_epic_fields_json(&text, &json).unwrap();
        let via_json = read_epic_fields_json(&json).unwrap();
        write_colmap_text(&via_json, &dir.path().join("again")).unwrap();
        let again = read_colmap_text(&dir.path().join("again")).unwrap();
        let exact = text.frames.iter().all(|f| {
            via_json.frame(&f.name).is_some_and(|g| g.pose == f.pose)
                && again.frame(&f.name).is_some_and(|g| g.pose == f.pose)
        });
        if !exact {
            failures.push(format!("cross {seed}"));
        }
    }
    check(
        failures.is_empty(),
        format!("100 models per format; failures: {failures:?}"),
    )
}

// 7 ------------------------------------------------------------------------

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = [0usize; 4];
    for _ in 0..1000 {
        let a: Vec<f64> = (0..16 * 16 * 3).map(|_| rng.random()).collect();
        let b: Vec<f64> = a
            .iter()
            .map(|v| (v + rng.random_range(-0.3..0.3)).clamp(0.0, 1.0))
            .collect();
        let got = psnr(
            &Raster::new(16, 16, 3, a.clone()).unwrap(),
            &Raster::new(16, 16, 3, b.clone()).unwrap(),
            None,
        )
        .unwrap();
        if (got - oracles::psnr(&a, &b)).abs() > 1e-9 {
            bad[0] += 1;
        }
    }
    for _ in 0..1000 {
        let (p, g) = (
            oracles::random_mask(&mut rng, 16, 16),
            oracles::random_mask(&mut rng, 16, 16),
        );
        if (jaccard(&p, &g).unwrap() - oracles::jaccard(&p, &g)).abs() > 1e-9 {
            bad[1] += 1;
        }
    }
    let mut ap_instances = 0;
    while ap_instances < 1000 {
        let g = oracles::random_mask(&mut rng, 16, 16);
        if g.is_empty() {
            continue;
        }
        ap_instances += 1;
        let scores: Vec<f64> = (0..256).map(|_| rng.random_range(0..10) as f64 / 9.0).collect();
        let got = average_precision(&ScoreMap::new(16, 16, scores.clone()).unwrap(), &g).unwrap();
        if (got - oracles::average_precision(&scores, g.bits())).abs() > 1e-9 {
            bad[2] += 1;
        }
    }
    for _ in 0..1000 {
        let (p, g) = (
            oracles::random_mask(&mut rng, 16, 16),
            oracles::random_mask(&mut rng, 16, 16),
        );
        let tol = rng.random_range(0..4) as f64 + if rng.random_bool(0.3) { 0.5 } else { 0.0 };
        let b = boundary_f(&p, &g, Some(tol)).unwrap();
        if (b.matched_pred, b.pred_boundary, b.matched_gt, b.gt_boundary) != oracles::boundary_counts(&p, &g, tol) {
            bad[3] += 1;
        }
    }
    let fixture = average_precision(
        &ScoreMap::new(4, 1, vec![0.9, 0.7, 0.8, 0.1]).unwrap(),
        &BinaryMask::from_bits(4, 1, 1, vec![true, true, false, false]).unwrap(),
    )
    .unwrap();
    check(
        bad == [0; 4] && fixture == 5.0 / 6.0,
        format!("mismatches PSNR/J/AP/F-counts = {bad:?} of 1000 each; AP fixture = {fixture}"),
    )
}

// 8 ------------------------------------------------------------------------

fn mean_jf(preds: &[BinaryMask], gts: &[BinaryMask]) -> f64 {
    let (mut j, mut f) = (0.0, 0.0);
    for (p, g) in preds.iter().zip(gts) {
        j += jaccard(p, g).unwrap();
        f += boundary_f(p, g, None).unwrap().f;
    }
    let n = preds.len() as f64;
    jf_mean(j / n, f / n)
}

fn geometric_vos() -> Outcome {
    let cfg = PropagationConfig::default();
    let scene = presets::vos_static(50, 5);
    let recon = scene.reconstruction(0.05, 4).map_err(|e| e.to_string())?;
    let gts: Vec<BinaryMask> = (0..scene.len())
        .map(|i| scene.render(i).unwrap().masks.remove(0))
        .collect();
    let fixed3d: Vec<BinaryMask> = propagate_fixed_3d(&gts[0], &scene.frame_name(0), &recon, &cfg)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|p| p.mask)
        .collect();
    let jf3 = mean_jf(&fixed3d, &gts);
    let jf2 = mean_jf(&fixed_in_2d(&gts[0], gts.len()), &gts);

    let leaving = presets::vos_leaving(30, 8);
    let recon = leaving.reconstruction(0.05, 4).map_err(|e| e.to_string())?;
    let gts: Vec<BinaryMask> = (0..leaving.len())
        .map(|i| leaving.render(i).unwrap().masks.remove(0))
        .collect();
    let out = propagate_fixed_3d(&gts[0], &leaving.frame_name(0), &recon, &cfg).map_err(|e| e.to_string())?;
    let unseen: Vec<usize> = (0..gts.len()).filter(|&i| gts[i].is_empty()).collect();
    let flagged = unseen.iter().filter(|&&i| !out[i].visible).count();

    check(
        jf3 >= 0.95 && jf2 <= 0.50 && !unseen.is_empty() && flagged == unseen.len(),
        format!(
            "J&F fixed-3D {jf3:.4}, fixed-2D {jf2:.4}; {flagged}/{} out-of-view frames marked invisible",
            unseen.len()
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn split_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (seconds, fps) = (600.0, 10.0);
    let frames: Vec<RegisteredFrame> = (0..(seconds * fps) as usize)
        .map(|k| {
            RegisteredFrame::new(k as u32 + 1, format!("frame_{k:06}"), 1, RigidPose::identity())
                .with_timestamp(k as f64 / fps)
        })
        .collect();
    let verbs = ["put", "take", "cut", "wash", "open"];
    let segments: Vec<ActionSegment> = (0..20)
        .map(|k| {
            let start = rng.random_range(0.0..seconds - 10.0);
            let len = rng.random_range(1.0..10.0);
            ActionSegment::new("P01_01", start, start + len, verbs[k % verbs.len()]).unwrap()
        })
        .collect();
    let cfg = SplitConfig {
        ooa_eval_rate: 0.02,
        seed: 3,
        ..Default::default()
    };
    let s = generate_split(&frames, &segments, None, &cfg).map_err(|e| e.to_string())?;

    let names: BTreeSet<&str> = s.entries.iter().map(|e| e.frame.as_str()).collect();
    let partition = s.entries.len() == frames.len() && names.len() == frames.len();
    let guarded: Vec<f64> = s
        .entries
        .iter()
        .filter(|e| e.label.excludes_neighbours())
        .map(|e| e.timestamp)
        .collect();
    let exclusion = s
        .entries
        .iter()
        .filter(|e| e.label == Label::Train)
        .all(|t| guarded.iter().all(|g| (t.timestamp - g).abs() >= cfg.exclusion_window));
    let eval: Vec<bool> = s
        .entries
        .iter()
        .filter(|e| e.label.is_eval())
        .map(|e| e.label.is_val())
        .collect();
    let alternation = eval.iter().enumerate().all(|(k, v)| *v == (k % 2 == 0));
    let again = generate_split(&frames, &segments, None, &cfg).map_err(|e| e.to_string())?;
    let deterministic = s.to_csv() == again.to_csv();
    check(
        partition && exclusion && alternation && deterministic,
        format!(
            "{} frames, {} eval ({} guarded), {} discarded: partition {partition}, exclusion {exclusion}, \
             alternation {alternation}, byte-identical {deterministic}",
            frames.len(),
            eval.len(),
            guarded.len(),
            s.count(Label::Discarded)
        ),
    )
}

// 10 -----------------------------------------------------------------------

fn round_trip_error(intr: &CameraIntrinsics, rng: &mut ChaCha8Rng) -> f64 {
    let axis = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let pose = RigidPose::new(
        UnitQuaternion::from_scaled_axis(axis * rng.random_range(0.0..3.0)),
        Vector3::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        ),
    );
    let pixel = Point2::new(rng.random_range(0.0..W), rng.random_range(0.0..H));
    let depth = rng.random_range(0.1..50.0);
    let world: Point3<f64> = backproject(&pixel, depth, &pose, intr).unwrap();
    let p = project(&world, &pose, intr).unwrap();
    (p.pixel - pixel).norm()
}

fn projection_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut pin, mut rad): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let f = rng.random_range(150.0..800.0);
        let intr = CameraIntrinsics::pinhole(456, 256, f, f * rng.random_range(0.95..1.05), 228.0, 128.0).unwrap();
        pin = pin.max(round_trip_error(&intr, &mut rng));
    }
    for _ in 0..1000 {
        let f = rng.random_range(250.0..800.0);
        let k = rng.random_range(-0.1..0.1);
        let intr = CameraIntrinsics::simple_radial(456, 256, f, 228.0, 128.0, k).unwrap();
        rad = rad.max(round_trip_error(&intr, &mut rng));
    }

    let about = |axis: Vector3<f64>, deg: f64| {
        UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), deg.to_radians())
    };
    let id = UnitQuaternion::identity();
    let identity = mean_rotation(&[id, id, id]).unwrap().angle_to(&id);
    let q = about(Vector3::new(0.3, -1.0, 0.2), 80.0);
    let antipodal = mean_rotation(&[q, UnitQuaternion::new_unchecked(-q.into_inner())])
        .unwrap()
        .angle_to(&q);
    let z = Vector3::z();
    let coaxial = mean_rotation(&[about(z, 10.0), about(z, 30.0)])
        .unwrap()
        .angle_to(&about(z, 20.0));
    let fixtures = identity < 1e-12 && antipodal < 1e-9 && coaxial < 1e-9;
    check(
        pin < 1e-6 && rad < 1e-4 && fixtures,
        format!(
            "max round-trip error pinhole {pin:.2e} px, simple-radial {rad:.2e} px; mean-rotation fixtures {fixtures}"
        ),
    )
}

/// Writes to the process stdout directly so the lines show up without
/// `--nocapture`.
fn report(line: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").unwrap();
    out.flush().unwrap();
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        ("overlap fidelity", overlap_fidelity),
        ("homography robustness", homography_robustness),
        ("filter correctness", filter_correctness),
        ("filter value", filter_value),
        ("verify/restart state machine", state_machine),
        ("format round-trips", format_round_trips),
        ("metric oracles", metric_oracles),
        ("geometric VOS", geometric_vos),
        ("split invariants", split_invariants),
        ("projection suite", projection_suite),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => report(&format!("criterion {:>2} {name}: PASS ({detail})", k + 1)),
            Err(detail) => {
                report(&format!("criterion {:>2} {name}: FAIL ({detail})", k + 1));
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
