use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use egofields::geometry::{CameraIntrinsics, Reconstruction, RegisteredFrame, RigidPose};
use egofields::metrics::{boundary_f, jaccard, jf_mean};
use egofields::propagation::BinaryMask;
use egofields::recon_io::{read_colmap_text, write_colmap_text};
use egofields::synthetic::presets;

fn egofields(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_egofields"))
        .args(args)
        .current_dir(cwd)
        .env_remove("EGOFIELDS_SFM_CMD")
        .env_remove("EGOFIELDS_WORKDIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn model(registered: usize, total: usize) -> Reconstruction {
    let cam = CameraIntrinsics::simple_radial(456, 256, 300.0, 228.0, 128.0, 0.01).unwrap();
    Reconstruction {
        cameras: BTreeMap::from([(1, cam)]),
        frames: (0..registered)
            .map(|k| {
                RegisteredFrame::new(
                    k as u32 + 1,
                    format!("frame_{:010}.jpg", k + 1),
                    1,
                    RigidPose::identity(),
                )
            })
            .collect(),
        points: vec![],
        total_frame_count: total,
    }
}

#[test]
fn filter_keeps_one_identical_frame() {
    let dir = tempfile::tempdir().unwrap();
    ok(&egofields(
        &["synth", "identical", "--frames", "6", "-o", "seq"],
        dir.path(),
    ));
    let out = egofields(
        &["filter", "--threshold", "0.9", "seq/images", "-o", "kept.txt"],
        dir.path(),
    );
    ok(&out);
    let kept = std::fs::read_to_string(dir.path().join("kept.txt")).unwrap();
    assert_eq!(kept.lines().count(), 1);
    assert!(dir.path().join("run_manifest.json").exists());
    assert!(dir.path().join("seq/run_manifest.json").exists());

    let again = egofields(
        &["filter", "--threshold", "0.9", "seq/images", "-o", "kept.txt"],
        dir.path(),
    );
    ok(&again);
    assert!(String::from_utf8_lossy(&again.stderr).contains("up to date"));
}

#[test]
fn verify_prints_rate_and_decision() {
    let dir = tempfile::tempdir().unwrap();
    write_colmap_text(&model(70, 100), &dir.path().join("model")).unwrap();
    let s = ok(&egofields(
        &["verify", "model", "--total", "100", "--threshold", "0.7"],
        dir.path(),
    ));
    assert!(s.starts_with("rate 0.700 accept"), "{s}");
    let s = ok(&egofields(
        &["verify", "model", "--total", "101", "--threshold", "0.7"],
        dir.path(),
    ));
    assert!(s.starts_with("rate 0.693 reject"), "{s}");
    // The stored total is the default.
    let s = ok(&egofields(&["verify", "model"], dir.path()));
    assert!(s.contains("70/100"), "{s}");
}

#[test]
fn errors_are_structured() {
    let dir = tempfile::tempdir().unwrap();
    let out = egofields(&["verify", "missing"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "reconstruction");
    assert!(err["error"]["message"].as_str().unwrap().contains("missing"));

    let out = egofields(&["reconstruct", "."], dir.path());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn convert_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = model(5, 9);
    write_colmap_text(&m, &dir.path().join("a")).unwrap();
    ok(&egofields(&["convert", "a", "m.json"], dir.path()));
    ok(&egofields(&["convert", "m.json", "b"], dir.path()));
    assert_eq!(
        read_colmap_text(&dir.path().join("b")).unwrap(),
        read_colmap_text(&dir.path().join("a")).unwrap()
    );
    assert!(!egofields(&["convert", "a", "c"], dir.path()).status.success());
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "[verify]\naccept_threshold = 0.8\n[filter]\nmin_matches = 7\n",
    )
    .unwrap();
    let s = ok(&egofields(
        &["--config", "c.toml", "--print-config", "verify", "x"],
        dir.path(),
    ));
    assert!(s.contains("accept_threshold = 0.8"), "{s}");
    assert!(s.contains("min_matches = 7"), "{s}");
    let s = ok(&egofields(
        &[
            "--config",
            "c.toml",
            "--print-config",
            "verify",
            "x",
            "--threshold",
            "0.6",
        ],
        dir.path(),
    ));
    assert!(s.contains("accept_threshold = 0.6"), "{s}");

    write_colmap_text(&model(75, 100), &dir.path().join("model")).unwrap();
    let s = ok(&egofields(&["--config", "c.toml", "verify", "model"], dir.path()));
    assert!(s.starts_with("rate 0.750 reject"), "{s}");
}

#[test]
fn split_writes_labels() {
    let dir = tempfile::tempdir().unwrap();
    write_colmap_text(&model(600, 600), &dir.path().join("model")).unwrap();
    std::fs::write(
        dir.path().join("segs.csv"),
        "video_id,start_sec,stop_sec,verb\nP01,2.0,4.0,take\n",
    )
    .unwrap();
    let s = ok(&egofields(
        &[
            "--seed",
            "3",
            "split",
            "--model",
            "model",
            "--segments",
            "segs.csv",
            "--fps",
            "50",
            "--ooa-eval-rate",
            "0.05",
            "-o",
            "split.csv",
        ],
        dir.path(),
    ));
    assert!(s.contains("val-hard 50"), "{s}");
    let csv = std::fs::read_to_string(dir.path().join("split.csv")).unwrap();
    assert!(csv.starts_with("frame_name,label\n"));
    assert_eq!(csv.lines().count(), 601);
}

#[test]
fn vos_evaluation_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let scene = presets::vos_static(12, 2);
    ok(&egofields(
        &["--seed", "2", "synth", "vos-static", "--frames", "12", "-o", "seq"],
        dir.path(),
    ));
    write_colmap_text(&scene.reconstruction(0.1, 8).unwrap(), &dir.path().join("model")).unwrap();
    let reference = scene.frame_name(0);
    let mask = format!("seq/masks/obj_001/{reference}");
    ok(&egofields(
        &[
            "propagate",
            "fixed3d",
            "--model",
            "model",
            "--reference",
            &reference,
            "--mask",
            &mask,
            "-o",
            "run3d",
            "--overlays",
            "seq/images",
        ],
        dir.path(),
    ));
    assert!(dir.path().join("run3d/overlays").join(&reference).exists());
    let s = ok(&egofields(
        &[
            "evaluate",
            "vos",
            "--pred",
            "run3d/masks",
            "--gt",
            "seq/masks/obj_001",
            "-o",
            "eval",
        ],
        dir.path(),
    ));
    let got: serde_json::Value = serde_json::from_str(&s).unwrap();

    let (mut js, mut fs) = (Vec::new(), Vec::new());
    for i in 0..scene.len() {
        let name = scene.frame_name(i);
        let g = BinaryMask::open(&dir.path().join("seq/masks/obj_001").join(&name), 1).unwrap();
        let p = BinaryMask::open(&dir.path().join("run3d/masks").join(&name), 1).unwrap();
        js.push(jaccard(&p, &g).unwrap());
        fs.push(boundary_f(&p, &g, None).unwrap().f);
    }
    let j = js.iter().sum::<f64>() / js.len() as f64;
    let f = fs.iter().sum::<f64>() / fs.len() as f64;
    assert_eq!(got["J"].as_f64().unwrap().to_bits(), j.to_bits());
    assert_eq!(got["F"].as_f64().unwrap().to_bits(), f.to_bits());
    assert_eq!(got["J&F"].as_f64().unwrap().to_bits(), jf_mean(j, f).to_bits());
    assert_eq!(got["frames"], 12);
    assert!(dir.path().join("eval/per_frame.csv").exists());
}

#[test]
fn stats_study_and_nvs_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write_colmap_text(&model(65, 100), &dir.path().join("v1")).unwrap();
    write_colmap_text(&model(80, 100), &dir.path().join("v2")).unwrap();
    let s = ok(&egofields(
        &["stats", "v1", "v2", "--threshold", "0.7", "-o", "stats"],
        dir.path(),
    ));
    assert!(s.contains("1 below"), "{s}");
    for f in ["stats.json", "summary.csv", "orientation.csv", "run_manifest.json"] {
        assert!(dir.path().join("stats").join(f).exists(), "{f}");
    }

    let s = ok(&egofields(
        &["study-filtering", "--videos", "1", "-o", "study"],
        dir.path(),
    ));
    assert!(
        s.contains("| Homography-based |") && s.contains("| Relative change |"),
        "{s}"
    );

    ok(&egofields(
        &["synth", "vos-static", "--frames", "3", "-o", "seq"],
        dir.path(),
    ));
    let s = ok(&egofields(
        &[
            "evaluate",
            "nvs",
            "--pred",
            "seq/images",
            "--gt",
            "seq/images",
            "--masks",
            "seq/masks/obj_001",
        ],
        dir.path(),
    ));
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["method"]["all"]["psnr"], "inf");
}
