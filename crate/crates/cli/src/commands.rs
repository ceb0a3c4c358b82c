use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use egofields::benchmark::{
    filtering_study_video, generate_split, load_udos_annotations, read_segments_csv, reconstruction_stats,
    udos_mask_variants, Label, ScriptedSfm, StudyTable,
};
use egofields::features::GrayImage;
use egofields::filtering::{filter_frames, FrameSource, ImageDirSource, ManifestSource, UnreadablePolicy};
use egofields::geometry::Reconstruction;
use egofields::metrics::{
    boundary_f, jaccard, jf_mean, mean_average_precision, psnr_split, MetricReport, Raster, ScoreMap,
};
use egofields::propagation::{fixed_in_2d, overlay, propagate_fixed_3d, BinaryMask, PropagatedMask};
use egofields::recon_io::{
    orchestrate, read_colmap_text, read_epic_fields_json, resolve_workdir, verify_counts, write_colmap_text,
    write_epic_fields_json, ReconError, SubprocessSfm,
};
use egofields::synthetic::{presets, write_sequence, Preset};
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::manifest::{parent_dir, Run, RunManifest};
use crate::{
    Command, ConvertArgs, EvalTask, EvaluateArgs, FilterArgs, PresetName, PropagateArgs, PropagateMode,
    ReconstructArgs, SplitArgs, StatsArgs, StudyArgs, SynthArgs, UdosVariant, VerifyArgs,
};

/// Folds subcommand flags into the configuration.
pub fn apply_flags(command: &Command, config: &mut Config) -> Result<(), CliError> {
    match command {
        Command::Filter(a) => {
            if let Some(t) = a.threshold {
                config.filter.overlap_threshold = t;
                // The restart threshold plays no part in a single filter run.
                config.filter.restart_threshold = config.filter.restart_threshold.max(t);
            }
            if let Some(m) = a.min_matches {
                config.filter.min_matches = m;
            }
            if let Some(w) = a.max_window {
                config.filter.max_window = w;
            }
            if let Some(s) = a.stride {
                config.filter.frame_stride = s;
            }
            if a.skip_unreadable {
                config.filter.on_unreadable = UnreadablePolicy::Skip;
            }
        }
        Command::Reconstruct(a) => {
            if let Some(w) = &a.workdir {
                config.workdir = w.clone();
            }
            if let Some(t) = a.threshold {
                config.filter.overlap_threshold = t;
            }
            if let Some(t) = a.accept_threshold {
                config.verify.accept_threshold = t;
            }
            if let Some(m) = a.camera_model {
                config.camera_model = m;
            }
            if a.sfm_cmd.is_some() || a.register_cmd.is_some() || a.timeout.is_some() {
                let mut sfm = config.sfm.clone().unwrap_or(SubprocessSfm {
                    sfm_cmd: String::new(),
                    register_cmd: String::new(),
                    timeout_secs: None,
                });
                if let Some(c) = &a.sfm_cmd {
                    sfm.sfm_cmd = c.clone();
                }
                if let Some(c) = &a.register_cmd {
                    sfm.register_cmd = c.clone();
                }
                if sfm.register_cmd.is_empty() {
                    sfm.register_cmd = sfm.sfm_cmd.clone();
                }
                if a.timeout.is_some() {
                    sfm.timeout_secs = a.timeout;
                }
                config.sfm = Some(sfm);
            }
        }
        Command::Verify(a) => {
            if let Some(t) = a.threshold {
                config.verify.accept_threshold = t;
            }
        }
        Command::Stats(a) => {
            if let Some(t) = a.threshold {
                config.verify.accept_threshold = t;
            }
        }
        Command::Split(a) => {
            if let Some(f) = a.fps {
                config.fps = f;
            }
            if let Some(r) = a.ooa_eval_rate {
                config.split.ooa_eval_rate = r;
            }
            if let Some(e) = a.easy_fraction {
                config.split.easy_fraction = e;
            }
            if let Some(w) = a.exclusion_window {
                config.split.exclusion_window = w;
            }
        }
        Command::Convert(_)
        | Command::Propagate(_)
        | Command::Evaluate(_)
        | Command::StudyFiltering(_)
        | Command::Synth(_) => {}
    }
    config.filter.validate()?;
    config.verify.validate()?;
    config.split.validate()?;
    Ok(())
}

pub fn dispatch(command: &Command, config: &Config, seed: u64) -> Result<(), CliError> {
    match command {
        Command::Filter(a) => filter(a, config),
        Command::Reconstruct(a) => reconstruct(a, config),
        Command::Verify(a) => verify(a, config),
        Command::Convert(a) => convert(a, config),
        Command::Propagate(a) => propagate(a, config),
        Command::Evaluate(a) => evaluate(a, config),
        Command::Split(a) => split(a, config),
        Command::Stats(a) => stats(a, config),
        Command::StudyFiltering(a) => study(a, config, seed),
        Command::Synth(a) => synth(a, seed),
    }
}

fn up_to_date(prev: &RunManifest, dir: &Path) {
    eprintln!("{} is up to date in {}; nothing to do", prev.command, dir.display());
}

/// A COLMAP text directory or an EPIC JSON file.
pub fn load_model(path: &Path) -> Result<Reconstruction, CliError> {
    if path.is_dir() {
        Ok(read_colmap_text(path)?)
    } else {
        Ok(read_epic_fields_json(path)?)
    }
}

fn open_frames(path: &Path) -> Result<Box<dyn FrameSource>, CliError> {
    if path.is_dir() {
        Ok(Box::new(ImageDirSource::open(path)?))
    } else {
        Ok(Box::new(ManifestSource::open(path)?))
    }
}

fn lines(names: impl IntoIterator<Item = String>) -> String {
    let mut s = String::new();
    for n in names {
        s.push_str(&n);
        s.push('\n');
    }
    s
}

fn filter(a: &FilterArgs, config: &Config) -> Result<(), CliError> {
    let dir = parent_dir(&a.output);
    let (mut run, prev) = Run::begin(&dir, "filter", config, &[&a.frames], &[])?;
    if let Some(prev) = prev {
        up_to_date(&prev, &dir);
        return Ok(());
    }
    let source = open_frames(&a.frames)?;
    let result = filter_frames(source.as_ref(), &config.filter)?;
    run.write_at(&a.output, lines(result.kept.iter().map(|&k| source.name(k))).as_bytes())?;
    if let Some(path) = &a.result {
        run.write_at(path, serde_json::to_string_pretty(&result)?.as_bytes())?;
    }
    eprintln!("kept {} of {} frames", result.kept.len(), source.len());
    run.finish()?;
    Ok(())
}

fn reconstruct(a: &ReconstructArgs, config: &Config) -> Result<(), CliError> {
    let sfm = config.sfm.clone().filter(|s| !s.sfm_cmd.is_empty()).ok_or_else(|| {
        CliError::new(
            "config",
            "no SfM command; pass --sfm-cmd, set EGOFIELDS_SFM_CMD or add an [sfm] section to the config",
        )
    })?;
    let mut orch = config.orchestrate();
    orch.workdir = resolve_workdir(&orch.workdir);
    let versions = [
        ("sfm_cmd", sfm.sfm_cmd.clone()),
        ("register_cmd", sfm.register_cmd.clone()),
    ];
    // Resumption is driven by the pipeline state file, so the run always
    // goes through orchestration.
    let (mut run, _) = Run::begin(&orch.workdir, "reconstruct", config, &[&a.frames], &versions)?;
    let source = ImageDirSource::open(&a.frames)?;
    let (state, recon) = orchestrate(&source, &a.frames, &sfm, &orch)?;
    write_colmap_text(&recon, &run.dir().join("model"))?;
    run.record("model");
    match write_epic_fields_json(&recon, &run.dir().join("model.json")) {
        Ok(()) => run.record("model.json"),
        Err(ReconError::Unrepresentable(why)) => log::warn!("no JSON model written: {why}"),
        Err(e) => return Err(e.into()),
    }
    run.record("state.json");
    println!(
        "{} attempt {} rate {:.3} ({}/{} registered)",
        state.stage,
        state.attempt,
        state.registration_rate.unwrap_or(0.0),
        recon.registered_count(),
        recon.total_frame_count
    );
    run.finish()?;
    Ok(())
}

fn verify(a: &VerifyArgs, config: &Config) -> Result<(), CliError> {
    let recon = load_model(&a.model)?;
    let total = a.total.unwrap_or(recon.total_frame_count);
    if total == 0 {
        return Err(CliError::new("input", "total frame count unknown; pass --total"));
    }
    if recon.registered_count() > total {
        return Err(CliError::new(
            "input",
            format!(
                "{} registered frames exceed the total of {total}",
                recon.registered_count()
            ),
        ));
    }
    let v = verify_counts(recon.registered_count(), total, &config.verify);
    println!(
        "rate {:.3} {} ({}/{} registered)",
        v.registration_rate,
        if v.accept { "accept" } else { "reject" },
        v.registered,
        v.total
    );
    Ok(())
}

fn is_json(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn convert(a: &ConvertArgs, config: &Config) -> Result<(), CliError> {
    let to_json = a.input.is_dir();
    if to_json != is_json(&a.output) {
        return Err(CliError::new(
            "usage",
            "convert takes a COLMAP directory and a .json file, in either order",
        ));
    }
    let dir = if to_json {
        parent_dir(&a.output)
    } else {
        a.output.clone()
    };
    let (mut run, prev) = Run::begin(&dir, "convert", config, &[&a.input], &[])?;
    if let Some(prev) = prev {
        up_to_date(&prev, &dir);
        return Ok(());
    }
    let recon = load_model(&a.input)?;
    if to_json {
        write_epic_fields_json(&recon, &a.output)?;
        let name = run.name_of(&a.output);
        run.record(&name);
    } else {
        write_colmap_text(&recon, &a.output)?;
        for f in ["cameras.txt", "images.txt", "points3D.txt"] {
            run.record(f);
        }
    }
    run.finish()?;
    Ok(())
}

/// `frame_0001.jpg` -> `frame_0001.png`, keeping subdirectories.
fn mask_file_name(frame: &str) -> PathBuf {
    Path::new(frame).with_extension("png")
}

fn propagate(a: &PropagateArgs, config: &Config) -> Result<(), CliError> {
    let mut inputs: Vec<&Path> = vec![&a.model, &a.mask];
    if let Some(o) = &a.overlays {
        inputs.push(o);
    }
    let (mut run, prev) = Run::begin(&a.output, "propagate", config, &inputs, &[])?;
    if let Some(prev) = prev {
        up_to_date(&prev, &a.output);
        return Ok(());
    }
    let recon = load_model(&a.model)?;
    let reference = BinaryMask::open(&a.mask, a.object_id)?;
    let masks: Vec<PropagatedMask> = match a.mode {
        PropagateMode::Fixed2d => {
            if recon.frame(&a.reference).is_none() {
                return Err(egofields::propagation::PropagationError::UnknownFrame(a.reference.clone()).into());
            }
            recon
                .frames
                .iter()
                .zip(fixed_in_2d(&reference, recon.frames.len()))
                .map(|(f, mask)| PropagatedMask {
                    frame: f.name.clone(),
                    mask,
                    visible: true,
                })
                .collect()
        }
        PropagateMode::Fixed3d => propagate_fixed_3d(&reference, &a.reference, &recon, &config.propagation)?,
    };
    let mut visibility = String::from("frame,visible\n");
    for pm in &masks {
        let name = mask_file_name(&pm.frame);
        let path = run.dir().join("masks").join(&name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        pm.mask.save(&path)?;
        visibility.push_str(&format!("{},{}\n", csv_field(&pm.frame), pm.visible));
        if let Some(images) = &a.overlays {
            let img = GrayImage::open(&images.join(&pm.frame)).map_err(|e| CliError::new("image", e.to_string()))?;
            let path = run.dir().join("overlays").join(&name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            overlay(&img, &[&pm.mask])
                .save(&path)
                .map_err(|e| CliError::io(&path, e))?;
        }
    }
    run.record("masks");
    if a.overlays.is_some() {
        run.record("overlays");
    }
    run.write("visibility.csv", visibility.as_bytes())?;
    eprintln!(
        "{} masks written, {} visible",
        masks.len(),
        masks.iter().filter(|m| m.visible).count()
    );
    run.finish()?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Image files directly inside `dir`, by name.
fn image_names(dir: &Path) -> Result<Vec<String>, CliError> {
    let source = ImageDirSource::open(dir)?;
    Ok((0..source.len()).map(|i| source.name(i)).collect())
}

fn evaluate(a: &EvaluateArgs, config: &Config) -> Result<(), CliError> {
    let mut inputs: Vec<&Path> = vec![&a.pred, &a.gt];
    for p in [&a.masks, &a.split].into_iter().flatten() {
        inputs.push(p);
    }
    let mut run = None;
    if let Some(out) = &a.output {
        let (r, prev) = Run::begin(out, "evaluate", &(config, format!("{:?}", a)), &inputs, &[])?;
        if let Some(prev) = prev {
            up_to_date(&prev, out);
            let text = fs::read_to_string(out.join("summary.json")).map_err(|e| CliError::io(out, e))?;
            print!("{text}");
            return Ok(());
        }
        run = Some(r);
    }
    let (summary, report) = match a.task {
        EvalTask::Vos => evaluate_vos(a)?,
        EvalTask::Nvs => evaluate_nvs(a)?,
        EvalTask::Udos => evaluate_udos(a)?,
    };
    let text = format!("{}\n", serde_json::to_string_pretty(&summary)?);
    print!("{text}");
    if let Some(mut run) = run {
        run.write("summary.json", text.as_bytes())?;
        run.write("per_frame.csv", report.to_csv().as_bytes())?;
        run.finish()?;
    }
    Ok(())
}

/// Per-frame J and boundary F over the masks in `gt`, and their means.
pub fn vos_scores(
    pred: &Path,
    gt: &Path,
    exclude: &[String],
    tolerance: Option<f64>,
    method: &str,
) -> Result<(serde_json::Value, MetricReport), CliError> {
    let mut report = MetricReport::new(method);
    let (mut js, mut fs_) = (Vec::new(), Vec::new());
    for name in image_names(gt)? {
        if exclude.contains(&name) {
            continue;
        }
        let g = BinaryMask::open(&gt.join(&name), 1)?;
        let p = BinaryMask::open(&pred.join(&name), 1)?;
        let j = jaccard(&p, &g)?;
        let f = boundary_f(&p, &g, tolerance)?.f;
        report.push(&name, "", "J", Some(j));
        report.push(&name, "", "F", Some(f));
        report.push(&name, "", "J&F", Some(jf_mean(j, f)));
        js.push(j);
        fs_.push(f);
    }
    if js.is_empty() {
        return Err(CliError::new(
            "input",
            format!("no masks to evaluate in {}", gt.display()),
        ));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (j, f) = (mean(&js), mean(&fs_));
    let summary = json!({ "method": method, "frames": js.len(), "J": j, "F": f, "J&F": jf_mean(j, f) });
    Ok((summary, report))
}

fn evaluate_vos(a: &EvaluateArgs) -> Result<(serde_json::Value, MetricReport), CliError> {
    vos_scores(&a.pred, &a.gt, &a.exclude, a.tolerance, &a.method)
}

fn evaluate_nvs(a: &EvaluateArgs) -> Result<(serde_json::Value, MetricReport), CliError> {
    let labels: Option<BTreeMap<String, Label>> = match &a.split {
        Some(path) => Some(read_split(path)?),
        None => None,
    };
    let mut report = MetricReport::new(&a.method);
    for name in image_names(&a.gt)? {
        let group = match &labels {
            Some(l) => match l.get(&name) {
                Some(label) if label.is_eval() => label.as_str().to_string(),
                _ => continue,
            },
            None => String::new(),
        };
        let gt = Raster::open(&a.gt.join(&name))?;
        let pred = Raster::open(&a.pred.join(&name))?;
        match &a.masks {
            Some(dir) => {
                let fg = BinaryMask::open(&dir.join(&name), 1)?;
                let s = psnr_split(&pred, &gt, &fg)?;
                report.push(&name, &group, "psnr", Some(s.all));
                report.push(&name, &group, "psnr_fg", s.fg);
                report.push(&name, &group, "psnr_bg", s.bg);
            }
            None => report.push(&name, &group, "psnr", Some(egofields::metrics::psnr(&pred, &gt, None)?)),
        }
    }
    if report.records.is_empty() {
        return Err(CliError::new("input", "no frames to evaluate"));
    }
    Ok((report.summary_json(), report))
}

fn read_split(path: &Path) -> Result<BTreeMap<String, Label>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let label: Label = serde_json::from_value(json!(rec.get(1).unwrap_or("")))
            .map_err(|_| CliError::new("input", format!("{}: unknown label {:?}", path.display(), rec.get(1))))?;
        out.insert(rec.get(0).unwrap_or("").to_string(), label);
    }
    Ok(out)
}

fn evaluate_udos(a: &EvaluateArgs) -> Result<(serde_json::Value, MetricReport), CliError> {
    let (w, h, frames) = load_udos_annotations(&a.gt)?;
    let variants = udos_mask_variants(&frames, w, h)?;
    let chosen: Vec<(&str, &BTreeMap<String, BinaryMask>)> = match a.variant {
        UdosVariant::A => vec![("a", &variants.a)],
        UdosVariant::B => vec![("b", &variants.b)],
        UdosVariant::C => vec![("c", &variants.c)],
        UdosVariant::All => vec![("a", &variants.a), ("b", &variants.b), ("c", &variants.c)],
    };
    let mut scores = BTreeMap::new();
    for name in variants.a.keys() {
        let path = a.pred.join(mask_file_name(name));
        let r = Raster::open(&path)?;
        if r.channels() != 1 {
            return Err(CliError::new(
                "input",
                format!("{}: score maps must be single-channel", path.display()),
            ));
        }
        scores.insert(name.clone(), ScoreMap::new(r.width(), r.height(), r.values().to_vec())?);
    }
    let mut report = MetricReport::new(&a.method);
    let mut summary = serde_json::Map::new();
    for (variant, masks) in chosen {
        let pairs: Vec<(&ScoreMap, &BinaryMask)> = masks.iter().map(|(n, m)| (&scores[n], m)).collect();
        let ap = mean_average_precision(&pairs)?;
        for ((name, _), v) in masks.iter().zip(&ap.per_frame) {
            report.push(name, variant, "AP", *v);
        }
        summary.insert(
            variant.to_string(),
            json!({ "mAP": ap.mean, "frames": ap.per_frame.len() - ap.skipped, "skipped": ap.skipped }),
        );
    }
    Ok((
        json!({ "method": a.method, "variants": summary, "unflagged_frames": variants.skipped }),
        report,
    ))
}

fn split(a: &SplitArgs, config: &Config) -> Result<(), CliError> {
    let dir = parent_dir(&a.output);
    let mut inputs: Vec<&Path> = vec![&a.model, &a.segments];
    if let Some(v) = &a.visor_frames {
        inputs.push(v);
    }
    let (mut run, prev) = Run::begin(&dir, "split", config, &inputs, &[])?;
    if let Some(prev) = prev {
        up_to_date(&prev, &dir);
        return Ok(());
    }
    let mut recon = load_model(&a.model)?;
    recon.assign_timestamps_from_names(config.fps)?;
    let segments = read_segments_csv(&a.segments)?;
    let visor: Option<BTreeSet<String>> = match &a.visor_frames {
        Some(p) => Some(
            fs::read_to_string(p)
                .map_err(|e| CliError::io(p, e))?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
        ),
        None => None,
    };
    let s = generate_split(&recon.frames, &segments, visor.as_ref(), &config.split)?;
    run.write_at(&a.output, s.to_csv().as_bytes())?;
    for label in Label::ALL {
        println!("{} {}", label.as_str(), s.count(label));
    }
    if let Some(gap) = s.mean_eval_gap() {
        println!("mean_eval_gap_s {gap:.3}");
    }
    run.finish()?;
    Ok(())
}

fn video_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn stats(a: &StatsArgs, config: &Config) -> Result<(), CliError> {
    let inputs: Vec<&Path> = a.models.iter().map(PathBuf::as_path).collect();
    let (mut run, prev) = Run::begin(&a.output, "stats", config, &inputs, &[])?;
    if let Some(prev) = prev {
        up_to_date(&prev, &a.output);
        return Ok(());
    }
    let mut recons = Vec::new();
    for p in &a.models {
        recons.push((video_name(p), load_model(p)?));
    }
    let s = reconstruction_stats(&recons, config.verify.accept_threshold)?;
    run.write("stats.json", serde_json::to_string_pretty(&s)?.as_bytes())?;
    run.write("summary.csv", s.summary_csv().as_bytes())?;
    run.write("orientation.csv", s.orientation_csv().as_bytes())?;
    println!(
        "{} models, {} below the {:.2} threshold",
        s.summaries.len(),
        s.below_threshold,
        s.accept_threshold
    );
    run.finish()?;
    Ok(())
}

fn study(a: &StudyArgs, config: &Config, seed: u64) -> Result<(), CliError> {
    let (mut run, prev) = Run::begin(&a.output, "study-filtering", &(config, seed, a.videos), &[], &[])?;
    if let Some(prev) = prev {
        up_to_date(&prev, &a.output);
        print!(
            "{}",
            fs::read_to_string(a.output.join("table.md")).map_err(|e| CliError::io(&a.output, e))?
        );
        return Ok(());
    }
    let mut table = StudyTable::default();
    for s in seed..seed + a.videos {
        let mut scene = presets::skewed(s);
        scene.name = format!("skewed_{s}");
        let sfm = ScriptedSfm::new(&scene);
        let work = run.dir().join("work").join(&scene.name);
        let row = filtering_study_video(&scene, &sfm, &config.orchestrate(), &work)?;
        log::info!("{}: {} vs {} points", row.video, row.ours.points, row.uniform.points);
        table.rows.push(row);
    }
    run.record("work");
    let md = table.to_markdown();
    run.write("table.md", md.as_bytes())?;
    run.write("study.csv", table.to_csv().as_bytes())?;
    run.write("study.json", serde_json::to_string_pretty(&table)?.as_bytes())?;
    print!("{md}");
    run.finish()?;
    Ok(())
}

fn synth(a: &SynthArgs, seed: u64) -> Result<(), CliError> {
    let n = a.frames;
    let preset = match a.preset {
        PresetName::Identical => Preset::Identical {
            frames: n.unwrap_or(30),
            seed,
        },
        PresetName::AbruptCut => {
            let n = n.unwrap_or(60);
            Preset::AbruptCut {
                first: n / 2,
                second: n - n / 2,
                seed,
            }
        }
        PresetName::Panning => Preset::Panning {
            frames: n.unwrap_or(60),
            window: 4,
            seed,
        },
        PresetName::HotSpot => Preset::HotSpot { seed },
        PresetName::Skewed => Preset::Skewed { seed },
        PresetName::VosStatic => Preset::VosStatic {
            frames: n.unwrap_or(50),
            seed,
        },
        PresetName::VosLeaving => Preset::VosLeaving {
            frames: n.unwrap_or(50),
            seed,
        },
    };
    let (mut run, prev) = Run::begin(&a.output, "synth", &preset, &[], &[])?;
    if let Some(prev) = prev {
        up_to_date(&prev, &a.output);
        return Ok(());
    }
    let scene = preset.build()?;
    let layout = write_sequence(&scene, &a.output)?;
    for p in [&layout.images, &layout.scene] {
        let name = run.name_of(p);
        run.record(&name);
    }
    if !scene.objects.is_empty() {
        run.record("masks");
    }
    eprintln!("{} frames written to {}", scene.len(), layout.images.display());
    run.finish()?;
    Ok(())
}
