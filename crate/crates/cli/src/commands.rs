use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use icg_bpoint::delineator::{count_method, preprocess, trace_beat, BeatTrace};
use icg_bpoint::io::{
    export_segments, load_annotations, load_detections, load_recording, save_annotations,
    save_detections, save_recording, write_json,
};
use icg_bpoint::{
    aggregate, delineate, detect_b_points, detect_c_points, evaluate_recording, synthesize_icg,
    BeatDetection, DetectionFile, DetectionMethod, DetectorConfig, RecordingEval, SynthSpec,
};
use rayon::prelude::*;

use crate::args::{DetectArgs, EvalArgs, ExportArgs, ReportArgs, SynthArgs};
use crate::config;
use crate::Failure;

fn check_tolerances(tolerances: &[f64]) -> Result<(), Failure> {
    match tolerances.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        Some(t) => Err(Failure::usage(anyhow!(
            "tolerance must be a positive number of ms, got {t}"
        ))),
        None => Ok(()),
    }
}

fn summary(id: &str, beats: &[BeatDetection]) -> String {
    format!(
        "{id}: {} beats, {} MB, {} fallback, {} skipped",
        beats.len(),
        count_method(beats, DetectionMethod::Mb),
        count_method(beats, DetectionMethod::Fallback),
        count_method(beats, DetectionMethod::Skipped),
    )
}

pub fn detect(args: DetectArgs) -> Result<(), Failure> {
    let cfg = config::resolve(&args.config)?;
    let rec = load_recording(&args.input.input, args.input.fs)?;
    let delineation = delineate(&rec, &cfg)?;
    if let Some(path) = &args.trace {
        let traces: Vec<BeatTrace> = delineation
            .c_points()
            .into_iter()
            .map(|c| trace_beat(&delineation.filtered, c, rec.fs, &cfg))
            .collect();
        write_json(&traces, path)?;
    }
    println!("{}", summary(&rec.id, &delineation.beats));
    let file = DetectionFile {
        recording_id: rec.id,
        fs: rec.fs,
        beats: delineation.beats,
        config: cfg,
    };
    save_detections(&file, &args.out)?;
    Ok(())
}

pub fn eval(args: EvalArgs) -> Result<(), Failure> {
    check_tolerances(&args.tolerances)?;
    let (id, fs, beats) = match (&args.det, &args.rec) {
        (Some(det), _) => {
            let file = load_detections(det)?;
            (file.recording_id, file.fs, file.beats)
        }
        (None, Some(rec)) => {
            let cfg = config::resolve(&args.config)?;
            let rec = load_recording(rec, args.fs)?;
            let beats = detect_b_points(&rec, &cfg)?;
            (rec.id, rec.fs, beats)
        }
        (None, None) => unreachable!("clap requires --det or --rec"),
    };
    let ann = load_annotations(&args.ann)?;
    if ann.recording_id != id {
        log::warn!(
            "annotations are for {:?}, detections for {id:?}",
            ann.recording_id
        );
    }
    let report = aggregate(vec![evaluate_recording(
        &beats,
        &ann,
        fs,
        &args.tolerances,
    )?])?;
    print!("{}", report.render_table());
    if let Some(out) = &args.out {
        write_json(&report, out)?;
    }
    Ok(())
}

pub fn synth(args: SynthArgs) -> Result<(), Failure> {
    let spec = SynthSpec {
        fs: args.fs,
        n_beats: args.beats,
        heart_rate_bpm: args.bpm,
        b_to_c_ms: args.b_to_c_ms,
        notch_depth: args.notch_depth,
        c_amplitude: args.c_amplitude,
        noise_rms: args.noise_rms,
        rr_jitter_pct: args.jitter_pct,
        seed: args.seed,
    };
    let (rec, truth) = synthesize_icg(&spec)?;
    save_recording(&rec, &args.out_rec)?;
    save_annotations(&truth, &args.out_ann)?;
    println!(
        "{}: {} samples, {} beats",
        rec.id,
        rec.samples.len(),
        truth.b_points.len()
    );
    Ok(())
}

pub fn export(args: ExportArgs) -> Result<(), Failure> {
    let cfg = config::resolve(&args.config)?;
    let rec = load_recording(&args.input.input, args.input.fs)?;
    rec.validate()?;
    let filtered = preprocess(&rec, &cfg)?;
    let c_points = detect_c_points(&filtered, rec.fs, &cfg)?;
    let n = export_segments(&rec, &c_points, args.pre, args.post, &args.out)?;
    println!("{}: {n} segments", rec.id);
    Ok(())
}

fn annotation_path(dir: &Path, recording: &Path) -> anyhow::Result<PathBuf> {
    let stem = recording
        .file_stem()
        .ok_or_else(|| anyhow!("{}: no file name", recording.display()))?;
    Ok(dir.join(stem).with_extension("json"))
}

fn evaluate_one(
    path: &Path,
    args: &ReportArgs,
    cfg: &DetectorConfig,
) -> anyhow::Result<RecordingEval> {
    let rec = load_recording(path, args.fs)?;
    let ann = load_annotations(annotation_path(&args.ann_dir, path)?)?;
    let beats = detect_b_points(&rec, cfg)?;
    let eval = evaluate_recording(&beats, &ann, rec.fs, &args.tolerances)?;
    log::info!("{}", summary(&rec.id, &beats));
    Ok(eval)
}

pub fn report(args: ReportArgs) -> Result<(), Failure> {
    check_tolerances(&args.tolerances)?;
    let cfg = config::resolve(&args.config)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        pool = pool.num_threads(jobs.into());
    }
    let pool = pool.build().context("starting worker pool")?;
    let evals = pool.install(|| {
        args.recordings
            .par_iter()
            .map(|path| evaluate_one(path, &args, &cfg).with_context(|| path.display().to_string()))
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    let report = aggregate(evals)?;
    print!("{}", report.render_table());
    if let Some(json) = &args.json {
        write_json(&report, json)?;
    }
    Ok(())
}
