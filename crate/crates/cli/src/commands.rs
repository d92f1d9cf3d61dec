use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bodyaudit_core::dataset::{
    build_eval_split, dataset_stats, generate_training_records, ingest_annotations, ManifestRecord,
};
use bodyaudit_core::eval::{
    acc_fdr, quality_block, tally, EvalRecord, EvalReport, TallyMode, TypeTable,
};
use bodyaudit_core::pipeline::Detection;
use bodyaudit_core::{scenegen, DetectionResult, Error, ImageRef, Pipeline};
use rayon::prelude::*;
use serde::Deserialize;

use crate::args::{
    BuildEvalArgs, Cli, Command, EvalArgs, GenScenesArgs, GlobalArgs, InputArgs, Mode, RepairArgs,
    StatsArgs, VideoArgs,
};
use crate::artifacts::{
    ensure_dir, file_stem, read_json, relative, save_image, write_json, write_jsonl, ImageRecord,
    RunRecord, Timing,
};
use crate::setup::{input_files, Setup};
use crate::{serve, worker};

pub fn dispatch(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Detect(a) => batch(g, &a, false, "detect"),
        Command::Run(a) => batch(g, &a, true, "run"),
        Command::Repair(a) => repair(g, &a),
        Command::VideoRepair(a) => video_repair(g, &a),
        Command::BuildEval(a) => build_eval(g, &a),
        Command::GenTrain(a) => gen_train(g, &a),
        Command::Stats(a) => stats(g, &a),
        Command::Eval(a) => eval(g, &a),
        Command::GenScenes(a) => gen_scenes(g, &a),
        Command::Annotate {
            command: crate::args::AnnotateCommand::Serve(a),
        } => {
            let _ = Setup::load(g)?;
            serve::serve(&a)
        }
        Command::Backend {
            command: crate::args::BackendCommand::Serve(a),
        } => {
            let setup = Setup::load(g)?;
            worker::serve(&a, setup.templates)
        }
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("starting worker pool")
}

fn open_all(setup: &Setup, input: &Path) -> Result<Vec<(PathBuf, ImageRef)>> {
    let files = input_files(input)?;
    let mut seen = BTreeSet::new();
    files
        .into_iter()
        .map(|f| {
            let img = setup.open(&f)?;
            if !seen.insert(img.id().to_owned()) {
                return Err(
                    Error::Data(format!("two inputs share the image id `{}`", img.id())).into(),
                );
            }
            Ok((f, img))
        })
        .collect()
}

fn write_detection(out: &Path, stem: &str, d: &Detection) -> Result<(PathBuf, PathBuf, PathBuf)> {
    let result = out.join(format!("{stem}.result.json"));
    write_json(&result, &d.result)?;
    let probes = out.join(format!("{stem}.probes.jsonl"));
    write_jsonl(&probes, d.probes.iter().map(|p| p.log_line()))?;
    let trace = out.join(format!("{stem}.loop.jsonl"));
    write_jsonl(&trace, &d.absent_loop.trace)?;
    Ok((result, probes, trace))
}

fn process(
    pipeline: &Pipeline,
    out: &Path,
    source: &Path,
    image: &ImageRef,
    repair: bool,
) -> Result<ImageRecord> {
    let stem = file_stem(image.id());
    let (detection, t) = pipeline
        .detect_timed(image)
        .with_context(|| format!("detecting in {}", source.display()))?;
    let (result, probes_log, loop_log) = write_detection(out, &stem, &detection)?;
    let mut rec = ImageRecord {
        image_id: image.id().to_owned(),
        source: source.to_owned(),
        result: relative(&result, out),
        probes_log: relative(&probes_log, out),
        loop_log: relative(&loop_log, out),
        plan: None,
        report: None,
        repaired: None,
        timing: Timing {
            redundant_ms: t.redundant_ms,
            absent_ms: t.absent_ms,
            repair_ms: None,
        },
    };
    if repair {
        let started = std::time::Instant::now();
        let r = pipeline
            .repair(image, &detection.result)
            .with_context(|| format!("repairing {}", source.display()))?;
        rec.timing.repair_ms = Some((started.elapsed().as_secs_f64() * 1e3).max(1e-3));
        let plan = out.join(format!("{stem}.plan.json"));
        write_json(&plan, &r.plan)?;
        let report = out.join(format!("{stem}.report.json"));
        write_json(&report, &r.report)?;
        let repaired = save_image(&r.image, out, &format!("{stem}.repaired"))?;
        rec.plan = Some(relative(&plan, out));
        rec.report = Some(relative(&report, out));
        rec.repaired = Some(relative(&repaired, out));
    }
    Ok(rec)
}

fn batch(g: &GlobalArgs, a: &InputArgs, repair: bool, command: &str) -> Result<()> {
    let setup = Setup::load(g)?;
    let pipeline = setup.pipeline()?;
    let out = g.out_dir();
    ensure_dir(&out)?;
    let inputs = open_all(&setup, &a.input)?;
    let records: Vec<Result<ImageRecord>> = pool(g.jobs)?.install(|| {
        inputs
            .par_iter()
            .map(|(src, img)| process(&pipeline, &out, src, img, repair))
            .collect()
    });
    let images = records.into_iter().collect::<Result<Vec<_>>>()?;
    let findings: usize = images
        .iter()
        .map(|r| read_json::<DetectionResult>(&out.join(&r.result)).map(|d| d.findings().len()))
        .sum::<Result<usize>>()?;
    let record = RunRecord {
        run_id: RunRecord::new_id(),
        command: command.to_owned(),
        config: setup.config.clone(),
        templates: setup.templates.clone(),
        backends: g.backends.clone(),
        input: a.input.clone(),
        images,
    };
    let path = record.finalize(&out)?;
    println!(
        "{} image(s), {findings} finding(s); record at {}",
        record.images.len(),
        path.display()
    );
    Ok(())
}

fn repair(g: &GlobalArgs, a: &RepairArgs) -> Result<()> {
    let setup = Setup::load(g)?;
    let pipeline = setup.pipeline()?;
    let out = g.out_dir();
    ensure_dir(&out)?;
    let image = setup.open(&a.input)?;
    let result: DetectionResult = read_json(&a.result)?;
    let r = pipeline.repair(&image, &result)?;
    let stem = file_stem(image.id());
    write_json(&out.join(format!("{stem}.plan.json")), &r.plan)?;
    write_json(&out.join(format!("{stem}.report.json")), &r.report)?;
    let path = save_image(&r.image, &out, &format!("{stem}.repaired"))?;
    println!(
        "{} step(s) applied; repaired image at {}",
        r.plan.steps.len(),
        path.display()
    );
    Ok(())
}

fn video_repair(g: &GlobalArgs, a: &VideoArgs) -> Result<()> {
    let setup = Setup::load(g)?;
    let pipeline = setup.pipeline()?;
    let out = g.out_dir().join("frames");
    ensure_dir(&out)?;
    let first = setup.open(&a.first)?;
    let last = setup.open(&a.last)?;
    let frames = pipeline.repair_video(&first, &last, &a.prompt, a.frames)?;
    for (i, f) in frames.iter().enumerate() {
        save_image(f, &out, &format!("frame_{i:04}"))?;
    }
    println!("{} frame(s) written to {}", frames.len(), out.display());
    Ok(())
}

fn build_eval(g: &GlobalArgs, a: &BuildEvalArgs) -> Result<()> {
    let setup = Setup::load(g)?;
    let out = g.out_dir();
    let masked_dir = out.join("masked");
    ensure_dir(&masked_dir)?;
    let images: Vec<ImageRef> = open_all(&setup, &a.input)?
        .into_iter()
        .map(|(_, i)| i)
        .collect();
    let (mut manifest, samples) = build_eval_split(
        &a.name,
        &images,
        &setup.config,
        &setup.templates,
        &setup.choice.backends,
        a.seed,
    );
    for (record, sample) in manifest.records.iter_mut().zip(&samples) {
        let path = save_image(
            &sample.masked_image,
            &masked_dir,
            &file_stem(sample.masked_image.id()),
        )?;
        if let ManifestRecord::AbsentSample { masked_path, .. } = record {
            *masked_path = Some(relative(&path, &out));
        }
    }
    write_json(&out.join("manifest.json"), &manifest)?;
    println!("{} sample(s), {} skipped", samples.len(), manifest.skipped);
    Ok(())
}

fn gen_train(g: &GlobalArgs, a: &InputArgs) -> Result<()> {
    let setup = Setup::load(g)?;
    let out = g.out_dir();
    let img_dir = out.join("images");
    ensure_dir(&img_dir)?;
    let images: Vec<ImageRef> = open_all(&setup, &a.input)?
        .into_iter()
        .map(|(_, i)| i)
        .collect();
    let (records, skipped) = generate_training_records(
        &images,
        &setup.config,
        &setup.templates,
        &setup.choice.backends,
    );
    let mut lines = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let path = save_image(&r.image, &img_dir, &format!("{i:06}"))?;
        lines.push(r.line(relative(&path, &out).to_string_lossy()));
    }
    write_jsonl(&out.join("train.jsonl"), &lines)?;
    println!("{} record(s), {skipped} image(s) skipped", records.len());
    Ok(())
}

fn stats(g: &GlobalArgs, a: &StatsArgs) -> Result<()> {
    let manifest = ingest_annotations(&a.input)?;
    let records: Vec<_> = manifest
        .records
        .iter()
        .filter_map(|r| match r {
            ManifestRecord::Annotation(a) => Some(a.clone()),
            ManifestRecord::AbsentSample { .. } => None,
        })
        .collect();
    let s = dataset_stats(&records);
    println!("{}", serde_json::to_string(&s)?);
    if let Some(out) = &g.out {
        ensure_dir(out)?;
        write_json(&out.join("stats.json"), &s)?;
        write_json(&out.join("manifest.json"), &manifest)?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairLine {
    original: PathBuf,
    repaired: PathBuf,
    prompt: String,
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::Data(format!("{} line {}: {e}", path.display(), i + 1)).into())
        })
        .collect()
}

fn eval(g: &GlobalArgs, a: &EvalArgs) -> Result<()> {
    let setup = Setup::load(g)?;
    let records: Vec<EvalRecord> = read_jsonl(&a.input)?;
    let mode = match a.mode {
        Mode::Flag => TallyMode::FlagLevel,
        Mode::Box => TallyMode::BoxLevel,
    };
    let scores = acc_fdr(&tally(&records, mode, a.iou)?);
    let quality = match &a.pairs {
        None => None,
        Some(path) => {
            let base = path.parent().unwrap_or(Path::new("."));
            let pairs = read_jsonl::<PairLine>(path)?
                .into_iter()
                .map(|p| {
                    let o = setup.open(&base.join(&p.original))?;
                    let r = setup.open(&base.join(&p.repaired))?;
                    Ok((o, r, p.prompt))
                })
                .collect::<Result<Vec<_>>>()?;
            Some(quality_block(&pairs, &setup.choice.backends)?)
        }
    };
    let report = EvalReport {
        detection: TypeTable::from_scores(&scores),
        quality,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(out) = &g.out {
        ensure_dir(out)?;
        write_json(&out.join("eval_report.json"), &report)?;
    }
    Ok(())
}

fn gen_scenes(g: &GlobalArgs, a: &GenScenesArgs) -> Result<()> {
    let out = g.out_dir();
    ensure_dir(&out)?;
    for i in 0..a.count {
        let seed = a.seed + i;
        scenegen::generate(seed).save(&out.join(format!("scene_{seed:05}.json")))?;
    }
    println!("{} scene(s) written to {}", a.count, out.display());
    Ok(())
}
