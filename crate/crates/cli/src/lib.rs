//! Command-line front end: motion masks, direction training and scoring,
//! benchmark reports and synthetic fixtures.

mod config;

pub use config::{parse_config, parse_config_str, ToolConfig};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use spikemotion::bench::{
    compute_metrics, emit_report, export_cdnet, load_cdnet, rank_methods, score_binary,
    synth_generate, BenchError, CdnetSequence, ConfusionCounts, GtLabel, MetricsReport,
};
use spikemotion::hsmd::{mean_fps, BsBackendState, FrameTiming, HsmdError, Pipeline, StageTimes};
use spikemotion::imaging::{read_gray_u8, write_gray_png, Direction, ImagingError};
use spikemotion::mhsnn::{
    backend_masks, classify, codd_track, direction_suite, load_weights, pcc_pwc, save_weights,
    train, DirectionLabel, LabelledSequence, MhsnnError, MhsnnNetwork,
};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config key {key}: {reason}")]
    Config { key: String, reason: String },
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 2,
            _ => 1,
        }
    }
}

fn imaging_is_io(e: &ImagingError) -> bool {
    matches!(e, ImagingError::Io(_))
}

impl From<HsmdError> for CliError {
    fn from(e: HsmdError) -> Self {
        let io = match &e {
            HsmdError::Frame { source, .. } | HsmdError::Imaging(source) => imaging_is_io(source),
            _ => false,
        };
        if io {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        let io = match &e {
            BenchError::Io { .. }
            | BenchError::MissingDir(_)
            | BenchError::Csv(_)
            | BenchError::Json(_) => true,
            BenchError::Imaging(i) => imaging_is_io(i),
            _ => false,
        };
        if io {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<MhsnnError> for CliError {
    fn from(e: MhsnnError) -> Self {
        match e {
            MhsnnError::Io { .. } | MhsnnError::BadWeightsFile(_) | MhsnnError::Csv(_) => {
                CliError::Io(e.to_string())
            }
            MhsnnError::Bench(b) => b.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "spikemotion", about = "Spiking-network motion detection tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Motion masks for a frame directory (or a sequence with an input/ folder)
    HsmdRun(Common),
    /// Train the direction network on the synthetic suite and save weights
    MhsnnTrain(Common),
    /// Score saved weights on the suite's test split
    MhsnnEval(Common),
    /// Score the centre-of-mass baseline on the suite's test split
    CoddRun(Common),
    /// Score masks against ground truth and write metric/rank reports
    Bench(Common),
    /// Write a synthetic sequence in the benchmark layout
    Synth(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// diff or gauss
    #[arg(long)]
    backend: Option<String>,
    /// dense or sparse
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Weights file for mhsnn-train/mhsnn-eval
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Directory of saved masks to score instead of running the detector
    #[arg(long)]
    masks: Option<PathBuf>,
    /// Use ground truth as the mask (bench, codd-run)
    #[arg(long)]
    oracle: bool,
    /// Method name in bench reports
    #[arg(long)]
    method: Option<String>,
}

impl Common {
    fn load(&self) -> Result<ToolConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => parse_config(p)?,
            None => ToolConfig::default(),
        };
        if let Some(v) = &self.backend {
            cfg.set("backend", v)?;
        }
        if let Some(v) = &self.mode {
            cfg.set("mode", v)?;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        for (slot, flag) in [
            (&mut cfg.input, &self.input),
            (&mut cfg.output, &self.output),
            (&mut cfg.weights, &self.weights),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    p.as_deref()
        .ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Validation(e.to_string()))
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit status. Messages go to stdout/stderr.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::HsmdRun(c) => hsmd_run(&c.load()?),
        Command::MhsnnTrain(c) => mhsnn_train(&c.load()?),
        Command::MhsnnEval(c) => mhsnn_eval(&c.load()?),
        Command::CoddRun(c) => codd_run(&c.load()?, c.oracle),
        Command::Bench(c) => bench(&c.load()?, &c),
        Command::Synth(c) => synth(&c.load()?),
    }
}

fn input_frames(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let nested = dir.join("input");
    let dir = if nested.is_dir() {
        nested
    } else {
        dir.to_path_buf()
    };
    let paths = spikemotion::hsmd::frame_paths(&dir).map_err(io(&dir))?;
    if paths.is_empty() {
        return Err(CliError::Validation(format!(
            "no frames in {}",
            dir.display()
        )));
    }
    Ok(paths)
}

fn new_pipeline(cfg: &ToolConfig) -> Result<Pipeline, CliError> {
    let backend = BsBackendState::new(cfg.backend, cfg.backend_params)?;
    Ok(Pipeline::new(cfg.hsmd.clone(), Box::new(backend))?)
}

#[derive(serde::Serialize)]
struct TimingReport {
    frames: usize,
    mean_fps: f64,
    per_stage_ms: StageTimes,
}

fn write_timing(path: &Path, timings: &[FrameTiming]) -> Result<(), CliError> {
    let mut total = StageTimes::default();
    for t in timings {
        total.add(&t.stages);
    }
    let report = TimingReport {
        frames: timings.len(),
        mean_fps: mean_fps(timings),
        per_stage_ms: total.scaled(1.0 / timings.len().max(1) as f64),
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(path, text).map_err(io(path))
}

fn mask_name(index: usize) -> String {
    format!("bin{:06}.png", index + 1)
}

fn hsmd_run(cfg: &ToolConfig) -> Result<(), CliError> {
    let input = required(&cfg.input, "input")?;
    let output = required(&cfg.output, "output")?;
    let paths = input_frames(input)?;
    std::fs::create_dir_all(output).map_err(io(output))?;
    let mut pipeline = new_pipeline(cfg)?;
    let mut write_err = None;
    let timings = pipeline.run_paths(&paths, |out| {
        let m = &out.mask;
        let path = output.join(mask_name(out.timing.index));
        if let Err(e) = write_gray_png(&path, m.width, m.height, &m.to_u8()) {
            write_err = Some(CliError::Io(format!("{}: {e}", path.display())));
        }
        Ok(())
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    write_timing(&output.join("timing.json"), &timings)?;
    println!("{} masks, {:.1} fps", timings.len(), mean_fps(&timings));
    Ok(())
}

fn mhsnn_train(cfg: &ToolConfig) -> Result<(), CliError> {
    let out = cfg
        .weights
        .as_deref()
        .or(cfg.output.as_deref())
        .ok_or_else(|| CliError::Usage("--weights or --output is required".into()))?;
    let (train_set, _) = direction_suite(&cfg.suite)?;
    let mut net = MhsnnNetwork::new(cfg.suite.size, cfg.suite.size, cfg.mhsnn.clone())?;
    let log = train(&mut net, &train_set, &cfg.train)?;
    save_weights(&net, out)?;
    let last = log.mean_weights.last().cloned().unwrap_or_default();
    println!(
        "{} corrections, final mean weights {last:?}",
        log.corrections
    );
    Ok(())
}

/// Per-direction (correct, wrong) tallies written as CSV.
fn write_pcc(path: &Path, tally: &BTreeMap<usize, (u64, u64)>) -> Result<(), CliError> {
    let mut text = String::from("direction,correct,wrong,pcc,pwc\n");
    for (&k, &(c, w)) in tally {
        let (pcc, pwc) = pcc_pwc(c, w)?;
        let name = Direction::ALL[k].name();
        text.push_str(&format!("{name},{c},{w},{pcc},{pwc}\n"));
        println!("{name}: pcc {pcc:.1}% pwc {pwc:.1}%");
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
    }
    std::fs::write(path, text).map_err(io(path))
}

fn direction_index(s: &LabelledSequence) -> usize {
    let d = s.label.expect("suite sequences are labelled");
    Direction::ALL
        .iter()
        .position(|&x| x == d)
        .expect("four directions")
}

fn tally<I: IntoIterator<Item = (usize, bool)>>(items: I) -> BTreeMap<usize, (u64, u64)> {
    let mut out = BTreeMap::new();
    for (k, ok) in items {
        let e = out.entry(k).or_insert((0, 0));
        if ok {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    out
}

fn pcc_path(cfg: &ToolConfig) -> Result<PathBuf, CliError> {
    Ok(required(&cfg.output, "output")?.join("pcc.csv"))
}

fn mhsnn_eval(cfg: &ToolConfig) -> Result<(), CliError> {
    let weights = required(&cfg.weights, "weights")?;
    let out = pcc_path(cfg)?;
    let (_, test_set) = direction_suite(&cfg.suite)?;
    let mut net = MhsnnNetwork::new(cfg.suite.size, cfg.suite.size, cfg.mhsnn.clone())?;
    load_weights(&mut net, weights)?;
    let results: Vec<Vec<(usize, bool)>> = pool(cfg.jobs)?.install(|| {
        test_set
            .par_iter()
            .map_init(
                || net.clone(),
                |net, s| -> Result<Vec<(usize, bool)>, CliError> {
                    let k = direction_index(s);
                    let want = DirectionLabel::from(Direction::ALL[k]);
                    Ok(classify(net, &s.frames, cfg.window)?
                        .into_iter()
                        .map(|got| (k, got == want))
                        .collect())
                },
            )
            .collect::<Result<_, _>>()
    })?;
    write_pcc(&out, &tally(results.into_iter().flatten()))
}

fn codd_run(cfg: &ToolConfig, oracle: bool) -> Result<(), CliError> {
    let out = pcc_path(cfg)?;
    let (_, test_set) = direction_suite(&cfg.suite)?;
    let width = cfg.suite.size;
    let results: Vec<Vec<(usize, bool)>> = pool(cfg.jobs)?.install(|| {
        test_set
            .par_iter()
            .map(|s| -> Result<Vec<(usize, bool)>, CliError> {
                let masks = if oracle {
                    s.gt.iter().map(|g| g.moving_mask()).collect()
                } else {
                    backend_masks(cfg.backend, cfg.backend_params, &s.frames)?
                };
                let k = direction_index(s);
                let want = DirectionLabel::from(Direction::ALL[k]);
                Ok(codd_track(width, masks.iter().map(Vec::as_slice))
                    .into_iter()
                    .skip(1)
                    .map(|o| (k, o.label == want))
                    .collect())
            })
            .collect::<Result<_, _>>()
    })?;
    write_pcc(&out, &tally(results.into_iter().flatten()))
}

fn synth(cfg: &ToolConfig) -> Result<(), CliError> {
    let output = required(&cfg.output, "output")?;
    let seq = synth_generate(&cfg.scene)?;
    export_cdnet(output, &seq, None)?;
    println!(
        "{} frames written to {}",
        seq.frames.len(),
        output.display()
    );
    Ok(())
}

/// Sequences under `root`: the directory itself if it holds ground truth,
/// otherwise each subdirectory that does, in name order.
fn sequence_dirs(root: &Path) -> Result<Vec<PathBuf>, CliError> {
    if root.join("groundtruth").is_dir() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(io(root))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("groundtruth").is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Validation(format!(
            "no sequences under {}",
            root.display()
        )));
    }
    Ok(dirs)
}

fn seq_name(p: &Path) -> String {
    p.file_name()
        .map_or_else(|| "sequence".into(), |n| n.to_string_lossy().into_owned())
}

enum MaskSource<'a> {
    Oracle,
    Saved(&'a Path),
    Detector,
}

/// Scores one sequence within its temporal ROI. Returns the counts and the
/// detector frame rate when the detector was run.
fn score_sequence(
    cfg: &ToolConfig,
    seq: &CdnetSequence,
    source: &MaskSource,
) -> Result<(ConfusionCounts, Option<f64>), CliError> {
    let mut counts = ConfusionCounts::default();
    let mut pipeline = match source {
        MaskSource::Detector => Some(new_pipeline(cfg)?),
        _ => None,
    };
    let mut timings = Vec::new();
    for i in 0..seq.len() {
        // the detector must see every frame to keep its state in step
        let detected = match pipeline.as_mut() {
            Some(p) => {
                let out = p.process_raw(&seq.load_frame(i)?)?;
                timings.push(out.timing);
                Some(out.mask)
            }
            None => None,
        };
        if !seq.in_temporal_roi(i) {
            continue;
        }
        let gt = seq.load_gt(i)?;
        let (w, h, mask) = match source {
            MaskSource::Oracle => (
                gt.width,
                gt.height,
                gt.labels.iter().map(|&l| l == GtLabel::Moving).collect(),
            ),
            MaskSource::Saved(dir) => {
                let path = dir.join(format!("bin{:06}.png", seq.frame_number(i)));
                let (w, h, px) = read_gray_u8(&path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                (w, h, px.into_iter().map(|v| v > 127).collect())
            }
            MaskSource::Detector => {
                let m = detected.expect("detector ran");
                (m.width, m.height, m.binary)
            }
        };
        counts.add(&score_binary(w, h, &mask, &gt)?);
    }
    Ok((counts, pipeline.map(|_| mean_fps(&timings))))
}

fn bench(cfg: &ToolConfig, flags: &Common) -> Result<(), CliError> {
    let input = required(&cfg.input, "input")?;
    let output = required(&cfg.output, "output")?;
    let dirs = sequence_dirs(input)?;
    let single = dirs.len() == 1 && dirs[0] == input;
    let method = flags.method.clone().unwrap_or_else(|| {
        if flags.oracle {
            "oracle".into()
        } else if flags.masks.is_some() {
            "masks".into()
        } else {
            "hsmd".into()
        }
    });
    let results: Vec<(String, ConfusionCounts, Option<f64>)> = pool(cfg.jobs)?.install(|| {
        dirs.par_iter()
            .map(|d| {
                let name = seq_name(d);
                let seq = load_cdnet(d)?;
                let saved;
                let source = if flags.oracle {
                    MaskSource::Oracle
                } else if let Some(m) = &flags.masks {
                    saved = if single { m.clone() } else { m.join(&name) };
                    MaskSource::Saved(&saved)
                } else {
                    MaskSource::Detector
                };
                let (c, fps) = score_sequence(cfg, &seq, &source)?;
                Ok((name, c, fps))
            })
            .collect::<Result<_, CliError>>()
    })?;
    let mut reports: Vec<MetricsReport> = Vec::new();
    let mut fps = BTreeMap::new();
    for (name, c, f) in &results {
        reports.push(compute_metrics(c).with_labels(&method, name));
        if let Some(f) = f {
            fps.insert(name.clone(), *f);
        }
    }
    let table = rank_methods(&reports)?;
    let (csv, json) = emit_report(output, &table, &reports, &fps)?;
    for r in &reports {
        println!(
            "{}: re {:.4} pr {:.4} f1 {:.4}",
            r.category, r.re, r.pr, r.f1
        );
    }
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}
