//! Command-line front end: `track`, `eval`, `sweep` and `synth`.
//!
//! Exit codes: 0 on success, 1 on I/O or parse errors, 2 on argument errors.
//!
//! Config files are flat `key = value` lines using `TrackerConfig` field
//! names, with `#` comments. A `[sequence.NAME]` header starts a section
//! whose keys apply only to that sequence. Precedence, lowest first:
//! defaults, global keys, the sequence section, command-line flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info, warn};
use rayon::prelude::*;

use crate::error::Error;
use crate::metrics::{evaluate, EvalReport, DEFAULT_IOU_GATE};
use crate::mot_io::{self, GroundTruth, SequenceData};
use crate::synth;
use crate::tracker::{run_sequence, run_sequence_with, TrackerConfig, TrackerMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Header of the `--log-thresholds` trace.
pub const THRESHOLD_LOG_HEADER: &str = "frame,threshold,n_high,n_low";
/// Header of the sweep CSV.
pub const SWEEP_HEADER: &str = "mode,threshold,mota,idf1,fp,fn,idsw";

#[derive(Debug, Parser)]
#[command(name = "byteadapt", version, about = "ByteTrack-style multi-object tracking with an adaptive confidence split")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track detections and write MOT result files.
    Track(TrackArgs),
    /// Score a result file against ground truth.
    Eval(EvalArgs),
    /// Compare fixed thresholds over a grid with the adaptive split.
    Sweep(SweepArgs),
    /// Generate a synthetic sequence (det/det.txt, gt/gt.txt, seqinfo.ini).
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Sort,
    ByteFixed,
    ByteAdaptive,
}

impl From<ModeArg> for TrackerMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sort => TrackerMode::Sort,
            ModeArg::ByteFixed => TrackerMode::ByteFixed,
            ModeArg::ByteAdaptive => TrackerMode::ByteAdaptive,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// MOT detection file (`frame,-1,l,t,w,h,score,...`).
    #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
    pub detections: Option<PathBuf>,
    /// Dataset root holding `NAME/det/det.txt` sequences.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Sequence under `--dataset`; repeat for several, omit for all.
    #[arg(long, requires = "dataset")]
    pub sequence: Vec<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Fixed split threshold; needed by `sort` and `byte-fixed` unless the
    /// config file sets `fixed_threshold`.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Result file, or a directory of `NAME.txt` files for several sequences.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Per-frame split trace; a directory of `NAME.csv` for several sequences.
    #[arg(long)]
    pub log_thresholds: Option<PathBuf>,
    /// Sequences tracked in parallel (0 = all cores).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Kv,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, default_value_t = DEFAULT_IOU_GATE)]
    pub iou_gate: f64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// `lo:hi:step`, inclusive of `hi`.
    #[arg(long, default_value = "0.1:0.9:0.1")]
    pub grid: String,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_IOU_GATE)]
    pub iou_gate: f64,
    /// Runs evaluated in parallel (0 = all cores).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// clean, occlusion-dip, dense-clutter or mot20-like.
    #[arg(long)]
    pub preset: String,
    #[arg(long, default_value_t = synth::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub output_dir: PathBuf,
}

/// Failure classified by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Failure(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Failure(e.into())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(CliError::Failure(e)) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Track(a) => cmd_track(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

/// Tracker settings from a config file: global keys plus per-sequence sections.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub global: Vec<(String, String)>,
    pub sequences: BTreeMap<String, Vec<(String, String)>>,
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self, Error> {
        let mut cfg = ConfigFile::default();
        let mut section: Option<String> = None;
        let mut probe = TrackerConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = header
                    .trim()
                    .strip_prefix("sequence.")
                    .filter(|n| !n.is_empty())
                    .ok_or_else(|| {
                        Error::parse(path, lineno, format!("unknown section `[{header}]`"))
                    })?;
                cfg.sequences.entry(name.to_string()).or_default();
                section = Some(name.to_string());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, lineno, "expected `key = value`"))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            probe
                .set(&k, &v)
                .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
            match &section {
                None => cfg.global.push((k, v)),
                Some(s) => cfg.sequences.get_mut(s).expect("section exists").push((k, v)),
            }
        }
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Whether `key` is set globally or in the section for `sequence`.
    pub fn sets(&self, key: &str, sequence: Option<&str>) -> bool {
        let in_seq = sequence
            .and_then(|s| self.sequences.get(s))
            .is_some_and(|kv| kv.iter().any(|(k, _)| k == key));
        in_seq || self.global.iter().any(|(k, _)| k == key)
    }

    pub fn resolve(&self, sequence: Option<&str>) -> Result<TrackerConfig, Error> {
        let mut c = TrackerConfig::default();
        for (k, v) in &self.global {
            c.set(k, v)?;
        }
        if let Some(kv) = sequence.and_then(|s| self.sequences.get(s)) {
            for (k, v) in kv {
                c.set(k, v)?;
            }
        }
        Ok(c)
    }
}

fn load_config(path: Option<&Path>) -> CliResult<ConfigFile> {
    match path {
        Some(p) => Ok(ConfigFile::read(p)?),
        None => Ok(ConfigFile::default()),
    }
}

fn check_unit(flag: &str, v: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(usage(format!("{flag} {v} is outside [0, 1]")))
    }
}

fn thread_pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("starting worker threads")
        .map_err(CliError::from)
}

struct TrackJob {
    name: String,
    data: SequenceData,
    config: TrackerConfig,
    output: PathBuf,
    trace: Option<PathBuf>,
}

fn cmd_track(a: TrackArgs) -> CliResult<()> {
    if let Some(t) = a.threshold {
        check_unit("--threshold", t)?;
    }
    let file = load_config(a.config.as_deref())?;

    let mut sequences: Vec<(Option<String>, SequenceData)> = Vec::new();
    let several;
    if let Some(path) = &a.detections {
        several = false;
        sequences.push((None, mot_io::read_detections(path)?));
    } else {
        let root = a.dataset.as_ref().expect("clap enforces one input");
        let found = mot_io::discover_sequences(root)?;
        let chosen: Vec<_> = if a.sequence.is_empty() {
            found
        } else {
            a.sequence
                .iter()
                .map(|name| {
                    found.iter().find(|p| &p.name == name).cloned().ok_or_else(|| {
                        usage(format!(
                            "sequence `{name}` not found under {}",
                            root.display()
                        ))
                    })
                })
                .collect::<CliResult<_>>()?
        };
        if chosen.is_empty() {
            return Err(usage(format!("no sequences found under {}", root.display())));
        }
        several = a.sequence.len() != 1;
        for p in &chosen {
            sequences.push((Some(p.name.clone()), mot_io::load_sequence(p)?));
        }
    }

    let mut jobs = Vec::new();
    for (name, data) in sequences {
        let mut config = file.resolve(name.as_deref())?;
        if let Some(m) = a.mode {
            config.mode = m.into();
        }
        if let Some(t) = a.threshold {
            config.fixed_threshold = t;
        }
        if config.mode.uses_fixed_threshold()
            && a.threshold.is_none()
            && !file.sets("fixed_threshold", name.as_deref())
        {
            return Err(usage(format!(
                "--threshold is required for --mode {}",
                config.mode
            )));
        }
        config.validate().map_err(|e| usage(e.to_string()))?;
        let label = name.clone().unwrap_or_else(|| "sequence".into());
        let (output, trace) = if several {
            (
                a.output.join(format!("{label}.txt")),
                a.log_thresholds.as_ref().map(|d| d.join(format!("{label}.csv"))),
            )
        } else {
            (a.output.clone(), a.log_thresholds.clone())
        };
        jobs.push(TrackJob {
            name: label,
            data,
            config,
            output,
            trace,
        });
    }

    let pool = thread_pool(a.jobs)?;
    pool.install(|| jobs.par_iter().map(track_one).collect::<Vec<_>>())
        .into_iter()
        .collect::<CliResult<Vec<()>>>()?;
    Ok(())
}

fn track_one(job: &TrackJob) -> CliResult<()> {
    info!(
        "tracking {} ({} frames, mode {})",
        job.name, job.data.frame_count, job.config.mode
    );
    if job.data.clamped_scores > 0 {
        warn!("{}: {} scores clamped into [0, 1]", job.name, job.data.clamped_scores);
    }
    let mut trace = String::new();
    if job.trace.is_some() {
        trace.push_str(THRESHOLD_LOG_HEADER);
        trace.push('\n');
    }
    let results = run_sequence_with(
        &job.config,
        &job.data.detections_by_frame,
        Some(job.data.frame_count),
        |r| {
            debug!(
                "frame {}: threshold {:.4}, {} high, {} low",
                r.frame,
                r.threshold,
                r.high.len(),
                r.low.len()
            );
            if job.trace.is_some() {
                let _ = writeln!(
                    trace,
                    "{},{:.6},{},{}",
                    r.frame,
                    r.threshold,
                    r.high.len(),
                    r.low.len()
                );
            }
        },
    )
    .with_context(|| format!("tracking {}", job.name))?;
    mot_io::write_results(&job.output, &results)?;
    if let Some(path) = &job.trace {
        mot_io::write_atomic(path, trace.as_bytes())?;
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> CliResult<()> {
    if !(a.iou_gate > 0.0 && a.iou_gate <= 1.0) {
        return Err(usage(format!("--iou-gate {} must lie in (0, 1]", a.iou_gate)));
    }
    let gt = mot_io::read_ground_truth(&a.gt)?;
    let hyp = mot_io::read_results(&a.results)?;
    let report = evaluate(&gt, &hyp, a.iou_gate)?;
    print!(
        "{}",
        match a.format {
            ReportFormat::Table => report.to_table(),
            ReportFormat::Kv => report.to_kv(),
        }
    );
    Ok(())
}

/// Parses `lo:hi:step` into the thresholds `lo, lo + step, ...` up to `hi`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(format!("grid `{spec}` must look like lo:hi:step"));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("grid `{spec}`: `{s}` is not a number"))
    };
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(format!("grid `{spec}` needs 0 <= lo <= hi <= 1"));
    }
    if step.is_nan() || step <= 0.0 {
        return Err(format!("grid `{spec}` needs a positive step"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    // rounding keeps 0.1 + 2 * 0.1 printing as 0.3
    Ok((0..=n)
        .map(|k| ((lo + k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

pub fn sweep_row(mode: &str, threshold: Option<f64>, r: &EvalReport) -> String {
    let t = threshold.map_or_else(|| "NA".to_string(), |t| t.to_string());
    format!(
        "{mode},{t},{:.6},{:.6},{},{},{}",
        r.mota, r.idf1, r.fp, r.fn_, r.id_switches
    )
}

fn cmd_sweep(a: SweepArgs) -> CliResult<()> {
    let grid = parse_grid(&a.grid).map_err(usage)?;
    if !(a.iou_gate > 0.0 && a.iou_gate <= 1.0) {
        return Err(usage(format!("--iou-gate {} must lie in (0, 1]", a.iou_gate)));
    }
    let base = load_config(a.config.as_deref())?.resolve(None)?;
    base.validate().map_err(|e| usage(e.to_string()))?;
    let data = mot_io::read_detections(&a.detections)?;
    let gt: GroundTruth = mot_io::read_ground_truth(&a.gt)?;
    let frames = data
        .frame_count
        .max(gt.keys().next_back().copied().unwrap_or(0));

    let mut runs: Vec<(TrackerMode, Option<f64>)> = grid
        .iter()
        .map(|&t| (TrackerMode::ByteFixed, Some(t)))
        .collect();
    runs.push((TrackerMode::ByteAdaptive, None));

    let pool = thread_pool(a.jobs)?;
    let rows = pool.install(|| {
        runs.par_iter()
            .map(|&(mode, t)| -> CliResult<String> {
                let mut cfg = base.clone();
                cfg.mode = mode;
                if let Some(t) = t {
                    cfg.fixed_threshold = t;
                }
                let results = run_sequence(&cfg, &data.detections_by_frame, Some(frames))?;
                let report = evaluate(&gt, &mot_io::hypotheses_from_results(&results), a.iou_gate)?;
                let label = if t.is_some() { "fixed" } else { "adaptive" };
                info!("{label} {t:?}: mota {:.4}", report.mota);
                Ok(sweep_row(label, t, &report))
            })
            .collect::<Vec<_>>()
    });
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for row in rows {
        csv.push_str(&row?);
        csv.push('\n');
    }
    mot_io::write_atomic(&a.output, csv.as_bytes())?;
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> CliResult<()> {
    let spec = synth::preset_with_seed(&a.preset, a.seed).map_err(|e| usage(e.to_string()))?;
    let (gt, dets) = synth::generate(&spec)?;
    synth::write_sequence(&a.output_dir, &a.preset, &spec, &gt, &dets)?;
    info!(
        "wrote {} frames of `{}` (seed {}) to {}",
        spec.frames,
        a.preset,
        a.seed,
        a.output_dir.display()
    );
    Ok(())
}
