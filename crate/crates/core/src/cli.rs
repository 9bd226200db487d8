//! The `dedet` command line: `synth`, `gen-signal`, `train`, `infer`, `eval`
//! and `plot`.
//!
//! A dataset directory holds `labels.csv` and `clips/<video_id>.dedv`.

use std::collections::{BTreeMap, HashMap};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use crate::data::{DatasetStats, LabelledVideo, VideoClip};
use crate::discretise::{discretise_detailed, DiscretiseParams, Threshold};
use crate::error::{Error, Result};
use crate::formats::{self, InferredFrame, LabelRecord, ResultsRow, CLIP_EXTENSION};
use crate::labels::{target_signal, SignalKind};
use crate::metrics::{cumulative_distance_histogram, match_events, MatchReport, DEFAULT_HISTOGRAM_BINS};
use crate::model::{Checkpoint, StyleMode};
use crate::pipeline::{infer_signal, score_video, summarise, Summary, VideoScore};
use crate::plot;
use crate::run_config::RunConfig;
use crate::synth::{gen_swim_like, gen_tennis_like, SynthSpec, TennisSpec};
use crate::train::{holdout_split, loss_curve_csv, BestCheckpoint, Trainer};

#[derive(Debug, Parser)]
#[command(name = "dedet", version, about = "Discrete event detection in video")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Random seed (overrides the config's `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `key = value` run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Matching tolerance in frames [default: 3].
    #[arg(long, global = true)]
    pub tolerance: Option<usize>,
    /// Discretisation threshold: `mean` or a number such as 0.5 [default: mean].
    #[arg(long, global = true)]
    pub threshold: Option<Threshold>,
    /// Width of the triangular smoothing window; odd [default: 9].
    #[arg(long, global = true)]
    pub smooth_window: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Convert labels into per-frame target signals.
    GenSignal(GenSignalArgs),
    /// Train a model as described by `--config`.
    Train(TrainArgs),
    /// Run a checkpoint over clips and discretise the output.
    Infer(InferArgs),
    /// Score predictions or inferred signals against labels.
    Eval(EvalArgs),
    /// Render a CSV output as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Swim,
    Tennis,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "swim")]
    pub preset: Preset,
    #[arg(long, default_value_t = 20)]
    pub videos: usize,
    #[arg(long, default_value_t = 500)]
    pub frames: usize,
    #[arg(long, default_value_t = 32)]
    pub height: usize,
    #[arg(long, default_value_t = 32)]
    pub width: usize,
    /// Event-free clips appended by the tennis preset.
    #[arg(long, default_value_t = TennisSpec::default().background_videos)]
    pub background: usize,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenSignalArgs {
    #[arg(long)]
    pub labels: PathBuf,
    /// square, sine, truncated-sine or fixed-cosine.
    #[arg(long)]
    pub kind: SignalKind,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub turn_threshold: Option<f64>,
    #[arg(long)]
    pub fixed_period: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Continue from a `last.dedm` written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Overrides the config's `steps`.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    All,
    /// The videos held out for validation when the checkpoint was trained.
    Val,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub clips: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub split: Split,
    /// Inferred signals CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write event predictions here.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Inferred signals CSV (re-discretised with the current parameters).
    #[arg(long, conflicts_with = "predictions", required_unless_present = "predictions")]
    pub signals: Option<PathBuf>,
    /// Event predictions CSV; every labelled video in the split is scored.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub labels: PathBuf,
    /// Fills the architecture columns of the results row.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    pub split: Split,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    /// `step,train_loss,val_loss` CSV.
    Loss,
    /// Inferred signal of one video, optionally against its target.
    Signal,
    /// `distance,count,cumulative` CSV.
    Histogram,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(value_enum)]
    pub kind: PlotKind,
    #[arg(long)]
    pub input: PathBuf,
    /// Signals CSV with the target of the plotted video.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Video to plot; defaults to the first one in the file.
    #[arg(long)]
    pub video: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Discretiser, tolerance and seed after applying config then flags.
struct Settings {
    config: RunConfig,
    discretise: DiscretiseParams,
    tolerance: usize,
}

impl GlobalArgs {
    fn settings(&self) -> Result<Settings> {
        let mut config = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            config.train.seed = s;
        }
        let mut discretise = config.discretise;
        if let Some(t) = self.threshold {
            discretise.threshold = t;
        }
        if let Some(w) = self.smooth_window {
            if w % 2 == 0 {
                return Err(Error::InvalidArgument(format!("--smooth-window must be odd, got {w}")));
            }
            discretise.smooth_window = w;
        }
        let tolerance = self.tolerance.unwrap_or(config.tolerance);
        Ok(Settings { config, discretise, tolerance })
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let s = cli.global.settings()?;
    match cli.command {
        Command::Synth(a) => cmd_synth(&a, cli.global.seed.unwrap_or(0)),
        Command::GenSignal(a) => cmd_gen_signal(&a, &s),
        Command::Train(a) => cmd_train(&a, s),
        Command::Infer(a) => cmd_infer(&a, &s),
        Command::Eval(a) => cmd_eval(&a, &s),
        Command::Plot(a) => cmd_plot(&a),
    }
}

pub fn clip_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.{CLIP_EXTENSION}"))
}

fn cmd_synth(a: &SynthArgs, seed: u64) -> Result<()> {
    let spec = SynthSpec { n_videos: a.videos, frames_per_video: a.frames, height: a.height, width: a.width, seed, ..Default::default() };
    let data = match a.preset {
        Preset::Swim => gen_swim_like(&spec)?,
        Preset::Tennis => gen_tennis_like(&spec, &TennisSpec { background_videos: a.background, ..Default::default() })?,
    };
    let clips = a.out.join("clips");
    std::fs::create_dir_all(&clips)?;
    let mut records = Vec::with_capacity(data.len());
    for (clip, ann) in &data {
        formats::save_clip(clip_path(&clips, clip.id()), clip)?;
        records.push(LabelRecord::new(ann, clip.fps()));
    }
    formats::save_labels(a.out.join("labels.csv"), &records)?;
    info!("wrote {} videos to {}", records.len(), a.out.display());
    Ok(())
}

fn cmd_gen_signal(a: &GenSignalArgs, s: &Settings) -> Result<()> {
    let mut params = s.config.train.signal_params;
    if let Some(t) = a.turn_threshold {
        params.turn_threshold = t;
    }
    if let Some(p) = a.fixed_period {
        params.fixed_period = p;
    }
    let labels = formats::load_labels(&a.labels)?;
    let signals = labels
        .iter()
        .map(|r| Ok((r.video_id.as_str(), target_signal(&r.annotation()?, a.kind, params)?.values)))
        .collect::<Result<Vec<_>>>()?;
    formats::write_signals(formats::create(&a.out)?, signals.iter().map(|(id, v)| (*id, v.as_slice())))
}

fn load_clip(dir: &Path, rec: &LabelRecord) -> Result<VideoClip> {
    let clip = formats::load_clip(clip_path(dir, &rec.video_id), &rec.video_id, rec.fps)?;
    if clip.n_frames() != rec.n_frames {
        return Err(Error::Format(format!("{}: clip has {} frames, labels say {}", rec.video_id, clip.n_frames(), rec.n_frames)));
    }
    Ok(clip)
}

/// Loads every training video named in the labels, with its target.
fn load_training_videos(cfg: &RunConfig) -> Result<Vec<LabelledVideo>> {
    let mut labels = formats::load_labels(&cfg.labels)?;
    if cfg.train.model.style_mode == StyleMode::PerStyle {
        labels.retain(|r| Some(r.style) == cfg.style);
    }
    if labels.is_empty() {
        return Err(Error::Empty("no training videos after filtering".into()));
    }
    let signals: Option<HashMap<String, Vec<f64>>> = match &cfg.signals {
        Some(p) => Some(formats::read_signals(formats::open(p)?)?.into_iter().collect()),
        None => None,
    };
    labels
        .iter()
        .map(|rec| {
            let clip = load_clip(&cfg.clips, rec)?;
            let ann = rec.annotation()?;
            match &signals {
                Some(map) => {
                    let target = map
                        .get(&rec.video_id)
                        .ok_or_else(|| Error::Format(format!("signals file has no rows for {}", rec.video_id)))?;
                    LabelledVideo::with_target(clip, ann, target.iter().map(|&v| v as f32).collect())
                }
                None => LabelledVideo::new(clip, ann, cfg.train.signal, cfg.train.signal_params),
            }
        })
        .collect()
}

const META_STATS: &str = "stats";
const META_VAL_IDS: &str = "val_ids";
const META_VAL_LOSS: &str = "val_loss";
const META_STEP: &str = "step";
const META_SIGNAL: &str = "signal";

fn annotate(ck: &mut Checkpoint, stats: &DatasetStats, val_ids: &str, signal: SignalKind) {
    ck.meta.insert(META_STATS.into(), stats.to_text());
    ck.meta.insert(META_VAL_IDS.into(), val_ids.to_string());
    ck.meta.insert(META_SIGNAL.into(), signal.to_string());
}

/// Dataset statistics stored with a checkpoint written by `train`.
pub fn checkpoint_stats(ck: &Checkpoint) -> Result<DatasetStats> {
    let text = ck.meta.get(META_STATS).ok_or_else(|| Error::Format("checkpoint has no dataset statistics".into()))?;
    DatasetStats::from_text(text)
}

fn cmd_train(a: &TrainArgs, mut s: Settings) -> Result<()> {
    if let Some(steps) = a.steps {
        s.config.train.steps = steps;
    }
    let cfg = &s.config;
    cfg.validate()?;
    let videos = load_training_videos(cfg)?;
    let (train_idx, val_idx) = holdout_split(videos.len(), cfg.val_fraction, cfg.train.seed);
    let pick = |idx: &[usize]| idx.iter().map(|&i| videos[i].clone()).collect::<Vec<_>>();
    let (train, val) = (pick(&train_idx), pick(&val_idx));
    let held_out = val.clone();
    let val_ids = val.iter().map(|v| v.clip.id()).collect::<Vec<_>>().join(";");
    let stats = DatasetStats::compute(train.iter().map(|v| &v.clip))?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    stats.save(cfg.out_dir.join("stats.txt"))?;
    std::fs::write(cfg.out_dir.join("config.txt"), cfg.to_text())?;

    let best_path = cfg.out_dir.join("best.dedm");
    let loss_path = cfg.out_dir.join("loss.csv");
    let mut earlier_curve = String::new();
    let mut trainer = match &a.resume {
        Some(p) => {
            let last = Checkpoint::load(p)?;
            let best = if best_path.exists() {
                let ck = Checkpoint::load(&best_path)?;
                let get = |k: &str| ck.meta.get(k).and_then(|v| v.parse::<f64>().ok());
                match (get(META_STEP), get(META_VAL_LOSS)) {
                    (Some(step), Some(val_loss)) => Some(BestCheckpoint { step: step as usize, val_loss, checkpoint: ck }),
                    _ => None,
                }
            } else {
                None
            };
            let t = Trainer::resume(cfg.train.clone(), train, val, stats, &last, best)?;
            if let Ok(text) = std::fs::read_to_string(&loss_path) {
                earlier_curve = text
                    .lines()
                    .skip(1)
                    .filter(|l| l.split(',').next().and_then(|v| v.parse::<usize>().ok()).is_some_and(|st| st <= t.step_count()))
                    .map(|l| format!("{l}\n"))
                    .collect();
            }
            info!("resuming at step {}", t.step_count());
            t
        }
        None => Trainer::new(cfg.train.clone(), train, val, stats)?,
    };
    trainer.run()?;

    let mut last = trainer.checkpoint();
    annotate(&mut last, &stats, &val_ids, cfg.train.signal);
    last.save(cfg.out_dir.join("last.dedm"))?;
    let best = trainer.best().cloned().expect("run always leaves a best checkpoint");
    let mut best_ck = best.checkpoint;
    annotate(&mut best_ck, &stats, &val_ids, cfg.train.signal);
    best_ck.meta.insert(META_STEP.into(), best.step.to_string());
    best_ck.meta.insert(META_VAL_LOSS.into(), best.val_loss.to_string());
    best_ck.save(&best_path)?;

    let mut curve = loss_curve_csv(trainer.curve());
    if !earlier_curve.is_empty() {
        let (header, rest) = curve.split_once('\n').unwrap();
        curve = format!("{header}\n{earlier_curve}{rest}");
    }
    std::fs::write(&loss_path, curve)?;
    info!("best validation loss {} at step {}", best.val_loss, best.step);

    // Results row for the held-out videos.
    if !held_out.is_empty() {
        let net = best_ck.to_network()?;
        let mut scores = Vec::new();
        for v in &held_out {
            let sig = infer_signal(&net, &v.clip, Some(v.annotation.style), &stats)?;
            let d = discretise_detailed(&sig.raw, &s.discretise)?;
            scores.push(score_video(v.clip.id(), &sig.raw, &d, v.annotation.frames(), s.tolerance)?);
        }
        let summary = summarise(&scores, s.tolerance)?;
        let row = results_row(Some(&best_ck), &summary, true);
        formats::append_results(cfg.out_dir.join("results.csv"), &row)?;
        println!(
            "validation: F={:.4} precision={:.4} recall={:.4} avg_distance={:.3} delta_smooth={:.4}",
            summary.report.f_score, summary.report.precision, summary.report.recall, summary.avg_frame_distance, summary.delta_smooth
        );
    }
    Ok(())
}

fn results_row(ck: Option<&Checkpoint>, summary: &Summary, with_signal: bool) -> ResultsRow {
    let unknown = || "unknown".to_string();
    ResultsRow {
        temporal_architecture: ck.map_or_else(unknown, |c| c.config.temporal_mode.to_string()),
        style_mode: ck.map_or_else(unknown, |c| c.config.style_mode.to_string()),
        target_signal: ck.and_then(|c| c.meta.get(META_SIGNAL).cloned()).unwrap_or_else(unknown),
        f_score: summary.report.f_score,
        avg_frame_distance: summary.avg_frame_distance,
        delta_smooth: with_signal.then_some(summary.delta_smooth),
    }
}

/// Labels restricted to the requested split, in file order.
fn split_labels(labels: Vec<LabelRecord>, split: Split, ck: Option<&Checkpoint>) -> Result<Vec<LabelRecord>> {
    match split {
        Split::All => Ok(labels),
        Split::Val => {
            let ck = ck.ok_or_else(|| Error::InvalidArgument("--split val needs --checkpoint".into()))?;
            let ids = ck.meta.get(META_VAL_IDS).ok_or_else(|| Error::Format("checkpoint records no validation split".into()))?;
            let wanted: Vec<&str> = ids.split(';').filter(|s| !s.is_empty()).collect();
            Ok(labels.into_iter().filter(|r| wanted.contains(&r.video_id.as_str())).collect())
        }
    }
}

fn cmd_infer(a: &InferArgs, s: &Settings) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let stats = checkpoint_stats(&ck)?;
    let net = ck.to_network()?;
    let labels = split_labels(formats::load_labels(&a.labels)?, a.split, Some(&ck))?;
    let mut rows: Vec<(String, Vec<InferredFrame>)> = Vec::new();
    let mut preds: Vec<(String, Vec<usize>)> = Vec::new();
    let mut styles = Vec::new();
    for rec in &labels {
        let clip = load_clip(&a.clips, rec)?;
        let style = net.config().needs_style_input().then_some(rec.style);
        let sig = infer_signal(&net, &clip, style, &stats)?;
        let d = discretise_detailed(&sig.raw, &s.discretise)?;
        let frames = sig
            .raw
            .iter()
            .zip(&d.smoothed)
            .zip(&d.binary)
            .map(|((&raw, &smoothed), &binary)| InferredFrame { raw, smoothed, binary })
            .collect();
        rows.push((rec.video_id.clone(), frames));
        preds.push((rec.video_id.clone(), d.predictions.frames().to_vec()));
        if let Some(st) = sig.inferred_style {
            styles.push((rec.video_id.clone(), rec.style, st));
        }
    }
    formats::write_inferred(formats::create(&a.out)?, rows.iter().map(|(id, f)| (id.as_str(), f.as_slice())))?;
    if let Some(p) = &a.predictions {
        formats::write_predictions(formats::create(p)?, preds.iter().map(|(id, f)| (id.as_str(), f.as_slice())))?;
    }
    if ck.config.style_mode == StyleMode::MultiClass {
        let path = a.out.with_file_name("styles.csv");
        let mut w = formats::create(&path)?;
        writeln!(w, "video_id,labelled_style,inferred_style")?;
        for (id, truth, inferred) in &styles {
            writeln!(w, "{id},{truth},{inferred}")?;
        }
        w.flush()?;
        let wrong = styles.iter().filter(|(_, t, i)| t != i).count();
        info!("style inference: {wrong} of {} videos misidentified", styles.len());
    }
    Ok(())
}

#[derive(Serialize)]
struct VideoReport<'a> {
    video_id: &'a str,
    n_frames: usize,
    n_labels: usize,
    n_predictions: usize,
    f_score: f64,
    precision: f64,
    recall: f64,
    delta_smooth: Option<f64>,
}

#[derive(Serialize)]
struct EvalReport<'a> {
    tolerance: usize,
    smooth_window: usize,
    threshold: String,
    summary: &'a Summary,
    videos: Vec<VideoReport<'a>>,
}

fn prediction_only_score(id: &str, n_frames: usize, pred: &[usize], truth: &[usize], tolerance: usize) -> VideoScore {
    VideoScore {
        video_id: id.to_string(),
        report: match_events(pred, truth, tolerance),
        histogram: cumulative_distance_histogram(pred, truth, DEFAULT_HISTOGRAM_BINS),
        delta_smooth: f64::NAN,
        n_frames,
    }
}

fn cmd_eval(a: &EvalArgs, s: &Settings) -> Result<()> {
    let ck = a.checkpoint.as_ref().map(Checkpoint::load).transpose()?;
    let all_labels = formats::load_labels(&a.labels)?;
    let by_id: BTreeMap<&str, &LabelRecord> = all_labels.iter().map(|r| (r.video_id.as_str(), r)).collect();
    let mut scores = Vec::new();
    let mut predictions: Vec<(String, Vec<usize>)> = Vec::new();
    let with_signal = a.signals.is_some();
    if let Some(path) = &a.signals {
        let series = formats::read_inferred(formats::open(path)?)?;
        let wanted = split_labels(all_labels.clone(), a.split, ck.as_ref())?;
        for (id, frames) in &series {
            if !wanted.iter().any(|r| &r.video_id == id) {
                if by_id.contains_key(id.as_str()) {
                    continue;
                }
                return Err(Error::InvalidArgument(format!("video {id} is not in the labels")));
            }
            let rec = by_id[id.as_str()];
            if rec.n_frames != frames.len() {
                return Err(Error::Shape(format!("{id}: {} signal rows, labels say {} frames", frames.len(), rec.n_frames)));
            }
            let raw: Vec<f64> = frames.iter().map(|f| f.raw).collect();
            let d = discretise_detailed(&raw, &s.discretise)?;
            scores.push(score_video(id, &raw, &d, &rec.frames, s.tolerance)?);
            predictions.push((id.clone(), d.predictions.frames().to_vec()));
        }
    } else if let Some(path) = &a.predictions {
        let mut preds = formats::read_predictions(formats::open(path)?)?;
        if let Some(id) = preds.keys().find(|id| !by_id.contains_key(id.as_str())) {
            return Err(Error::InvalidArgument(format!("video {id} is not in the labels")));
        }
        for rec in split_labels(all_labels.clone(), a.split, ck.as_ref())? {
            let pred = preds.remove(&rec.video_id).unwrap_or_default();
            if let Some(&f) = pred.last().filter(|&&f| f >= rec.n_frames) {
                return Err(Error::InvalidArgument(format!("{}: predicted frame {f} beyond {} frames", rec.video_id, rec.n_frames)));
            }
            scores.push(prediction_only_score(&rec.video_id, rec.n_frames, &pred, &rec.frames, s.tolerance));
            predictions.push((rec.video_id.clone(), pred));
        }
    }
    let summary = summarise(&scores, s.tolerance)?;
    std::fs::create_dir_all(&a.out_dir)?;
    let report = EvalReport {
        tolerance: s.tolerance,
        smooth_window: s.discretise.smooth_window,
        threshold: s.discretise.threshold.to_string(),
        summary: &summary,
        videos: scores
            .iter()
            .map(|v| VideoReport {
                video_id: &v.video_id,
                n_frames: v.n_frames,
                n_labels: v.report.covered + v.report.fn_,
                n_predictions: v.report.tp + v.report.fp,
                f_score: v.report.f_score,
                precision: v.report.precision,
                recall: v.report.recall,
                delta_smooth: with_signal.then_some(v.delta_smooth),
            })
            .collect(),
    };
    let mut w = formats::create(a.out_dir.join("report.json"))?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;
    formats::write_results(formats::create(a.out_dir.join("results.csv"))?, &[results_row(ck.as_ref(), &summary, with_signal)])?;
    formats::write_histogram(formats::create(a.out_dir.join("histogram.csv"))?, &summary.histogram)?;
    formats::write_predictions(
        formats::create(a.out_dir.join("predictions.csv"))?,
        predictions.iter().map(|(id, f)| (id.as_str(), f.as_slice())),
    )?;
    print_summary(&summary.report, summary.avg_frame_distance);
    Ok(())
}

fn print_summary(r: &MatchReport, avg: f64) {
    println!(
        "F={:.4} precision={:.4} recall={:.4} tp={} fp={} fn={} avg_distance={avg:.3}",
        r.f_score, r.precision, r.recall, r.tp, r.fp, r.fn_
    );
}

fn cmd_plot(a: &PlotArgs) -> Result<()> {
    let svg = match a.kind {
        PlotKind::Loss => {
            let mut train = Vec::new();
            let mut val = Vec::new();
            for row in csv::Reader::from_reader(formats::open(&a.input)?).deserialize::<(usize, f64, Option<f64>)>() {
                let (step, t, v) = row?;
                train.push((step as f64, t));
                if let Some(v) = v {
                    val.push((step as f64, v));
                }
            }
            plot::line_plot(
                "Loss",
                "step",
                "MSE",
                &[plot::Series { name: "train", points: train }, plot::Series { name: "validation", points: val }],
            )
        }
        PlotKind::Signal => {
            let series = formats::read_inferred(formats::open(&a.input)?)?;
            let (id, frames) = match &a.video {
                Some(v) => series.iter().find(|(id, _)| id == v),
                None => series.first(),
            }
            .ok_or_else(|| Error::InvalidArgument("video not found in the signals file".into()))?;
            let pts = |f: &dyn Fn(&InferredFrame) -> f64| frames.iter().enumerate().map(|(i, fr)| (i as f64, f(fr))).collect();
            let mut lines = vec![
                plot::Series { name: "raw", points: pts(&|f| f.raw) },
                plot::Series { name: "smoothed", points: pts(&|f| f.smoothed) },
            ];
            if let Some(t) = &a.target {
                let targets = formats::read_signals(formats::open(t)?)?;
                if let Some((_, v)) = targets.iter().find(|(tid, _)| tid == id) {
                    lines.push(plot::Series { name: "target", points: v.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect() });
                }
            }
            plot::line_plot(&format!("Signal of {id}"), "frame", "value", &lines)
        }
        PlotKind::Histogram => {
            let rows = formats::read_histogram(formats::open(&a.input)?)?;
            let bars: Vec<(String, f64)> = rows.into_iter().map(|(label, _, cum)| (label, cum as f64)).collect();
            plot::bar_chart("Cumulative predictions by distance to nearest label", "frames", "predictions", &bars)
        }
    };
    let mut w = formats::create(&a.out)?;
    w.write_all(svg.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Writes `error: <kind>: <message>` to stderr and returns the exit code.
pub fn report_error(e: &Error) -> i32 {
    eprintln!("error: {}: {e}", e.kind());
    1
}
