//! Glue between a trained network and the metrics: sliding-window inference
//! over whole clips, discretisation, and pooled scoring.

use serde::Serialize;

use crate::data::{DatasetStats, VideoClip};
use crate::discretise::{discretise_detailed, DiscretiseParams, Discretised};
use crate::error::{Error, Result};
use crate::labels::Style;
use crate::metrics::{
    avg_frame_distance, cumulative_distance_histogram, delta_smooth, match_events, stroke_rate_error,
    DistanceHistogram, MatchReport, DEFAULT_HISTOGRAM_BINS,
};
use crate::model::{infer_style, Network, StyleMode, STYLE_COUNT};
use crate::train::predict_clip;

/// Network output for one clip reduced to a single event signal.
#[derive(Debug, Clone, PartialEq)]
pub struct InferredSignal {
    pub video_id: String,
    pub raw: Vec<f64>,
    /// Style picked from the summed multi-class outputs.
    pub inferred_style: Option<Style>,
}

/// Runs the network over every frame. Multi-class models contribute the
/// output channel of the style they infer for the clip.
pub fn infer_signal(net: &Network<f32>, clip: &VideoClip, style: Option<Style>, stats: &DatasetStats) -> Result<InferredSignal> {
    let out = predict_clip(net, clip, style, stats)?;
    let k = net.config().k();
    if net.config().style_mode == StyleMode::MultiClass {
        let rows: Vec<[f32; STYLE_COUNT]> = out.data().chunks_exact(k).map(|r| r.try_into().unwrap()).collect();
        let s = infer_style(&rows)?;
        Ok(InferredSignal {
            video_id: clip.id().to_string(),
            raw: rows.iter().map(|r| r[s] as f64).collect(),
            inferred_style: Style::from_index(s),
        })
    } else {
        Ok(InferredSignal { video_id: clip.id().to_string(), raw: out.data().iter().map(|&v| v as f64).collect(), inferred_style: None })
    }
}

/// Scores of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoScore {
    pub video_id: String,
    pub report: MatchReport,
    pub histogram: DistanceHistogram,
    pub delta_smooth: f64,
    pub n_frames: usize,
}

pub fn score_video(
    video_id: &str,
    raw: &[f64],
    discretised: &Discretised,
    truth: &[usize],
    tolerance: usize,
) -> Result<VideoScore> {
    let pred = discretised.predictions.frames();
    Ok(VideoScore {
        video_id: video_id.to_string(),
        report: match_events(pred, truth, tolerance),
        histogram: cumulative_distance_histogram(pred, truth, DEFAULT_HISTOGRAM_BINS),
        delta_smooth: delta_smooth(raw, &discretised.smoothed)?,
        n_frames: raw.len(),
    })
}

/// Metrics pooled over a set of videos.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub report: MatchReport,
    /// Mean over all predictions of the distance to the nearest label.
    pub avg_frame_distance: f64,
    /// Frame-weighted mean of the per-video Δ-smooth.
    pub delta_smooth: f64,
    pub stroke_rate_error: Option<f64>,
    pub histogram: DistanceHistogram,
    pub videos: usize,
}

pub fn summarise(scores: &[VideoScore], tolerance: usize) -> Result<Summary> {
    if scores.is_empty() {
        return Err(Error::Empty("no videos to summarise".into()));
    }
    let report = MatchReport::merge(scores.iter().map(|s| &s.report), tolerance);
    let frames: usize = scores.iter().map(|s| s.n_frames).sum();
    let delta = scores.iter().map(|s| s.delta_smooth * s.n_frames as f64).sum::<f64>() / frames as f64;
    let avg = if report.distances.is_empty() {
        0.0
    } else {
        report.distances.iter().sum::<usize>() as f64 / report.distances.len() as f64
    };
    let n_pred = report.tp + report.fp;
    let n_truth = report.covered + report.fn_;
    let stroke_rate = (n_truth > 0).then(|| n_pred.abs_diff(n_truth) as f64 / n_truth as f64);
    Ok(Summary {
        histogram: DistanceHistogram::merge(scores.iter().map(|s| &s.histogram), DEFAULT_HISTOGRAM_BINS),
        report,
        avg_frame_distance: avg,
        delta_smooth: delta,
        stroke_rate_error: stroke_rate,
        videos: scores.len(),
    })
}

/// Per-video result of [`evaluate_clips`].
#[derive(Debug, Clone)]
pub struct ClipResult {
    pub signal: InferredSignal,
    pub discretised: Discretised,
    pub score: VideoScore,
}

/// Infers, discretises and scores every `(clip, labels, style)` triple.
pub fn evaluate_clips<'a>(
    net: &Network<f32>,
    clips: impl IntoIterator<Item = (&'a VideoClip, &'a [usize], Style)>,
    stats: &DatasetStats,
    params: &DiscretiseParams,
    tolerance: usize,
) -> Result<(Vec<ClipResult>, Summary)> {
    let mut results = Vec::new();
    for (clip, truth, style) in clips {
        let signal = infer_signal(net, clip, Some(style), stats)?;
        let discretised = discretise_detailed(&signal.raw, params)?;
        let score = score_video(clip.id(), &signal.raw, &discretised, truth, tolerance)?;
        results.push(ClipResult { signal, discretised, score });
    }
    let scores: Vec<VideoScore> = results.iter().map(|r| r.score.clone()).collect();
    let summary = summarise(&scores, tolerance)?;
    Ok((results, summary))
}

/// Per-video average frame distance, skipping videos without labels.
pub fn per_video_avg_distance(pred: &[usize], truth: &[usize]) -> Option<f64> {
    avg_frame_distance(pred, truth).ok()
}

/// Per-video stroke-rate error, skipping videos without labels.
pub fn per_video_stroke_rate_error(pred: &[usize], truth: &[usize]) -> Option<f64> {
    stroke_rate_error(pred, truth).ok()
}
