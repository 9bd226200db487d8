//! Tolerance-based event matching and the frame-distance statistics used to
//! score detectors.
//!
//! Matching is deliberately not one-to-one: a prediction is a true positive
//! when *any* label lies within the tolerance, and a label counts as covered
//! when *any* prediction lies within it. Precision is therefore measured on
//! the prediction side and recall on the label side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: usize = 3;
pub const DEFAULT_HISTOGRAM_BINS: usize = 10;

/// Counts and ratios of one matching at a fixed tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub tolerance: usize,
    pub tp: usize,
    pub fp: usize,
    /// Labels with at least one prediction inside the tolerance.
    pub covered: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    /// Distance from each prediction to its nearest label, in prediction
    /// order; empty when there are no labels.
    pub distances: Vec<usize>,
    /// Set when either side was empty and a ratio was defined as 0.
    pub degenerate: bool,
}

impl MatchReport {
    /// Pools several per-video reports into one, recomputing the ratios
    /// from the summed counts.
    pub fn merge<'a>(reports: impl IntoIterator<Item = &'a MatchReport>, tolerance: usize) -> MatchReport {
        let mut out = MatchReport {
            tolerance,
            tp: 0,
            fp: 0,
            covered: 0,
            fn_: 0,
            precision: 0.0,
            recall: 0.0,
            f_score: 0.0,
            distances: Vec::new(),
            degenerate: false,
        };
        for r in reports {
            out.tp += r.tp;
            out.fp += r.fp;
            out.covered += r.covered;
            out.fn_ += r.fn_;
            out.distances.extend_from_slice(&r.distances);
        }
        out.finish();
        out
    }

    fn finish(&mut self) {
        let pred = self.tp + self.fp;
        let truth = self.covered + self.fn_;
        self.degenerate = pred == 0 || truth == 0;
        self.precision = if pred > 0 { self.tp as f64 / pred as f64 } else { 0.0 };
        self.recall = if truth > 0 { self.covered as f64 / truth as f64 } else { 0.0 };
        self.f_score = f_score(self.precision, self.recall);
    }
}

/// Distance from `frame` to the nearest element of the sorted `sorted`.
pub fn nearest_distance(sorted: &[usize], frame: usize) -> Option<usize> {
    if sorted.is_empty() {
        return None;
    }
    let i = sorted.partition_point(|&f| f < frame);
    let right = sorted.get(i).map(|&f| f - frame);
    let left = i.checked_sub(1).map(|j| frame - sorted[j]);
    match (left, right) {
        (Some(l), Some(r)) => Some(l.min(r)),
        (l, r) => l.or(r),
    }
}

fn sorted_copy(frames: &[usize]) -> Vec<usize> {
    let mut v = frames.to_vec();
    v.sort_unstable();
    v
}

/// Scores predictions against labels at the given tolerance (inclusive).
pub fn match_events(pred: &[usize], truth: &[usize], tolerance: usize) -> MatchReport {
    let truth_sorted = sorted_copy(truth);
    let pred_sorted = sorted_copy(pred);
    let distances: Vec<usize> = pred.iter().filter_map(|&p| nearest_distance(&truth_sorted, p)).collect();
    let tp = distances.iter().filter(|&&d| d <= tolerance).count();
    let covered = truth
        .iter()
        .filter(|&&t| nearest_distance(&pred_sorted, t).is_some_and(|d| d <= tolerance))
        .count();
    let mut report = MatchReport {
        tolerance,
        tp,
        fp: pred.len() - tp,
        covered,
        fn_: truth.len() - covered,
        precision: 0.0,
        recall: 0.0,
        f_score: 0.0,
        distances,
        degenerate: false,
    };
    report.finish();
    report
}

/// `2PR / (P + R)`, and 0 when both are 0.
pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Mean over predictions of the distance to the nearest label.
pub fn avg_frame_distance(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::Empty("average frame distance needs at least one label".into()));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let truth = sorted_copy(truth);
    let total: usize = pred.iter().map(|&p| nearest_distance(&truth, p).unwrap()).sum();
    Ok(total as f64 / pred.len() as f64)
}

/// Mean absolute pointwise difference between raw and smoothed outputs.
pub fn delta_smooth(raw: &[f64], smoothed: &[f64]) -> Result<f64> {
    if raw.len() != smoothed.len() {
        return Err(Error::Shape(format!("raw has {} frames, smoothed has {}", raw.len(), smoothed.len())));
    }
    if raw.is_empty() {
        return Ok(0.0);
    }
    Ok(raw.iter().zip(smoothed).map(|(a, b)| (a - b).abs()).sum::<f64>() / raw.len() as f64)
}

/// Pointwise `|raw − smoothed|` values bucketed into `bins` equal-width
/// buckets over `[0, max)`, with values ≥ `max` in the last bucket.
pub fn delta_histogram(raw: &[f64], smoothed: &[f64], bins: usize, max: f64) -> Result<Vec<usize>> {
    if raw.len() != smoothed.len() {
        return Err(Error::Shape(format!("raw has {} frames, smoothed has {}", raw.len(), smoothed.len())));
    }
    if bins == 0 || !(max > 0.0) {
        return Err(Error::InvalidArgument("histogram needs positive bins and range".into()));
    }
    let mut counts = vec![0; bins];
    for (a, b) in raw.iter().zip(smoothed) {
        let d = (a - b).abs();
        let i = ((d / max) * bins as f64).floor() as usize;
        counts[i.min(bins - 1)] += 1;
    }
    Ok(counts)
}

/// Predictions bucketed by distance to the nearest label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    /// `counts[d]` for `d < max_bin`; the last entry collects `max_bin+`
    /// (and every prediction when there are no labels).
    pub counts: Vec<usize>,
    /// Running sums of `counts`.
    pub cumulative: Vec<usize>,
    /// Labels with no prediction closer than `max_bin` frames.
    pub misses: usize,
    pub max_bin: usize,
}

impl DistanceHistogram {
    pub fn merge<'a>(items: impl IntoIterator<Item = &'a DistanceHistogram>, max_bin: usize) -> DistanceHistogram {
        let mut counts = vec![0; max_bin + 1];
        let mut misses = 0;
        for h in items {
            assert_eq!(h.max_bin, max_bin, "histograms must share bins");
            counts.iter_mut().zip(&h.counts).for_each(|(a, b)| *a += b);
            misses += h.misses;
        }
        let cumulative = running_sum(&counts);
        DistanceHistogram { counts, cumulative, misses, max_bin }
    }

    pub fn label(&self, bin: usize) -> String {
        if bin == self.max_bin {
            format!("{}+", self.max_bin)
        } else {
            bin.to_string()
        }
    }
}

fn running_sum(counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .scan(0, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect()
}

pub fn cumulative_distance_histogram(pred: &[usize], truth: &[usize], max_bin: usize) -> DistanceHistogram {
    let truth_sorted = sorted_copy(truth);
    let pred_sorted = sorted_copy(pred);
    let mut counts = vec![0; max_bin + 1];
    for &p in pred {
        let bin = nearest_distance(&truth_sorted, p).map_or(max_bin, |d| d.min(max_bin));
        counts[bin] += 1;
    }
    let misses = truth
        .iter()
        .filter(|&&t| nearest_distance(&pred_sorted, t).is_none_or(|d| d >= max_bin))
        .count();
    let cumulative = running_sum(&counts);
    DistanceHistogram { counts, cumulative, misses, max_bin }
}

/// `| |pred| − |truth| | / |truth|`.
pub fn stroke_rate_error(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::Empty("stroke rate error needs at least one label".into()));
    }
    Ok(pred.len().abs_diff(truth.len()) as f64 / truth.len() as f64)
}
