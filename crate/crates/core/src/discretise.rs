//! Turning a predicted per-frame signal into event frame numbers: smooth with
//! a triangular moving average, threshold into a square wave, and emit the
//! middle frame of every run of ones.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SMOOTH_WINDOW: usize = 9;

/// Model output for every frame of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSignal {
    pub video_id: String,
    pub values: Vec<f64>,
}

/// Sorted, unique predicted event frames.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventPredictions {
    frames: Vec<usize>,
}

impl EventPredictions {
    pub fn new(mut frames: Vec<usize>) -> Self {
        frames.sort_unstable();
        frames.dedup();
        Self { frames }
    }

    pub fn frames(&self) -> &[usize] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    /// Mean of the smoothed signal.
    AtMean,
    Fixed(f64),
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::AtMean => f.write_str("mean"),
            Threshold::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("mean") {
            return Ok(Threshold::AtMean);
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Threshold::Fixed)
            .ok_or_else(|| Error::InvalidArgument(format!("threshold must be `mean` or a number, got {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretiseParams {
    pub smooth_window: usize,
    pub threshold: Threshold,
    /// Runs longer than this are dropped instead of producing an event.
    pub max_run_length: Option<usize>,
}

impl Default for DiscretiseParams {
    fn default() -> Self {
        Self { smooth_window: DEFAULT_SMOOTH_WINDOW, threshold: Threshold::AtMean, max_run_length: None }
    }
}

/// Triangular weighted moving average of odd width. Near the edges the
/// weights are renormalised over the samples that exist.
pub fn smooth(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("smoothing window must be odd and positive, got {window}")));
    }
    let half = window / 2;
    let weights: Vec<f64> = (0..window).map(|i| (half + 1 - i.abs_diff(half)) as f64).collect();
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n.saturating_sub(1));
        let mut acc = 0.0;
        let mut norm = 0.0;
        for (j, &v) in values.iter().enumerate().take(hi + 1).skip(lo) {
            let w = weights[j + half - i];
            acc += w * v;
            norm += w;
        }
        out.push(acc / norm);
    }
    Ok(out)
}

/// Value that [`threshold`] compares against.
pub fn threshold_level(smoothed: &[f64], mode: Threshold) -> f64 {
    match mode {
        Threshold::Fixed(v) => v,
        Threshold::AtMean if smoothed.is_empty() => 0.0,
        Threshold::AtMean => smoothed.iter().sum::<f64>() / smoothed.len() as f64,
    }
}

/// `true` where the value reaches the threshold (ties map to `true`).
pub fn threshold(smoothed: &[f64], mode: Threshold) -> Vec<bool> {
    let level = threshold_level(smoothed, mode);
    smoothed.iter().map(|&v| v >= level).collect()
}

/// Inclusive `(start, end)` of every maximal run of `true`.
pub fn runs(binary: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &b) in binary.iter().enumerate() {
        match (b, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, binary.len() - 1));
    }
    out
}

/// Middle frame `floor((a + b) / 2)` of every run `[a, b]`.
pub fn midpoints(binary: &[bool]) -> EventPredictions {
    EventPredictions { frames: runs(binary).into_iter().map(|(a, b)| (a + b) / 2).collect() }
}

/// Every intermediate stage of a discretisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretised {
    pub smoothed: Vec<f64>,
    pub binary: Vec<bool>,
    pub level: f64,
    pub predictions: EventPredictions,
}

pub fn discretise_detailed(raw: &[f64], params: &DiscretiseParams) -> Result<Discretised> {
    if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("raw signal value at frame {i}")));
    }
    let smoothed = smooth(raw, params.smooth_window)?;
    let level = threshold_level(&smoothed, params.threshold);
    let binary: Vec<bool> = smoothed.iter().map(|&v| v >= level).collect();
    let spans = runs(&binary);
    if !raw.is_empty() && spans.len() == 1 && spans[0] == (0, raw.len() - 1) {
        log::warn!("signal never drops below the threshold {level}; the whole clip is a single run");
    }
    let frames = spans
        .into_iter()
        .filter(|&(a, b)| params.max_run_length.is_none_or(|m| b - a < m))
        .map(|(a, b)| (a + b) / 2)
        .collect();
    Ok(Discretised { smoothed, binary, level, predictions: EventPredictions { frames } })
}

/// Smooth, threshold, and take run midpoints.
pub fn discretise(raw: &[f64], params: &DiscretiseParams) -> Result<EventPredictions> {
    Ok(discretise_detailed(raw, params)?.predictions)
}
