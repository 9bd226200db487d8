//! Sparse event annotations and the continuous per-frame target signals
//! derived from them.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width (inclusive) of the square label around an event.
pub const SQUARE_HALF_WIDTH: usize = 3;
/// Period of the fixed half-cosine shape used for sparse events.
pub const FIXED_COSINE_PERIOD: f64 = 40.0;
/// Gaps longer than this multiple of the median gap are treated as turns.
pub const DEFAULT_TURN_THRESHOLD: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Style {
    Backstroke,
    Breaststroke,
    Butterfly,
    Freestyle,
    None,
}

impl Style {
    pub const SWIMMING: [Style; 4] = [Style::Backstroke, Style::Breaststroke, Style::Butterfly, Style::Freestyle];

    /// Position in the one-hot style vector; `None` has no slot.
    pub fn index(self) -> Option<usize> {
        Style::SWIMMING.iter().position(|&s| s == self)
    }

    pub fn from_index(i: usize) -> Option<Style> {
        Style::SWIMMING.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Style::Backstroke => "backstroke",
            Style::Breaststroke => "breaststroke",
            Style::Butterfly => "butterfly",
            Style::Freestyle => "freestyle",
            Style::None => "none",
        }
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Style {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "backstroke" => Ok(Style::Backstroke),
            "breaststroke" => Ok(Style::Breaststroke),
            "butterfly" => Ok(Style::Butterfly),
            "freestyle" => Ok(Style::Freestyle),
            "none" | "" => Ok(Style::None),
            other => Err(Error::InvalidArgument(format!("unknown style {other:?}"))),
        }
    }
}

/// Ground-truth event frames of one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventAnnotation {
    pub video_id: String,
    frames: Vec<usize>,
    pub style: Style,
    n_frames: usize,
}

impl EventAnnotation {
    pub fn new(video_id: impl Into<String>, frames: Vec<usize>, style: Style, n_frames: usize) -> Result<Self> {
        let video_id = video_id.into();
        if n_frames == 0 {
            return Err(Error::Annotation(format!("{video_id}: video has no frames")));
        }
        if let Some(w) = frames.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Annotation(format!("{video_id}: frames not strictly increasing at {} → {}", w[0], w[1])));
        }
        if let Some(&last) = frames.last() {
            if last >= n_frames {
                return Err(Error::Annotation(format!("{video_id}: frame {last} outside [0, {n_frames})")));
            }
        }
        Ok(Self { video_id, frames, style, n_frames })
    }

    pub fn frames(&self) -> &[usize] {
        &self.frames
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignalKind {
    Square,
    Sine,
    TruncatedSine,
    FixedCosine,
}

impl SignalKind {
    pub const ALL: [SignalKind; 4] = [SignalKind::Square, SignalKind::Sine, SignalKind::TruncatedSine, SignalKind::FixedCosine];

    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::Square => "square",
            SignalKind::Sine => "sine",
            SignalKind::TruncatedSine => "truncated-sine",
            SignalKind::FixedCosine => "fixed-cosine",
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "square" => Ok(SignalKind::Square),
            "sine" => Ok(SignalKind::Sine),
            "truncated-sine" => Ok(SignalKind::TruncatedSine),
            "fixed-cosine" => Ok(SignalKind::FixedCosine),
            other => Err(Error::InvalidArgument(format!("unknown signal kind {other:?}"))),
        }
    }
}

/// Per-frame regression target in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSignal {
    pub values: Vec<f64>,
    pub kind: SignalKind,
}

impl TargetSignal {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// 1 within three frames (inclusive) of an event, 0 elsewhere.
pub fn square_labels(ann: &EventAnnotation) -> TargetSignal {
    let n = ann.n_frames();
    let mut values = vec![0.0; n];
    for &f in ann.frames() {
        let lo = f.saturating_sub(SQUARE_HALF_WIDTH);
        let hi = (f + SQUARE_HALF_WIDTH).min(n - 1);
        values[lo..=hi].iter_mut().for_each(|v| *v = 1.0);
    }
    TargetSignal { values, kind: SignalKind::Square }
}

/// Lower median of the inter-event gaps.
fn median_gap(frames: &[usize]) -> f64 {
    let mut gaps: Vec<usize> = frames.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_unstable();
    gaps[(gaps.len() - 1) / 2] as f64
}

/// Intermediate cosine labels `c ∈ [−1, 1]` peaking at every event.
///
/// Consecutive events get one full cosine period between them. A gap longer
/// than `turn_threshold` × the median gap is a turn: a median-period cosine
/// descends from each edge event for half a period and the rest of the turn
/// sits at −1. The video edges before the first and after the last event get
/// the same treatment.
pub fn cosine_intermediate(ann: &EventAnnotation, turn_threshold: f64) -> Result<Vec<f64>> {
    let frames = ann.frames();
    if frames.len() < 2 {
        return Err(Error::Annotation(format!(
            "{}: a cosine fit needs at least 2 events, got {}",
            ann.video_id,
            frames.len()
        )));
    }
    if !(turn_threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("turn threshold must be positive, got {turn_threshold}")));
    }
    let period = median_gap(frames);
    let half = period / 2.0;
    // descending median-period cosine at distance d from an edge event
    let edge = |d: f64| if d <= half { (2.0 * PI * d / period).cos() } else { -1.0 };

    let n = ann.n_frames();
    let mut c = vec![-1.0; n];
    let first = frames[0];
    let last = *frames.last().unwrap();
    for (i, v) in c.iter_mut().enumerate().take(first) {
        *v = edge((first - i) as f64);
    }
    for (i, v) in c.iter_mut().enumerate().skip(last + 1) {
        *v = edge((i - last) as f64);
    }
    for w in frames.windows(2) {
        let (a, b) = (w[0], w[1]);
        let gap = (b - a) as f64;
        let turn = gap > turn_threshold * period;
        for (i, v) in c.iter_mut().enumerate().take(b).skip(a) {
            *v = if turn {
                edge((i - a) as f64).max(edge((b - i) as f64))
            } else {
                (2.0 * PI * (i - a) as f64 / gap).cos()
            };
        }
    }
    for &f in frames {
        c[f] = 1.0;
    }
    Ok(c)
}

/// `y = max(a·c + (1 − a), 0)`; `a = 1/2` gives sine labels, `a = 1` truncated sine.
pub fn amplitude_transform(c: &[f64], a: f64) -> Result<TargetSignal> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::InvalidArgument(format!("amplitude must lie in (0, 1], got {a}")));
    }
    let kind = if a == 1.0 { SignalKind::TruncatedSine } else { SignalKind::Sine };
    let values = c.iter().map(|&cn| (a * cn + (1.0 - a)).max(0.0)).collect();
    Ok(TargetSignal { values, kind })
}

/// Half-cosine bump of the given period centred on every event, combined by
/// pointwise max.
pub fn fixed_cosine_labels(ann: &EventAnnotation, period: f64) -> Result<TargetSignal> {
    if !(period > 0.0) {
        return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
    }
    let n = ann.n_frames();
    let mut values = vec![0.0f64; n];
    let reach = period / 4.0;
    for &f in ann.frames() {
        let lo = (f as f64 - reach).ceil().max(0.0) as usize;
        let hi = ((f as f64 + reach).floor() as usize).min(n - 1);
        for (i, v) in values.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let bump = (2.0 * PI * (i as f64 - f as f64) / period).cos().max(0.0);
            *v = v.max(bump);
        }
        values[f] = 1.0;
    }
    Ok(TargetSignal { values, kind: SignalKind::FixedCosine })
}

/// Options for [`target_signal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalParams {
    pub turn_threshold: f64,
    pub fixed_period: f64,
}

impl Default for SignalParams {
    fn default() -> Self {
        Self { turn_threshold: DEFAULT_TURN_THRESHOLD, fixed_period: FIXED_COSINE_PERIOD }
    }
}

/// Builds the target signal of the requested kind. Cosine-fitted kinds fall
/// back to the fixed cosine shape when a video has fewer than two events.
pub fn target_signal(ann: &EventAnnotation, kind: SignalKind, params: SignalParams) -> Result<TargetSignal> {
    let amplitude = match kind {
        SignalKind::Square => return Ok(square_labels(ann)),
        SignalKind::FixedCosine => return fixed_cosine_labels(ann, params.fixed_period),
        SignalKind::Sine => 0.5,
        SignalKind::TruncatedSine => 1.0,
    };
    if ann.frames().len() < 2 {
        let mut fallback = fixed_cosine_labels(ann, params.fixed_period)?;
        fallback.kind = kind;
        return Ok(fallback);
    }
    let c = cosine_intermediate(ann, params.turn_threshold)?;
    amplitude_transform(&c, amplitude)
}
