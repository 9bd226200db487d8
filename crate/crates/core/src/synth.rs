//! Synthetic datasets with exactly known event frames.
//!
//! Swim-like videos show a bright body drifting horizontally and a tinted
//! satellite circling it. The satellite's phase is interpolated linearly
//! between consecutive events, and every event is the instant the satellite
//! is at its highest point. Tennis-like videos show a resting satellite that
//! sweeps through a short burst around each sparse event.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::data::VideoClip;
use crate::error::{Error, Result};
use crate::labels::{EventAnnotation, Style};
use crate::model::{FRAME_CHANNELS, STYLE_COUNT};

const BACKGROUND: [f32; 3] = [50.0, 128.0, 128.0];
const BODY_SIGMA: f64 = 2.5;
const BODY_GAIN: [f32; 3] = [120.0, 0.0, 0.0];
const SATELLITE_SIGMA: f64 = 1.5;
/// Chroma tint per style (U, V offsets); luma gain is shared.
const STYLE_TINT: [[f32; 2]; STYLE_COUNT] = [[-50.0, 50.0], [50.0, -50.0], [-50.0, -50.0], [50.0, 50.0]];
const SATELLITE_LUMA: f32 = 150.0;
/// Horizontal body speed in pixels per frame.
const BODY_SPEED: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_videos: usize,
    pub frames_per_video: usize,
    pub height: usize,
    pub width: usize,
    /// Frames between consecutive events, drawn per video then drifting.
    pub period_min: f64,
    pub period_max: f64,
    /// Relative per-event change of the period, uniform in `±period_drift`.
    pub period_drift: f64,
    /// Probability that a gap between events is a turn.
    pub turn_probability: f64,
    /// Turn length in multiples of the current period.
    pub turn_periods: (f64, f64),
    /// Probability that a video contains one occluded span.
    pub occlusion_probability: f64,
    pub occlusion_frames: (usize, usize),
    /// Number of appearance variants; video `v` uses style `v % style_count`.
    pub style_count: usize,
    /// Standard deviation of additive pixel noise (byte units).
    pub noise: f64,
    /// First event frame; drawn uniformly within the first period when unset.
    pub phase_offset: Option<usize>,
    pub fps: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_videos: 20,
            frames_per_video: 500,
            height: 32,
            width: 32,
            period_min: 12.0,
            period_max: 24.0,
            period_drift: 0.05,
            turn_probability: 0.03,
            turn_periods: (3.0, 5.0),
            occlusion_probability: 0.2,
            occlusion_frames: (10, 30),
            style_count: STYLE_COUNT,
            noise: 4.0,
            phase_offset: None,
            fps: 25.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.frames_per_video == 0 || self.height < 8 || self.width < 8 {
            return bad("need at least one frame of at least 8x8 pixels".into());
        }
        if !(self.period_min >= 4.0) || !(self.period_max >= self.period_min) || !self.period_max.is_finite() {
            return bad(format!("infeasible period range [{}, {}] (minimum is 4)", self.period_min, self.period_max));
        }
        for (name, p) in [("turn", self.turn_probability), ("occlusion", self.occlusion_probability)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} probability {p} is outside [0, 1]"));
            }
        }
        if !(0.0..1.0).contains(&self.period_drift) {
            return bad(format!("period drift {} must be in [0, 1)", self.period_drift));
        }
        let (a, b) = self.turn_periods;
        if !(a >= 1.0 && b >= a && b.is_finite()) {
            return bad(format!("turn length range ({a}, {b}) periods is invalid"));
        }
        if self.occlusion_frames.0 > self.occlusion_frames.1 {
            return bad("occlusion span range is reversed".into());
        }
        if !(1..=STYLE_COUNT).contains(&self.style_count) {
            return bad(format!("style count must be 1..={STYLE_COUNT}, got {}", self.style_count));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) || !(self.fps > 0.0) {
            return bad("noise must be non-negative and fps positive".into());
        }
        Ok(())
    }

    fn min_gap(&self) -> usize {
        self.period_min.ceil() as usize
    }
}

/// Parameters specific to tennis-like data.
#[derive(Debug, Clone, PartialEq)]
pub struct TennisSpec {
    pub min_gap: usize,
    /// Half-width (frames) of the swing burst around an event.
    pub burst_half_width: usize,
    /// Mean extra spacing beyond `min_gap` is `1 / event_rate` frames; 0
    /// means no events.
    pub event_rate: f64,
    /// Additional event-free videos appended after the `n_videos` clips.
    pub background_videos: usize,
}

impl Default for TennisSpec {
    fn default() -> Self {
        Self { min_gap: 40, burst_half_width: 6, event_rate: 0.02, background_videos: 2 }
    }
}

/// Phase plan of one swim video: event frames and which gaps are turns. The
/// plan extends one event past each end of the video so every frame lies
/// between two planned events.
#[derive(Debug, Clone)]
struct Plan {
    events: Vec<isize>,
    turn_after: Vec<bool>,
}

impl Plan {
    fn visible_events(&self, n: usize) -> Vec<usize> {
        self.events.iter().filter(|&&f| f >= 0 && (f as usize) < n).map(|&f| f as usize).collect()
    }
}

fn plan_events(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Plan {
    let n = spec.frames_per_video as isize;
    let min_gap = spec.min_gap() as f64;
    let mut period = rng.random_range(spec.period_min..=spec.period_max);
    let first = match spec.phase_offset {
        Some(off) => off as isize,
        None => rng.random_range(0..period.round().max(1.0) as i64) as isize,
    };
    let mut events = vec![first - period.round().max(min_gap) as isize];
    let mut turn_after = vec![false];
    let mut f = first;
    loop {
        events.push(f);
        if f >= n {
            break;
        }
        let turn = spec.turn_probability > 0.0 && rng.random_bool(spec.turn_probability);
        let gap = if turn { period * rng.random_range(spec.turn_periods.0..=spec.turn_periods.1) } else { period };
        turn_after.push(turn);
        f += gap.round().max(min_gap) as isize;
        if spec.period_drift > 0.0 {
            period = (period * (1.0 + rng.random_range(-spec.period_drift..=spec.period_drift)))
                .clamp(spec.period_min, spec.period_max);
        }
    }
    Plan { events, turn_after }
}

/// Satellite phase at frame `n` (0 at events, increasing by 2π per gap), or
/// `None` while it is hidden inside a turn. Turn edges keep half a period of
/// motion using the nearest ordinary gap.
fn phase_at(plan: &Plan, n: usize, fallback_period: f64) -> Option<f64> {
    let ev = &plan.events;
    let n = n as isize;
    let i = ev.partition_point(|&f| f <= n);
    debug_assert!(i > 0 && i < ev.len());
    let (a, b) = (ev[i - 1], ev[i]);
    if !plan.turn_after[i - 1] {
        return Some(2.0 * PI * (n - a) as f64 / (b - a) as f64);
    }
    let gaps = ev.len() - 1;
    let p = (0..gaps)
        .flat_map(|d| [(i - 1).checked_sub(d), Some(i - 1 + d)])
        .flatten()
        .find(|&j| j < gaps && !plan.turn_after[j])
        .map_or(fallback_period, |j| (ev[j + 1] - ev[j]) as f64);
    let half = p / 2.0;
    if ((n - a) as f64) <= half {
        Some(2.0 * PI * (n - a) as f64 / p)
    } else if ((b - n) as f64) <= half {
        Some(-2.0 * PI * (b - n) as f64 / p)
    } else {
        None
    }
}

fn add_blob(planes: &mut [f32], h: usize, w: usize, cx: f64, cy: f64, sigma: f64, gain: [f32; 3]) {
    let plane = h * w;
    let reach = 3.0 * sigma;
    let y0 = (cy - reach).floor().max(0.0) as usize;
    let y1 = ((cy + reach).ceil() as isize).clamp(0, h as isize - 1) as usize;
    let x0 = (cx - reach).floor().max(0.0) as usize;
    let x1 = ((cx + reach).ceil() as isize).clamp(0, w as isize - 1) as usize;
    if cy + reach < 0.0 || cx + reach < 0.0 {
        return;
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            let k = (-d2 * inv).exp() as f32;
            for c in 0..FRAME_CHANNELS {
                planes[c * plane + y * w + x] += gain[c] * k;
            }
        }
    }
}

fn background(h: usize, w: usize) -> Vec<f32> {
    let plane = h * w;
    let mut planes = vec![0.0; FRAME_CHANNELS * plane];
    for c in 0..FRAME_CHANNELS {
        planes[c * plane..(c + 1) * plane].fill(BACKGROUND[c]);
    }
    planes
}

/// Quantises channel-major planes into HWC bytes, adding noise.
fn push_frame(out: &mut Vec<u8>, planes: &[f32], h: usize, w: usize, noise: Option<&Normal<f64>>, rng: &mut ChaCha8Rng) {
    let plane = h * w;
    for p in 0..plane {
        for c in 0..FRAME_CHANNELS {
            let mut v = planes[c * plane + p] as f64;
            if let Some(n) = noise {
                v += n.sample(rng);
            }
            out.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
}

fn occlude(planes: &mut [f32], h: usize, w: usize, x0: usize, bar: usize) {
    let plane = h * w;
    for y in 0..h {
        for x in x0..(x0 + bar).min(w) {
            planes[y * w + x] = 0.0;
            planes[plane + y * w + x] = 128.0;
            planes[2 * plane + y * w + x] = 128.0;
        }
    }
}

fn noise_dist(spec: &SynthSpec) -> Option<Normal<f64>> {
    (spec.noise > 0.0).then(|| Normal::new(0.0, spec.noise).expect("validated noise level"))
}

/// Satellite offset from the body centre for a phase and style.
fn satellite_offset(phase: f64, style: usize, radius: f64) -> (f64, f64) {
    let dy = -radius * phase.cos();
    let dx = match style {
        0 => radius * phase.sin(),
        1 => 0.5 * radius * (2.0 * phase).sin(),
        2 => 0.0,
        _ => -radius * phase.sin(),
    };
    (dx, dy)
}

/// Generates swim-like clips and their exact annotations.
pub fn gen_swim_like(spec: &SynthSpec) -> Result<Vec<(VideoClip, EventAnnotation)>> {
    spec.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let (h, w, n) = (spec.height, spec.width, spec.frames_per_video);
    let radius = (h.min(w) as f64 / 4.0).floor();
    let noise = noise_dist(spec);
    let mut out = Vec::with_capacity(spec.n_videos);
    for v in 0..spec.n_videos {
        let mut rng = ChaCha8Rng::seed_from_u64(master.random());
        let style_idx = v % spec.style_count;
        let style = Style::SWIMMING[style_idx];
        let plan = plan_events(spec, &mut rng);
        let fallback = (spec.period_min + spec.period_max) / 2.0;
        let occlusion = (spec.occlusion_probability > 0.0 && rng.random_bool(spec.occlusion_probability)).then(|| {
            let len = rng.random_range(spec.occlusion_frames.0..=spec.occlusion_frames.1).min(n);
            let start = rng.random_range(0..=n - len);
            let bar = (w / 3).max(1);
            (start, len, rng.random_range(0..=w - bar), bar)
        });
        let margin = radius + 2.0;
        let mut bx = rng.random_range(margin..=(w as f64 - margin).max(margin));
        let mut dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let by = h as f64 / 2.0;
        let [tu, tv] = STYLE_TINT[style_idx];
        let mut pixels = Vec::with_capacity(n * h * w * FRAME_CHANNELS);
        let mut turn_started = false;
        for f in 0..n {
            let phase = phase_at(&plan, f, fallback);
            // reverse the direction of travel once per turn
            match phase {
                None if !turn_started => {
                    dir = -dir;
                    turn_started = true;
                }
                Some(_) => turn_started = false,
                None => {}
            }
            bx = (bx + dir * BODY_SPEED).clamp(margin, (w as f64 - margin).max(margin));
            let mut planes = background(h, w);
            add_blob(&mut planes, h, w, bx, by, BODY_SIGMA, BODY_GAIN);
            if let Some(phi) = phase {
                let (dx, dy) = satellite_offset(phi, style_idx, radius);
                add_blob(&mut planes, h, w, bx + dx, by + dy, SATELLITE_SIGMA, [SATELLITE_LUMA, tu, tv]);
            }
            if let Some((start, len, x0, bar)) = occlusion {
                if (start..start + len).contains(&f) {
                    occlude(&mut planes, h, w, x0, bar);
                }
            }
            push_frame(&mut pixels, &planes, h, w, noise.as_ref(), &mut rng);
        }
        let id = format!("swim_{v:03}");
        let clip = VideoClip::new(&id, spec.fps, h, w, pixels)?;
        out.push((clip, EventAnnotation::new(id, plan.visible_events(n), style, n)?));
    }
    Ok(out)
}

fn tennis_events(spec: &SynthSpec, tennis: &TennisSpec, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = spec.frames_per_video;
    if tennis.event_rate <= 0.0 {
        return Vec::new();
    }
    let extra = Exp::new(tennis.event_rate).expect("positive rate");
    let edge = tennis.burst_half_width;
    let mut events = Vec::new();
    let mut f = edge + extra.sample(rng).floor() as usize;
    while f + edge < n {
        events.push(f);
        f += tennis.min_gap + extra.sample(rng).floor() as usize;
    }
    events
}

/// Swing angle at frame `n`: at rest (−A) outside bursts, a sine sweep from
/// −A to A across `[f − L, f + L]`, then an eased return over `4L` frames.
fn swing_angle(events: &[usize], n: usize, half: usize, amplitude: f64) -> f64 {
    let l = half as f64;
    let mut angle = -amplitude;
    for &f in events {
        let x = n as f64 - f as f64;
        if x.abs() <= l {
            return amplitude * (PI * x / (2.0 * l)).sin();
        }
        if x > l && x <= 5.0 * l {
            let t = (x - l) / (4.0 * l);
            angle = amplitude * (PI * t).cos();
        }
    }
    angle
}

/// Generates tennis-like clips: sparse swings in `n_videos` clips followed
/// by `background_videos` event-free clips.
pub fn gen_tennis_like(spec: &SynthSpec, tennis: &TennisSpec) -> Result<Vec<(VideoClip, EventAnnotation)>> {
    spec.validate()?;
    if tennis.burst_half_width == 0 || tennis.min_gap <= 5 * tennis.burst_half_width {
        return Err(Error::InvalidArgument(format!(
            "min gap {} must exceed five burst half-widths ({})",
            tennis.min_gap, tennis.burst_half_width
        )));
    }
    if !(tennis.event_rate >= 0.0 && tennis.event_rate.is_finite()) {
        return Err(Error::InvalidArgument("event rate must be a non-negative number".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x7e_1115);
    let (h, w, n) = (spec.height, spec.width, spec.frames_per_video);
    let radius = (h.min(w) as f64 / 3.0).floor();
    let noise = noise_dist(spec);
    let mut out = Vec::new();
    for v in 0..spec.n_videos + tennis.background_videos {
        let mut rng = ChaCha8Rng::seed_from_u64(master.random());
        let events = if v < spec.n_videos { tennis_events(spec, tennis, &mut rng) } else { Vec::new() };
        let (bx, by) = (w as f64 / 2.0, h as f64 * 0.6);
        let mut pixels = Vec::with_capacity(n * h * w * FRAME_CHANNELS);
        for f in 0..n {
            let theta = swing_angle(&events, f, tennis.burst_half_width, 1.2);
            let mut planes = background(h, w);
            add_blob(&mut planes, h, w, bx, by, BODY_SIGMA, BODY_GAIN);
            add_blob(&mut planes, h, w, bx + radius * theta.sin(), by - radius * theta.cos(), SATELLITE_SIGMA, [
                SATELLITE_LUMA,
                40.0,
                -40.0,
            ]);
            push_frame(&mut pixels, &planes, h, w, noise.as_ref(), &mut rng);
        }
        let id = format!("tennis_{v:03}");
        let clip = VideoClip::new(&id, spec.fps, h, w, pixels)?;
        out.push((clip, EventAnnotation::new(id, events, Style::None, n)?));
    }
    Ok(out)
}

/// Chroma-weighted satellite centroid per frame; `None` when no tinted
/// pixels are visible.
pub fn satellite_track(clip: &VideoClip) -> Vec<Option<(f64, f64)>> {
    let (h, w) = (clip.height(), clip.width());
    (0..clip.n_frames())
        .map(|f| {
            let frame = clip.frame(f);
            let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let px = &frame[(y * w + x) * FRAME_CHANNELS..];
                    let wgt = (px[1] as f64 - 128.0).abs() + (px[2] as f64 - 128.0).abs();
                    if wgt > 8.0 {
                        sw += wgt;
                        sx += wgt * x as f64;
                        sy += wgt * y as f64;
                    }
                }
            }
            (sw > 0.0).then(|| (sx / sw, sy / sw))
        })
        .collect()
}
