//! Video clips, channel standardisation, augmentation and minibatch sampling.
//!
//! Sampling draws a video with probability proportional to its frame count,
//! takes the window centred on that video's sequential cursor and advances
//! the cursor. All randomness comes from one seeded stream, so a batch
//! sequence is reproducible bit for bit.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::mpsc::{sync_channel, Receiver};
use std::sync::Arc;
use std::thread::JoinHandle;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::labels::{target_signal, EventAnnotation, SignalKind, SignalParams, Style};
use crate::model::{ModelConfig, StyleMode, StyleVector, FRAME_CHANNELS, STYLE_COUNT};
use crate::tensor::Tensor;

/// Decoded frames stored as bytes, frame-major, each frame `H × W × 3`
/// (luma then two chroma channels).
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip {
    id: String,
    fps: f64,
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl VideoClip {
    pub fn new(id: impl Into<String>, fps: f64, height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        let frame = height * width * FRAME_CHANNELS;
        if frame == 0 {
            return Err(Error::Shape("frame dimensions must be positive".into()));
        }
        if pixels.is_empty() || !pixels.len().is_multiple_of(frame) {
            return Err(Error::Shape(format!("{} bytes is not a whole number of {height}x{width} frames", pixels.len())));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
        }
        Ok(Self { id: id.into(), fps, height, width, pixels })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frame_len(&self) -> usize {
        self.height * self.width * FRAME_CHANNELS
    }

    pub fn n_frames(&self) -> usize {
        self.pixels.len() / self.frame_len()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Frame `i` in HWC byte layout.
    pub fn frame(&self, i: usize) -> &[u8] {
        let n = self.frame_len();
        &self.pixels[i * n..(i + 1) * n]
    }

    /// Writes frame `i` as channel-major reals into `out` (`3·H·W` values).
    pub fn frame_chw(&self, i: usize, out: &mut [f32]) {
        let plane = self.height * self.width;
        for (p, px) in self.frame(i).chunks_exact(FRAME_CHANNELS).enumerate() {
            for c in 0..FRAME_CHANNELS {
                out[c * plane + p] = px[c] as f32;
            }
        }
    }
}

/// Per-channel mean and population standard deviation over every training pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetStats {
    pub mean: [f64; FRAME_CHANNELS],
    pub std: [f64; FRAME_CHANNELS],
}

impl DatasetStats {
    pub fn compute<'a>(clips: impl IntoIterator<Item = &'a VideoClip> + Clone) -> Result<Self> {
        let mut sum = [0.0f64; FRAME_CHANNELS];
        let mut count = 0usize;
        for clip in clips.clone() {
            for px in clip.pixels.chunks_exact(FRAME_CHANNELS) {
                for c in 0..FRAME_CHANNELS {
                    sum[c] += px[c] as f64;
                }
            }
            count += clip.pixels.len() / FRAME_CHANNELS;
        }
        if count == 0 {
            return Err(Error::Empty("no frames to compute statistics over".into()));
        }
        let mean = sum.map(|s| s / count as f64);
        let mut sq = [0.0f64; FRAME_CHANNELS];
        for clip in clips {
            for px in clip.pixels.chunks_exact(FRAME_CHANNELS) {
                for c in 0..FRAME_CHANNELS {
                    let d = px[c] as f64 - mean[c];
                    sq[c] += d * d;
                }
            }
        }
        let std = sq.map(|s| (s / count as f64).sqrt());
        Self::new(mean, std)
    }

    pub fn new(mean: [f64; FRAME_CHANNELS], std: [f64; FRAME_CHANNELS]) -> Result<Self> {
        if let Some(c) = (0..FRAME_CHANNELS).find(|&c| !(std[c] > 0.0 && std[c].is_finite()) || !mean[c].is_finite()) {
            return Err(Error::InvalidArgument(format!("channel {c} has degenerate statistics (std {})", std[c])));
        }
        Ok(Self { mean, std })
    }

    /// `(x − mean) / std` per channel of a channel-major frame.
    pub fn standardize(&self, chw: &mut [f32]) {
        let plane = chw.len() / FRAME_CHANNELS;
        for (c, ch) in chw.chunks_exact_mut(plane).enumerate() {
            let (m, inv) = (self.mean[c], 1.0 / self.std[c]);
            ch.iter_mut().for_each(|v| *v = ((*v as f64 - m) * inv) as f32);
        }
    }

    pub fn destandardize(&self, chw: &mut [f32]) {
        let plane = chw.len() / FRAME_CHANNELS;
        for (c, ch) in chw.chunks_exact_mut(plane).enumerate() {
            let (m, s) = (self.mean[c], self.std[c]);
            ch.iter_mut().for_each(|v| *v = (*v as f64 * s + m) as f32);
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("channel,mean,std\n");
        for c in 0..FRAME_CHANNELS {
            writeln!(out, "{c},{},{}", self.mean[c], self.std[c]).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("channel,mean,std") {
            return Err(Error::Format("stats file must start with channel,mean,std".into()));
        }
        let mut mean = [f64::NAN; FRAME_CHANNELS];
        let mut std = [f64::NAN; FRAME_CHANNELS];
        for line in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Format(format!("bad stats line {line:?}"));
            if fields.len() != 3 {
                return Err(bad());
            }
            let c: usize = fields[0].parse().map_err(|_| bad())?;
            if c >= FRAME_CHANNELS {
                return Err(bad());
            }
            mean[c] = fields[1].parse().map_err(|_| bad())?;
            std[c] = fields[2].parse().map_err(|_| bad())?;
        }
        Self::new(mean, std)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentConfig {
    pub zoom: bool,
    pub color: bool,
    /// Largest zoom factor; factors are uniform in `[1, max_zoom]`.
    pub max_zoom: f64,
    /// Colour factors are log-uniform in `[1/color_range, color_range]`.
    pub color_range: f64,
}

impl AugmentConfig {
    pub const NONE: AugmentConfig = AugmentConfig { zoom: false, color: false, max_zoom: 1.2, color_range: 3.0 };
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { zoom: true, color: true, ..Self::NONE }
    }
}

/// Augmentation parameters shared by every frame of one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowAugment {
    pub scale: f64,
    /// Crop offset in pixels of the scaled image.
    pub offset_y: f64,
    pub offset_x: f64,
    pub color: [f64; FRAME_CHANNELS],
}

impl WindowAugment {
    pub const IDENTITY: WindowAugment = WindowAugment { scale: 1.0, offset_y: 0.0, offset_x: 0.0, color: [1.0; FRAME_CHANNELS] };

    pub fn draw(cfg: &AugmentConfig, height: usize, width: usize, rng: &mut impl Rng) -> Self {
        let mut aug = Self::IDENTITY;
        if cfg.zoom {
            aug.scale = rng.random_range(1.0..=cfg.max_zoom);
            aug.offset_y = rng.random_range(0.0..=(aug.scale - 1.0) * height as f64);
            aug.offset_x = rng.random_range(0.0..=(aug.scale - 1.0) * width as f64);
        }
        if cfg.color {
            let r = cfg.color_range.ln();
            for c in &mut aug.color {
                *c = rng.random_range(-r..=r).exp();
            }
        }
        aug
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// Applies the colour factors then the zoom crop to a channel-major frame
    /// in place. `scratch` is resized as needed.
    pub fn apply(&self, chw: &mut [f32], height: usize, width: usize, scratch: &mut Vec<f32>) {
        let plane = height * width;
        if self.color != [1.0; FRAME_CHANNELS] {
            for (c, ch) in chw.chunks_exact_mut(plane).enumerate() {
                let f = self.color[c] as f32;
                ch.iter_mut().for_each(|v| *v *= f);
            }
        }
        if self.scale != 1.0 || self.offset_x != 0.0 || self.offset_y != 0.0 {
            scratch.clear();
            scratch.resize(chw.len(), 0.0);
            zoom_crop(chw, height, width, self.scale, self.offset_y, self.offset_x, scratch);
            chw.copy_from_slice(scratch);
        }
    }
}

/// Bilinear upscale by `scale` followed by an `H × W` crop at
/// `(offset_y, offset_x)` in the scaled image.
pub fn zoom_crop(src: &[f32], height: usize, width: usize, scale: f64, offset_y: f64, offset_x: f64, dst: &mut [f32]) {
    let plane = height * width;
    let coord = |o: usize, off: f64, len: usize| {
        let s = ((o as f64 + off + 0.5) / scale - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, (s - i0 as f64) as f32)
    };
    let xs: Vec<_> = (0..width).map(|x| coord(x, offset_x, width)).collect();
    for y in 0..height {
        let (y0, y1, fy) = coord(y, offset_y, height);
        for c in 0..FRAME_CHANNELS {
            let s = &src[c * plane..(c + 1) * plane];
            let row0 = &s[y0 * width..(y0 + 1) * width];
            let row1 = &s[y1 * width..(y1 + 1) * width];
            let out = &mut dst[c * plane + y * width..c * plane + (y + 1) * width];
            for (o, &(x0, x1, fx)) in out.iter_mut().zip(&xs) {
                let top = row0[x0] * (1.0 - fx) + row0[x1] * fx;
                let bottom = row1[x0] * (1.0 - fx) + row1[x1] * fx;
                *o = top * (1.0 - fy) + bottom * fy;
            }
        }
    }
}

/// Draws a video index with probability proportional to its frame count.
pub fn sample_source(frame_counts: &[usize], rng: &mut impl Rng) -> Result<usize> {
    let dist = WeightedIndex::new(frame_counts)
        .map_err(|e| Error::Empty(format!("cannot sample from {} videos: {e}", frame_counts.len())))?;
    Ok(dist.sample(rng))
}

/// Raw frame indices of the window centred on `center`, edge frames
/// replicated past either end.
pub fn window_indices(center: usize, n_frames: usize, cfg: &ModelConfig) -> Vec<usize> {
    cfg.window_offsets()
        .into_iter()
        .map(|d| (center as isize + d).clamp(0, n_frames as isize - 1) as usize)
        .collect()
}

/// A clip with its annotation and per-frame target `u`.
#[derive(Debug, Clone)]
pub struct LabelledVideo {
    pub clip: VideoClip,
    pub annotation: EventAnnotation,
    pub target: Vec<f32>,
}

impl LabelledVideo {
    pub fn new(clip: VideoClip, annotation: EventAnnotation, kind: SignalKind, params: SignalParams) -> Result<Self> {
        let target = target_signal(&annotation, kind, params)?.values.into_iter().map(|v| v as f32).collect();
        Self::with_target(clip, annotation, target)
    }

    pub fn with_target(clip: VideoClip, annotation: EventAnnotation, target: Vec<f32>) -> Result<Self> {
        if clip.n_frames() != annotation.n_frames() || target.len() != clip.n_frames() {
            return Err(Error::Shape(format!(
                "video {}: {} frames, annotation {} frames, target {} values",
                clip.id(),
                clip.n_frames(),
                annotation.n_frames(),
                target.len()
            )));
        }
        Ok(Self { clip, annotation, target })
    }

    /// Regression target for frame `i` as the model expects it.
    pub fn target_at(&self, i: usize, cfg: &ModelConfig, out: &mut [f32]) -> Result<()> {
        let u = self.target[i];
        if cfg.style_mode == StyleMode::MultiClass {
            let s = StyleVector::from_style(self.annotation.style)?;
            multiclass_into(u, s, out);
        } else {
            out[0] = u;
        }
        Ok(())
    }
}

fn multiclass_into(u: f32, s: StyleVector, out: &mut [f32]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    out[s.index()] = u;
}

/// One-hot style row for the gate input.
pub fn style_one_hot(style: Style) -> Result<[f32; STYLE_COUNT]> {
    let s = StyleVector::from_style(style)?;
    let mut out = [0.0; STYLE_COUNT];
    out[s.index()] = 1.0;
    Ok(out)
}

/// Checks that every clip matches the model's input frame size.
pub fn check_dimensions<'a>(clips: impl IntoIterator<Item = &'a VideoClip>, cfg: &ModelConfig) -> Result<()> {
    for clip in clips {
        if clip.height() != cfg.input_h || clip.width() != cfg.input_w {
            return Err(Error::Shape(format!(
                "video {} is {}x{}, model expects {}x{}",
                clip.id(),
                clip.height(),
                clip.width(),
                cfg.input_h,
                cfg.input_w
            )));
        }
    }
    Ok(())
}

/// Assembles standardised (optionally augmented) model input windows.
#[derive(Debug, Clone)]
pub struct WindowBuilder {
    cfg: ModelConfig,
    stats: DatasetStats,
    frames: Vec<Vec<f32>>,
    scratch: Vec<f32>,
}

impl WindowBuilder {
    pub fn new(cfg: &ModelConfig, stats: DatasetStats) -> Self {
        let frame_len = FRAME_CHANNELS * cfg.input_h * cfg.input_w;
        Self { cfg: cfg.clone(), stats, frames: vec![vec![0.0; frame_len]; cfg.window_len()], scratch: Vec::new() }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    /// Writes the window centred on `center` into `dst` (one sample's worth).
    pub fn fill(&mut self, clip: &VideoClip, center: usize, aug: &WindowAugment, dst: &mut [f32]) -> Result<()> {
        let (h, w) = (clip.height(), clip.width());
        for (frame, idx) in self.frames.iter_mut().zip(window_indices(center, clip.n_frames(), &self.cfg)) {
            clip.frame_chw(idx, frame);
            if !aug.is_identity() {
                aug.apply(frame, h, w, &mut self.scratch);
            }
            self.stats.standardize(frame);
        }
        let refs: Vec<&[f32]> = self.frames.iter().map(Vec::as_slice).collect();
        self.cfg.write_window(&refs, dst)
    }

    /// Un-augmented inputs for the window centres `start..start + count`.
    pub fn video_inputs(&mut self, clip: &VideoClip, start: usize, count: usize) -> Result<Tensor<f32>> {
        let len = self.cfg.sample_len();
        let mut data = vec![0.0f32; count * len];
        for (j, dst) in data.chunks_exact_mut(len).enumerate() {
            self.fill(clip, start + j, &WindowAugment::IDENTITY, dst)?;
        }
        Tensor::new(self.cfg.input_shape(count), data)
    }
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub input: Tensor<f32>,
    pub target: Tensor<f32>,
    pub style: Option<Tensor<f32>>,
    /// Sampler state after this batch was drawn, for resuming.
    pub state_after: SamplerState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerState {
    pub cursors: Vec<usize>,
    pub rng_word_pos: u128,
}

pub struct BatchSampler {
    videos: Arc<[LabelledVideo]>,
    builder: WindowBuilder,
    augment: AugmentConfig,
    rng: ChaCha8Rng,
    cursors: Vec<usize>,
    dist: WeightedIndex<usize>,
}

impl BatchSampler {
    pub fn new(
        videos: Arc<[LabelledVideo]>,
        cfg: &ModelConfig,
        stats: DatasetStats,
        augment: AugmentConfig,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        check_dimensions(videos.iter().map(|v| &v.clip), cfg)?;
        if cfg.style_mode.needs_style_label() {
            for v in videos.iter() {
                StyleVector::from_style(v.annotation.style)?;
            }
        }
        let counts: Vec<usize> = videos.iter().map(|v| v.clip.n_frames()).collect();
        let dist = WeightedIndex::new(&counts).map_err(|e| Error::Empty(format!("no training frames: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cursors = counts.iter().map(|&n| rng.random_range(0..n)).collect();
        Ok(Self { videos, builder: WindowBuilder::new(cfg, stats), augment, rng, cursors, dist })
    }

    pub fn state(&self) -> SamplerState {
        SamplerState { cursors: self.cursors.clone(), rng_word_pos: self.rng.get_word_pos() }
    }

    pub fn restore(&mut self, state: &SamplerState) -> Result<()> {
        if state.cursors.len() != self.cursors.len()
            || state.cursors.iter().zip(self.videos.iter()).any(|(&c, v)| c >= v.clip.n_frames())
        {
            return Err(Error::InvalidArgument("sampler state does not match the dataset".into()));
        }
        self.cursors.clone_from(&state.cursors);
        self.rng.set_word_pos(state.rng_word_pos);
        Ok(())
    }

    pub fn next_batch(&mut self, size: usize) -> Result<Batch> {
        if size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        let cfg = self.builder.config().clone();
        let (len, k) = (cfg.sample_len(), cfg.k());
        let mut input = vec![0.0f32; size * len];
        let mut target = vec![0.0f32; size * k];
        let mut style = cfg.needs_style_input().then(|| vec![0.0f32; size * STYLE_COUNT]);
        for j in 0..size {
            let v = self.dist.sample(&mut self.rng);
            let video = &self.videos[v];
            let center = self.cursors[v];
            self.cursors[v] = (center + 1) % video.clip.n_frames();
            let aug = WindowAugment::draw(&self.augment, cfg.input_h, cfg.input_w, &mut self.rng);
            self.builder.fill(&video.clip, center, &aug, &mut input[j * len..(j + 1) * len])?;
            video.target_at(center, &cfg, &mut target[j * k..(j + 1) * k])?;
            if let Some(s) = style.as_mut() {
                s[j * STYLE_COUNT..(j + 1) * STYLE_COUNT].copy_from_slice(&style_one_hot(video.annotation.style)?);
            }
        }
        Ok(Batch {
            input: Tensor::new(cfg.input_shape(size), input)?,
            target: Tensor::new([size, k], target)?,
            style: style.map(|s| Tensor::new([size, STYLE_COUNT], s)).transpose()?,
            state_after: self.state(),
        })
    }
}

impl StyleMode {
    /// Whether samples need a swimming-style label.
    pub fn needs_style_label(self) -> bool {
        matches!(self, StyleMode::MultiClass | StyleMode::StyleAsInput)
    }
}

/// Runs a sampler on a background thread, at most `depth` batches ahead.
pub struct Prefetcher {
    rx: Option<Receiver<Result<Batch>>>,
    handle: Option<JoinHandle<()>>,
}

impl Prefetcher {
    pub fn spawn(mut sampler: BatchSampler, batch_size: usize, depth: usize) -> Self {
        let (tx, rx) = sync_channel(depth.max(1));
        let handle = std::thread::spawn(move || loop {
            let batch = sampler.next_batch(batch_size);
            let failed = batch.is_err();
            if tx.send(batch).is_err() || failed {
                break;
            }
        });
        Self { rx: Some(rx), handle: Some(handle) }
    }

    pub fn next_batch(&self) -> Result<Batch> {
        self.rx
            .as_ref()
            .and_then(|rx| rx.recv().ok())
            .unwrap_or_else(|| Err(Error::InvalidArgument("batch producer stopped".into())))
    }
}

impl Drop for Prefetcher {
    fn drop(&mut self) {
        drop(self.rx.take());
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TemporalMode;
    use proptest::{prop_assert, prop_assert_eq, proptest};

    fn clip_from(id: &str, h: usize, w: usize, frames: usize, f: impl Fn(usize) -> u8) -> VideoClip {
        VideoClip::new(id, 25.0, h, w, (0..frames * h * w * 3).map(f).collect()).unwrap()
    }

    fn clip_cfg(h: usize, w: usize, temporal: TemporalMode, half: usize, skip: usize) -> ModelConfig {
        ModelConfig {
            temporal_mode: temporal,
            style_mode: StyleMode::AllStyles,
            window_half_width: half,
            frame_skip: skip,
            input_h: h,
            input_w: w,
            blocks: vec![1],
            fc_widths: vec![],
        }
    }

    #[test]
    fn clip_validation() {
        assert!(VideoClip::new("a", 25.0, 2, 2, vec![0; 12]).is_ok());
        assert!(VideoClip::new("a", 25.0, 2, 2, vec![0; 13]).is_err());
        assert!(VideoClip::new("a", 25.0, 2, 2, vec![]).is_err());
        assert!(VideoClip::new("a", 0.0, 2, 2, vec![0; 12]).is_err());
    }

    #[test]
    fn chw_conversion() {
        let clip = clip_from("a", 1, 2, 1, |i| i as u8);
        let mut out = [0.0; 6];
        clip.frame_chw(0, &mut out);
        assert_eq!(out, [0.0, 3.0, 1.0, 4.0, 2.0, 5.0]);
    }

    #[test]
    fn stats_of_two_values() {
        let a = clip_from("a", 1, 1, 1, |_| 0);
        let b = clip_from("b", 1, 1, 1, |_| 2);
        let s = DatasetStats::compute([&a, &b]).unwrap();
        assert_eq!(s.mean, [1.0; 3]);
        assert_eq!(s.std, [1.0; 3]);
    }

    #[test]
    fn constant_pixels_are_rejected() {
        let a = clip_from("a", 2, 2, 3, |_| 9);
        assert!(DatasetStats::compute([&a]).is_err());
        assert!(DatasetStats::compute(std::iter::empty::<&VideoClip>()).is_err());
    }

    #[test]
    fn stats_match_two_pass_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let clips: Vec<VideoClip> = (0..3)
            .map(|v| {
                let px: Vec<u8> = (0..4 * 5 * 3 * (v + 2)).map(|_| rng.random()).collect();
                VideoClip::new(format!("{v}"), 25.0, 4, 5, px).unwrap()
            })
            .collect();
        let s = DatasetStats::compute(clips.iter()).unwrap();
        for c in 0..3 {
            let vals: Vec<f64> =
                clips.iter().flat_map(|cl| cl.pixels().iter().skip(c).step_by(3).map(|&b| b as f64)).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!((s.mean[c] - m).abs() < 1e-6);
            assert!((s.std[c] - var.sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn standardize_examples_and_inverse() {
        let s = DatasetStats::new([10.0, 20.0, 30.0], [2.0, 4.0, 5.0]).unwrap();
        let mut v = vec![10.0, 12.0, 20.0, 24.0, 30.0, 35.0];
        let orig = v.clone();
        s.standardize(&mut v);
        assert_eq!(v, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        s.destandardize(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn stats_text_round_trip() {
        let s = DatasetStats::new([1.0 / 3.0, 2.5, 100.0], [0.1, 7.0, 1e-3]).unwrap();
        let text = s.to_text();
        assert!(text.starts_with("channel,mean,std\n0,"));
        assert_eq!(DatasetStats::from_text(&text).unwrap(), s);
        assert!(DatasetStats::from_text("mean,std\n").is_err());
    }

    #[test]
    fn zoom_identity_and_constant() {
        let src: Vec<f32> = (0..3 * 6 * 5).map(|i| i as f32).collect();
        let mut dst = vec![0.0; src.len()];
        zoom_crop(&src, 6, 5, 1.0, 0.0, 0.0, &mut dst);
        assert_eq!(dst, src);
        let flat = vec![4.5f32; 3 * 6 * 5];
        zoom_crop(&flat, 6, 5, 1.2, 0.6, 0.5, &mut dst);
        assert!(dst.iter().all(|&v| (v - 4.5).abs() < 1e-6));
    }

    #[test]
    fn zoom_magnifies_a_ramp() {
        // horizontal ramp 0..W-1; a 2x zoom at the centre halves the slope
        let (h, w) = (4, 8);
        let src: Vec<f32> = (0..3 * h * w).map(|i| (i % w) as f32).collect();
        let mut dst = vec![0.0; src.len()];
        zoom_crop(&src, h, w, 2.0, 0.0, w as f64 / 2.0, &mut dst);
        let row = &dst[..w];
        for x in 1..w - 1 {
            assert!((row[x + 1] - row[x] - 0.5).abs() < 1e-6, "{row:?}");
        }
    }

    #[test]
    fn colour_factor_scales_one_channel() {
        let mut v: Vec<f32> = (0..12).map(|i| i as f32).collect();
        let orig = v.clone();
        let aug = WindowAugment { color: [3.0, 1.0, 1.0], ..WindowAugment::IDENTITY };
        aug.apply(&mut v, 2, 2, &mut Vec::new());
        assert_eq!(&v[..4], &[0.0, 3.0, 6.0, 9.0]);
        assert_eq!(&v[4..], &orig[4..]);
        let mut w = orig.clone();
        WindowAugment::IDENTITY.apply(&mut w, 2, 2, &mut Vec::new());
        assert_eq!(w, orig);
    }

    #[test]
    fn colour_factor_median_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = AugmentConfig::default();
        let mut f: Vec<f64> = (0..100_000).map(|_| WindowAugment::draw(&cfg, 8, 8, &mut rng).color[0]).collect();
        f.sort_by(f64::total_cmp);
        assert!((f[50_000] - 1.0).abs() < 0.02, "{}", f[50_000]);
        assert!(f[0] >= 1.0 / 3.0 - 1e-12 && f[99_999] <= 3.0 + 1e-12);
    }

    #[test]
    fn zoom_draws_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let a = WindowAugment::draw(&AugmentConfig::default(), 10, 20, &mut rng);
            assert!((1.0..=1.2).contains(&a.scale));
            assert!(a.offset_y <= (a.scale - 1.0) * 10.0 + 1e-9 && a.offset_x <= (a.scale - 1.0) * 20.0 + 1e-9);
        }
    }

    #[test]
    fn source_sampling_is_frame_proportional() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..100).all(|_| sample_source(&[7], &mut rng).unwrap() == 0));
        let mut hits = [0usize; 3];
        for _ in 0..100_000 {
            hits[sample_source(&[100, 0, 300], &mut rng).unwrap()] += 1;
        }
        assert_eq!(hits[1], 0);
        let ratio = hits[2] as f64 / hits[0] as f64;
        assert!((ratio - 3.0).abs() < 0.06, "{ratio}");
        assert!(sample_source(&[], &mut rng).is_err());
        assert!(sample_source(&[0, 0], &mut rng).is_err());
    }

    #[test]
    fn window_index_arithmetic() {
        let sf = clip_cfg(1, 1, TemporalMode::SingleFrame, 0, 1);
        assert_eq!(window_indices(7, 20, &sf), vec![7]);
        let ef = clip_cfg(1, 1, TemporalMode::EarlyFusion, 5, 2);
        assert_eq!(window_indices(50, 100, &ef), (40..=60).step_by(2).collect::<Vec<_>>());
        assert_eq!(window_indices(0, 100, &ef), vec![0, 0, 0, 0, 0, 0, 2, 4, 6, 8, 10]);
        assert_eq!(window_indices(99, 100, &ef)[10], 99);
    }

    fn labelled(n_frames: usize, h: usize, w: usize, id: &str) -> LabelledVideo {
        let clip = clip_from(id, h, w, n_frames, |i| ((i * 7 + id.len()) % 251) as u8);
        let ann = EventAnnotation::new(id, vec![2, n_frames - 3], Style::Butterfly, n_frames).unwrap();
        LabelledVideo::new(clip, ann, SignalKind::Sine, SignalParams::default()).unwrap()
    }

    #[test]
    fn unaugmented_window_is_standardised_frame() {
        let v = labelled(10, 2, 3, "a");
        let stats = DatasetStats::compute([&v.clip]).unwrap();
        let cfg = clip_cfg(2, 3, TemporalMode::SingleFrame, 0, 1);
        let mut b = WindowBuilder::new(&cfg, stats);
        let x = b.video_inputs(&v.clip, 4, 1).unwrap();
        let mut expect = vec![0.0; 18];
        v.clip.frame_chw(4, &mut expect);
        stats.standardize(&mut expect);
        assert_eq!(x.data(), expect.as_slice());
    }

    #[test]
    fn batches_are_reproducible_and_resumable() {
        let videos: Arc<[LabelledVideo]> = vec![labelled(30, 4, 4, "a"), labelled(50, 4, 4, "bb")].into();
        let stats = DatasetStats::compute(videos.iter().map(|v| &v.clip)).unwrap();
        let cfg = clip_cfg(4, 4, TemporalMode::Conv3D, 1, 2);
        let mk = || BatchSampler::new(videos.clone(), &cfg, stats, AugmentConfig::default(), 9).unwrap();
        let (mut a, mut b) = (mk(), mk());
        let a1 = a.next_batch(8).unwrap();
        let b1 = b.next_batch(8).unwrap();
        assert_eq!(a1.input.data(), b1.input.data());
        assert_eq!(a1.target.data(), b1.target.data());
        assert_eq!(a1.input.shape(), &[8, 3, 3, 4, 4]);
        let a2 = a.next_batch(8).unwrap();
        let mut c = mk();
        c.restore(&a1.state_after).unwrap();
        let c2 = c.next_batch(8).unwrap();
        assert_eq!(a2.input.data(), c2.input.data());
        assert_ne!(a1.input.data(), a2.input.data());
    }

    #[test]
    fn prefetcher_matches_direct_sampling() {
        let videos: Arc<[LabelledVideo]> = vec![labelled(30, 4, 4, "a"), labelled(20, 4, 4, "b")].into();
        let stats = DatasetStats::compute(videos.iter().map(|v| &v.clip)).unwrap();
        let cfg = clip_cfg(4, 4, TemporalMode::EarlyFusion, 1, 1);
        let mk = || BatchSampler::new(videos.clone(), &cfg, stats, AugmentConfig::default(), 4).unwrap();
        let mut direct = mk();
        let pre = Prefetcher::spawn(mk(), 5, 2);
        for _ in 0..4 {
            let (x, y) = (direct.next_batch(5).unwrap(), pre.next_batch().unwrap());
            assert_eq!(x.input.data(), y.input.data());
            assert_eq!(x.state_after, y.state_after);
        }
    }

    #[test]
    fn style_targets_and_gates() {
        let videos: Arc<[LabelledVideo]> = vec![labelled(20, 2, 2, "a")].into();
        let stats = DatasetStats::compute(videos.iter().map(|v| &v.clip)).unwrap();
        let mut cfg = clip_cfg(2, 2, TemporalMode::SingleFrame, 0, 1);
        cfg.style_mode = StyleMode::MultiClass;
        let mut s = BatchSampler::new(videos.clone(), &cfg, stats, AugmentConfig::NONE, 0).unwrap();
        let b = s.next_batch(6).unwrap();
        assert_eq!(b.target.shape(), &[6, 4]);
        for row in b.target.data().chunks(4) {
            assert!(row[0] == 0.0 && row[1] == 0.0 && row[3] == 0.0);
        }
        cfg.style_mode = StyleMode::StyleAsInput;
        let mut s = BatchSampler::new(videos, &cfg, stats, AugmentConfig::NONE, 0).unwrap();
        let b = s.next_batch(3).unwrap();
        assert_eq!(b.style.unwrap().data(), &[0.0, 0.0, 1.0, 0.0].repeat(3)[..]);
    }

    #[test]
    fn every_frame_is_reachable() {
        let videos: Arc<[LabelledVideo]> = vec![labelled(13, 2, 2, "a")].into();
        let stats = DatasetStats::compute(videos.iter().map(|v| &v.clip)).unwrap();
        let cfg = clip_cfg(2, 2, TemporalMode::SingleFrame, 0, 1);
        let mut s = BatchSampler::new(videos.clone(), &cfg, stats, AugmentConfig::NONE, 0).unwrap();
        let b = s.next_batch(13).unwrap();
        let mut seen: Vec<f32> = b.target.data().to_vec();
        seen.sort_by(f32::total_cmp);
        let mut all = videos[0].target.clone();
        all.sort_by(f32::total_cmp);
        assert_eq!(seen, all);
    }

    proptest! {
        #[test]
        fn augmentation_preserves_shape(seed in 0u64..1000, h in 1usize..9, w in 1usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let aug = WindowAugment::draw(&AugmentConfig::default(), h, w, &mut rng);
            let mut v: Vec<f32> = (0..3 * h * w).map(|i| i as f32).collect();
            aug.apply(&mut v, h, w, &mut Vec::new());
            prop_assert_eq!(v.len(), 3 * h * w);
            prop_assert!(v.iter().all(|x| x.is_finite()));
        }
    }
}
