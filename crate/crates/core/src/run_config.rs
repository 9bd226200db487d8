//! `key = value` run configuration.
//!
//! Blank lines are ignored and `#` starts a comment when it begins the line
//! or follows whitespace. Unknown or repeated keys are errors; missing keys
//! keep the defaults below. Relative paths are resolved against the directory
//! holding the config file.
//!
//! | key | default |
//! |---|---|
//! | `labels` | `labels.csv` |
//! | `clips` | `clips` (directory of `<video_id>.dedv` containers) |
//! | `signals` | unset: targets are generated from `signal` |
//! | `out_dir` | `run` |
//! | `temporal_mode` | `early-fusion` |
//! | `style_mode` | `all-styles` |
//! | `style` | unset (required by `per-style`) |
//! | `window_half_width` | 5 |
//! | `frame_skip` | 2 |
//! | `input_h`, `input_w` | 48, 128 |
//! | `blocks` | `32,64,128` |
//! | `fc_widths` | `256` |
//! | `signal` | `sine` |
//! | `turn_threshold` | 2.5 |
//! | `fixed_period` | 40 |
//! | `seed` | 0 |
//! | `batch_size` | 64 |
//! | `steps` | 1000 |
//! | `val_every` | 100 |
//! | `val_fraction` | 0.2 |
//! | `augment_zoom`, `augment_color` | `true`, `true` |
//! | `max_zoom`, `color_range` | 1.2, 3 |
//! | `prefetch` | 0 |
//! | `smooth_window` | 9 |
//! | `threshold` | `mean` |
//! | `max_run_length` | unset |
//! | `tolerance` | 3 |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::discretise::{DiscretiseParams, Threshold};
use crate::error::{Error, Result};
use crate::labels::Style;
use crate::metrics::DEFAULT_TOLERANCE;
use crate::train::TrainRun;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub labels: PathBuf,
    pub clips: PathBuf,
    pub signals: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub train: TrainRun,
    /// Training style for per-style models.
    pub style: Option<Style>,
    pub val_fraction: f64,
    pub discretise: DiscretiseParams,
    pub tolerance: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            labels: "labels.csv".into(),
            clips: "clips".into(),
            signals: None,
            out_dir: "run".into(),
            train: TrainRun::default(),
            style: None,
            val_fraction: 0.2,
            discretise: DiscretiseParams::default(),
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {value:?}"))),
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Drops a `#` comment that starts the line or follows whitespace.
fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    match (0..bytes.len()).find(|&i| bytes[i] == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace())) {
        Some(i) => &line[..i],
        None => line,
    }
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (no, line) in text.lines().enumerate() {
            let line = strip_comment(line).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key}", no + 1)));
            }
            cfg.set(key, value, base_dir)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = |v: &str| base.join(v);
        let t = &mut self.train;
        let m = &mut t.model;
        match key {
            "labels" => self.labels = path(value),
            "clips" => self.clips = path(value),
            "signals" => self.signals = (!value.is_empty()).then(|| path(value)),
            "out_dir" => self.out_dir = path(value),
            "temporal_mode" => m.temporal_mode = value.parse()?,
            "style_mode" => m.style_mode = value.parse()?,
            "style" => self.style = (!value.is_empty()).then(|| value.parse()).transpose()?,
            "window_half_width" => m.window_half_width = parse(key, value)?,
            "frame_skip" => m.frame_skip = parse(key, value)?,
            "input_h" => m.input_h = parse(key, value)?,
            "input_w" => m.input_w = parse(key, value)?,
            "blocks" => m.blocks = parse_list(key, value)?,
            "fc_widths" => m.fc_widths = parse_list(key, value)?,
            "signal" => t.signal = value.parse()?,
            "turn_threshold" => t.signal_params.turn_threshold = parse(key, value)?,
            "fixed_period" => t.signal_params.fixed_period = parse(key, value)?,
            "seed" => t.seed = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "steps" => t.steps = parse(key, value)?,
            "val_every" => t.val_every = parse(key, value)?,
            "val_fraction" => self.val_fraction = parse(key, value)?,
            "augment_zoom" => t.augment.zoom = parse_bool(key, value)?,
            "augment_color" => t.augment.color = parse_bool(key, value)?,
            "max_zoom" => t.augment.max_zoom = parse(key, value)?,
            "color_range" => t.augment.color_range = parse(key, value)?,
            "prefetch" => t.prefetch = parse(key, value)?,
            "smooth_window" => self.discretise.smooth_window = parse(key, value)?,
            "threshold" => self.discretise.threshold = value.parse::<Threshold>()?,
            "max_run_length" => {
                self.discretise.max_run_length = (!value.is_empty()).then(|| parse(key, value)).transpose()?
            }
            "tolerance" => self.tolerance = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(format!("val_fraction {} must be in [0, 1)", self.val_fraction)));
        }
        if self.train.model.style_mode == crate::model::StyleMode::PerStyle && self.style.is_none() {
            return Err(Error::Config("style_mode per-style needs a `style`".into()));
        }
        if self.discretise.smooth_window.is_multiple_of(2) {
            return Err(Error::Config(format!("smooth_window must be odd, got {}", self.discretise.smooth_window)));
        }
        Ok(())
    }

    /// Every key, one per line. Paths are written as stored.
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let m = &t.model;
        let opt_path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        kv("labels", self.labels.display().to_string());
        kv("clips", self.clips.display().to_string());
        kv("signals", opt_path(&self.signals));
        kv("out_dir", self.out_dir.display().to_string());
        kv("temporal_mode", m.temporal_mode.to_string());
        kv("style_mode", m.style_mode.to_string());
        kv("style", self.style.map(|s| s.to_string()).unwrap_or_default());
        kv("window_half_width", m.window_half_width.to_string());
        kv("frame_skip", m.frame_skip.to_string());
        kv("input_h", m.input_h.to_string());
        kv("input_w", m.input_w.to_string());
        kv("blocks", join(&m.blocks));
        kv("fc_widths", join(&m.fc_widths));
        kv("signal", t.signal.to_string());
        kv("turn_threshold", t.signal_params.turn_threshold.to_string());
        kv("fixed_period", t.signal_params.fixed_period.to_string());
        kv("seed", t.seed.to_string());
        kv("batch_size", t.batch_size.to_string());
        kv("steps", t.steps.to_string());
        kv("val_every", t.val_every.to_string());
        kv("val_fraction", self.val_fraction.to_string());
        kv("augment_zoom", t.augment.zoom.to_string());
        kv("augment_color", t.augment.color.to_string());
        kv("max_zoom", t.augment.max_zoom.to_string());
        kv("color_range", t.augment.color_range.to_string());
        kv("prefetch", t.prefetch.to_string());
        kv("smooth_window", self.discretise.smooth_window.to_string());
        kv("threshold", self.discretise.threshold.to_string());
        kv("max_run_length", self.discretise.max_run_length.map(|v| v.to_string()).unwrap_or_default());
        kv("tolerance", self.tolerance.to_string());
        out
    }
}
