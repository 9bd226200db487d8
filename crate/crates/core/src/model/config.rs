use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Scalar;

/// Colour channels per frame.
pub const FRAME_CHANNELS: usize = 3;
/// Number of swimming styles (one-hot width and multi-class output count).
pub const STYLE_COUNT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemporalMode {
    SingleFrame,
    /// Window frames stacked along the channel axis of a 2D network.
    EarlyFusion,
    Conv3D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StyleMode {
    /// One style only; the training data are filtered to it.
    PerStyle,
    AllStyles,
    /// One output per style, trained on `u · s`.
    MultiClass,
    /// One-hot style gates the flattened convolutional features.
    StyleAsInput,
}

macro_rules! named_enum {
    ($ty:ty { $($variant:path => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($variant => $name),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let norm = s.trim().to_ascii_lowercase().replace('_', "-");
                $(if norm == $name { return Ok($variant); })+
                Err(Error::InvalidArgument(format!("unknown {} {s:?}", stringify!($ty))))
            }
        }
    };
}

named_enum!(TemporalMode {
    TemporalMode::SingleFrame => "single-frame",
    TemporalMode::EarlyFusion => "early-fusion",
    TemporalMode::Conv3D => "conv3d",
});

named_enum!(StyleMode {
    StyleMode::PerStyle => "per-style",
    StyleMode::AllStyles => "all-styles",
    StyleMode::MultiClass => "multi-class",
    StyleMode::StyleAsInput => "style-as-input",
});

/// Everything that determines the shape of a network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub temporal_mode: TemporalMode,
    pub style_mode: StyleMode,
    /// The input window spans `2w + 1` sampled frames.
    pub window_half_width: usize,
    /// Raw-frame stride between consecutive window frames.
    pub frame_skip: usize,
    pub input_h: usize,
    pub input_w: usize,
    /// Output maps of each block (two convolutions then one max pool).
    pub blocks: Vec<usize>,
    /// Hidden fully connected widths before the regression head.
    pub fc_widths: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            temporal_mode: TemporalMode::EarlyFusion,
            style_mode: StyleMode::AllStyles,
            window_half_width: 5,
            frame_skip: 2,
            input_h: 48,
            input_w: 128,
            blocks: vec![32, 64, 128],
            fc_widths: vec![256],
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temporal_mode == TemporalMode::SingleFrame && self.window_half_width != 0 {
            return Err(Error::Config("single-frame models need window_half_width = 0".into()));
        }
        if self.temporal_mode != TemporalMode::SingleFrame && self.window_half_width == 0 {
            return Err(Error::Config(format!("{} needs window_half_width > 0", self.temporal_mode)));
        }
        if self.frame_skip == 0 {
            return Err(Error::Config("frame_skip must be at least 1".into()));
        }
        if self.input_h == 0 || self.input_w == 0 {
            return Err(Error::Config("input dimensions must be positive".into()));
        }
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(Error::Config("need at least one block, each with a positive map count".into()));
        }
        if self.fc_widths.contains(&0) {
            return Err(Error::Config("fully connected widths must be positive".into()));
        }
        Ok(())
    }

    /// Output width: 4 for multi-class, else 1.
    pub fn k(&self) -> usize {
        match self.style_mode {
            StyleMode::MultiClass => STYLE_COUNT,
            _ => 1,
        }
    }

    pub fn window_len(&self) -> usize {
        2 * self.window_half_width + 1
    }

    pub fn needs_style_input(&self) -> bool {
        self.style_mode == StyleMode::StyleAsInput
    }

    /// Channels seen by the first convolution.
    pub fn input_channels(&self) -> usize {
        match self.temporal_mode {
            TemporalMode::EarlyFusion => FRAME_CHANNELS * self.window_len(),
            TemporalMode::SingleFrame | TemporalMode::Conv3D => FRAME_CHANNELS,
        }
    }

    pub fn input_shape(&self, batch: usize) -> Vec<usize> {
        match self.temporal_mode {
            TemporalMode::Conv3D => vec![batch, FRAME_CHANNELS, self.window_len(), self.input_h, self.input_w],
            _ => vec![batch, self.input_channels(), self.input_h, self.input_w],
        }
    }

    /// Values per sample in the input tensor.
    pub fn sample_len(&self) -> usize {
        self.input_shape(1).iter().product()
    }

    /// Raw frame offsets of the window around a centre frame.
    pub fn window_offsets(&self) -> Vec<isize> {
        let w = self.window_half_width as isize;
        let s = self.frame_skip as isize;
        (-w..=w).map(|j| j * s).collect()
    }

    /// Copies one window (frames in temporal order, each stored channel-major
    /// `[3, H, W]`) into `dst`, laid out as this model's per-sample input.
    pub fn write_window<T: Scalar>(&self, frames: &[&[f32]], dst: &mut [T]) -> Result<()> {
        let plane = self.input_h * self.input_w;
        let frame_len = FRAME_CHANNELS * plane;
        if frames.len() != self.window_len() {
            return Err(Error::Shape(format!("window needs {} frames, got {}", self.window_len(), frames.len())));
        }
        if dst.len() != self.sample_len() {
            return Err(Error::Shape(format!("sample buffer needs {} values, got {}", self.sample_len(), dst.len())));
        }
        if let Some(f) = frames.iter().find(|f| f.len() != frame_len) {
            return Err(Error::Shape(format!("frame has {} values, expected {frame_len}", f.len())));
        }
        let t_len = frames.len();
        for (j, frame) in frames.iter().enumerate() {
            match self.temporal_mode {
                TemporalMode::Conv3D => {
                    for c in 0..FRAME_CHANNELS {
                        let out = &mut dst[(c * t_len + j) * plane..(c * t_len + j + 1) * plane];
                        for (o, &v) in out.iter_mut().zip(&frame[c * plane..(c + 1) * plane]) {
                            *o = T::from_f32(v).unwrap();
                        }
                    }
                }
                _ => {
                    let out = &mut dst[j * frame_len..(j + 1) * frame_len];
                    for (o, &v) in out.iter_mut().zip(frame.iter()) {
                        *o = T::from_f32(v).unwrap();
                    }
                }
            }
        }
        Ok(())
    }
}
