pub mod checkpoint;
pub mod config;
pub mod network;

pub use checkpoint::{Checkpoint, NamedTensor};
pub use config::{ModelConfig, StyleMode, TemporalMode, FRAME_CHANNELS, STYLE_COUNT};
pub use network::{infer_style, multiclass_target, Network, StyleVector, TensorRole};
