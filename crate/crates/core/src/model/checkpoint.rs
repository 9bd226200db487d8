//! Checkpoint files.
//!
//! Layout (integers little-endian):
//!
//! ```text
//! "DEDM" | version u32 | header_len u32 | header (JSON, UTF-8)
//! | n_tensors u32 | n_tensors × (name_len u32 | name | ndim u32 | dims u32… | offset u64)
//! | payload: f32 values, tensor after tensor
//! ```
//!
//! `offset` counts f32 values from the start of the payload.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::Network;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DEDM";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    running_stats: bool,
    meta: BTreeMap<String, String>,
}

/// Network weights plus arbitrary extra tensors (optimizer state) and string
/// metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub running_stats: bool,
    pub meta: BTreeMap<String, String>,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn from_network(net: &mut Network<f32>) -> Self {
        let mut tensors = Vec::new();
        net.visit_tensors(|name, _, t| {
            tensors.push(NamedTensor { name, shape: t.shape().to_vec(), data: t.data().to_vec() })
        });
        Self { config: net.config().clone(), running_stats: net.has_running_stats(), meta: BTreeMap::new(), tensors }
    }

    /// Rebuilds the network; every network tensor must be present with the
    /// expected shape.
    pub fn to_network(&self) -> Result<Network<f32>> {
        let mut net = Network::build(&self.config, 0)?;
        let mut err = None;
        net.visit_tensors(|name, _, t| match self.get(&name) {
            Some(nt) if nt.shape == t.shape() => t.data_mut().copy_from_slice(&nt.data),
            Some(nt) => {
                err.get_or_insert(Error::Format(format!("tensor {name}: shape {:?}, expected {:?}", nt.shape, t.shape())));
            }
            None => {
                err.get_or_insert(Error::Format(format!("checkpoint is missing tensor {name}")));
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        if self.running_stats {
            net.mark_stats_observed();
        }
        Ok(net)
    }

    pub fn get(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: &Tensor<f32>) {
        self.tensors.push(NamedTensor { name: name.into(), shape: tensor.shape().to_vec(), data: tensor.data().to_vec() });
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = serde_json::to_vec(&Header {
            model: self.config.clone(),
            running_stats: self.running_stats,
            meta: self.meta.clone(),
        })?;
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        write_u32(&mut w, header.len())?;
        w.write_all(&header)?;
        write_u32(&mut w, self.tensors.len())?;
        let mut offset = 0u64;
        for t in &self.tensors {
            write_u32(&mut w, t.name.len())?;
            w.write_all(t.name.as_bytes())?;
            write_u32(&mut w, t.shape.len())?;
            for &d in &t.shape {
                write_u32(&mut w, d)?;
            }
            w.write_all(&offset.to_le_bytes())?;
            offset += t.data.len() as u64;
        }
        for t in &self.tensors {
            for v in &t.data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a checkpoint file (bad magic)".into()));
        }
        let version = read_u32(&mut r)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let header_len = read_u32(&mut r)? as usize;
        let mut header = vec![0u8; header_len];
        r.read_exact(&mut header)?;
        let header: Header = serde_json::from_slice(&header)?;
        let count = read_u32(&mut r)? as usize;
        let mut manifest = Vec::with_capacity(count);
        let mut expected_offset = 0u64;
        for _ in 0..count {
            let len = read_u32(&mut r)? as usize;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
            let ndim = read_u32(&mut r)? as usize;
            let shape = (0..ndim).map(|_| read_u32(&mut r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let mut off = [0u8; 8];
            r.read_exact(&mut off)?;
            if u64::from_le_bytes(off) != expected_offset {
                return Err(Error::Format(format!("tensor {name} has an out-of-order offset")));
            }
            expected_offset += shape.iter().product::<usize>() as u64;
            manifest.push((name, shape));
        }
        let mut tensors = Vec::with_capacity(count);
        for (name, shape) in manifest {
            let n: usize = shape.iter().product();
            let mut bytes = vec![0u8; n * 4];
            r.read_exact(&mut bytes)?;
            let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
            tensors.push(NamedTensor { name, shape, data });
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after checkpoint payload".into()));
        }
        Ok(Self { config: header.model, running_stats: header.running_stats, meta: header.meta, tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::read_from(BufReader::new(file))
    }
}

fn write_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("value {v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{StyleMode, TemporalMode};
    use crate::tensor::Mode;

    fn cfg() -> ModelConfig {
        ModelConfig {
            temporal_mode: TemporalMode::EarlyFusion,
            style_mode: StyleMode::StyleAsInput,
            window_half_width: 1,
            frame_skip: 1,
            input_h: 8,
            input_w: 6,
            blocks: vec![2],
            fc_widths: vec![4],
        }
    }

    #[test]
    fn round_trip_preserves_outputs_bitwise() {
        let c = cfg();
        let mut net = Network::<f32>::build(&c, 3).unwrap();
        let x = Tensor::from_fn(c.input_shape(4), |i| ((i * 37) % 11) as f32 / 11.0 - 0.5);
        let s = Tensor::from_fn([4, 4], |i| if i % 5 == 0 { 1.0 } else { 0.0 });
        net.forward(&x, Some(&s), Mode::Train).unwrap();

        let mut ck = Checkpoint::from_network(&mut net);
        ck.meta.insert("step".into(), "17".into());
        ck.push("extra", &Tensor::full([2], 0.25));
        let mut bytes = Vec::new();
        ck.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"DEDM");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);

        let back = Checkpoint::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, ck);
        let restored = back.to_network().unwrap();
        assert_eq!(restored.predict(&x, Some(&s)).unwrap().data(), net.predict(&x, Some(&s)).unwrap().data());
        assert_eq!(back.get("extra").unwrap().data, vec![0.25, 0.25]);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let mut net = Network::<f32>::build(&cfg(), 0).unwrap();
        let mut bytes = Vec::new();
        Checkpoint::from_network(&mut net).write_to(&mut bytes).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::read_from(bad.as_slice()), Err(Error::Format(_))));
        assert!(Checkpoint::read_from(&bytes[..bytes.len() - 1]).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(Checkpoint::read_from(long.as_slice()).is_err());
    }

    #[test]
    fn missing_tensor_is_an_error() {
        let mut net = Network::<f32>::build(&cfg(), 0).unwrap();
        let mut ck = Checkpoint::from_network(&mut net);
        ck.tensors.retain(|t| t.name != "head.bias");
        assert!(ck.to_network().is_err());
    }
}
