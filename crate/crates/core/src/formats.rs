//! On-disk formats shared by the command-line tools.
//!
//! Clip container (integers little-endian):
//!
//! ```text
//! "DEDV" | version u32 | n_frames u32 | height u32 | width u32 | channels u32 | dtype u8
//! | payload: frame-major HWC pixels, u8 (dtype 0) or f32 (dtype 1)
//! ```
//!
//! The CSV files all start with a header row:
//!
//! - labels: `video_id,style,n_frames,fps,frames` with `;`-separated event frames
//! - signals: `video_id,frame,target`
//! - inferred signals: `video_id,frame,raw,smoothed,binary`
//! - predictions: `video_id,frame`
//! - results: `temporal_architecture,style_mode,target_signal,f_score,avg_frame_distance,delta_smooth`
//! - histogram: `distance,count,cumulative`

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::VideoClip;
use crate::error::{Error, Result};
use crate::labels::{EventAnnotation, Style};
use crate::metrics::DistanceHistogram;
use crate::model::FRAME_CHANNELS;

pub const CLIP_MAGIC: &[u8; 4] = b"DEDV";
pub const CLIP_VERSION: u32 = 1;
pub const CLIP_EXTENSION: &str = "dedv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelType {
    U8 = 0,
    F32 = 1,
}

impl PixelType {
    pub fn size(self) -> usize {
        match self {
            PixelType::U8 => 1,
            PixelType::F32 => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClipHeader {
    pub n_frames: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub dtype: PixelType,
}

impl ClipHeader {
    pub fn payload_len(&self) -> usize {
        self.n_frames * self.height * self.width * self.channels * self.dtype.size()
    }
}

/// Writes a clip as a u8 container.
pub fn write_clip(mut w: impl Write, clip: &VideoClip) -> Result<()> {
    w.write_all(CLIP_MAGIC)?;
    for v in [CLIP_VERSION as usize, clip.n_frames(), clip.height(), clip.width(), FRAME_CHANNELS] {
        let v = u32::try_from(v).map_err(|_| Error::Format(format!("clip dimension {v} does not fit in u32")))?;
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&[PixelType::U8 as u8])?;
    w.write_all(clip.pixels())?;
    w.flush()?;
    Ok(())
}

pub fn read_clip_header(r: &mut impl Read) -> Result<ClipHeader> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CLIP_MAGIC {
        return Err(Error::Format("not a clip container (bad magic)".into()));
    }
    let mut u32s = [0usize; 5];
    for v in &mut u32s {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        *v = u32::from_le_bytes(b) as usize;
    }
    let [version, n_frames, height, width, channels] = u32s;
    if version != CLIP_VERSION as usize {
        return Err(Error::Format(format!("unsupported clip container version {version}")));
    }
    let mut dtype = [0u8; 1];
    r.read_exact(&mut dtype)?;
    let dtype = match dtype[0] {
        0 => PixelType::U8,
        1 => PixelType::F32,
        d => return Err(Error::Format(format!("unknown pixel dtype {d}"))),
    };
    Ok(ClipHeader { n_frames, height, width, channels, dtype })
}

/// Reads a container. Float pixels are rounded and clamped to `[0, 255]`.
pub fn read_clip(mut r: impl Read, id: &str, fps: f64) -> Result<VideoClip> {
    let h = read_clip_header(&mut r)?;
    if h.channels != FRAME_CHANNELS {
        return Err(Error::Format(format!("clip {id}: {} channels, expected {FRAME_CHANNELS}", h.channels)));
    }
    let mut payload = vec![0u8; h.payload_len()];
    r.read_exact(&mut payload).map_err(|e| Error::Format(format!("clip {id}: truncated payload ({e})")))?;
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format(format!("clip {id}: trailing bytes after payload")));
    }
    let pixels = match h.dtype {
        PixelType::U8 => payload,
        PixelType::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()).round().clamp(0.0, 255.0) as u8)
            .collect(),
    };
    VideoClip::new(id, fps, h.height, h.width, pixels)
}

pub fn save_clip(path: impl AsRef<Path>, clip: &VideoClip) -> Result<()> {
    write_clip(BufWriter::new(File::create(path)?), clip)
}

pub fn load_clip(path: impl AsRef<Path>, id: &str, fps: f64) -> Result<VideoClip> {
    read_clip(open(path)?, id, fps)
}

/// One row of the labels CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub video_id: String,
    pub style: Style,
    pub n_frames: usize,
    pub fps: f64,
    pub frames: Vec<usize>,
}

impl LabelRecord {
    pub fn new(ann: &EventAnnotation, fps: f64) -> Self {
        Self {
            video_id: ann.video_id.clone(),
            style: ann.style,
            n_frames: ann.n_frames(),
            fps,
            frames: ann.frames().to_vec(),
        }
    }

    pub fn annotation(&self) -> Result<EventAnnotation> {
        EventAnnotation::new(self.video_id.clone(), self.frames.clone(), self.style, self.n_frames)
    }
}

#[derive(Serialize, Deserialize)]
struct LabelRow {
    video_id: String,
    style: String,
    n_frames: usize,
    fps: f64,
    frames: String,
}

pub fn write_labels(w: impl Write, records: &[LabelRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        let frames = r.frames.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(";");
        out.serialize(LabelRow {
            video_id: r.video_id.clone(),
            style: r.style.to_string(),
            n_frames: r.n_frames,
            fps: r.fps,
            frames,
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Reads and validates a labels CSV: ids are unique and every row forms a
/// valid annotation.
pub fn read_labels(r: impl Read) -> Result<Vec<LabelRecord>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize::<LabelRow>() {
        let row = row?;
        if !seen.insert(row.video_id.clone()) {
            return Err(Error::Format(format!("labels: duplicate video id {}", row.video_id)));
        }
        let frames = row
            .frames
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<usize>().map_err(|_| Error::Format(format!("labels: bad frame {s:?} for {}", row.video_id))))
            .collect::<Result<Vec<_>>>()?;
        if !(row.fps > 0.0) {
            return Err(Error::Format(format!("labels: fps of {} must be positive", row.video_id)));
        }
        let rec = LabelRecord { style: row.style.parse()?, video_id: row.video_id, n_frames: row.n_frames, fps: row.fps, frames };
        rec.annotation()?;
        out.push(rec);
    }
    Ok(out)
}

pub fn save_labels(path: impl AsRef<Path>, records: &[LabelRecord]) -> Result<()> {
    write_labels(BufWriter::new(File::create(path)?), records)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<LabelRecord>> {
    read_labels(open(path)?)
}

/// Per-video values keyed by id, in file order.
pub type Series<T> = Vec<(String, Vec<T>)>;

/// Groups `(video_id, frame, value)` rows, requiring each video's frames to
/// run 0, 1, 2, … without interleaving.
fn group_frames<T>(rows: impl IntoIterator<Item = Result<(String, usize, T)>>, what: &str) -> Result<Series<T>> {
    let mut out: Series<T> = Vec::new();
    let mut finished = HashSet::new();
    for row in rows {
        let (id, frame, value) = row?;
        match out.last_mut() {
            Some((last, values)) if *last == id => {
                if frame != values.len() {
                    return Err(Error::Format(format!("{what}: {id} frame {frame} out of order, expected {}", values.len())));
                }
                values.push(value);
            }
            _ => {
                if let Some((last, _)) = out.last() {
                    finished.insert(last.clone());
                }
                if finished.contains(&id) {
                    return Err(Error::Format(format!("{what}: rows of {id} are not contiguous")));
                }
                if frame != 0 {
                    return Err(Error::Format(format!("{what}: {id} starts at frame {frame}, expected 0")));
                }
                out.push((id, vec![value]));
            }
        }
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct SignalRow {
    video_id: String,
    frame: usize,
    target: f64,
}

pub fn write_signals<'a>(w: impl Write, series: impl IntoIterator<Item = (&'a str, &'a [f64])>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (id, values) in series {
        for (frame, &target) in values.iter().enumerate() {
            out.serialize(SignalRow { video_id: id.to_string(), frame, target })?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_signals(r: impl Read) -> Result<Series<f64>> {
    let rows = csv::Reader::from_reader(r)
        .into_deserialize::<SignalRow>()
        .map(|row| row.map(|r| (r.video_id, r.frame, r.target)).map_err(Error::from));
    group_frames(rows, "signals")
}

/// One frame of inferred-signal output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferredFrame {
    pub raw: f64,
    pub smoothed: f64,
    pub binary: bool,
}

#[derive(Serialize, Deserialize)]
struct InferRow {
    video_id: String,
    frame: usize,
    raw: f64,
    smoothed: f64,
    binary: u8,
}

pub fn write_inferred<'a>(w: impl Write, series: impl IntoIterator<Item = (&'a str, &'a [InferredFrame])>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (id, frames) in series {
        for (frame, f) in frames.iter().enumerate() {
            out.serialize(InferRow {
                video_id: id.to_string(),
                frame,
                raw: f.raw,
                smoothed: f.smoothed,
                binary: f.binary as u8,
            })?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_inferred(r: impl Read) -> Result<Series<InferredFrame>> {
    let rows = csv::Reader::from_reader(r).into_deserialize::<InferRow>().map(|row| {
        let r = row?;
        if r.binary > 1 {
            return Err(Error::Format(format!("inferred signals: binary column must be 0 or 1, got {}", r.binary)));
        }
        Ok((r.video_id, r.frame, InferredFrame { raw: r.raw, smoothed: r.smoothed, binary: r.binary == 1 }))
    });
    group_frames(rows, "inferred signals")
}

#[derive(Serialize, Deserialize)]
struct PredictionRow {
    video_id: String,
    frame: usize,
}

pub fn write_predictions<'a>(w: impl Write, preds: impl IntoIterator<Item = (&'a str, &'a [usize])>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (id, frames) in preds {
        for &frame in frames {
            out.serialize(PredictionRow { video_id: id.to_string(), frame })?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Predicted frames per video id. Videos without predictions do not appear.
pub fn read_predictions(r: impl Read) -> Result<BTreeMap<String, Vec<usize>>> {
    let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for row in csv::Reader::from_reader(r).deserialize::<PredictionRow>() {
        let row = row?;
        out.entry(row.video_id).or_default().push(row.frame);
    }
    for (id, frames) in &mut out {
        frames.sort_unstable();
        if frames.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Format(format!("predictions: duplicate frame for {id}")));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub temporal_architecture: String,
    pub style_mode: String,
    pub target_signal: String,
    pub f_score: f64,
    pub avg_frame_distance: f64,
    /// Empty when only event predictions (no raw signal) were evaluated.
    pub delta_smooth: Option<f64>,
}

/// Writes rows with a header.
pub fn write_results(w: impl Write, rows: &[ResultsRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Appends a row, writing the header first when the file is new or empty.
pub fn append_results(path: impl AsRef<Path>, row: &ResultsRow) -> Result<()> {
    let path = path.as_ref();
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut out = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    out.serialize(row)?;
    out.flush()?;
    Ok(())
}

pub fn read_results(r: impl Read) -> Result<Vec<ResultsRow>> {
    Ok(csv::Reader::from_reader(r).deserialize().collect::<Result<_, _>>()?)
}

/// `distance,count,cumulative` with the last bin labelled `N+`.
pub fn write_histogram(mut w: impl Write, h: &DistanceHistogram) -> Result<()> {
    writeln!(w, "distance,count,cumulative")?;
    for (bin, (c, cum)) in h.counts.iter().zip(&h.cumulative).enumerate() {
        writeln!(w, "{},{c},{cum}", h.label(bin))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a histogram CSV back as `(label, count, cumulative)` rows.
pub fn read_histogram(r: impl Read) -> Result<Vec<(String, usize, usize)>> {
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize::<(String, usize, usize)>() {
        out.push(row?);
    }
    Ok(out)
}

/// Opens `path` for buffered writing, creating parent directories.
pub fn create(path: impl AsRef<Path>) -> Result<BufWriter<File>> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn open(path: impl AsRef<Path>) -> Result<BufReader<File>> {
    let path = path.as_ref();
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}
