use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use ::dedet::cli::checkpoint_stats;
use ::dedet::data::{DatasetStats, VideoClip};
use ::dedet::discretise::{DiscretiseParams, Threshold};
use ::dedet::labels::{EventAnnotation, SignalKind, SignalParams, Style};
use ::dedet::model::{Checkpoint, Network};
use ::dedet::synth::{SynthSpec, TennisSpec};
use ::dedet::{formats, metrics, pipeline, synth, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        e => PyValueError::new_err(format!("{}: {e}", e.kind())),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// A decoded video: `n_frames` frames of `height x width` RGB bytes.
#[pyclass(module = "dedet", frozen)]
struct Clip {
    inner: VideoClip,
}

#[pymethods]
impl Clip {
    #[new]
    #[pyo3(signature = (id, height, width, pixels, fps=25.0))]
    fn new(id: &str, height: usize, width: usize, pixels: Vec<u8>, fps: f64) -> PyResult<Self> {
        Ok(Self { inner: VideoClip::new(id, fps, height, width, pixels).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (path, fps=25.0))]
    fn load(path: &str, fps: f64) -> PyResult<Self> {
        let id = std::path::Path::new(path).file_stem().and_then(|s| s.to_str()).unwrap_or(path);
        Ok(Self { inner: formats::load_clip(path, id, fps).map_err(to_py)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        formats::save_clip(path, &self.inner).map_err(to_py)
    }

    #[getter]
    fn id(&self) -> &str {
        self.inner.id()
    }

    #[getter]
    fn n_frames(&self) -> usize {
        self.inner.n_frames()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn fps(&self) -> f64 {
        self.inner.fps()
    }

    /// HWC bytes of frame `i`.
    fn frame<'py>(&self, py: Python<'py>, i: usize) -> PyResult<Bound<'py, PyBytes>> {
        if i >= self.inner.n_frames() {
            return Err(PyValueError::new_err(format!("frame {i} out of range for {} frames", self.inner.n_frames())));
        }
        Ok(PyBytes::new_bound(py, self.inner.frame(i)))
    }

    fn pixels<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new_bound(py, self.inner.pixels())
    }

    fn __len__(&self) -> usize {
        self.inner.n_frames()
    }

    fn __repr__(&self) -> String {
        format!("Clip({:?}, {} frames, {}x{})", self.inner.id(), self.inner.n_frames(), self.inner.height(), self.inner.width())
    }
}

type Labelled = (Clip, Vec<usize>, String);

fn labelled(data: Vec<(VideoClip, EventAnnotation)>) -> Vec<Labelled> {
    data.into_iter().map(|(c, a)| (Clip { inner: c }, a.frames().to_vec(), a.style.as_str().to_string())).collect()
}

/// Synthetic swim-like clips as `(clip, event_frames, style)` tuples.
#[pyfunction]
#[pyo3(signature = (n_videos=20, frames=500, height=32, width=32, seed=0))]
fn synth_swim(n_videos: usize, frames: usize, height: usize, width: usize, seed: u64) -> PyResult<Vec<Labelled>> {
    let spec = SynthSpec { n_videos, frames_per_video: frames, height, width, seed, ..Default::default() };
    Ok(labelled(synth::gen_swim_like(&spec).map_err(to_py)?))
}

#[pyfunction]
#[pyo3(signature = (n_videos=20, frames=500, height=32, width=32, seed=0, background=2))]
fn synth_tennis(n_videos: usize, frames: usize, height: usize, width: usize, seed: u64, background: usize) -> PyResult<Vec<Labelled>> {
    let spec = SynthSpec { n_videos, frames_per_video: frames, height, width, seed, ..Default::default() };
    let tennis = TennisSpec { background_videos: background, ..Default::default() };
    Ok(labelled(synth::gen_tennis_like(&spec, &tennis).map_err(to_py)?))
}

/// Per-frame regression target for the given event frames.
#[pyfunction]
#[pyo3(signature = (frames, n_frames, kind="sine", turn_threshold=None, fixed_period=None))]
fn target_signal(frames: Vec<usize>, n_frames: usize, kind: &str, turn_threshold: Option<f64>, fixed_period: Option<f64>) -> PyResult<Vec<f64>> {
    let ann = EventAnnotation::new("", frames, Style::None, n_frames).map_err(to_py)?;
    let mut params = SignalParams::default();
    params.turn_threshold = turn_threshold.unwrap_or(params.turn_threshold);
    params.fixed_period = fixed_period.unwrap_or(params.fixed_period);
    Ok(::dedet::labels::target_signal(&ann, parse::<SignalKind>(kind)?, params).map_err(to_py)?.values)
}

fn discretise_params(smooth_window: usize, threshold: Option<f64>, max_run_length: Option<usize>) -> DiscretiseParams {
    DiscretiseParams { smooth_window, threshold: threshold.map_or(Threshold::AtMean, Threshold::Fixed), max_run_length }
}

/// Event frames recovered from a raw signal. `threshold=None` thresholds at
/// the mean of the smoothed signal.
#[pyfunction]
#[pyo3(signature = (raw, smooth_window=9, threshold=None, max_run_length=None))]
fn discretise(raw: Vec<f64>, smooth_window: usize, threshold: Option<f64>, max_run_length: Option<usize>) -> PyResult<Vec<usize>> {
    let params = discretise_params(smooth_window, threshold, max_run_length);
    Ok(::dedet::discretise::discretise(&raw, &params).map_err(to_py)?.frames().to_vec())
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

#[pyfunction]
#[pyo3(signature = (pred, truth, tolerance=3))]
fn match_events<'py>(py: Python<'py>, pred: Vec<usize>, truth: Vec<usize>, tolerance: usize) -> PyResult<Bound<'py, PyDict>> {
    let m = metrics::match_events(&sorted(pred), &sorted(truth), tolerance);
    let d = PyDict::new_bound(py);
    d.set_item("tp", m.tp)?;
    d.set_item("fp", m.fp)?;
    d.set_item("covered", m.covered)?;
    d.set_item("fn", m.fn_)?;
    d.set_item("precision", m.precision)?;
    d.set_item("recall", m.recall)?;
    d.set_item("f_score", m.f_score)?;
    d.set_item("distances", m.distances)?;
    Ok(d)
}

#[pyfunction]
fn avg_frame_distance(pred: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    metrics::avg_frame_distance(&sorted(pred), &sorted(truth)).map_err(to_py)
}

/// A trained network loaded from a checkpoint written by `dedet train`.
#[pyclass(module = "dedet", frozen)]
struct Model {
    net: Network<f32>,
    stats: DatasetStats,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let ck = Checkpoint::load(path).map_err(to_py)?;
        let stats = checkpoint_stats(&ck).map_err(to_py)?;
        Ok(Self { net: ck.to_network().map_err(to_py)?, stats })
    }

    #[getter]
    fn temporal_mode(&self) -> String {
        self.net.config().temporal_mode.to_string()
    }

    #[getter]
    fn style_mode(&self) -> String {
        self.net.config().style_mode.to_string()
    }

    /// Raw per-frame signal and, for multi-class models, the inferred style.
    #[pyo3(signature = (clip, style=None))]
    fn infer(&self, py: Python<'_>, clip: &Clip, style: Option<&str>) -> PyResult<(Vec<f64>, Option<String>)> {
        let style = style.map(parse::<Style>).transpose()?;
        let out = py
            .allow_threads(|| pipeline::infer_signal(&self.net, &clip.inner, style, &self.stats))
            .map_err(to_py)?;
        Ok((out.raw, out.inferred_style.map(|s| s.as_str().to_string())))
    }

    /// Event frames of `clip`, discretised with the given options.
    #[pyo3(signature = (clip, style=None, smooth_window=9, threshold=None))]
    fn detect(&self, py: Python<'_>, clip: &Clip, style: Option<&str>, smooth_window: usize, threshold: Option<f64>) -> PyResult<Vec<usize>> {
        let (raw, _) = self.infer(py, clip, style)?;
        discretise(raw, smooth_window, threshold, None)
    }
}

#[pymodule]
#[pyo3(name = "dedet")]
fn dedet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Clip>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(synth_swim, m)?)?;
    m.add_function(wrap_pyfunction!(synth_tennis, m)?)?;
    m.add_function(wrap_pyfunction!(target_signal, m)?)?;
    m.add_function(wrap_pyfunction!(discretise, m)?)?;
    m.add_function(wrap_pyfunction!(match_events, m)?)?;
    m.add_function(wrap_pyfunction!(avg_frame_distance, m)?)?;
    Ok(())
}
