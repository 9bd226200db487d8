//! Adadelta minibatch training with periodic validation and best-checkpoint
//! retention.

use std::fmt::Write as _;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{style_one_hot, AugmentConfig, BatchSampler, DatasetStats, LabelledVideo, Prefetcher, SamplerState, WindowBuilder};
use crate::error::{Error, Result};
use crate::labels::{SignalKind, SignalParams, Style};
use crate::model::{Checkpoint, ModelConfig, Network, STYLE_COUNT};
use crate::tensor::{mse_loss, Mode, Scalar, Tensor};

pub const ADADELTA_RHO: f64 = 0.95;
pub const ADADELTA_EPS: f64 = 1e-6;
pub const DEFAULT_BATCH_SIZE: usize = 64;
/// Windows per forward pass when evaluating whole videos.
pub const EVAL_CHUNK: usize = 128;

/// One Adadelta update applied elementwise.
pub fn adadelta_update<T: Scalar>(x: &mut [T], g: &[T], eg2: &mut [T], edx2: &mut [T], rho: f64, eps: f64) -> Result<()> {
    let n = x.len();
    if g.len() != n || eg2.len() != n || edx2.len() != n {
        return Err(Error::Shape(format!(
            "adadelta: {n} parameters, {} gradients, {}/{} accumulators",
            g.len(),
            eg2.len(),
            edx2.len()
        )));
    }
    let rho = T::from_f64_lossy(rho);
    let eps = T::from_f64_lossy(eps);
    let one_minus = T::one() - rho;
    for i in 0..n {
        let gi = g[i];
        eg2[i] = rho * eg2[i] + one_minus * gi * gi;
        let dx = -((edx2[i] + eps).sqrt() / (eg2[i] + eps).sqrt()) * gi;
        edx2[i] = rho * edx2[i] + one_minus * dx * dx;
        x[i] += dx;
    }
    Ok(())
}

/// Per-parameter accumulators `E[g²]` and `E[Δx²]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Adadelta<T: Scalar = f32> {
    pub rho: f64,
    pub eps: f64,
    pub eg2: Vec<Vec<T>>,
    pub edx2: Vec<Vec<T>>,
}

impl<T: Scalar> Adadelta<T> {
    pub fn new(rho: f64, eps: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) || !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("adadelta needs 0 < rho < 1 and eps > 0, got {rho}, {eps}")));
        }
        Ok(Self { rho, eps, eg2: Vec::new(), edx2: Vec::new() })
    }

    /// Updates every tensor from its accumulated gradient. Accumulators are
    /// created on the first call; later calls must see the same shapes.
    pub fn step(&mut self, params: &mut [&mut Tensor<T>]) -> Result<()> {
        if self.eg2.is_empty() {
            self.eg2 = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
            self.edx2 = self.eg2.clone();
        }
        if self.eg2.len() != params.len() {
            return Err(Error::Shape(format!("optimizer tracks {} tensors, got {}", self.eg2.len(), params.len())));
        }
        for (i, p) in params.iter_mut().enumerate() {
            let (x, g) = p.data_and_grad_mut();
            adadelta_update(x, g, &mut self.eg2[i], &mut self.edx2[i], self.rho, self.eps)?;
        }
        Ok(())
    }
}

impl Default for Adadelta<f32> {
    fn default() -> Self {
        Self::new(ADADELTA_RHO, ADADELTA_EPS).expect("default hyper-parameters are valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub model: ModelConfig,
    pub signal: SignalKind,
    pub signal_params: SignalParams,
    pub seed: u64,
    pub batch_size: usize,
    pub steps: usize,
    /// Validate (and possibly keep a new best checkpoint) every this many steps.
    pub val_every: usize,
    pub augment: AugmentConfig,
    /// Batches the producer thread may run ahead; 0 samples inline.
    pub prefetch: usize,
}

impl Default for TrainRun {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            signal: SignalKind::Sine,
            signal_params: SignalParams::default(),
            seed: 0,
            batch_size: DEFAULT_BATCH_SIZE,
            steps: 1000,
            val_every: 100,
            augment: AugmentConfig::default(),
            prefetch: 0,
        }
    }
}

impl TrainRun {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.val_every == 0 {
            return Err(Error::Config("val_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossPoint {
    pub step: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

/// Loss curve as `step,train_loss,val_loss` CSV; the validation column is
/// empty on steps without validation.
pub fn loss_curve_csv(curve: &[LossPoint]) -> String {
    let mut out = String::from("step,train_loss,val_loss\n");
    for p in curve {
        match p.val_loss {
            Some(v) => writeln!(out, "{},{},{}", p.step, p.train_loss, v),
            None => writeln!(out, "{},{},", p.step, p.train_loss),
        }
        .unwrap();
    }
    out
}

/// Randomly holds out `fraction` of `n` videos (at least one when `n ≥ 2`).
/// Returns `(train, validation)` index lists, each sorted.
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = if n < 2 { 0 } else { ((n as f64 * fraction).round() as usize).clamp(1, n - 1) };
    let mut val = idx[..n_val].to_vec();
    let mut train = idx[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    (train, val)
}

/// Model outputs for every frame of a clip as a `[N, k]` tensor, windows
/// evaluated in eval mode.
pub fn predict_clip(
    net: &Network<f32>,
    clip: &crate::data::VideoClip,
    style: Option<Style>,
    stats: &DatasetStats,
) -> Result<Tensor<f32>> {
    let cfg = net.config();
    crate::data::check_dimensions([clip], cfg)?;
    let gate_row = if cfg.needs_style_input() {
        let style = style.ok_or_else(|| Error::InvalidArgument(format!("video {} needs a style label", clip.id())))?;
        Some(style_one_hot(style)?)
    } else {
        None
    };
    let mut builder = WindowBuilder::new(cfg, *stats);
    let n = clip.n_frames();
    let mut out = Vec::with_capacity(n * cfg.k());
    let mut start = 0;
    while start < n {
        let count = EVAL_CHUNK.min(n - start);
        let input = builder.video_inputs(clip, start, count)?;
        let style = gate_row.map(|row| Tensor::new([count, STYLE_COUNT], row.repeat(count))).transpose()?;
        out.extend_from_slice(net.predict(&input, style.as_ref())?.data());
        start += count;
    }
    Tensor::new([n, cfg.k()], out)
}

/// Mean squared error over every window centre (and output) of a split.
pub fn evaluate_loss(net: &Network<f32>, videos: &[LabelledVideo], stats: &DatasetStats) -> Result<f64> {
    if videos.is_empty() {
        return Err(Error::Empty("validation split has no videos".into()));
    }
    let cfg = net.config();
    let k = cfg.k();
    let mut sum = 0.0f64;
    let mut count = 0usize;
    let mut target = vec![0.0f32; k];
    for v in videos {
        let pred = predict_clip(net, &v.clip, Some(v.annotation.style), stats)?;
        for (i, row) in pred.data().chunks_exact(k).enumerate() {
            v.target_at(i, cfg, &mut target)?;
            for (p, t) in row.iter().zip(&target) {
                let d = (*p - *t) as f64;
                sum += d * d;
            }
            count += k;
        }
    }
    let loss = sum / count as f64;
    if !loss.is_finite() {
        return Err(Error::Diverged(format!("validation loss is {loss}")));
    }
    Ok(loss)
}

#[derive(Debug, Clone)]
pub struct BestCheckpoint {
    pub step: usize,
    pub val_loss: f64,
    pub checkpoint: Checkpoint,
}

enum Source {
    Inline(BatchSampler),
    Prefetch(Prefetcher),
}

pub struct Trainer {
    run: TrainRun,
    net: Network<f32>,
    opt: Adadelta<f32>,
    source: Source,
    sampler_state: SamplerState,
    val: Vec<LabelledVideo>,
    stats: DatasetStats,
    step: usize,
    curve: Vec<LossPoint>,
    best: Option<BestCheckpoint>,
}

impl Trainer {
    pub fn new(run: TrainRun, train: Vec<LabelledVideo>, val: Vec<LabelledVideo>, stats: DatasetStats) -> Result<Self> {
        run.validate()?;
        let net = Network::build(&run.model, run.seed)?;
        let sampler = Self::sampler(&run, train, &val, stats)?;
        Ok(Self::assemble(run, net, Adadelta::default(), sampler, val, stats))
    }

    /// Continues a run from a checkpoint written by [`Trainer::checkpoint`].
    pub fn resume(
        run: TrainRun,
        train: Vec<LabelledVideo>,
        val: Vec<LabelledVideo>,
        stats: DatasetStats,
        last: &Checkpoint,
        best: Option<BestCheckpoint>,
    ) -> Result<Self> {
        run.validate()?;
        if last.config != run.model {
            return Err(Error::Config("checkpoint model does not match the run configuration".into()));
        }
        let mut net = last.to_network()?;
        let n_params = net.params_mut().len();
        let mut opt = Adadelta::default();
        for i in 0..n_params {
            match (last.get(&format!("adadelta.eg2.{i}")), last.get(&format!("adadelta.edx2.{i}"))) {
                (Some(a), Some(b)) => {
                    opt.eg2.push(a.data.clone());
                    opt.edx2.push(b.data.clone());
                }
                (None, None) if i == 0 => break,
                _ => return Err(Error::Format(format!("checkpoint optimizer state is incomplete at tensor {i}"))),
            }
        }
        let meta = |key: &str| -> Result<&str> {
            last.meta.get(key).map(String::as_str).ok_or_else(|| Error::Format(format!("checkpoint lacks {key}")))
        };
        let malformed = |key: &str| Error::Format(format!("checkpoint has a malformed {key}"));
        let step = meta("step")?.parse().map_err(|_| malformed("step"))?;
        let cursors = meta("sampler.cursors")?;
        let state = SamplerState {
            cursors: cursors
                .split(';')
                .filter(|c| !c.is_empty())
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| malformed("sampler.cursors"))?,
            rng_word_pos: meta("sampler.rng_word_pos")?.parse().map_err(|_| malformed("sampler.rng_word_pos"))?,
        };
        let mut sampler = Self::sampler(&run, train, &val, stats)?;
        sampler.restore(&state)?;
        let mut t = Self::assemble(run, net, opt, sampler, val, stats);
        t.step = step;
        t.best = best;
        Ok(t)
    }

    fn sampler(run: &TrainRun, train: Vec<LabelledVideo>, val: &[LabelledVideo], stats: DatasetStats) -> Result<BatchSampler> {
        crate::data::check_dimensions(val.iter().map(|v| &v.clip), &run.model)?;
        BatchSampler::new(train.into(), &run.model, stats, run.augment, run.seed.wrapping_add(1))
    }

    fn assemble(
        run: TrainRun,
        net: Network<f32>,
        opt: Adadelta<f32>,
        sampler: BatchSampler,
        val: Vec<LabelledVideo>,
        stats: DatasetStats,
    ) -> Self {
        let sampler_state = sampler.state();
        let source = if run.prefetch > 0 {
            Source::Prefetch(Prefetcher::spawn(sampler, run.batch_size, run.prefetch))
        } else {
            Source::Inline(sampler)
        };
        Self { run, net, opt, source, sampler_state, val, stats, step: 0, curve: Vec::new(), best: None }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn network(&self) -> &Network<f32> {
        &self.net
    }

    pub fn curve(&self) -> &[LossPoint] {
        &self.curve
    }

    pub fn best(&self) -> Option<&BestCheckpoint> {
        self.best.as_ref()
    }

    /// One forward/backward/update on the next minibatch. Returns the batch loss.
    pub fn train_step(&mut self) -> Result<f64> {
        let batch = match &mut self.source {
            Source::Inline(s) => s.next_batch(self.run.batch_size)?,
            Source::Prefetch(p) => p.next_batch()?,
        };
        self.net.zero_grad();
        let out = self.net.forward(&batch.input, batch.style.as_ref(), Mode::Train)?;
        let (loss, grad) = mse_loss(&out, &batch.target)?;
        let loss = loss as f64;
        if !loss.is_finite() {
            return Err(Error::Diverged(format!("training loss became {loss} at step {}", self.step + 1)));
        }
        self.net.backward(&grad)?;
        self.opt.step(&mut self.net.params_mut())?;
        self.sampler_state = batch.state_after;
        self.step += 1;
        Ok(loss)
    }

    /// Validates, records the point and keeps the checkpoint if it is the best so far.
    fn validate(&mut self, train_loss: f64) -> Result<f64> {
        let val_loss = evaluate_loss(&self.net, &self.val, &self.stats)?;
        info!("step {}: train {train_loss:.5}, validation {val_loss:.5}", self.step);
        if self.best.as_ref().is_none_or(|b| val_loss < b.val_loss) {
            self.best = Some(BestCheckpoint { step: self.step, val_loss, checkpoint: Checkpoint::from_network(&mut self.net) });
        }
        Ok(val_loss)
    }

    /// Trains until the step budget is spent.
    pub fn run(&mut self) -> Result<()> {
        while self.step < self.run.steps {
            let loss = self.train_step()?;
            debug!("step {}: loss {loss:.6}", self.step);
            let val_loss = if self.step.is_multiple_of(self.run.val_every) || self.step == self.run.steps {
                if self.val.is_empty() {
                    None
                } else {
                    Some(self.validate(loss)?)
                }
            } else {
                None
            };
            self.curve.push(LossPoint { step: self.step, train_loss: loss, val_loss });
        }
        if self.best.is_none() {
            // no validation data: the final weights are the result
            self.best = Some(BestCheckpoint { step: self.step, val_loss: f64::NAN, checkpoint: Checkpoint::from_network(&mut self.net) });
        }
        Ok(())
    }

    /// Snapshot of network, optimizer and sampler state for [`Trainer::resume`].
    pub fn checkpoint(&mut self) -> Checkpoint {
        let mut ck = Checkpoint::from_network(&mut self.net);
        for (i, (a, b)) in self.opt.eg2.iter().zip(&self.opt.edx2).enumerate() {
            let len = a.len();
            ck.push(format!("adadelta.eg2.{i}"), &Tensor::new([len], a.clone()).expect("non-empty"));
            ck.push(format!("adadelta.edx2.{i}"), &Tensor::new([len], b.clone()).expect("non-empty"));
        }
        ck.meta.insert("step".into(), self.step.to_string());
        ck.meta.insert("seed".into(), self.run.seed.to_string());
        ck.meta.insert("signal".into(), self.run.signal.to_string());
        let cursors: Vec<String> = self.sampler_state.cursors.iter().map(usize::to_string).collect();
        ck.meta.insert("sampler.cursors".into(), cursors.join(";"));
        ck.meta.insert("sampler.rng_word_pos".into(), self.sampler_state.rng_word_pos.to_string());
        ck
    }

    pub fn into_network(self) -> Network<f32> {
        self.net
    }
}
