//! The regression CNN: blocks of (conv → BN → ELU) ×2 + max pool, a flatten,
//! an optional style gate, hidden fully connected layers (linear → BN → ELU)
//! and a linear head with `k` outputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, TemporalMode, STYLE_COUNT};
use crate::error::{Error, Result};
use crate::tensor::{
    self, batch_norm, batch_norm_backward, batch_norm_inference, elementwise_mul, elementwise_mul_backward, elu,
    elu_backward, he_init_with, BatchNormCache, BatchNormParams, LayerParams, Mode, PoolIndices, Scalar, Tensor,
};

/// Whether a named tensor is trained or only tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorRole {
    Param,
    Buffer,
}

#[derive(Debug, Clone)]
enum Layer<T: Scalar> {
    Conv { params: LayerParams<T>, three_d: bool, input: Option<Tensor<T>> },
    Norm { params: BatchNormParams<T>, cache: Option<BatchNormCache<T>> },
    Elu { cache: Option<(Tensor<T>, Tensor<T>)> },
    Pool { three_d: bool, indices: Option<PoolIndices> },
    Dense { params: LayerParams<T>, input: Option<Tensor<T>> },
}

impl<T: Scalar> Layer<T> {
    fn forward(&mut self, x: Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        match self {
            Layer::Conv { params, three_d, input } => {
                let y = if *three_d { tensor::conv3d(&x, params)? } else { tensor::conv2d(&x, params)? };
                *input = Some(x);
                Ok(y)
            }
            Layer::Norm { params, cache } => {
                let (y, c) = batch_norm(&x, params, mode)?;
                *cache = Some(c);
                Ok(y)
            }
            Layer::Elu { cache } => {
                let y = elu(&x);
                *cache = Some((x, y.clone()));
                Ok(y)
            }
            Layer::Pool { three_d, indices } => {
                let (y, idx) = if *three_d { tensor::maxpool3d(&x)? } else { tensor::maxpool2d(&x)? };
                *indices = Some(idx);
                Ok(y)
            }
            Layer::Dense { params, input } => {
                let y = tensor::linear(&x, params)?;
                *input = Some(x);
                Ok(y)
            }
        }
    }

    fn infer(&self, x: Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Layer::Conv { params, three_d: true, .. } => tensor::conv3d(&x, params),
            Layer::Conv { params, .. } => tensor::conv2d(&x, params),
            Layer::Norm { params, .. } => batch_norm_inference(&x, params),
            Layer::Elu { .. } => Ok(elu(&x)),
            Layer::Pool { three_d: true, .. } => Ok(tensor::maxpool3d(&x)?.0),
            Layer::Pool { .. } => Ok(tensor::maxpool2d(&x)?.0),
            Layer::Dense { params, .. } => tensor::linear(&x, params),
        }
    }

    fn backward(&mut self, dy: Tensor<T>) -> Result<Tensor<T>> {
        let missing = || Error::InvalidArgument("backward called before forward".into());
        match self {
            Layer::Conv { params, three_d, input } => {
                let x = input.take().ok_or_else(missing)?;
                if *three_d {
                    tensor::conv3d_backward(&x, params, &dy)
                } else {
                    tensor::conv2d_backward(&x, params, &dy)
                }
            }
            Layer::Norm { params, cache } => batch_norm_backward(&cache.take().ok_or_else(missing)?, params, &dy),
            Layer::Elu { cache } => {
                let (x, y) = cache.take().ok_or_else(missing)?;
                elu_backward(&x, &y, &dy)
            }
            Layer::Pool { indices, .. } => tensor::maxpool_backward(&indices.take().ok_or_else(missing)?, &dy),
            Layer::Dense { params, input } => tensor::linear_backward(&input.take().ok_or_else(missing)?, params, &dy),
        }
    }

    fn visit(&mut self, prefix: &str, f: &mut dyn FnMut(String, TensorRole, &mut Tensor<T>)) {
        match self {
            Layer::Conv { params, .. } | Layer::Dense { params, .. } => {
                f(format!("{prefix}.weight"), TensorRole::Param, &mut params.weight);
                f(format!("{prefix}.bias"), TensorRole::Param, &mut params.bias);
            }
            Layer::Norm { params, .. } => {
                f(format!("{prefix}.gamma"), TensorRole::Param, &mut params.gamma);
                f(format!("{prefix}.beta"), TensorRole::Param, &mut params.beta);
                f(format!("{prefix}.running_mean"), TensorRole::Buffer, &mut params.running_mean);
                f(format!("{prefix}.running_var"), TensorRole::Buffer, &mut params.running_var);
            }
            Layer::Elu { .. } | Layer::Pool { .. } => {}
        }
    }
}

fn dense<T: Scalar>(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Result<LayerParams<T>> {
    LayerParams::new(he_init_with(&[outputs, inputs], inputs, rng)?, Tensor::zeros([outputs]))
}

/// Style gate intermediates kept for the backward pass.
#[derive(Debug, Clone)]
struct GateCache<T> {
    features: Tensor<T>,
    gate: Tensor<T>,
    style: Tensor<T>,
}

#[derive(Debug, Clone)]
pub struct Network<T: Scalar = f32> {
    config: ModelConfig,
    conv: Vec<Layer<T>>,
    gate: Option<LayerParams<T>>,
    fc: Vec<Layer<T>>,
    head: LayerParams<T>,
    conv_out_shape: Vec<usize>,
    flat_features: usize,
    gate_cache: Option<GateCache<T>>,
    head_input: Option<Tensor<T>>,
}

impl<T: Scalar> Network<T> {
    /// Builds and He-initialises a network; identical `(config, seed)` give
    /// identical parameters.
    pub fn build(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let three_d = config.temporal_mode == TemporalMode::Conv3D;
        let kernel_volume = if three_d { 27 } else { 9 };
        let mut conv = Vec::new();
        let mut channels = config.input_channels();
        let (mut t, mut h, mut w) = (config.window_len(), config.input_h, config.input_w);
        for &maps in &config.blocks {
            for _ in 0..2 {
                let shape: Vec<usize> = if three_d { vec![maps, channels, 3, 3, 3] } else { vec![maps, channels, 3, 3] };
                let weight = he_init_with(&shape, channels * kernel_volume, &mut rng)?;
                conv.push(Layer::Conv { params: LayerParams::new(weight, Tensor::zeros([maps]))?, three_d, input: None });
                conv.push(Layer::Norm { params: BatchNormParams::new(maps), cache: None });
                conv.push(Layer::Elu { cache: None });
                channels = maps;
            }
            conv.push(Layer::Pool { three_d, indices: None });
            if three_d {
                t = tensor::pool::pooled_temporal(t);
            }
            h = tensor::pool::pooled_spatial(h);
            w = tensor::pool::pooled_spatial(w);
        }
        let conv_out_shape = if three_d { vec![channels, t, h, w] } else { vec![channels, h, w] };
        let flat_features: usize = conv_out_shape.iter().product();

        let gate = if config.needs_style_input() {
            let mut g = dense(STYLE_COUNT, flat_features, &mut rng)?;
            g.bias.data_mut().iter_mut().for_each(|b| *b = T::one());
            Some(g)
        } else {
            None
        };

        let mut fc = Vec::new();
        let mut width = flat_features;
        for &units in &config.fc_widths {
            fc.push(Layer::Dense { params: dense(width, units, &mut rng)?, input: None });
            fc.push(Layer::Norm { params: BatchNormParams::new(units), cache: None });
            fc.push(Layer::Elu { cache: None });
            width = units;
        }
        let head = dense(width, config.k(), &mut rng)?;
        Ok(Self {
            config: config.clone(),
            conv,
            gate,
            fc,
            head,
            conv_out_shape,
            flat_features,
            gate_cache: None,
            head_input: None,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Width of the flattened convolutional output.
    pub fn flat_features(&self) -> usize {
        self.flat_features
    }

    fn check_inputs(&self, input: &Tensor<T>, style: Option<&Tensor<T>>) -> Result<usize> {
        let n = input.shape().first().copied().unwrap_or(0);
        input.expect_shape("network input", &self.config.input_shape(n))?;
        match (self.config.needs_style_input(), style) {
            (true, Some(s)) => s.expect_shape("style input", &[n, STYLE_COUNT])?,
            (true, None) => return Err(Error::InvalidArgument("style-as-input model needs a style vector".into())),
            (false, Some(_)) => {
                return Err(Error::InvalidArgument(format!("{} model takes no style input", self.config.style_mode)))
            }
            (false, None) => {}
        }
        Ok(n)
    }

    /// Forward pass that records what [`Network::backward`] needs. In
    /// [`Mode::Train`] batch norm uses batch statistics and updates its
    /// running estimates.
    pub fn forward(&mut self, input: &Tensor<T>, style: Option<&Tensor<T>>, mode: Mode) -> Result<Tensor<T>> {
        let n = self.check_inputs(input, style)?;
        let mut x = input.clone();
        x.clear_grad();
        for layer in &mut self.conv {
            x = layer.forward(x, mode)?;
        }
        let mut x = x.reshape([n, self.flat_features])?;
        if let Some(gate_params) = &self.gate {
            let s = style.expect("checked above").clone();
            let g = tensor::linear(&s, gate_params)?;
            let gated = elementwise_mul(&x, &g)?;
            self.gate_cache = Some(GateCache { features: x, gate: g, style: s });
            x = gated;
        }
        for layer in &mut self.fc {
            x = layer.forward(x, mode)?;
        }
        let y = tensor::linear(&x, &self.head)?;
        self.head_input = Some(x);
        Ok(y)
    }

    /// Eval-mode forward pass that leaves the network untouched.
    pub fn predict(&self, input: &Tensor<T>, style: Option<&Tensor<T>>) -> Result<Tensor<T>> {
        let n = self.check_inputs(input, style)?;
        let mut x = input.clone();
        x.clear_grad();
        for layer in &self.conv {
            x = layer.infer(x)?;
        }
        let mut x = x.reshape([n, self.flat_features])?;
        if let Some(gate_params) = &self.gate {
            let g = tensor::linear(style.expect("checked above"), gate_params)?;
            x = elementwise_mul(&x, &g)?;
        }
        for layer in &self.fc {
            x = layer.infer(x)?;
        }
        tensor::linear(&x, &self.head)
    }

    /// Back-propagates `grad_out` (shape `[N, k]`) from the last
    /// [`Network::forward`], accumulating parameter gradients. Returns the
    /// gradient with respect to the input.
    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let head_input = self
            .head_input
            .take()
            .ok_or_else(|| Error::InvalidArgument("backward called before forward".into()))?;
        let mut g = tensor::linear_backward(&head_input, &mut self.head, grad_out)?;
        for layer in self.fc.iter_mut().rev() {
            g = layer.backward(g)?;
        }
        if let Some(gate_params) = self.gate.as_mut() {
            let cache = self.gate_cache.take().ok_or_else(|| Error::InvalidArgument("missing gate cache".into()))?;
            let (d_features, d_gate) = elementwise_mul_backward(&cache.features, &cache.gate, &g)?;
            tensor::linear_backward(&cache.style, gate_params, &d_gate)?;
            g = d_features;
        }
        let n = g.shape()[0];
        let mut shape = vec![n];
        shape.extend_from_slice(&self.conv_out_shape);
        let mut g = g.reshape(shape)?;
        for layer in self.conv.iter_mut().rev() {
            g = layer.backward(g)?;
        }
        Ok(g)
    }

    /// Visits every named tensor in a fixed order.
    pub fn visit_tensors(&mut self, mut f: impl FnMut(String, TensorRole, &mut Tensor<T>)) {
        for (i, layer) in self.conv.iter_mut().enumerate() {
            layer.visit(&format!("conv.{i}"), &mut f);
        }
        if let Some(g) = self.gate.as_mut() {
            f("gate.weight".into(), TensorRole::Param, &mut g.weight);
            f("gate.bias".into(), TensorRole::Param, &mut g.bias);
        }
        for (i, layer) in self.fc.iter_mut().enumerate() {
            layer.visit(&format!("fc.{i}"), &mut f);
        }
        f("head.weight".into(), TensorRole::Param, &mut self.head.weight);
        f("head.bias".into(), TensorRole::Param, &mut self.head.bias);
    }

    /// Learnable parameters in visiting order.
    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for layer in &mut self.conv {
            push_params(layer, &mut out);
        }
        if let Some(g) = self.gate.as_mut() {
            out.push(&mut g.weight);
            out.push(&mut g.bias);
        }
        for layer in &mut self.fc {
            push_params(layer, &mut out);
        }
        out.push(&mut self.head.weight);
        out.push(&mut self.head.bias);
        out
    }

    /// `(name, role, shape)` for every tensor, in visiting order.
    pub fn manifest(&mut self) -> Vec<(String, TensorRole, Vec<usize>)> {
        let mut out = Vec::new();
        self.visit_tensors(|name, role, t| out.push((name, role, t.shape().to_vec())));
        out
    }

    pub fn param_count(&mut self) -> usize {
        self.params_mut().iter().map(|t| t.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(|t| t.zero_grad());
    }

    /// Whether batch norm running statistics exist, i.e. eval mode is usable.
    pub fn has_running_stats(&self) -> bool {
        self.conv.iter().chain(&self.fc).all(|l| match l {
            Layer::Norm { params, .. } => params.observed,
            _ => true,
        })
    }

    /// Marks batch norm running statistics as valid (after loading them).
    pub(crate) fn mark_stats_observed(&mut self) {
        for layer in self.conv.iter_mut().chain(self.fc.iter_mut()) {
            if let Layer::Norm { params, .. } = layer {
                params.observed = true;
            }
        }
    }

    /// Direct access to the first convolution, for tests and tooling.
    pub fn first_conv_mut(&mut self) -> &mut LayerParams<T> {
        match &mut self.conv[0] {
            Layer::Conv { params, .. } => params,
            _ => unreachable!("first layer is always a convolution"),
        }
    }

    pub fn gate_mut(&mut self) -> Option<&mut LayerParams<T>> {
        self.gate.as_mut()
    }

    /// Copies parameter values (not buffers) from a network of another precision.
    pub fn load_from<U: Scalar>(&mut self, other: &mut Network<U>) -> Result<()> {
        let mut values: Vec<(String, Vec<f64>)> = Vec::new();
        other.visit_tensors(|name, _, t| values.push((name, t.data().iter().map(|v| v.to_f64().unwrap()).collect())));
        let mut iter = values.into_iter();
        let mut err = None;
        self.visit_tensors(|name, _, t| match iter.next() {
            Some((n, v)) if n == name && v.len() == t.len() => {
                t.data_mut().iter_mut().zip(v).for_each(|(d, s)| *d = T::from_f64_lossy(s));
            }
            _ => err = Some(Error::Shape(format!("tensor {name} does not match"))),
        });
        if other.has_running_stats() {
            self.mark_stats_observed();
        }
        err.map_or(Ok(()), Err)
    }
}

fn push_params<'a, T: Scalar>(layer: &'a mut Layer<T>, out: &mut Vec<&'a mut Tensor<T>>) {
    match layer {
        Layer::Conv { params, .. } | Layer::Dense { params, .. } => {
            out.push(&mut params.weight);
            out.push(&mut params.bias);
        }
        Layer::Norm { params, .. } => {
            out.push(&mut params.gamma);
            out.push(&mut params.beta);
        }
        Layer::Elu { .. } | Layer::Pool { .. } => {}
    }
}

/// Regression target for the multi-class head: `u · s`.
pub fn multiclass_target(u: f64, style: &StyleVector) -> [f64; STYLE_COUNT] {
    let mut out = [0.0; STYLE_COUNT];
    out[style.index()] = u;
    out
}

/// One-hot vector over the four swimming styles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StyleVector(usize);

impl StyleVector {
    pub fn new(index: usize) -> Result<Self> {
        if index >= STYLE_COUNT {
            return Err(Error::InvalidArgument(format!("style index {index} out of range")));
        }
        Ok(Self(index))
    }

    pub fn from_style(style: crate::labels::Style) -> Result<Self> {
        style
            .index()
            .map(Self)
            .ok_or_else(|| Error::InvalidArgument(format!("style {style} has no one-hot slot")))
    }

    pub fn index(&self) -> usize {
        self.0
    }

    pub fn to_array(&self) -> [f64; STYLE_COUNT] {
        multiclass_target(1.0, self)
    }
}

/// Style whose output channel has the largest sum over a video (first
/// index wins ties).
pub fn infer_style<T: Scalar>(outputs: &[[T; STYLE_COUNT]]) -> Result<usize> {
    if outputs.is_empty() {
        return Err(Error::Empty("style inference needs at least one output".into()));
    }
    let mut sums = [0.0f64; STYLE_COUNT];
    for row in outputs {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v.to_f64().unwrap();
        }
    }
    let mut best = 0;
    for i in 1..STYLE_COUNT {
        if sums[i] > sums[best] {
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StyleMode;
    use crate::tensor::{grad_check, mse_loss, GRAD_CHECK_EPS};
    use rand::Rng;

    fn tiny(temporal: TemporalMode, style: StyleMode, w: usize) -> ModelConfig {
        ModelConfig {
            temporal_mode: temporal,
            style_mode: style,
            window_half_width: w,
            frame_skip: 1,
            input_h: 6,
            input_w: 5,
            blocks: vec![2],
            fc_widths: vec![3],
        }
    }

    fn random_input(cfg: &ModelConfig, n: usize, seed: u64) -> Tensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_fn(cfg.input_shape(n), |_| rng.random_range(-1.0..1.0))
    }

    fn styles(n: usize) -> Tensor<f64> {
        Tensor::from_fn([n, 4], |i| if i % 4 == (i / 4) % 4 { 1.0 } else { 0.0 })
    }

    /// Closed-form parameter count from the shape algebra of the layers.
    fn expected_params(cfg: &ModelConfig) -> usize {
        let three_d = cfg.temporal_mode == TemporalMode::Conv3D;
        let kv = if three_d { 27 } else { 9 };
        let mut total = 0;
        let mut c = cfg.input_channels();
        let (mut t, mut h, mut w) = (cfg.window_len(), cfg.input_h, cfg.input_w);
        for &m in &cfg.blocks {
            total += m * c * kv + m + 2 * m;
            total += m * m * kv + m + 2 * m;
            c = m;
            h = h.div_ceil(2);
            w = w.div_ceil(2);
            if three_d && t > 3 {
                t -= 2;
            }
        }
        let mut width = c * h * w * if three_d { t } else { 1 };
        if cfg.style_mode == StyleMode::StyleAsInput {
            total += 4 * width + width;
        }
        for &u in &cfg.fc_widths {
            total += width * u + u + 2 * u;
            width = u;
        }
        total + width * cfg.k() + cfg.k()
    }

    #[test]
    fn parameter_count_matches_closed_form() {
        let cfg = ModelConfig {
            temporal_mode: TemporalMode::SingleFrame,
            style_mode: StyleMode::AllStyles,
            window_half_width: 0,
            frame_skip: 1,
            input_h: 128,
            input_w: 48,
            blocks: vec![16, 32],
            fc_widths: vec![64],
        };
        let mut net = Network::<f32>::build(&cfg, 0).unwrap();
        // 448+32 + 2320+32 + 4640+64 + 9248+64 + (32·32·12·64+64)+128 + 65
        assert_eq!(net.param_count(), 803_537);
        assert_eq!(net.param_count(), expected_params(&cfg));
        assert_eq!(net.flat_features(), 32 * 32 * 12);
        for cfg in [
            tiny(TemporalMode::Conv3D, StyleMode::StyleAsInput, 2),
            tiny(TemporalMode::EarlyFusion, StyleMode::MultiClass, 3),
        ] {
            assert_eq!(Network::<f32>::build(&cfg, 1).unwrap().param_count(), expected_params(&cfg));
        }
    }

    #[test]
    fn default_config_flattens_to_16_by_6() {
        let cfg = ModelConfig { input_h: 128, input_w: 48, ..Default::default() };
        let net = Network::<f32>::build(&cfg, 0).unwrap();
        assert_eq!(net.flat_features(), 128 * 16 * 6);
    }

    #[test]
    fn same_seed_same_parameters() {
        let cfg = tiny(TemporalMode::EarlyFusion, StyleMode::StyleAsInput, 1);
        let mut a = Network::<f32>::build(&cfg, 42).unwrap();
        let mut b = Network::<f32>::build(&cfg, 42).unwrap();
        let mut c = Network::<f32>::build(&cfg, 43).unwrap();
        let collect = |n: &mut Network<f32>| n.params_mut().iter().flat_map(|t| t.data().to_vec()).collect::<Vec<_>>();
        assert_eq!(collect(&mut a), collect(&mut b));
        assert_ne!(collect(&mut a), collect(&mut c));
    }

    #[test]
    fn conv3d_first_kernel_spans_window() {
        let cfg = tiny(TemporalMode::Conv3D, StyleMode::AllStyles, 5);
        let mut net = Network::<f32>::build(&cfg, 0).unwrap();
        assert_eq!(net.first_conv_mut().weight.shape(), &[2, 3, 3, 3, 3]);
        assert_eq!(cfg.input_shape(1)[2], 11);
        let x = Tensor::zeros(cfg.input_shape(2));
        let y = net.forward(&x, None, Mode::Train).unwrap();
        assert_eq!(y.shape(), &[2, 1]);
    }

    #[test]
    fn parameter_ordering_across_temporal_modes() {
        let base = |m, w| ModelConfig { input_h: 16, input_w: 16, blocks: vec![4, 8], fc_widths: vec![8], ..tiny(m, StyleMode::AllStyles, w) };
        let sf = Network::<f32>::build(&base(TemporalMode::SingleFrame, 0), 0).unwrap().param_count();
        let ef = Network::<f32>::build(&base(TemporalMode::EarlyFusion, 2), 0).unwrap().param_count();
        let c3 = Network::<f32>::build(&base(TemporalMode::Conv3D, 2), 0).unwrap().param_count();
        assert!(c3 > ef && ef > sf, "{c3} {ef} {sf}");
    }

    #[test]
    fn style_input_is_checked() {
        let cfg = tiny(TemporalMode::SingleFrame, StyleMode::StyleAsInput, 0);
        let mut net = Network::<f64>::build(&cfg, 0).unwrap();
        let x = random_input(&cfg, 2, 0);
        assert!(net.forward(&x, None, Mode::Train).is_err());
        assert!(net.forward(&x, Some(&styles(2)), Mode::Train).is_ok());
        let plain = tiny(TemporalMode::SingleFrame, StyleMode::AllStyles, 0);
        let mut net = Network::<f64>::build(&plain, 0).unwrap();
        assert!(net.forward(&x, Some(&styles(2)), Mode::Train).is_err());
        assert!(net.forward(&Tensor::zeros([2, 3, 5, 5]), None, Mode::Train).is_err());
    }

    #[test]
    fn eval_before_training_needs_running_stats() {
        let cfg = tiny(TemporalMode::SingleFrame, StyleMode::AllStyles, 0);
        let net = Network::<f32>::build(&cfg, 0).unwrap();
        assert!(matches!(net.predict(&Tensor::zeros(cfg.input_shape(1)), None), Err(Error::MissingRunningStats)));
    }

    #[test]
    fn all_ones_gate_equals_ungated_network() {
        let gated_cfg = tiny(TemporalMode::EarlyFusion, StyleMode::StyleAsInput, 1);
        let plain_cfg = ModelConfig { style_mode: StyleMode::AllStyles, ..gated_cfg.clone() };
        let mut gated = Network::<f32>::build(&gated_cfg, 7).unwrap();
        let mut plain = Network::<f32>::build(&plain_cfg, 7).unwrap();
        {
            let g = gated.gate_mut().unwrap();
            g.weight.data_mut().iter_mut().for_each(|v| *v = 0.0);
            g.bias.data_mut().iter_mut().for_each(|v| *v = 1.0);
        }
        // copy every non-gate tensor across
        let mut values = Vec::new();
        plain.visit_tensors(|name, _, t| values.push((name, t.data().to_vec())));
        gated.visit_tensors(|name, _, t| {
            if let Some((_, v)) = values.iter().find(|(n, _)| *n == name) {
                t.data_mut().copy_from_slice(v);
            }
        });
        let x = random_input(&gated_cfg, 3, 5).cast::<f32>();
        let s = styles(3).cast::<f32>();
        let a = gated.forward(&x, Some(&s), Mode::Train).unwrap();
        let b = plain.forward(&x, None, Mode::Train).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(gated.predict(&x, Some(&s)).unwrap().data(), plain.predict(&x, None).unwrap().data());
    }

    #[test]
    fn zero_input_propagates_to_zero() {
        for (m, s, w) in [
            (TemporalMode::SingleFrame, StyleMode::AllStyles, 0),
            (TemporalMode::EarlyFusion, StyleMode::MultiClass, 2),
            (TemporalMode::Conv3D, StyleMode::StyleAsInput, 1),
        ] {
            let cfg = tiny(m, s, w);
            let mut net = Network::<f64>::build(&cfg, 3).unwrap();
            let x = Tensor::zeros(cfg.input_shape(2));
            let st = styles(2);
            let style = cfg.needs_style_input().then_some(&st);
            let y = net.forward(&x, style, Mode::Train).unwrap();
            assert!(y.data().iter().all(|&v| v == 0.0));
            assert!(net.predict(&x, style).unwrap().data().iter().all(|&v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn early_fusion_of_identical_frames_matches_summed_kernel() {
        let ef_cfg = tiny(TemporalMode::EarlyFusion, StyleMode::AllStyles, 5);
        let sf_cfg = tiny(TemporalMode::SingleFrame, StyleMode::AllStyles, 0);
        let mut ef = Network::<f64>::build(&ef_cfg, 11).unwrap();
        let mut sf = Network::<f64>::build(&sf_cfg, 11).unwrap();
        // same downstream parameters, first kernel summed over the 11 frames
        let mut values = Vec::new();
        ef.visit_tensors(|name, _, t| values.push((name, t.data().to_vec())));
        sf.visit_tensors(|name, _, t| {
            if name == "conv.0.weight" {
                return;
            }
            let (_, v) = values.iter().find(|(n, _)| *n == name).unwrap();
            t.data_mut().copy_from_slice(v);
        });
        let ef_w = ef.first_conv_mut().weight.clone();
        let sf_w = &mut sf.first_conv_mut().weight;
        let maps = sf_w.shape()[0];
        for m in 0..maps {
            for c in 0..3 {
                for k in 0..9 {
                    let sum: f64 = (0..11).map(|j| ef_w.data()[((m * 33) + j * 3 + c) * 9 + k]).sum();
                    sf_w.data_mut()[(m * 3 + c) * 9 + k] = sum;
                }
            }
        }
        let frame = random_input(&sf_cfg, 2, 9);
        let plane = 3 * 30;
        let stacked = Tensor::from_fn(ef_cfg.input_shape(2), |i| {
            let n = i / (11 * plane);
            frame.data()[n * plane + (i % plane)]
        });
        let a = ef.forward(&stacked, None, Mode::Train).unwrap();
        let b = sf.forward(&frame, None, Mode::Train).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    fn end_to_end_check(cfg: &ModelConfig) -> f64 {
        let mut net = Network::<f64>::build(cfg, 21).unwrap();
        let n = 4;
        let x = random_input(cfg, n, 22);
        let st = styles(n);
        let style = cfg.needs_style_input().then_some(&st);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let target = Tensor::from_fn([n, cfg.k()], |_| rng.random_range(0.0..1.0));

        let y = net.forward(&x, style, Mode::Train).unwrap();
        let (_, dy) = mse_loss(&y, &target).unwrap();
        net.zero_grad();
        let dx = net.backward(&dy).unwrap();

        let mut point = x.data().to_vec();
        let mut analytic = dx.data().to_vec();
        for p in net.params_mut() {
            point.extend_from_slice(p.data());
            analytic.extend_from_slice(p.grad().unwrap());
        }
        let nx = x.len();
        let probe = net.clone();
        grad_check(
            |v| {
                let mut m = probe.clone();
                let mut off = nx;
                for p in m.params_mut() {
                    let len = p.len();
                    p.data_mut().copy_from_slice(&v[off..off + len]);
                    off += len;
                }
                let xx = Tensor::new(x.shape().to_vec(), v[..nx].to_vec()).unwrap();
                let out = m.forward(&xx, style, Mode::Train).unwrap();
                mse_loss(&out, &target).unwrap().0
            },
            &point,
            &analytic,
            GRAD_CHECK_EPS,
        )
    }

    #[test]
    fn end_to_end_gradients_match_finite_differences() {
        for cfg in [
            tiny(TemporalMode::SingleFrame, StyleMode::AllStyles, 0),
            tiny(TemporalMode::EarlyFusion, StyleMode::StyleAsInput, 1),
            tiny(TemporalMode::Conv3D, StyleMode::MultiClass, 1),
        ] {
            let err = end_to_end_check(&cfg);
            assert!(err < 1e-3, "{:?}: {err}", cfg.temporal_mode);
        }
    }

    #[test]
    fn multiclass_targets() {
        let s = StyleVector::new(2).unwrap();
        assert_eq!(multiclass_target(0.8, &s), [0.0, 0.0, 0.8, 0.0]);
        assert_eq!(multiclass_target(0.0, &s), [0.0; 4]);
        assert_eq!(multiclass_target(1.0, &StyleVector::new(0).unwrap()), [1.0, 0.0, 0.0, 0.0]);
        assert!(StyleVector::new(4).is_err());
        assert!(StyleVector::from_style(crate::labels::Style::None).is_err());
    }

    #[test]
    fn style_inference() {
        assert_eq!(infer_style(&[[0.0f32, 0.0, 0.9, 0.0]; 5]).unwrap(), 2);
        assert_eq!(infer_style(&[[5.0f64, 4.9, 0.0, 0.0]]).unwrap(), 0);
        assert_eq!(infer_style(&[[1.0f64, 1.0, 0.0, 1.0]]).unwrap(), 0);
        assert!(infer_style::<f32>(&[]).is_err());
    }
}
