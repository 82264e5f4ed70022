//! A small feed-forward model with a scalar output and exact reverse-mode
//! per-example gradients.
//!
//! The model is a multilayer perceptron: dense layers with the configured
//! activation on every hidden layer and no activation on the (width-1)
//! output. `forward` returns the raw logit; training squashes it through a
//! sigmoid for binary cross-entropy, but gradients of the *logit* are what
//! the kernel machinery consumes.
//!
//! Parameter layout is frozen: layer-major, and within a layer the weight
//! matrix in row-major order (one row per output unit) followed by the
//! biases. All index arithmetic in this crate — masks, gradient slices,
//! update rules — assumes this layout.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Hidden-layer activation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            // Subgradient at exactly 0 is 0, so the derivative test below
            // uses a strict comparison.
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Tanh => z.tanh(),
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Relu => write!(f, "relu"),
            Activation::Tanh => write!(f, "tanh"),
        }
    }
}

/// Architecture description: layer widths (input first, scalar output last)
/// and the hidden activation.
///
/// Parseable from strings of the form `"784-64-32-1:relu"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    widths: Vec<usize>,
    activation: Activation,
}

impl ModelSpec {
    pub fn new(widths: Vec<usize>, activation: Activation) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least 2 layer widths, got {}",
                widths.len()
            )));
        }
        if widths.contains(&0) {
            return Err(Error::InvalidSpec("all layer widths must be >= 1".into()));
        }
        if *widths.last().unwrap() != 1 {
            return Err(Error::InvalidSpec(format!(
                "output width must be 1, got {}",
                widths.last().unwrap()
            )));
        }
        Ok(ModelSpec { widths, activation })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    /// Number of dense layers (one less than the number of widths).
    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// Total parameter count: sum of `(w_in + 1) * w_out` over layers.
    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// Flat index range of each layer's parameters (weights then biases).
    pub fn layer_param_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut ranges = Vec::with_capacity(self.num_layers());
        let mut offset = 0;
        for w in self.widths.windows(2) {
            let len = (w[0] + 1) * w[1];
            ranges.push(offset..offset + len);
            offset += len;
        }
        ranges
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (widths_part, act_part) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidSpec(format!("missing ':<activation>' in {s:?}")))?;
        let widths = widths_part
            .split('-')
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| Error::InvalidSpec(format!("bad width {tok:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let activation = match act_part {
            "relu" => Activation::Relu,
            "tanh" => Activation::Tanh,
            other => {
                return Err(Error::InvalidSpec(format!(
                    "unknown activation {other:?} (expected relu or tanh)"
                )))
            }
        };
        ModelSpec::new(widths, activation)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let widths: Vec<String> = self.widths.iter().map(|w| w.to_string()).collect();
        write!(f, "{}:{}", widths.join("-"), self.activation)
    }
}

/// Flat parameter storage in the frozen layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    /// Validating constructor for externally supplied values.
    pub fn from_values(spec: &ModelSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.param_count() {
            return Err(Error::DimensionMismatch {
                context: "parameter vector",
                expected: spec.param_count(),
                got: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "parameter vector".into(),
            });
        }
        Ok(ParamVector { values })
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        ParamVector { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Gradient of the scalar output with respect to every parameter, for one
/// input. Same length and layout as [`ParamVector`].
#[derive(Debug, Clone, PartialEq)]
pub struct PerExampleGradient {
    values: Vec<f64>,
}

impl PerExampleGradient {
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        PerExampleGradient { values }
    }

    /// Wrap externally produced gradient values; entries must be finite.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "gradient vector".into(),
            });
        }
        Ok(PerExampleGradient { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Boolean parameter restriction, constructed as "the last `k` layers".
///
/// Emulates transfer learning where only appended layers train: updates and
/// kernel gradients are restricted to the masked suffix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamMask {
    included: Vec<bool>,
}

impl ParamMask {
    /// Mask including exactly the final `k` layers' parameters. `k = 0`
    /// includes nothing; `k >= num_layers` includes everything.
    pub fn last_layers(spec: &ModelSpec, k: usize) -> Self {
        let mut included = vec![false; spec.param_count()];
        let ranges = spec.layer_param_ranges();
        let first = ranges.len().saturating_sub(k);
        for range in &ranges[first..] {
            for slot in &mut included[range.clone()] {
                *slot = true;
            }
        }
        ParamMask { included }
    }

    pub fn len(&self) -> usize {
        self.included.len()
    }

    pub fn is_empty(&self) -> bool {
        self.included.is_empty()
    }

    pub fn is_included(&self, index: usize) -> bool {
        self.included[index]
    }

    pub fn included_count(&self) -> usize {
        self.included.iter().filter(|&&b| b).count()
    }

    /// Zero every entry of `values` outside the mask.
    pub fn zero_excluded(&self, values: &mut [f64]) -> Result<()> {
        if values.len() != self.included.len() {
            return Err(Error::DimensionMismatch {
                context: "mask application",
                expected: self.included.len(),
                got: values.len(),
            });
        }
        for (v, &keep) in values.iter_mut().zip(&self.included) {
            if !keep {
                *v = 0.0;
            }
        }
        Ok(())
    }
}

/// Deterministic initialization: weights uniform on
/// `[-1/sqrt(fan_in), +1/sqrt(fan_in)]`, biases zero.
///
/// Draw order is the parameter layout order (weights row-major per layer;
/// bias slots consume no draws), so the result is a pure function of
/// `(spec, seed)`.
pub fn init_params(spec: &ModelSpec, seed: u64) -> ParamVector {
    let mut rng = Stream::new(seed);
    let mut values = Vec::with_capacity(spec.param_count());
    for w in spec.widths.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let bound = 1.0 / (fan_in as f64).sqrt();
        for _ in 0..fan_in * fan_out {
            values.push(rng.uniform(-bound, bound));
        }
        values.resize(values.len() + fan_out, 0.0);
    }
    ParamVector { values }
}

fn check_dims(spec: &ModelSpec, params: &ParamVector, x: &[f64]) -> Result<()> {
    if params.len() != spec.param_count() {
        return Err(Error::DimensionMismatch {
            context: "parameter vector",
            expected: spec.param_count(),
            got: params.len(),
        });
    }
    if x.len() != spec.input_width() {
        return Err(Error::DimensionMismatch {
            context: "input vector",
            expected: spec.input_width(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Pre-activation and post-activation vectors for every layer of one
/// forward pass. `activations[0]` is the input; the last activation is the
/// logit itself (no output nonlinearity).
struct ForwardTrace {
    preacts: Vec<Vec<f64>>,
    activations: Vec<Vec<f64>>,
}

fn forward_trace(spec: &ModelSpec, params: &[f64], x: &[f64]) -> ForwardTrace {
    let num_layers = spec.num_layers();
    let mut preacts = Vec::with_capacity(num_layers);
    let mut activations = Vec::with_capacity(num_layers + 1);
    activations.push(x.to_vec());

    let mut offset = 0;
    for (layer, w) in spec.widths.windows(2).enumerate() {
        let (in_dim, out_dim) = (w[0], w[1]);
        let weights = &params[offset..offset + in_dim * out_dim];
        let biases = &params[offset + in_dim * out_dim..offset + (in_dim + 1) * out_dim];
        offset += (in_dim + 1) * out_dim;

        let input = activations.last().unwrap();
        let mut z = Vec::with_capacity(out_dim);
        for (row, &bias) in weights.chunks_exact(in_dim).zip(biases) {
            let mut sum = bias;
            for (&wv, &xv) in row.iter().zip(input) {
                sum += wv * xv;
            }
            z.push(sum);
        }

        let is_output = layer == num_layers - 1;
        let a = if is_output {
            z.clone()
        } else {
            z.iter().map(|&v| spec.activation.apply(v)).collect()
        };
        preacts.push(z);
        activations.push(a);
    }

    ForwardTrace {
        preacts,
        activations,
    }
}

/// Evaluate the scalar logit.
pub fn forward(spec: &ModelSpec, params: &ParamVector, x: &[f64]) -> Result<f64> {
    check_dims(spec, params, x)?;
    let trace = forward_trace(spec, params.as_slice(), x);
    Ok(trace.activations.last().unwrap()[0])
}

/// Final hidden-layer activation vector (the features the output layer sees).
pub fn final_hidden_activation(
    spec: &ModelSpec,
    params: &ParamVector,
    x: &[f64],
) -> Result<Vec<f64>> {
    check_dims(spec, params, x)?;
    let trace = forward_trace(spec, params.as_slice(), x);
    let n = trace.activations.len();
    Ok(trace.activations[n - 2].clone())
}

/// Reverse pass: adds `scale * d(logit)/d(params)` into `acc` (flat layout).
fn accumulate_logit_gradient(
    spec: &ModelSpec,
    params: &[f64],
    trace: &ForwardTrace,
    scale: f64,
    acc: &mut [f64],
) {
    let num_layers = spec.num_layers();
    let ranges = spec.layer_param_ranges();

    // d(logit)/d(preact of current layer); the output layer has no
    // activation and width 1, so it starts as [scale].
    let mut delta = vec![scale];

    for layer in (0..num_layers).rev() {
        let in_dim = spec.widths[layer];
        let out_dim = spec.widths[layer + 1];
        let input = &trace.activations[layer];
        let range = ranges[layer].clone();
        let (weight_acc, bias_acc) = acc[range.clone()].split_at_mut(in_dim * out_dim);
        let weights = &params[range.start..range.start + in_dim * out_dim];

        let mut input_grad = vec![0.0; in_dim];
        for o in 0..out_dim {
            let d = delta[o];
            bias_acc[o] += d;
            let row = &weights[o * in_dim..(o + 1) * in_dim];
            let acc_row = &mut weight_acc[o * in_dim..(o + 1) * in_dim];
            for i in 0..in_dim {
                acc_row[i] += d * input[i];
                input_grad[i] += row[i] * d;
            }
        }

        if layer > 0 {
            // Chain through the hidden activation that produced `input`.
            let z_prev = &trace.preacts[layer - 1];
            delta = input_grad
                .iter()
                .zip(z_prev)
                .map(|(&g, &z)| g * spec.activation.derivative(z))
                .collect();
        }
    }
}

/// Exact reverse-mode gradient of the logit with respect to every parameter.
pub fn per_example_gradient(
    spec: &ModelSpec,
    params: &ParamVector,
    x: &[f64],
) -> Result<PerExampleGradient> {
    check_dims(spec, params, x)?;
    let trace = forward_trace(spec, params.as_slice(), x);
    let mut values = vec![0.0; spec.param_count()];
    accumulate_logit_gradient(spec, params.as_slice(), &trace, 1.0, &mut values);
    Ok(PerExampleGradient { values })
}

/// Copy of `g` with entries outside `mask` zeroed.
pub fn masked_gradient(g: &PerExampleGradient, mask: &ParamMask) -> Result<PerExampleGradient> {
    if g.len() != mask.len() {
        return Err(Error::DimensionMismatch {
            context: "masked gradient",
            expected: mask.len(),
            got: g.len(),
        });
    }
    let mut values = g.values.clone();
    mask.zero_excluded(&mut values)?;
    Ok(PerExampleGradient { values })
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable binary cross-entropy of `sigmoid(z)` against `y`.
#[inline]
fn bce(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Mean binary cross-entropy of `sigmoid(logit)` over the batch, with its
/// exact gradient: the mean of `(sigmoid(f) - y) * d(f)/d(params)`.
pub fn loss_and_gradient(
    spec: &ModelSpec,
    params: &ParamVector,
    batch: &[(&[f64], u8)],
) -> Result<(f64, ParamVector)> {
    if batch.is_empty() {
        return Err(Error::EmptyInput { context: "batch" });
    }
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; spec.param_count()];
    for &(x, label) in batch {
        check_dims(spec, params, x)?;
        let y = f64::from(label);
        let trace = forward_trace(spec, params.as_slice(), x);
        let logit = trace.activations.last().unwrap()[0];
        loss += bce(logit, y);
        let scale = (sigmoid(logit) - y) / n;
        accumulate_logit_gradient(spec, params.as_slice(), &trace, scale, &mut grad);
    }
    Ok((loss / n, ParamVector { values: grad }))
}
