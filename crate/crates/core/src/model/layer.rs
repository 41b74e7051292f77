use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Activation, Tensor};
use crate::error::ShapeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    Valid,
    Same,
}

impl Padding {
    pub fn name(self) -> &'static str {
        match self {
            Padding::Valid => "valid",
            Padding::Same => "same",
        }
    }

    pub fn flipped(self) -> Padding {
        match self {
            Padding::Valid => Padding::Same,
            Padding::Same => Padding::Valid,
        }
    }

    /// Output length and leading pad along one spatial axis, or `None` if empty.
    ///
    /// `same` pads symmetrically and puts the odd extra cell on the trailing side.
    fn axis(self, input: usize, kernel: usize, stride: usize) -> Option<(usize, usize)> {
        match self {
            Padding::Valid => {
                if input < kernel {
                    None
                } else {
                    Some(((input - kernel) / stride + 1, 0))
                }
            }
            Padding::Same => {
                let out = input.div_ceil(stride);
                let needed = ((out - 1) * stride + kernel).saturating_sub(input);
                Some((out, needed / 2))
            }
        }
    }
}

impl fmt::Display for Padding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fully connected layer; `weights` is `[inputs, units]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub units: usize,
    pub weights: Tensor,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Convolution over one or two spatial axes, channels last.
///
/// `weights` is `[kernel..., in_channels, filters]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv {
    pub filters: usize,
    pub kernel_size: Vec<usize>,
    pub strides: Vec<usize>,
    pub padding: Padding,
    pub weights: Tensor,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxPool {
    pub pool_size: Vec<usize>,
    pub strides: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub moving_mean: Vec<f64>,
    pub moving_variance: Vec<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimpleRnn {
    pub units: usize,
    /// `[features, units]`
    pub input_weights: Tensor,
    /// `[units, units]`
    pub recurrent_weights: Tensor,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmGate {
    pub input_weights: Tensor,
    pub recurrent_weights: Tensor,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    pub units: usize,
    pub input_gate: LstmGate,
    pub forget_gate: LstmGate,
    pub cell_gate: LstmGate,
    pub output_gate: LstmGate,
    pub activation: Activation,
    pub recurrent_activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Conv1D(Conv),
    Conv2D(Conv),
    MaxPool1D(MaxPool),
    MaxPool2D(MaxPool),
    Flatten,
    Dropout { rate: f64 },
    BatchNorm(BatchNorm),
    SimpleRnn(SimpleRnn),
    Lstm(Lstm),
}

impl Layer {
    /// Lowercase kind name used in model files and reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv1D(_) => "conv1d",
            Layer::Conv2D(_) => "conv2d",
            Layer::MaxPool1D(_) => "maxpool1d",
            Layer::MaxPool2D(_) => "maxpool2d",
            Layer::Flatten => "flatten",
            Layer::Dropout { .. } => "dropout",
            Layer::BatchNorm(_) => "batchnorm",
            Layer::SimpleRnn(_) => "simplernn",
            Layer::Lstm(_) => "lstm",
        }
    }

    pub fn activation(&self) -> Option<Activation> {
        match self {
            Layer::Dense(d) => Some(d.activation),
            Layer::Conv1D(c) | Layer::Conv2D(c) => Some(c.activation),
            Layer::SimpleRnn(r) => Some(r.activation),
            Layer::Lstm(l) => Some(l.activation),
            _ => None,
        }
    }

    pub fn activation_mut(&mut self) -> Option<&mut Activation> {
        match self {
            Layer::Dense(d) => Some(&mut d.activation),
            Layer::Conv1D(c) | Layer::Conv2D(c) => Some(&mut c.activation),
            Layer::SimpleRnn(r) => Some(&mut r.activation),
            Layer::Lstm(l) => Some(&mut l.activation),
            _ => None,
        }
    }

    pub fn conv(&self) -> Option<&Conv> {
        match self {
            Layer::Conv1D(c) | Layer::Conv2D(c) => Some(c),
            _ => None,
        }
    }

    pub fn conv_mut(&mut self) -> Option<&mut Conv> {
        match self {
            Layer::Conv1D(c) | Layer::Conv2D(c) => Some(c),
            _ => None,
        }
    }

    pub fn pool_mut(&mut self) -> Option<&mut MaxPool> {
        match self {
            Layer::MaxPool1D(p) | Layer::MaxPool2D(p) => Some(p),
            _ => None,
        }
    }

    /// Number of stored scalar parameters.
    pub fn parameter_count(&self) -> usize {
        match self {
            Layer::Dense(d) => d.weights.len() + d.bias.len(),
            Layer::Conv1D(c) | Layer::Conv2D(c) => c.weights.len() + c.bias.len(),
            Layer::MaxPool1D(_) | Layer::MaxPool2D(_) | Layer::Flatten | Layer::Dropout { .. } => 0,
            Layer::BatchNorm(b) => 4 * b.gamma.len(),
            Layer::SimpleRnn(r) => r.input_weights.len() + r.recurrent_weights.len() + r.bias.len(),
            Layer::Lstm(l) => l
                .gates()
                .iter()
                .map(|g| g.input_weights.len() + g.recurrent_weights.len() + g.bias.len())
                .sum(),
        }
    }

    /// Shape produced by this layer for `input`, or why the layer cannot accept it.
    pub fn output_shape(&self, id: usize, input: &[usize]) -> Result<Vec<usize>, ShapeError> {
        let err = |reason: String| ShapeError::new(id, reason);
        match self {
            Layer::Dense(d) => {
                let Some(&last) = input.last() else {
                    return Err(err("dense layer needs at least a 1-d input".into()));
                };
                check_matrix(id, "weights", &d.weights, last, d.units)?;
                check_len(id, "bias", &d.bias, d.units)?;
                if d.units == 0 {
                    return Err(err("units must be at least 1".into()));
                }
                let mut out = input.to_vec();
                *out.last_mut().unwrap() = d.units;
                Ok(out)
            }
            Layer::Conv1D(c) => conv_output_shape(id, c, 1, input),
            Layer::Conv2D(c) => conv_output_shape(id, c, 2, input),
            Layer::MaxPool1D(p) => pool_output_shape(id, p, 1, input),
            Layer::MaxPool2D(p) => pool_output_shape(id, p, 2, input),
            Layer::Flatten => Ok(vec![input.iter().product()]),
            Layer::Dropout { rate } => {
                if !(0.0..1.0).contains(rate) {
                    return Err(err(format!("dropout rate {rate} outside [0, 1)")));
                }
                Ok(input.to_vec())
            }
            Layer::BatchNorm(b) => {
                let width = *input.last().unwrap_or(&0);
                for (name, v) in [
                    ("gamma", &b.gamma),
                    ("beta", &b.beta),
                    ("moving_mean", &b.moving_mean),
                    ("moving_variance", &b.moving_variance),
                ] {
                    check_len(id, name, v, width)?;
                }
                Ok(input.to_vec())
            }
            Layer::SimpleRnn(r) => {
                let features = recurrent_features(id, input)?;
                check_matrix(id, "input_weights", &r.input_weights, features, r.units)?;
                check_matrix(
                    id,
                    "recurrent_weights",
                    &r.recurrent_weights,
                    r.units,
                    r.units,
                )?;
                check_len(id, "bias", &r.bias, r.units)?;
                Ok(vec![r.units])
            }
            Layer::Lstm(l) => {
                let features = recurrent_features(id, input)?;
                for (name, g) in ["input", "forget", "cell", "output"].iter().zip(l.gates()) {
                    check_matrix(
                        id,
                        &format!("{name} input_weights"),
                        &g.input_weights,
                        features,
                        l.units,
                    )?;
                    check_matrix(
                        id,
                        &format!("{name} recurrent_weights"),
                        &g.recurrent_weights,
                        l.units,
                        l.units,
                    )?;
                    check_len(id, &format!("{name} bias"), &g.bias, l.units)?;
                }
                Ok(vec![l.units])
            }
        }
    }

    /// Applies the layer at inference time. Callers must have validated the shape chain.
    pub(crate) fn forward(&self, x: &Tensor, out_shape: &[usize]) -> Tensor {
        match self {
            Layer::Dense(d) => dense_forward(d, x, out_shape),
            Layer::Conv1D(c) | Layer::Conv2D(c) => conv_forward(c, x, out_shape),
            Layer::MaxPool1D(p) | Layer::MaxPool2D(p) => pool_forward(p, x, out_shape),
            Layer::Flatten => x.clone().reshaped(out_shape.to_vec()),
            Layer::Dropout { .. } => x.clone(),
            Layer::BatchNorm(b) => batchnorm_forward(b, x),
            Layer::SimpleRnn(r) => rnn_forward(r, x),
            Layer::Lstm(l) => lstm_forward(l, x),
        }
    }
}

impl Lstm {
    pub fn gates(&self) -> [&LstmGate; 4] {
        [
            &self.input_gate,
            &self.forget_gate,
            &self.cell_gate,
            &self.output_gate,
        ]
    }
}

fn check_matrix(
    id: usize,
    name: &str,
    m: &Tensor,
    rows: usize,
    cols: usize,
) -> Result<(), ShapeError> {
    if m.shape() != [rows, cols] {
        return Err(ShapeError::new(
            id,
            format!(
                "{name} has shape {:?}, expected [{rows}, {cols}]",
                m.shape()
            ),
        ));
    }
    Ok(())
}

fn check_len(id: usize, name: &str, v: &[f64], len: usize) -> Result<(), ShapeError> {
    if v.len() != len {
        return Err(ShapeError::new(
            id,
            format!("{name} has length {}, expected {len}", v.len()),
        ));
    }
    Ok(())
}

fn recurrent_features(id: usize, input: &[usize]) -> Result<usize, ShapeError> {
    match input {
        [_, features] => Ok(*features),
        _ => Err(ShapeError::new(
            id,
            format!("recurrent layer needs a [timesteps, features] input, got {input:?}"),
        )),
    }
}

fn check_window(id: usize, what: &str, v: &[usize], rank: usize) -> Result<(), ShapeError> {
    if v.len() != rank {
        return Err(ShapeError::new(
            id,
            format!("{what} must have {rank} entries, got {v:?}"),
        ));
    }
    if v.contains(&0) {
        return Err(ShapeError::new(
            id,
            format!("{what} entries must be at least 1, got {v:?}"),
        ));
    }
    Ok(())
}

fn conv_output_shape(
    id: usize,
    c: &Conv,
    rank: usize,
    input: &[usize],
) -> Result<Vec<usize>, ShapeError> {
    if input.len() != rank + 1 {
        return Err(ShapeError::new(
            id,
            format!("conv{rank}d needs a rank-{} input, got {input:?}", rank + 1),
        ));
    }
    check_window(id, "kernel_size", &c.kernel_size, rank)?;
    check_window(id, "strides", &c.strides, rank)?;
    if c.filters == 0 {
        return Err(ShapeError::new(id, "filters must be at least 1"));
    }
    let channels = input[rank];
    let mut expected = c.kernel_size.clone();
    expected.extend([channels, c.filters]);
    if c.weights.shape() != expected.as_slice() {
        return Err(ShapeError::new(
            id,
            format!(
                "weights have shape {:?}, expected {expected:?}",
                c.weights.shape()
            ),
        ));
    }
    check_len(id, "bias", &c.bias, c.filters)?;
    let mut out = Vec::with_capacity(rank + 1);
    for axis in 0..rank {
        match c
            .padding
            .axis(input[axis], c.kernel_size[axis], c.strides[axis])
        {
            Some((n, _)) => out.push(n),
            None => {
                return Err(ShapeError::new(
                    id,
                    format!(
                        "kernel {} does not fit input length {} with {} padding",
                        c.kernel_size[axis], input[axis], c.padding
                    ),
                ))
            }
        }
    }
    out.push(c.filters);
    Ok(out)
}

fn pool_output_shape(
    id: usize,
    p: &MaxPool,
    rank: usize,
    input: &[usize],
) -> Result<Vec<usize>, ShapeError> {
    if input.len() != rank + 1 {
        return Err(ShapeError::new(
            id,
            format!(
                "maxpool{rank}d needs a rank-{} input, got {input:?}",
                rank + 1
            ),
        ));
    }
    check_window(id, "pool_size", &p.pool_size, rank)?;
    check_window(id, "strides", &p.strides, rank)?;
    let mut out = Vec::with_capacity(rank + 1);
    for axis in 0..rank {
        match Padding::Valid.axis(input[axis], p.pool_size[axis], p.strides[axis]) {
            Some((n, _)) => out.push(n),
            None => {
                return Err(ShapeError::new(
                    id,
                    format!(
                        "pool size {} exceeds input length {}",
                        p.pool_size[axis], input[axis]
                    ),
                ))
            }
        }
    }
    out.push(input[rank]);
    Ok(out)
}

fn dense_forward(d: &Dense, x: &Tensor, out_shape: &[usize]) -> Tensor {
    let inputs = x.last_dim();
    let w = d.weights.data();
    let mut out = Vec::with_capacity(out_shape.iter().product());
    for row in x.data().chunks(inputs) {
        for j in 0..d.units {
            let mut acc = d.bias[j];
            for (i, &xi) in row.iter().enumerate() {
                acc += xi * w[i * d.units + j];
            }
            out.push(acc);
        }
    }
    let mut out = Tensor::vector(out).reshaped(out_shape.to_vec());
    d.activation.apply_inplace(&mut out);
    out
}

/// Row-major iteration over every index of `dims`.
fn for_each_index(dims: &[usize], mut f: impl FnMut(&[usize])) {
    if dims.contains(&0) {
        return;
    }
    let mut idx = vec![0; dims.len()];
    loop {
        f(&idx);
        let mut axis = dims.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < dims[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}

fn conv_forward(c: &Conv, x: &Tensor, out_shape: &[usize]) -> Tensor {
    let rank = c.kernel_size.len();
    let in_shape = x.shape();
    let channels = in_shape[rank];
    let in_strides = x.strides();
    let w = c.weights.data();
    let w_strides = c.weights.strides();
    let pads: Vec<usize> = (0..rank)
        .map(|a| {
            c.padding
                .axis(in_shape[a], c.kernel_size[a], c.strides[a])
                .map(|(_, pad)| pad)
                .unwrap_or(0)
        })
        .collect();

    let mut out = Tensor::zeros(out_shape.to_vec());
    let out_spatial = &out_shape[..rank];
    let mut pos = 0;
    let data = out.data_mut();
    for_each_index(out_spatial, |o| {
        for f in 0..c.filters {
            let mut acc = c.bias[f];
            for_each_index(&c.kernel_size, |k| {
                let mut in_off = 0;
                let mut w_off = 0;
                for a in 0..rank {
                    let p = (o[a] * c.strides[a] + k[a]) as isize - pads[a] as isize;
                    if p < 0 || p as usize >= in_shape[a] {
                        return;
                    }
                    in_off += p as usize * in_strides[a];
                    w_off += k[a] * w_strides[a];
                }
                for ch in 0..channels {
                    acc += x.data()[in_off + ch] * w[w_off + ch * w_strides[rank] + f];
                }
            });
            data[pos + f] = acc;
        }
        pos += c.filters;
    });
    c.activation.apply_inplace(&mut out);
    out
}

fn pool_forward(p: &MaxPool, x: &Tensor, out_shape: &[usize]) -> Tensor {
    let rank = p.pool_size.len();
    let channels = x.shape()[rank];
    let in_strides = x.strides();
    let mut out = Tensor::zeros(out_shape.to_vec());
    let data = out.data_mut();
    let mut pos = 0;
    for_each_index(&out_shape[..rank], |o| {
        for ch in 0..channels {
            let mut best = f64::NEG_INFINITY;
            let mut saw_nan = false;
            for_each_index(&p.pool_size, |k| {
                let off: usize = (0..rank)
                    .map(|a| (o[a] * p.strides[a] + k[a]) * in_strides[a])
                    .sum();
                let v = x.data()[off + ch];
                saw_nan |= v.is_nan();
                best = best.max(v);
            });
            data[pos + ch] = if saw_nan { f64::NAN } else { best };
        }
        pos += channels;
    });
    out
}

fn batchnorm_forward(b: &BatchNorm, x: &Tensor) -> Tensor {
    let width = x.last_dim();
    let mut out = x.clone();
    for row in out.data_mut().chunks_mut(width) {
        for (j, v) in row.iter_mut().enumerate() {
            let norm = (*v - b.moving_mean[j]) / (b.moving_variance[j] + b.epsilon).sqrt();
            *v = b.gamma[j] * norm + b.beta[j];
        }
    }
    out
}

/// `x · W` for a row vector `x` and row-major `[len(x), cols]` matrix.
fn vecmat(x: &[f64], m: &Tensor, acc: &mut [f64]) {
    let cols = acc.len();
    let w = m.data();
    for (i, &xi) in x.iter().enumerate() {
        let row = &w[i * cols..(i + 1) * cols];
        for (a, &wij) in acc.iter_mut().zip(row) {
            *a += xi * wij;
        }
    }
}

fn rnn_forward(r: &SimpleRnn, x: &Tensor) -> Tensor {
    let features = x.shape()[1];
    let mut h = vec![0.0; r.units];
    for step in x.data().chunks(features) {
        let mut next = r.bias.clone();
        vecmat(step, &r.input_weights, &mut next);
        vecmat(&h, &r.recurrent_weights, &mut next);
        let mut next = Tensor::vector(next);
        r.activation.apply_inplace(&mut next);
        h = next.into_data();
    }
    Tensor::vector(h)
}

fn lstm_forward(l: &Lstm, x: &Tensor) -> Tensor {
    let features = x.shape()[1];
    let mut h = vec![0.0; l.units];
    let mut c = vec![0.0; l.units];
    let pre = |g: &LstmGate, step: &[f64], h: &[f64]| {
        let mut z = g.bias.clone();
        vecmat(step, &g.input_weights, &mut z);
        vecmat(h, &g.recurrent_weights, &mut z);
        Tensor::vector(z)
    };
    for step in x.data().chunks(features) {
        let i = l.recurrent_activation.apply(&pre(&l.input_gate, step, &h));
        let f = l.recurrent_activation.apply(&pre(&l.forget_gate, step, &h));
        let g = l.activation.apply(&pre(&l.cell_gate, step, &h));
        let o = l.recurrent_activation.apply(&pre(&l.output_gate, step, &h));
        for u in 0..l.units {
            c[u] = f.data()[u] * c[u] + i.data()[u] * g.data()[u];
        }
        let act_c = l.activation.apply(&Tensor::vector(c.clone()));
        for u in 0..l.units {
            h[u] = o.data()[u] * act_c.data()[u];
        }
    }
    Tensor::vector(h)
}
