//! Mutant pool generation.
//!
//! Every mutator is deterministic: a [`MutantDescriptor`] fully describes
//! its perturbation and carries no random state, so the same model always
//! yields the same pool with the same ids. Descriptors are turned into
//! concrete models lazily with [`materialize`].

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Activation, Layer, LstmGate, SequentialModel, Tensor};

/// Mutator classes, in catalog order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MutatorClass {
    MathWeight,
    MathWeightConv,
    MathActWeight,
    MathLstmInWeight,
    MathLstmForgetWeight,
    MathLstmCellWeight,
    MathLstmOutWeight,
    MathBias,
    DelLayer,
    DupLayer,
    MathConvBias,
    MathLstmInBias,
    MathLstmForgetBias,
    MathLstmCellBias,
    MathLstmOutBias,
    ActFuncRep,
    MathPoolSz,
    MathStrides,
    MathKernelSz,
    MathFilters,
    PaddingRep,
    RecActFuncRep,
}

impl MutatorClass {
    pub const ALL: [MutatorClass; 22] = [
        MutatorClass::MathWeight,
        MutatorClass::MathWeightConv,
        MutatorClass::MathActWeight,
        MutatorClass::MathLstmInWeight,
        MutatorClass::MathLstmForgetWeight,
        MutatorClass::MathLstmCellWeight,
        MutatorClass::MathLstmOutWeight,
        MutatorClass::MathBias,
        MutatorClass::DelLayer,
        MutatorClass::DupLayer,
        MutatorClass::MathConvBias,
        MutatorClass::MathLstmInBias,
        MutatorClass::MathLstmForgetBias,
        MutatorClass::MathLstmCellBias,
        MutatorClass::MathLstmOutBias,
        MutatorClass::ActFuncRep,
        MutatorClass::MathPoolSz,
        MutatorClass::MathStrides,
        MutatorClass::MathKernelSz,
        MutatorClass::MathFilters,
        MutatorClass::PaddingRep,
        MutatorClass::RecActFuncRep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MutatorClass::MathWeight => "MATH_WEIGHT",
            MutatorClass::MathWeightConv => "MATH_WEIGHT_CONV",
            MutatorClass::MathActWeight => "MATH_ACT_WEIGHT",
            MutatorClass::MathLstmInWeight => "MATH_LSTM_IN_WEIGHT",
            MutatorClass::MathLstmForgetWeight => "MATH_LSTM_FORGET_WEIGHT",
            MutatorClass::MathLstmCellWeight => "MATH_LSTM_CELL_WEIGHT",
            MutatorClass::MathLstmOutWeight => "MATH_LSTM_OUT_WEIGHT",
            MutatorClass::MathBias => "MATH_BIAS",
            MutatorClass::DelLayer => "DEL_LAYER",
            MutatorClass::DupLayer => "DUP_LAYER",
            MutatorClass::MathConvBias => "MATH_CONV_BIAS",
            MutatorClass::MathLstmInBias => "MATH_LSTM_IN_BIAS",
            MutatorClass::MathLstmForgetBias => "MATH_LSTM_FORGET_BIAS",
            MutatorClass::MathLstmCellBias => "MATH_LSTM_CELL_BIAS",
            MutatorClass::MathLstmOutBias => "MATH_LSTM_OUT_BIAS",
            MutatorClass::ActFuncRep => "ACT_FUNC_REP",
            MutatorClass::MathPoolSz => "MATH_POOL_SZ",
            MutatorClass::MathStrides => "MATH_STRIDES",
            MutatorClass::MathKernelSz => "MATH_KERNEL_SZ",
            MutatorClass::MathFilters => "MATH_FILTERS",
            MutatorClass::PaddingRep => "PADDING_REP",
            MutatorClass::RecActFuncRep => "REC_ACT_FUNC_REP",
        }
    }

    fn is_arithmetic(self) -> bool {
        self.arithmetic_target().is_some()
    }

    /// Human-readable name of the parameter array an arithmetic class perturbs.
    fn arithmetic_target(self) -> Option<&'static str> {
        Some(match self {
            MutatorClass::MathWeight => "weights",
            MutatorClass::MathWeightConv => "convolution weights",
            MutatorClass::MathActWeight => "recurrent weights",
            MutatorClass::MathLstmInWeight => "input-gate weights",
            MutatorClass::MathLstmForgetWeight => "forget-gate weights",
            MutatorClass::MathLstmCellWeight => "cell-gate weights",
            MutatorClass::MathLstmOutWeight => "output-gate weights",
            MutatorClass::MathBias => "bias",
            MutatorClass::MathConvBias => "convolution bias",
            MutatorClass::MathLstmInBias => "input-gate bias",
            MutatorClass::MathLstmForgetBias => "forget-gate bias",
            MutatorClass::MathLstmCellBias => "cell-gate bias",
            MutatorClass::MathLstmOutBias => "output-gate bias",
            _ => return None,
        })
    }

    fn size_target(self) -> Option<&'static str> {
        Some(match self {
            MutatorClass::MathPoolSz => "pool size",
            MutatorClass::MathStrides => "strides",
            MutatorClass::MathKernelSz => "kernel size",
            MutatorClass::MathFilters => "filters",
            _ => return None,
        })
    }
}

impl fmt::Display for MutatorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Add1,
    Sub1,
    Mul2,
    Div2,
    Inc1,
    Dec1,
    /// New activation for the `*_ACT_FUNC_REP` classes.
    Replace(Activation),
}

impl Operation {
    pub const ARITHMETIC: [Operation; 4] = [
        Operation::Add1,
        Operation::Sub1,
        Operation::Mul2,
        Operation::Div2,
    ];

    pub const SIZE: [Operation; 2] = [Operation::Inc1, Operation::Dec1];

    fn apply_scalar(self, w: f64) -> f64 {
        match self {
            Operation::Add1 => w + 1.0,
            Operation::Sub1 => w - 1.0,
            Operation::Mul2 => w * 2.0,
            Operation::Div2 => w / 2.0,
            _ => w,
        }
    }

    fn apply_size(self, v: usize) -> usize {
        match self {
            Operation::Inc1 => v + 1,
            Operation::Dec1 => v.saturating_sub(1),
            _ => v,
        }
    }

    fn arithmetic_verb(self, target: &str) -> String {
        match self {
            Operation::Add1 => format!("added 1 to {target}"),
            Operation::Sub1 => format!("subtracted 1 from {target}"),
            Operation::Mul2 => format!("doubled {target}"),
            Operation::Div2 => format!("halved {target}"),
            _ => target.to_string(),
        }
    }
}

/// Recipe for one mutant. Ids are dense and 1-based in generation order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantDescriptor {
    pub id: usize,
    pub layer_id: usize,
    /// 1-based neuron within the layer, for per-neuron mutators.
    pub neuron: Option<usize>,
    pub mutator: MutatorClass,
    pub operation: Option<Operation>,
    pub description: String,
}

/// Which mutators to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Catalog {
    /// Every applicable class with every operation.
    #[default]
    Full,
    /// Per neuron of every Dense/SimpleRNN layer: halve weights, halve bias,
    /// swap relu and softmax. Ordered neuron-major, so a two-layer, two-unit
    /// network yields the twelve mutants of the textbook walk-through.
    Demo,
}

/// Outcome of applying a descriptor to a model.
#[derive(Debug, Clone, PartialEq)]
pub enum Mutant {
    Viable(SequentialModel),
    Nonviable { reason: String },
}

impl Mutant {
    pub fn is_viable(&self) -> bool {
        matches!(self, Mutant::Viable(_))
    }

    pub fn into_model(self) -> Option<SequentialModel> {
        match self {
            Mutant::Viable(m) => Some(m),
            Mutant::Nonviable { .. } => None,
        }
    }
}

pub fn generate_mutants(model: &SequentialModel) -> Vec<MutantDescriptor> {
    generate_with(model, Catalog::Full)
}

pub fn generate_with(model: &SequentialModel, catalog: Catalog) -> Vec<MutantDescriptor> {
    let mut pool = Vec::new();
    for (idx, layer) in model.layers.iter().enumerate() {
        let layer_id = idx + 1;
        let mut emit =
            |neuron: Option<usize>, mutator: MutatorClass, operation: Option<Operation>| {
                let description = describe(layer, layer_id, neuron, mutator, operation);
                pool.push(MutantDescriptor {
                    id: pool.len() + 1,
                    layer_id,
                    neuron,
                    mutator,
                    operation,
                    description,
                });
            };
        match catalog {
            Catalog::Full => {
                for class in MutatorClass::ALL {
                    full_catalog_for(layer, class, &mut emit);
                }
            }
            Catalog::Demo => {
                let Some(units) = per_neuron_units(layer) else {
                    continue;
                };
                let current = layer.activation().unwrap_or(Activation::Relu);
                let swap = if current == Activation::Softmax {
                    Activation::Relu
                } else {
                    Activation::Softmax
                };
                for n in 1..=units {
                    emit(Some(n), MutatorClass::MathWeight, Some(Operation::Div2));
                    emit(Some(n), MutatorClass::MathBias, Some(Operation::Div2));
                    emit(
                        Some(n),
                        MutatorClass::ActFuncRep,
                        Some(Operation::Replace(swap)),
                    );
                }
            }
        }
    }
    pool
}

fn per_neuron_units(layer: &Layer) -> Option<usize> {
    match layer {
        Layer::Dense(d) => Some(d.units),
        Layer::SimpleRnn(r) => Some(r.units),
        _ => None,
    }
}

fn full_catalog_for(
    layer: &Layer,
    class: MutatorClass,
    emit: &mut impl FnMut(Option<usize>, MutatorClass, Option<Operation>),
) {
    use MutatorClass as C;
    let arithmetic = |emit: &mut dyn FnMut(Option<usize>, MutatorClass, Option<Operation>),
                      neuron| {
        for op in Operation::ARITHMETIC {
            emit(neuron, class, Some(op));
        }
    };
    let conv = layer.conv();
    let is_lstm = matches!(layer, Layer::Lstm(_));
    match class {
        C::MathWeight | C::MathBias => {
            if let Some(units) = per_neuron_units(layer) {
                for n in 1..=units {
                    arithmetic(emit, Some(n));
                }
            }
        }
        C::MathWeightConv | C::MathConvBias if conv.is_some() => arithmetic(emit, None),
        C::MathActWeight if matches!(layer, Layer::SimpleRnn(_)) => arithmetic(emit, None),
        C::MathLstmInWeight
        | C::MathLstmForgetWeight
        | C::MathLstmCellWeight
        | C::MathLstmOutWeight
        | C::MathLstmInBias
        | C::MathLstmForgetBias
        | C::MathLstmCellBias
        | C::MathLstmOutBias
            if is_lstm =>
        {
            arithmetic(emit, None)
        }
        C::DelLayer | C::DupLayer if matches!(layer, Layer::Dense(_)) => emit(None, class, None),
        C::ActFuncRep => {
            if let Some(current) = layer.activation() {
                for alt in current.alternatives() {
                    emit(None, class, Some(Operation::Replace(alt)));
                }
            }
        }
        C::RecActFuncRep => {
            if let Layer::Lstm(l) = layer {
                for alt in l.recurrent_activation.alternatives() {
                    emit(None, class, Some(Operation::Replace(alt)));
                }
            }
        }
        C::MathPoolSz | C::MathStrides | C::MathKernelSz | C::MathFilters => {
            if let Some(current) = size_parameter(layer, class) {
                for op in Operation::SIZE {
                    // decrements that would leave a zero-sized window are not generated
                    if op == Operation::Dec1 && current.iter().any(|&v| v <= 1) {
                        continue;
                    }
                    emit(None, class, Some(op));
                }
            }
        }
        C::PaddingRep if conv.is_some() => emit(None, class, None),
        _ => {}
    }
}

/// Current value(s) of the hyperparameter a size class adjusts, if the layer has it.
fn size_parameter(layer: &Layer, class: MutatorClass) -> Option<Vec<usize>> {
    match (class, layer) {
        (MutatorClass::MathPoolSz, Layer::MaxPool1D(p) | Layer::MaxPool2D(p)) => {
            Some(p.pool_size.clone())
        }
        (MutatorClass::MathStrides, Layer::MaxPool1D(p) | Layer::MaxPool2D(p)) => {
            Some(p.strides.clone())
        }
        (MutatorClass::MathStrides, Layer::Conv1D(c) | Layer::Conv2D(c)) => Some(c.strides.clone()),
        (MutatorClass::MathKernelSz, Layer::Conv1D(c) | Layer::Conv2D(c)) => {
            Some(c.kernel_size.clone())
        }
        (MutatorClass::MathFilters, Layer::Conv1D(c) | Layer::Conv2D(c)) => Some(vec![c.filters]),
        _ => None,
    }
}

fn describe(
    layer: &Layer,
    layer_id: usize,
    neuron: Option<usize>,
    class: MutatorClass,
    op: Option<Operation>,
) -> String {
    let location = match neuron {
        Some(n) if class != MutatorClass::ActFuncRep => format!("of layer {layer_id}, neuron {n}"),
        _ => format!("of layer {layer_id}"),
    };
    if let (Some(target), Some(op)) = (class.arithmetic_target(), op) {
        return format!("{} {location}", op.arithmetic_verb(target));
    }
    if let (Some(target), Some(op)) = (class.size_target(), op) {
        let verb = if op == Operation::Inc1 {
            "increased"
        } else {
            "decreased"
        };
        return format!("{verb} {target} {location}");
    }
    match (class, op) {
        (MutatorClass::ActFuncRep, Some(Operation::Replace(new))) => {
            let old = layer.activation().map_or("none", Activation::name);
            format!("replaced activation function '{old}' with '{new}' {location}")
        }
        (MutatorClass::RecActFuncRep, Some(Operation::Replace(new))) => {
            let old = match layer {
                Layer::Lstm(l) => l.recurrent_activation.name(),
                _ => "none",
            };
            format!("replaced recurrent activation function '{old}' with '{new}' {location}")
        }
        (MutatorClass::PaddingRep, _) => {
            let old = layer
                .conv()
                .map(|c| c.padding)
                .unwrap_or(crate::model::Padding::Valid);
            format!(
                "replaced padding '{old}' with '{}' {location}",
                old.flipped()
            )
        }
        (MutatorClass::DelLayer, _) => format!("deleted dense layer {layer_id}"),
        (MutatorClass::DupLayer, _) => format!("duplicated dense layer {layer_id}"),
        _ => format!("{class} {location}"),
    }
}

/// Builds the mutant `d` describes. Never fails: structural problems come back as
/// [`Mutant::Nonviable`].
pub fn materialize(model: &SequentialModel, d: &MutantDescriptor) -> Mutant {
    let mut mutated = model.clone();
    if let Err(reason) = apply(&mut mutated, d) {
        return Mutant::Nonviable { reason };
    }
    match mutated.validate_shapes() {
        Ok(_) => Mutant::Viable(mutated),
        Err(e) => Mutant::Nonviable {
            reason: e.to_string(),
        },
    }
}

fn apply(model: &mut SequentialModel, d: &MutantDescriptor) -> Result<(), String> {
    use MutatorClass as C;
    let idx = d
        .layer_id
        .checked_sub(1)
        .filter(|&i| i < model.layers.len())
        .ok_or_else(|| format!("layer {} does not exist", d.layer_id))?;
    let mismatch = || format!("{} does not apply to layer {}", d.mutator, d.layer_id);

    if d.mutator.is_arithmetic() {
        let Some(op) = d.operation else {
            return Err(mismatch());
        };
        let f = |w: f64| op.apply_scalar(w);
        let layer = &mut model.layers[idx];
        return match (d.mutator, layer) {
            (C::MathWeight, Layer::Dense(dense)) => {
                map_column(&mut dense.weights, neuron_index(d, dense.units)?, f);
                Ok(())
            }
            (C::MathWeight, Layer::SimpleRnn(rnn)) => {
                map_column(&mut rnn.input_weights, neuron_index(d, rnn.units)?, f);
                Ok(())
            }
            (C::MathBias, Layer::Dense(dense)) => {
                let n = neuron_index(d, dense.units)?;
                dense.bias[n] = f(dense.bias[n]);
                Ok(())
            }
            (C::MathBias, Layer::SimpleRnn(rnn)) => {
                let n = neuron_index(d, rnn.units)?;
                rnn.bias[n] = f(rnn.bias[n]);
                Ok(())
            }
            (C::MathWeightConv, Layer::Conv1D(c) | Layer::Conv2D(c)) => {
                c.weights.map_inplace(f);
                Ok(())
            }
            (C::MathConvBias, Layer::Conv1D(c) | Layer::Conv2D(c)) => {
                c.bias.iter_mut().for_each(|b| *b = f(*b));
                Ok(())
            }
            (C::MathActWeight, Layer::SimpleRnn(rnn)) => {
                rnn.recurrent_weights.map_inplace(f);
                Ok(())
            }
            (class, Layer::Lstm(lstm)) => {
                let (gate, bias): (&mut LstmGate, bool) = match class {
                    C::MathLstmInWeight => (&mut lstm.input_gate, false),
                    C::MathLstmForgetWeight => (&mut lstm.forget_gate, false),
                    C::MathLstmCellWeight => (&mut lstm.cell_gate, false),
                    C::MathLstmOutWeight => (&mut lstm.output_gate, false),
                    C::MathLstmInBias => (&mut lstm.input_gate, true),
                    C::MathLstmForgetBias => (&mut lstm.forget_gate, true),
                    C::MathLstmCellBias => (&mut lstm.cell_gate, true),
                    C::MathLstmOutBias => (&mut lstm.output_gate, true),
                    _ => return Err(mismatch()),
                };
                if bias {
                    gate.bias.iter_mut().for_each(|b| *b = f(*b));
                } else {
                    gate.input_weights.map_inplace(f);
                }
                Ok(())
            }
            _ => Err(mismatch()),
        };
    }

    match d.mutator {
        C::DelLayer => {
            if !matches!(model.layers[idx], Layer::Dense(_)) {
                return Err(mismatch());
            }
            model.layers.remove(idx);
        }
        C::DupLayer => {
            if !matches!(model.layers[idx], Layer::Dense(_)) {
                return Err(mismatch());
            }
            let copy = model.layers[idx].clone();
            model.layers.insert(idx + 1, copy);
        }
        C::ActFuncRep => {
            let Some(Operation::Replace(new)) = d.operation else {
                return Err(mismatch());
            };
            *model.layers[idx].activation_mut().ok_or_else(mismatch)? = new;
        }
        C::RecActFuncRep => {
            let (Some(Operation::Replace(new)), Layer::Lstm(lstm)) =
                (d.operation, &mut model.layers[idx])
            else {
                return Err(mismatch());
            };
            lstm.recurrent_activation = new;
        }
        C::PaddingRep => {
            let conv = model.layers[idx].conv_mut().ok_or_else(mismatch)?;
            conv.padding = conv.padding.flipped();
        }
        C::MathPoolSz => {
            let op = size_op(d)?;
            let pool = model.layers[idx].pool_mut().ok_or_else(mismatch)?;
            pool.pool_size
                .iter_mut()
                .for_each(|v| *v = op.apply_size(*v));
        }
        C::MathStrides => {
            let op = size_op(d)?;
            let layer = &mut model.layers[idx];
            let strides = match layer {
                Layer::MaxPool1D(p) | Layer::MaxPool2D(p) => &mut p.strides,
                Layer::Conv1D(c) | Layer::Conv2D(c) => &mut c.strides,
                _ => return Err(mismatch()),
            };
            strides.iter_mut().for_each(|v| *v = op.apply_size(*v));
        }
        C::MathKernelSz => {
            let op = size_op(d)?;
            let conv = model.layers[idx].conv_mut().ok_or_else(mismatch)?;
            let rank = conv.kernel_size.len();
            for axis in 0..rank {
                let new_len = op.apply_size(conv.kernel_size[axis]);
                conv.weights = resize_axis(&conv.weights, axis, new_len, Anchor::Center);
                conv.kernel_size[axis] = new_len;
            }
        }
        C::MathFilters => {
            let op = size_op(d)?;
            let conv = model.layers[idx].conv_mut().ok_or_else(mismatch)?;
            let new_filters = op.apply_size(conv.filters);
            let axis = conv.weights.rank() - 1;
            conv.weights = resize_axis(&conv.weights, axis, new_filters, Anchor::Leading);
            conv.bias.resize(new_filters, 0.0);
            conv.filters = new_filters;
        }
        _ => return Err(mismatch()),
    }
    Ok(())
}

fn neuron_index(d: &MutantDescriptor, units: usize) -> Result<usize, String> {
    match d.neuron {
        Some(n) if (1..=units).contains(&n) => Ok(n - 1),
        other => Err(format!("neuron {other:?} out of range for {units} units")),
    }
}

fn size_op(d: &MutantDescriptor) -> Result<Operation, String> {
    match d.operation {
        Some(op @ (Operation::Inc1 | Operation::Dec1)) => Ok(op),
        other => Err(format!("{} needs inc1/dec1, got {other:?}", d.mutator)),
    }
}

/// Applies `f` to column `col` of a `[rows, cols]` matrix.
fn map_column(m: &mut Tensor, col: usize, f: impl Fn(f64) -> f64) {
    let cols = m.shape()[1];
    for row in m.data_mut().chunks_mut(cols) {
        row[col] = f(row[col]);
    }
}

#[derive(Clone, Copy)]
enum Anchor {
    /// Keep the middle when shrinking, pad both sides when growing.
    Center,
    /// Keep the leading entries, pad at the end.
    Leading,
}

/// Crops or zero-pads one axis of `t` to `new_len`.
fn resize_axis(t: &Tensor, axis: usize, new_len: usize, anchor: Anchor) -> Tensor {
    let old_len = t.shape()[axis];
    if new_len == old_len || new_len == 0 {
        return t.clone();
    }
    let offset = match anchor {
        Anchor::Leading => 0,
        Anchor::Center => old_len.abs_diff(new_len) / 2,
    };
    let mut shape = t.shape().to_vec();
    shape[axis] = new_len;
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = Tensor::zeros(shape);
    let src = t.data();
    let dst = out.data_mut();
    for o in 0..outer {
        for j in 0..new_len {
            let source = if new_len < old_len {
                Some(j + offset)
            } else {
                j.checked_sub(offset).filter(|&s| s < old_len)
            };
            if let Some(s) = source {
                let from = (o * old_len + s) * inner;
                let to = (o * new_len + j) * inner;
                dst[to..to + inner].copy_from_slice(&src[from..from + inner]);
            }
        }
    }
    out
}

/// Seeded random subset of `pool` holding `max(ceil(fraction * |pool|), layers)`
/// mutants with at least one per mutated layer, returned in ascending id order.
pub fn select_mutants(
    pool: &[MutantDescriptor],
    fraction: f64,
    seed: u64,
) -> Result<Vec<MutantDescriptor>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    if fraction == 1.0 || pool.is_empty() {
        return Ok(pool.to_vec());
    }
    let mut by_layer: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, d) in pool.iter().enumerate() {
        by_layer.entry(d.layer_id).or_default().push(i);
    }
    // tolerate representation error in fraction * len, e.g. 0.7 * 10
    let wanted = ((fraction * pool.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let target = wanted.max(by_layer.len()).min(pool.len());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(target);
    let mut rest = Vec::with_capacity(pool.len());
    for members in by_layer.values() {
        let pick = rng.gen_range(0..members.len());
        chosen.push(members[pick]);
        rest.extend(
            members
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != pick)
                .map(|(_, &i)| i),
        );
    }
    rest.shuffle(&mut rng);
    chosen.extend(rest.into_iter().take(target - chosen.len()));
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| pool[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Conv, Dense, MaxPool, Padding};

    fn dense(inputs: usize, units: usize, act: Activation) -> Layer {
        Layer::Dense(Dense {
            units,
            weights: Tensor::new(
                vec![inputs, units],
                (0..inputs * units).map(|v| v as f64 * 0.25 - 1.0).collect(),
            )
            .unwrap(),
            bias: (0..units).map(|v| v as f64 + 0.5).collect(),
            activation: act,
        })
    }

    fn conv2d(filters: usize, kernel: usize, channels: usize) -> Layer {
        let shape = vec![kernel, kernel, channels, filters];
        let n = shape.iter().product::<usize>();
        Layer::Conv2D(Conv {
            filters,
            kernel_size: vec![kernel, kernel],
            strides: vec![1, 1],
            padding: Padding::Valid,
            weights: Tensor::new(shape, (0..n).map(|v| v as f64 + 1.0).collect()).unwrap(),
            bias: vec![0.1; filters],
            activation: Activation::Relu,
        })
    }

    #[test]
    fn single_dense_full_catalog_has_23_mutants() {
        let m = SequentialModel::new(vec![3], vec![dense(3, 2, Activation::Relu)]);
        let pool = generate_mutants(&m);
        // 2 neurons x 4 weight ops + 2 neurons x 4 bias ops + 5 activations + DEL + DUP
        assert_eq!(pool.len(), 23);
        assert_eq!(
            pool.iter().map(|d| d.id).collect::<Vec<_>>(),
            (1..=23).collect::<Vec<_>>()
        );
        assert_eq!(pool[0].mutator, MutatorClass::MathWeight);
        assert_eq!(pool[0].neuron, Some(1));
        assert_eq!(pool[0].operation, Some(Operation::Add1));
        assert_eq!(pool[3].operation, Some(Operation::Div2));
        assert_eq!(pool[4].neuron, Some(2));
        assert_eq!(pool[8].mutator, MutatorClass::MathBias);
        assert_eq!(pool[16].mutator, MutatorClass::DelLayer);
        assert_eq!(pool[17].mutator, MutatorClass::DupLayer);
        assert!(pool[18..]
            .iter()
            .all(|d| d.mutator == MutatorClass::ActFuncRep));
    }

    #[test]
    fn flatten_only_model_has_no_mutants() {
        let m = SequentialModel::new(vec![2, 2], vec![Layer::Flatten]);
        assert!(generate_mutants(&m).is_empty());
        assert!(generate_with(&m, Catalog::Demo).is_empty());
    }

    #[test]
    fn descriptor_keys_are_unique() {
        let m = SequentialModel::new(
            vec![5, 5, 2],
            vec![
                conv2d(3, 2, 2),
                Layer::MaxPool2D(MaxPool {
                    pool_size: vec![2, 2],
                    strides: vec![2, 2],
                }),
                Layer::Flatten,
                dense(12, 4, Activation::Relu),
                dense(4, 2, Activation::Softmax),
            ],
        );
        let pool = generate_mutants(&m);
        let mut keys: Vec<_> = pool
            .iter()
            .map(|d| (d.layer_id, d.neuron, d.mutator, d.operation))
            .collect();
        let total = keys.len();
        keys.sort_by_key(|k| format!("{k:?}"));
        keys.dedup();
        assert_eq!(keys.len(), total);
    }

    #[test]
    fn stride_decrement_not_generated_at_one() {
        let m = SequentialModel::new(vec![5, 5, 2], vec![conv2d(3, 2, 2)]);
        let pool = generate_mutants(&m);
        let strides: Vec<_> = pool
            .iter()
            .filter(|d| d.mutator == MutatorClass::MathStrides)
            .collect();
        assert_eq!(strides.len(), 1);
        assert_eq!(strides[0].operation, Some(Operation::Inc1));
    }

    #[test]
    fn demo_profile_follows_neuron_major_order() {
        let m = SequentialModel::new(
            vec![3],
            vec![dense(3, 2, Activation::Relu), dense(2, 2, Activation::Relu)],
        );
        let pool = generate_with(&m, Catalog::Demo);
        assert_eq!(pool.len(), 12);
        let m1 = &pool[0];
        assert_eq!(
            (m1.layer_id, m1.neuron, m1.mutator),
            (1, Some(1), MutatorClass::MathWeight)
        );
        assert_eq!(pool[1].mutator, MutatorClass::MathBias);
        assert_eq!(
            pool[8].description,
            "replaced activation function 'relu' with 'softmax' of layer 2"
        );
        assert_eq!(pool[9].description, "halved weights of layer 2, neuron 2");
        assert_eq!(pool[10].description, "halved bias of layer 2, neuron 2");
    }

    #[test]
    fn halving_weights_touches_one_column() {
        let m = SequentialModel::new(vec![3], vec![dense(3, 2, Activation::Relu)]);
        let pool = generate_with(&m, Catalog::Demo);
        let Mutant::Viable(mutant) = materialize(&m, &pool[0]) else {
            panic!("expected viable");
        };
        let (Layer::Dense(before), Layer::Dense(after)) = (&m.layers[0], &mutant.layers[0]) else {
            unreachable!()
        };
        for i in 0..3 {
            assert_eq!(
                after.weights.data()[i * 2],
                before.weights.data()[i * 2] / 2.0
            );
            assert_eq!(
                after.weights.data()[i * 2 + 1],
                before.weights.data()[i * 2 + 1]
            );
        }
        assert_eq!(after.bias, before.bias);
    }

    #[test]
    fn deleting_a_width_changing_layer_is_nonviable() {
        let m = SequentialModel::new(
            vec![3],
            vec![
                dense(3, 5, Activation::Relu),
                dense(5, 2, Activation::Softmax),
            ],
        );
        let del = generate_mutants(&m)
            .into_iter()
            .find(|d| d.mutator == MutatorClass::DelLayer && d.layer_id == 1)
            .unwrap();
        assert!(!materialize(&m, &del).is_viable());
    }

    #[test]
    fn filter_decrement_crops_trailing_filter() {
        let m = SequentialModel::new(vec![4, 4, 1], vec![conv2d(8, 2, 1), Layer::Flatten]);
        let dec = generate_mutants(&m)
            .into_iter()
            .find(|d| {
                d.mutator == MutatorClass::MathFilters && d.operation == Some(Operation::Dec1)
            })
            .unwrap();
        let mutant = materialize(&m, &dec).into_model().unwrap();
        let (Some(before), Some(after)) = (m.layers[0].conv(), mutant.layers[0].conv()) else {
            unreachable!()
        };
        assert_eq!(after.filters, 7);
        assert_eq!(after.weights.shape(), &[2, 2, 1, 7]);
        assert_eq!(after.bias.len(), 7);
        for (k, chunk) in after.weights.data().chunks(7).enumerate() {
            assert_eq!(chunk, &before.weights.data()[k * 8..k * 8 + 7]);
        }
        assert_eq!(mutant.validate_shapes().unwrap()[1], vec![3 * 3 * 7]);
    }

    #[test]
    fn kernel_growth_centers_old_weights() {
        let t = Tensor::new(vec![3, 1], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            resize_axis(&t, 0, 4, Anchor::Center).data(),
            &[1.0, 2.0, 3.0, 0.0]
        );
        assert_eq!(
            resize_axis(&t, 0, 5, Anchor::Center).data(),
            &[0.0, 1.0, 2.0, 3.0, 0.0]
        );
        assert_eq!(resize_axis(&t, 0, 2, Anchor::Center).data(), &[1.0, 2.0]);
        assert_eq!(resize_axis(&t, 0, 1, Anchor::Center).data(), &[2.0]);
        assert_eq!(resize_axis(&t, 0, 2, Anchor::Leading).data(), &[1.0, 2.0]);
    }

    #[test]
    fn selection_fraction_one_is_identity() {
        let m = SequentialModel::new(vec![3], vec![dense(3, 2, Activation::Relu)]);
        let pool = generate_mutants(&m);
        assert_eq!(select_mutants(&pool, 1.0, 9).unwrap(), pool);
    }

    #[test]
    fn selection_rejects_bad_fractions() {
        for f in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                select_mutants(&[], f, 0),
                Err(Error::InvalidFraction(_))
            ));
        }
    }

    #[test]
    fn selection_size_absorbs_float_error() {
        let m = SequentialModel::new(vec![1], vec![dense(1, 1, Activation::Relu)]);
        let pool: Vec<_> = generate_mutants(&m).into_iter().take(10).collect();
        assert_eq!(select_mutants(&pool, 0.7, 1).unwrap().len(), 7);
    }

    #[test]
    fn materialize_rejects_foreign_descriptor() {
        let m = SequentialModel::new(vec![2, 2], vec![Layer::Flatten]);
        let d = MutantDescriptor {
            id: 1,
            layer_id: 4,
            neuron: None,
            mutator: MutatorClass::DelLayer,
            operation: None,
            description: String::new(),
        };
        assert!(!materialize(&m, &d).is_viable());
    }
}
