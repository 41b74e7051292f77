use std::fmt;

use serde::{Deserialize, Serialize};

use super::Tensor;

/// Activation functions understood by the inference engine.
///
/// Names are lowercase on the wire; any other casing is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
    Tanh,
    Softmax,
    Elu,
}

impl Activation {
    /// Catalog order; replacement mutators enumerate alternatives in this order.
    pub const ALL: [Activation; 6] = [
        Activation::Linear,
        Activation::Relu,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Softmax,
        Activation::Elu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Linear => "linear",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Softmax => "softmax",
            Activation::Elu => "elu",
        }
    }

    /// The five activations other than `self`, in catalog order.
    pub fn alternatives(self) -> impl Iterator<Item = Activation> {
        Self::ALL.into_iter().filter(move |&a| a != self)
    }

    /// Scalar form. Softmax has no scalar form and is handled by [`Activation::apply`].
    pub(crate) fn scalar(self, x: f64) -> f64 {
        match self {
            Activation::Linear | Activation::Softmax => x,
            Activation::Relu => {
                if x > 0.0 || x.is_nan() {
                    x
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
        }
    }

    /// Applies the activation. Softmax normalizes over the last axis.
    pub fn apply(self, x: &Tensor) -> Tensor {
        let mut out = x.clone();
        self.apply_inplace(&mut out);
        out
    }

    pub(crate) fn apply_inplace(self, x: &mut Tensor) {
        match self {
            Activation::Linear => {}
            Activation::Softmax => {
                let width = x.last_dim();
                for row in x.data_mut().chunks_mut(width) {
                    softmax_inplace(row);
                }
            }
            other => x.map_inplace(|v| other.scalar(v)),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax_inplace(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}
