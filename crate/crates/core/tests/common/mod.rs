//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use dnnfl::io::parse_model;
use dnnfl::model::{SequentialModel, Tensor};
use dnnfl::splitter::{Dataset, Expected, Task};

pub const ACTIVATIONS: [&str; 6] = ["linear", "relu", "sigmoid", "tanh", "softmax", "elu"];

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Values on a 0.01 grid, never exactly zero, so halving always changes them.
pub fn values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let v = (rng.gen_range(-1.5..1.5f64) * 100.0).round() / 100.0;
            if v == 0.0 {
                0.01
            } else {
                v
            }
        })
        .collect()
}

pub fn matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| values(rng, cols)).collect()
}

fn activation(rng: &mut ChaCha8Rng) -> &'static str {
    ACTIVATIONS[rng.gen_range(0..ACTIVATIONS.len())]
}

fn dense(rng: &mut ChaCha8Rng, inputs: usize, units: usize) -> Value {
    let act = activation(rng);
    json!({"kind": "dense", "units": units, "activation": act,
           "weights": matrix(rng, inputs, units), "bias": values(rng, units)})
}

fn gate(rng: &mut ChaCha8Rng, inputs: usize, units: usize) -> Value {
    json!({"input_weights": matrix(rng, inputs, units),
           "recurrent_weights": matrix(rng, units, units), "bias": values(rng, units)})
}

/// A model file document. `rich` adds 2-d convolution, pooling, dropout,
/// batch normalization and LSTM templates; otherwise at most three layers.
pub fn random_model_doc(rng: &mut ChaCha8Rng, rich: bool) -> Value {
    let templates = if rich { 5 } else { 3 };
    let mut layers = Vec::new();
    let (input_shape, mut width): (Vec<usize>, usize) = match rng.gen_range(0..templates) {
        0 => {
            let n = rng.gen_range(1..=3);
            (vec![n], n)
        }
        1 => {
            let act = activation(rng);
            let weights: Vec<_> = (0..2).map(|_| matrix(rng, 2, 2)).collect();
            layers.push(
                json!({"kind": "conv1d", "filters": 2, "kernel_size": [2], "strides": [1],
                "padding": "valid", "activation": act, "weights": weights, "bias": values(rng, 2)}),
            );
            layers.push(json!({"kind": "flatten"}));
            (vec![4, 2], 6)
        }
        2 => {
            let act = activation(rng);
            layers.push(json!({"kind": "simplernn", "units": 2, "activation": act,
                "input_weights": matrix(rng, 2, 2), "recurrent_weights": matrix(rng, 2, 2),
                "bias": values(rng, 2)}));
            (vec![3, 2], 2)
        }
        3 => {
            let padding = if rng.gen_bool(0.5) { "same" } else { "valid" };
            let act = activation(rng);
            let weights: Vec<_> = (0..3)
                .map(|_| (0..3).map(|_| matrix(rng, 1, 2)).collect::<Vec<_>>())
                .collect();
            layers.push(
                json!({"kind": "conv2d", "filters": 2, "kernel_size": [3, 3], "strides": [1, 1],
                "padding": padding, "activation": act, "weights": weights, "bias": values(rng, 2)}),
            );
            let side = if padding == "same" { 5 } else { 3 };
            layers.push(json!({"kind": "maxpool2d", "pool_size": [2, 2], "strides": [1, 1]}));
            layers.push(json!({"kind": "flatten"}));
            layers.push(json!({"kind": "dropout", "rate": 0.25}));
            (vec![5, 5, 1], (side - 1) * (side - 1) * 2)
        }
        _ => {
            layers.push(json!({"kind": "lstm", "units": 2, "activation": "tanh",
                "recurrent_activation": "sigmoid",
                "input_gate": gate(rng, 3, 2), "forget_gate": gate(rng, 3, 2),
                "cell_gate": gate(rng, 3, 2), "output_gate": gate(rng, 3, 2)}));
            let variance: Vec<f64> = values(rng, 2).iter().map(|v| v.abs() + 0.5).collect();
            layers.push(
                json!({"kind": "batchnorm", "gamma": values(rng, 2), "beta": values(rng, 2),
                "moving_mean": values(rng, 2), "moving_variance": variance, "epsilon": 0.001}),
            );
            (vec![4, 3], 2)
        }
    };
    let n_dense = if layers.is_empty() {
        rng.gen_range(1..=3)
    } else {
        1
    };
    for i in 0..n_dense {
        let units = if i + 1 == n_dense {
            3
        } else {
            rng.gen_range(2..=4)
        };
        layers.push(dense(rng, width, units));
        width = units;
    }
    json!({"format_version": 1, "input_shape": input_shape, "layers": layers})
}

pub fn random_model(rng: &mut ChaCha8Rng, rich: bool) -> SequentialModel {
    let doc = random_model_doc(rng, rich);
    parse_model(&doc.to_string(), Path::new("random.json")).expect("random model is well-formed")
}

pub fn random_input(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let size = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..size).map(|_| rng.gen_range(-2.0..2.0)).collect(),
    )
    .unwrap()
}

/// Classification points with labels below 3, the width of every random model's output.
pub fn random_dataset(rng: &mut ChaCha8Rng, input_shape: &[usize], max_points: usize) -> Dataset {
    let n = rng.gen_range(2..=max_points);
    let points: Vec<_> = (0..n)
        .map(|_| {
            (
                random_input(rng, input_shape),
                Expected::Label(rng.gen_range(0..3)),
            )
        })
        .collect();
    Dataset::new(Task::Classification, points)
}
