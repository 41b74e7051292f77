//! Writes a recurrent model to the JSON model format and reads it back.
//!
//!     cargo run --example save_load

use dnnfl::io::{load_model, model_to_string, save_model};
use dnnfl::model::{Activation, Dense, Layer, SequentialModel, SimpleRnn, Tensor};

fn main() -> dnnfl::Result<()> {
    let rnn = SimpleRnn {
        units: 2,
        input_weights: Tensor::new(vec![1, 2], vec![0.5, -0.25])?,
        recurrent_weights: Tensor::new(vec![2, 2], vec![0.1, 0.0, 0.0, 0.1])?,
        bias: vec![0.0, 1.0 / 3.0],
        activation: Activation::Tanh,
    };
    let head = Dense {
        units: 1,
        weights: Tensor::new(vec![2, 1], vec![1.0, 1.0])?,
        bias: vec![0.0],
        activation: Activation::Sigmoid,
    };
    let model = SequentialModel::new(vec![4, 1], vec![Layer::SimpleRnn(rnn), Layer::Dense(head)]);

    let path = std::env::temp_dir().join(format!("save_load_{}.json", std::process::id()));
    save_model(&model, &path)?;
    let reloaded = load_model(&path)?;
    assert_eq!(reloaded, model);
    assert_eq!(
        model_to_string(&reloaded)?,
        std::fs::read_to_string(&path).unwrap()
    );
    println!("{}", std::fs::read_to_string(&path).unwrap());
    std::fs::remove_file(&path).ok();
    Ok(())
}
