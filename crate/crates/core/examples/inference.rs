//! Builds a small convolutional network in code and runs a forward pass.
//!
//!     cargo run --example inference

use dnnfl::model::{Activation, Conv, Dense, Layer, MaxPool, Padding, SequentialModel, Tensor};

fn main() -> Result<(), dnnfl::ShapeError> {
    // Two 2-tap edge detectors over a 6-step, 1-channel signal.
    let conv = Conv {
        filters: 2,
        kernel_size: vec![2],
        strides: vec![1],
        padding: Padding::Same,
        weights: Tensor::new(vec![2, 1, 2], vec![1.0, -1.0, -1.0, 1.0])?,
        bias: vec![0.0, 0.0],
        activation: Activation::Relu,
    };
    let pool = MaxPool {
        pool_size: vec![2],
        strides: vec![2],
    };
    let head = Dense {
        units: 2,
        weights: Tensor::new(
            vec![6, 2],
            vec![
                1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0,
            ],
        )?,
        bias: vec![0.0, 0.0],
        activation: Activation::Softmax,
    };
    let model = SequentialModel::new(
        vec![6, 1],
        vec![
            Layer::Conv1D(conv),
            Layer::MaxPool1D(pool),
            Layer::Flatten,
            Layer::Dense(head),
        ],
    );

    for (i, shape) in model.validate_shapes()?.iter().enumerate() {
        println!("layer {} ({}): {:?}", i + 1, model.layers[i].kind(), shape);
    }
    let rising = Tensor::new(vec![6, 1], vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0])?;
    let prediction = model.forward(&rising)?;
    println!(
        "output {:?}, label {:?}",
        prediction.output.data(),
        prediction.output.argmax()
    );
    Ok(())
}
