//! Regression data: the match threshold decides both which points fail and
//! which output changes count as impacts.
//!
//!     cargo run --example regression

use dnnfl::model::{Activation, Dense, Layer, SequentialModel, Tensor};
use dnnfl::pipeline::{analyze, AnalysisOptions};
use dnnfl::splitter::{Dataset, Expected, Task};
use dnnfl::suspicion::Formula;

fn main() -> dnnfl::Result<()> {
    // y = 2x - 1 through a hidden layer, with the output bias slightly off.
    let hidden = Dense {
        units: 2,
        weights: Tensor::new(vec![1, 2], vec![1.0, -1.0])?,
        bias: vec![0.0, 0.0],
        activation: Activation::Relu,
    };
    let out = Dense {
        units: 1,
        weights: Tensor::new(vec![2, 1], vec![2.0, -2.0])?,
        bias: vec![-1.02],
        activation: Activation::Linear,
    };
    let model = SequentialModel::new(vec![1], vec![Layer::Dense(hidden), Layer::Dense(out)]);
    let data = Dataset::new(
        Task::Regression,
        [-1.0, -0.5, 0.0, 0.5, 1.0].map(|x| {
            (
                Tensor::vector(vec![x]),
                Expected::Values(Tensor::vector(vec![2.0 * x - 1.0])),
            )
        }),
    );

    for threshold in [0.001, 0.05] {
        let options = AnalysisOptions {
            formula: Formula::MetallaxisOchiai,
            threshold,
            ..Default::default()
        };
        let analysis = analyze(&model, &data, &options)?;
        let t = &analysis.report.totals;
        print!(
            "threshold {threshold}: {} failing / {} passing",
            t.failing, t.passing
        );
        match analysis.report.top_layer() {
            Some(top) if t.failing > 0 => println!(", top layer {} ({:.3})", top.id, top.score),
            _ => println!(", nothing to localize"),
        }
    }
    Ok(())
}
