//! Scores a hand-written execution matrix with each formula, without running
//! any model: useful for checking what a given impact pattern means.
//!
//!     cargo run --example formulas

use dnnfl::executor::{Cell, ExecutionMatrix, ImpactType};
use dnnfl::model::Tensor;
use dnnfl::mutgen::{MutantDescriptor, MutatorClass};
use dnnfl::splitter::SplitResult;
use dnnfl::suspicion::{localize, Formula};

fn main() {
    // Tests 1-4 fail, 5-6 pass. '+' impacted, '-' not, 'o' nonviable.
    let rows = [
        (1, "----+-"),
        (1, "----++"),
        (1, "oooooo"),
        (2, "--++-+"),
        (2, "++++--"),
        (2, "--++--"),
    ];
    let mutants: Vec<MutantDescriptor> = rows
        .iter()
        .enumerate()
        .map(|(i, &(layer_id, _))| MutantDescriptor {
            id: i + 1,
            layer_id,
            neuron: None,
            mutator: MutatorClass::MathWeight,
            operation: None,
            description: format!("mutant {}", i + 1),
        })
        .collect();
    let cells = rows
        .iter()
        .map(|(_, r)| {
            r.chars()
                .map(|c| match c {
                    '+' => Cell::Impacted,
                    '-' => Cell::NotImpacted,
                    _ => Cell::Nonviable,
                })
                .collect()
        })
        .collect();
    let matrix = ExecutionMatrix::from_rows(
        ImpactType::Type1,
        (1..=6).collect(),
        (1..=6).collect(),
        cells,
    );
    let passing = vec![false, false, false, false, true, true];
    let split = SplitResult {
        passing_ids: vec![5, 6],
        failing_ids: vec![1, 2, 3, 4],
        original_outputs: vec![Tensor::vector(vec![0.0]); 6],
        passing,
    };

    for formula in [
        Formula::MetallaxisSbi,
        Formula::MetallaxisOchiai,
        Formula::Muse,
    ] {
        let report = localize(
            &["dense", "dense"],
            &mutants,
            &matrix,
            &split,
            formula,
            0.001,
        );
        let ranked: Vec<String> = report
            .layers
            .iter()
            .map(|l| format!("layer {} = {:.4}", l.id, l.score))
            .collect();
        let alpha = report
            .totals
            .alpha
            .map(|a| format!(" (alpha {a:.3})"))
            .unwrap_or_default();
        println!("{:<18} {}{alpha}", formula.to_string(), ranked.join(", "));
    }
}
