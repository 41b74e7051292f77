mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_dataset, random_model};
use dnnfl::executor::{build_matrices, evaluate_row, Cell, ImpactType};
use dnnfl::model::{Activation, Dense, Layer, SequentialModel, Tensor};
use dnnfl::mutgen::{generate_mutants, select_mutants, Mutant};
use dnnfl::splitter::{split, Dataset, Expected, MatchPolicy, Task};

const BOTH: [ImpactType; 2] = [ImpactType::Type1, ImpactType::Type2];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rows_are_uniformly_nonviable_or_not(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, true);
        let data = random_dataset(&mut rng, &model.input_shape, 6);
        let policy = MatchPolicy::classification();
        let s = split(&model, &data, &policy).unwrap();
        let mutants = select_mutants(&generate_mutants(&model), 0.3, seed).unwrap();
        for matrix in build_matrices(&model, &mutants, &data, &s, &policy, &BOTH) {
            for r in 0..matrix.rows() {
                let dead = matrix.row(r).iter().filter(|&&c| c == Cell::Nonviable).count();
                prop_assert!(dead == 0 || dead == matrix.cols());
                prop_assert_eq!(matrix.is_nonviable(r), dead > 0);
            }
        }
    }

    #[test]
    fn identity_mutant_impacts_nothing(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, true);
        let data = random_dataset(&mut rng, &model.input_shape, 8);
        let policy = MatchPolicy::classification();
        let s = split(&model, &data, &policy).unwrap();
        let rows = evaluate_row(&model, &Mutant::Viable(model.clone()), &data, &s, &policy, &BOTH);
        for row in rows {
            prop_assert!(row.iter().all(|&c| c == Cell::NotImpacted));
        }
    }
}

#[test]
fn regression_type2_respects_the_threshold() {
    let scale = |w: f64| {
        let dense = Dense {
            units: 1,
            weights: Tensor::new(vec![1, 1], vec![w]).unwrap(),
            bias: vec![0.0],
            activation: Activation::Linear,
        };
        SequentialModel::new(vec![1], vec![Layer::Dense(dense)])
    };
    let model = scale(1.0);
    let data = Dataset::new(
        Task::Regression,
        [0.01, 1.0].map(|x| {
            (
                Tensor::vector(vec![x]),
                Expected::Values(Tensor::vector(vec![x])),
            )
        }),
    );
    let policy = MatchPolicy::regression(0.001);
    let s = split(&model, &data, &policy).unwrap();
    // Scaling by 1.05 moves the first output by 5e-4 and the second by 5e-2.
    let rows = evaluate_row(
        &model,
        &Mutant::Viable(scale(1.05)),
        &data,
        &s,
        &policy,
        &[ImpactType::Type2],
    );
    assert_eq!(rows[0], [Cell::NotImpacted, Cell::Impacted]);
}
