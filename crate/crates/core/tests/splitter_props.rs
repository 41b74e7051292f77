mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_dataset, random_model};
use dnnfl::model::{Activation, Dense, Layer, SequentialModel, Tensor};
use dnnfl::splitter::{outputs_match, split, Dataset, Expected, MatchPolicy, Task};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_ids_in_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, true);
        let data = random_dataset(&mut rng, &model.input_shape, 12);
        let policy = MatchPolicy::classification();
        let s = split(&model, &data, &policy).unwrap();
        prop_assert_eq!(s.passing_ids.len() + s.failing_ids.len(), data.len());
        prop_assert!(s.passing_ids.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.failing_ids.windows(2).all(|w| w[0] < w[1]));
        for p in &data.points {
            let matched = outputs_match(&p.expected, s.original_output(p.id), &policy).unwrap();
            prop_assert_eq!(matched, s.passing_ids.contains(&p.id));
        }
    }

    #[test]
    fn verdicts_follow_points_under_permutation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, false);
        let data = random_dataset(&mut rng, &model.input_shape, 10);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng);
        let shuffled = Dataset::new(
            data.task,
            order.iter().map(|&i| (data.points[i].input.clone(), data.points[i].expected.clone())),
        );
        let policy = MatchPolicy::classification();
        let a = split(&model, &data, &policy).unwrap();
        let b = split(&model, &shuffled, &policy).unwrap();
        for (new_pos, &old_pos) in order.iter().enumerate() {
            prop_assert_eq!(a.is_passing(old_pos + 1), b.is_passing(new_pos + 1));
        }
    }

    #[test]
    fn regression_matches_max_abs_within_threshold(
        xs in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 2), 1..8),
        offsets in prop::collection::vec(prop::collection::vec(-0.01..0.01f64, 2), 8),
        threshold in 0.0..0.01f64,
    ) {
        // Identity network: the output is the input.
        let identity = Dense {
            units: 2,
            weights: Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            bias: vec![0.0; 2],
            activation: Activation::Linear,
        };
        let model = SequentialModel::new(vec![2], vec![Layer::Dense(identity)]);
        let data = Dataset::new(
            Task::Regression,
            xs.iter().zip(&offsets).map(|(x, o)| {
                let target = vec![x[0] + o[0], x[1] + o[1]];
                (Tensor::vector(x.clone()), Expected::Values(Tensor::vector(target)))
            }),
        );
        let s = split(&model, &data, &MatchPolicy::regression(threshold)).unwrap();
        for (i, p) in data.points.iter().enumerate() {
            let Expected::Values(target) = &p.expected else { unreachable!() };
            let worst = p.input.data().iter().zip(target.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert_eq!(s.is_passing(i + 1), worst <= threshold);
        }
    }
}

#[test]
fn nan_output_never_matches() {
    let nan = Tensor::vector(vec![f64::NAN, 1.0]);
    assert!(!outputs_match(&Expected::Label(1), &nan, &MatchPolicy::classification()).unwrap());
    let target = Expected::Values(Tensor::vector(vec![f64::NAN, 1.0]));
    assert!(!outputs_match(&target, &nan, &MatchPolicy::regression(1.0)).unwrap());
}

#[test]
fn ties_go_to_the_lowest_index() {
    let tied = Tensor::vector(vec![0.5, 0.5]);
    let policy = MatchPolicy::classification();
    assert!(outputs_match(&Expected::Label(0), &tied, &policy).unwrap());
    assert!(!outputs_match(&Expected::Label(1), &tied, &policy).unwrap());
}
