mod common;

use std::path::Path;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_dataset, random_model};
use dnnfl::io::{
    dataset_to_string, load_dataset, load_model, model_to_string, parse_dataset, parse_model,
    save_model,
};
use dnnfl::model::{Layer, Tensor};
use dnnfl::splitter::{Dataset, Expected, Task};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_save_load_save_is_byte_identical(seed in any::<u64>(), jitter in -1e3..1e3f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = random_model(&mut rng, true);
        // Values off the 0.01 grid need all 17 digits to survive.
        if let Some(Layer::Dense(d)) = model.layers.last_mut() {
            d.bias[0] = jitter / 3.0;
        }
        let first = model_to_string(&model).unwrap();
        let reloaded = parse_model(&first, Path::new("m.json")).unwrap();
        prop_assert_eq!(&reloaded, &model);
        prop_assert_eq!(model_to_string(&reloaded).unwrap(), first);
    }

    #[test]
    fn dataset_round_trip_keeps_ids_and_values(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let classes = random_dataset(&mut rng, &[2, 3], 12);
        let text = dataset_to_string(&classes, Some(3)).unwrap();
        let back = parse_dataset(&text, Path::new("d.json")).unwrap();
        prop_assert_eq!(&back, &classes);
        prop_assert_eq!(dataset_to_string(&back, Some(3)).unwrap(), text);

        let n = rng.gen_range(1..6);
        let regression = Dataset::new(
            Task::Regression,
            (0..n).map(|_| {
                let x: f64 = rng.gen_range(-5.0..5.0);
                (Tensor::vector(vec![x]), Expected::Values(Tensor::vector(vec![x / 7.0, x * x])))
            }),
        );
        let text = dataset_to_string(&regression, None).unwrap();
        let back = parse_dataset(&text, Path::new("d.json")).unwrap();
        prop_assert_eq!(&back, &regression);
        for (i, p) in back.points.iter().enumerate() {
            prop_assert_eq!(p.id, i + 1);
        }
    }
}

#[test]
fn one_hot_and_integer_labels_agree() {
    let text = |expected: &str| {
        format!(
            r#"{{"format_version": 1, "task": "classification",
                "points": [{{"input": [0.0], "expected": {expected}}}]}}"#
        )
    };
    let a = parse_dataset(&text("2"), Path::new("a.json")).unwrap();
    let b = parse_dataset(&text("[0, 0, 1]"), Path::new("b.json")).unwrap();
    assert_eq!(a.points[0].expected, Expected::Label(2));
    assert_eq!(a.points[0].expected, b.points[0].expected);
}

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let model = load_model(common::fixture("wide_model.json")).unwrap();
    save_model(&model, &path).unwrap();
    assert_eq!(load_model(&path).unwrap(), model);
    let data = load_dataset(common::fixture("triangle_data.json")).unwrap();
    assert_eq!(data.len(), 6);
    assert_eq!(data.points[5].id, 6);
}
