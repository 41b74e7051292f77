//! Seeded mutant selection: subset size, per-layer floor, and the time saved.
//!
//!     cargo run --release --example selection

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use dnnfl::io::{load_dataset, load_model};
use dnnfl::mutgen::{generate_mutants, select_mutants};
use dnnfl::pipeline::{analyze, AnalysisOptions};

fn main() -> dnnfl::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let model = load_model(fixtures.join("wide_model.json"))?;
    let data = load_dataset(fixtures.join("wide_data.json"))?;
    let pool = generate_mutants(&model);

    for seed in 0..3 {
        let chosen = select_mutants(&pool, 0.25, seed)?;
        let mut per_layer: BTreeMap<usize, usize> = BTreeMap::new();
        for d in &chosen {
            *per_layer.entry(d.layer_id).or_default() += 1;
        }
        println!(
            "seed {seed}: {} of {} mutants, per layer {per_layer:?}",
            chosen.len(),
            pool.len()
        );
    }

    for fraction in [1.0, 0.5, 0.25] {
        let options = AnalysisOptions {
            select_fraction: fraction,
            seed: 1,
            ..Default::default()
        };
        let start = Instant::now();
        let analysis = analyze(&model, &data, &options)?;
        let top = analysis.report.top_layer().map(|l| l.id).unwrap_or(0);
        println!(
            "fraction {fraction:<4}: {:>3} mutants in {:>7.1} ms, top layer {top}",
            analysis.mutants.len(),
            start.elapsed().as_secs_f64() * 1e3
        );
    }
    Ok(())
}
