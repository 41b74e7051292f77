//! Enumerates the mutant pool of a model and summarizes it by mutator class.
//!
//!     cargo run --example list_mutants [model.json]

use std::collections::BTreeMap;
use std::path::PathBuf;

use dnnfl::io::load_model;
use dnnfl::mutgen::{generate_mutants, materialize};

fn main() -> dnnfl::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/shape_break_model.json")
        });
    let model = load_model(&path)?;
    let pool = generate_mutants(&model);

    let mut by_class: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for d in &pool {
        let entry = by_class.entry(d.mutator.to_string()).or_default();
        entry.0 += 1;
        if !materialize(&model, d).is_viable() {
            entry.1 += 1;
        }
    }
    println!("{} mutants for {}", pool.len(), path.display());
    for (class, (n, dead)) in by_class {
        println!("  {class:<24} {n:>4}  ({dead} fail to build)");
    }
    for d in pool.iter().filter(|d| d.neuron.is_none()).take(8) {
        println!("  M{:<4} {}", d.id, d.description);
    }
    Ok(())
}
