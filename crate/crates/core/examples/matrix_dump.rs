//! Builds the type-1 and type-2 execution matrices side by side and prints them.
//!
//!     cargo run --example matrix_dump

use std::path::Path;

use dnnfl::executor::{build_matrices, ImpactType};
use dnnfl::io::{load_dataset, load_model};
use dnnfl::mutgen::{generate_with, Catalog};
use dnnfl::splitter::{split, MatchPolicy};

fn main() -> dnnfl::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let model = load_model(fixtures.join("triangle_model.json"))?;
    let data = load_dataset(fixtures.join("triangle_data.json"))?;
    let policy = MatchPolicy::classification();
    let split = split(&model, &data, &policy)?;
    let mutants = generate_with(&model, Catalog::Demo);
    let [type1, type2] = <[_; 2]>::try_from(build_matrices(
        &model,
        &mutants,
        &data,
        &split,
        &policy,
        &[ImpactType::Type1, ImpactType::Type2],
    ))
    .expect("two matrices");

    let header: String = data
        .points
        .iter()
        .map(|p| if split.is_passing(p.id) { 'P' } else { 'F' })
        .collect();
    println!("{:<6} {:<7} {:<7} description", "", "type1", "type2");
    println!("{:<6} {header:<7} {header:<7}", "");
    for (row, d) in mutants.iter().enumerate() {
        let line = |m: &dnnfl::executor::ExecutionMatrix| {
            m.row(row).iter().map(|c| c.symbol()).collect::<String>()
        };
        println!(
            "M{:<5} {:<7} {:<7} {}",
            d.id,
            line(&type1),
            line(&type2),
            d.description
        );
    }
    println!(
        "\n{}",
        serde_json::to_string_pretty(&type1.summary()).unwrap()
    );
    Ok(())
}
