//! Localizes the bug in a small two-layer classifier whose last layer uses the
//! wrong activation, with each of the three formulas.
//!
//!     cargo run --example localize

use std::path::Path;

use dnnfl::io::{load_dataset, load_model, render_text};
use dnnfl::mutgen::Catalog;
use dnnfl::pipeline::{analyze, AnalysisOptions};
use dnnfl::suspicion::Formula;

fn main() -> dnnfl::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let model = load_model(fixtures.join("triangle_model.json"))?;
    let data = load_dataset(fixtures.join("triangle_data.json"))?;

    for formula in [
        Formula::Muse,
        Formula::MetallaxisSbi,
        Formula::MetallaxisOchiai,
    ] {
        let options = AnalysisOptions {
            formula,
            catalog: Catalog::Demo,
            ..Default::default()
        };
        let analysis = analyze(&model, &data, &options)?;
        println!("== {formula} ==");
        print!("{}", render_text(&analysis.report, Some(1)));
        println!();
    }
    Ok(())
}
