use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use dnnfl::executor::ImpactType;
use dnnfl::io::{render_text, ReportFormat};
use dnnfl::mutgen::Catalog;
use dnnfl::pipeline::{describe_mutants, render_mutant_listing, run, AnalysisOptions, RunConfig};
use dnnfl::suspicion::Formula;

const EXIT_INPUT_ERROR: u8 = 2;

#[derive(Clone, Copy, ValueEnum)]
enum FormulaArg {
    Muse,
    MetallaxisSbi,
    MetallaxisOchiai,
}

#[derive(Clone, Copy, ValueEnum)]
enum ImpactArg {
    Type1,
    Type2,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Text,
    Json,
}

/// Rank the layers of a trained sequential network by how suspicious they are,
/// using mutation-based fault localization.
#[derive(Parser)]
#[command(name = "dnnfl", version)]
struct Cli {
    /// Model file
    #[arg(long)]
    model: PathBuf,

    /// Dataset file (required unless --list-mutants)
    #[arg(long, required_unless_present = "list_mutants")]
    data: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "metallaxis-sbi")]
    formula: FormulaArg,

    /// Impact type; defaults to type1 for muse, type2 otherwise
    #[arg(long, value_enum)]
    impact: Option<ImpactArg>,

    /// Regression tolerance
    #[arg(long, default_value_t = 0.001)]
    threshold: f64,

    /// Fraction of the mutant pool to execute, in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    select_fraction: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Worker threads; defaults to available parallelism
    #[arg(long)]
    workers: Option<usize>,

    /// Report file
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "text")]
    out_format: OutFormat,

    /// Also write the execution matrix to this file
    #[arg(long)]
    dump_matrix: Option<PathBuf>,

    /// Number of layers to print
    #[arg(long)]
    top: Option<usize>,

    /// Restrict mutators to halving weights, halving bias and relu/softmax swaps
    #[arg(long)]
    demo_profile: bool,

    /// Print the mutant pool and exit
    #[arg(long)]
    list_mutants: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let catalog = if cli.demo_profile {
        Catalog::Demo
    } else {
        Catalog::Full
    };

    if cli.list_mutants {
        return match describe_mutants(&cli.model, catalog) {
            Ok(pool) => {
                if pool.is_empty() {
                    eprintln!("warning: no mutator applies to this model");
                }
                print!("{}", render_mutant_listing(&pool));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_INPUT_ERROR)
            }
        };
    }

    let mut config = RunConfig::new(cli.model, cli.data.expect("clap enforces --data"));
    config.options = AnalysisOptions {
        formula: match cli.formula {
            FormulaArg::Muse => Formula::Muse,
            FormulaArg::MetallaxisSbi => Formula::MetallaxisSbi,
            FormulaArg::MetallaxisOchiai => Formula::MetallaxisOchiai,
        },
        impact: cli.impact.map(|i| match i {
            ImpactArg::Type1 => ImpactType::Type1,
            ImpactArg::Type2 => ImpactType::Type2,
        }),
        threshold: cli.threshold,
        select_fraction: cli.select_fraction,
        seed: cli.seed,
        catalog,
    };
    config.workers = cli.workers;
    config.out = cli.out;
    config.out_format = match cli.out_format {
        OutFormat::Text => ReportFormat::Text,
        OutFormat::Json => ReportFormat::Json,
    };
    config.dump_matrix = cli.dump_matrix;

    match run(&config) {
        Ok(analysis) => {
            print!("{}", render_text(&analysis.report, cli.top));
            for w in &analysis.report.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(analysis.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT_ERROR)
        }
    }
}
