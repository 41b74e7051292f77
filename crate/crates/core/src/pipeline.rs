//! End-to-end driver: generate, select, split, execute, score, report.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::executor::{build_matrix, ExecutionMatrix, ImpactType};
use crate::io::{self, ReportFormat};
use crate::model::SequentialModel;
use crate::mutgen::{generate_with, select_mutants, Catalog, MutantDescriptor};
use crate::splitter::{split, Dataset, MatchPolicy, SplitResult, DEFAULT_THRESHOLD};
use crate::suspicion::{localize, Formula, SuspiciousnessReport};

/// Everything that determines an analysis, independent of where inputs live.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub formula: Formula,
    /// `None` picks type 1 for MUSE and type 2 for Metallaxis.
    pub impact: Option<ImpactType>,
    pub threshold: f64,
    pub select_fraction: f64,
    pub seed: u64,
    pub catalog: Catalog,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            formula: Formula::MetallaxisSbi,
            impact: None,
            threshold: DEFAULT_THRESHOLD,
            select_fraction: 1.0,
            seed: 0,
            catalog: Catalog::Full,
        }
    }
}

impl AnalysisOptions {
    pub fn impact(&self) -> Result<ImpactType> {
        match (self.formula, self.impact) {
            (Formula::Muse, Some(ImpactType::Type2)) => Err(Error::Config(
                "MUSE counts verdict flips only; use --impact type1 or a Metallaxis formula".into(),
            )),
            (Formula::Muse, _) => Ok(ImpactType::Type1),
            (_, Some(impact)) => Ok(impact),
            (_, None) => Ok(ImpactType::Type2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.impact()?;
        if !(self.select_fraction > 0.0 && self.select_fraction <= 1.0) {
            return Err(Error::InvalidFraction(self.select_fraction));
        }
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return Err(Error::Config(format!(
                "threshold must be a non-negative number, got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Localized,
    /// The model already passes every test; all scores are 0.
    NoFailingTests,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Localized => 0,
            RunStatus::NoFailingTests => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub status: RunStatus,
    pub mutants: Vec<MutantDescriptor>,
    pub split: SplitResult,
    pub matrix: ExecutionMatrix,
    pub report: SuspiciousnessReport,
}

/// Runs the whole pipeline in memory on the current rayon pool.
pub fn analyze(
    model: &SequentialModel,
    dataset: &Dataset,
    options: &AnalysisOptions,
) -> Result<Analysis> {
    options.validate()?;
    let impact = options.impact()?;
    if dataset.is_empty() {
        return Err(Error::Config("dataset has no points".into()));
    }
    let policy = MatchPolicy {
        task: dataset.task,
        threshold: options.threshold,
    };

    let pool = generate_with(model, options.catalog);
    let mutants = select_mutants(&pool, options.select_fraction, options.seed)?;
    let split = split(model, dataset, &policy)?;
    let matrix = build_matrix(model, &mutants, dataset, &split, &policy, impact);
    let kinds: Vec<&str> = model.layers.iter().map(|l| l.kind()).collect();
    let report = localize(
        &kinds,
        &mutants,
        &matrix,
        &split,
        options.formula,
        options.threshold,
    );
    let status = if split.no_failing_tests() {
        RunStatus::NoFailingTests
    } else {
        RunStatus::Localized
    };
    Ok(Analysis {
        status,
        mutants,
        split,
        matrix,
        report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: PathBuf,
    pub data: PathBuf,
    pub options: AnalysisOptions,
    /// Worker threads for mutant execution; `None` uses available parallelism.
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub out_format: ReportFormat,
    pub dump_matrix: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(model: impl Into<PathBuf>, data: impl Into<PathBuf>) -> Self {
        Self {
            model: model.into(),
            data: data.into(),
            options: AnalysisOptions::default(),
            workers: None,
            out: None,
            out_format: ReportFormat::Text,
            dump_matrix: None,
        }
    }
}

/// Loads inputs, analyzes, and writes the report (and matrix dump, if asked).
///
/// A run without failing tests still writes its all-zero report.
pub fn run(config: &RunConfig) -> Result<Analysis> {
    config.options.validate()?;
    let model = io::load_model(&config.model)?;
    let dataset = io::load_dataset(&config.data)?;

    let analysis = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?
            .install(|| analyze(&model, &dataset, &config.options))?,
        None => analyze(&model, &dataset, &config.options)?,
    };

    if let Some(out) = &config.out {
        io::save_report(&analysis.report, out, config.out_format)?;
    }
    if let Some(path) = &config.dump_matrix {
        io::save_matrix_dump(&analysis.matrix.dump(), path)?;
    }
    Ok(analysis)
}

/// The mutant pool for the model at `path`, without executing anything.
pub fn describe_mutants(
    path: impl Into<PathBuf>,
    catalog: Catalog,
) -> Result<Vec<MutantDescriptor>> {
    let model = io::load_model(path.into())?;
    Ok(generate_with(&model, catalog))
}

/// One line per mutant: `M<id>  layer <id>  <MUTATOR_CLASS>  <description>`.
pub fn render_mutant_listing(pool: &[MutantDescriptor]) -> String {
    pool.iter()
        .map(|d| {
            format!(
                "M{}\tlayer {}\t{}\t{}\n",
                d.id, d.layer_id, d.mutator, d.description
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impact_defaults_follow_formula() {
        let mut o = AnalysisOptions::default();
        assert_eq!(o.impact().unwrap(), ImpactType::Type2);
        o.formula = Formula::Muse;
        assert_eq!(o.impact().unwrap(), ImpactType::Type1);
        o.impact = Some(ImpactType::Type2);
        assert!(matches!(o.impact(), Err(Error::Config(_))));
    }

    #[test]
    fn options_reject_bad_fraction_and_threshold() {
        let o = AnalysisOptions {
            select_fraction: 0.0,
            ..Default::default()
        };
        assert!(matches!(o.validate(), Err(Error::InvalidFraction(_))));
        let o = AnalysisOptions {
            threshold: -1.0,
            ..Default::default()
        };
        assert!(o.validate().is_err());
    }
}
