//! Layer suspiciousness from an execution matrix.
//!
//! Metallaxis scores a layer by its most suspicious mutant, using either the
//! SBI or the Ochiai kernel. MUSE averages, over all of a layer's mutants,
//! the fraction of failing points a mutant flips minus an alpha-weighted
//! fraction of passing points it flips.
//!
//! Degenerate evidence scores 0: a zero denominator in any kernel, an
//! empty layer, or a layer whose mutants are all nonviable.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::executor::{Cell, ExecutionMatrix, ImpactType, MatrixSummary};
use crate::mutgen::MutantDescriptor;
use crate::splitter::SplitResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    #[serde(rename = "muse")]
    Muse,
    #[serde(rename = "metallaxis-sbi")]
    MetallaxisSbi,
    #[serde(rename = "metallaxis-ochiai")]
    MetallaxisOchiai,
}

impl Formula {
    pub fn name(self) -> &'static str {
        match self {
            Formula::Muse => "muse",
            Formula::MetallaxisSbi => "metallaxis-sbi",
            Formula::MetallaxisOchiai => "metallaxis-ochiai",
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formula {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "muse" => Ok(Formula::Muse),
            "metallaxis-sbi" => Ok(Formula::MetallaxisSbi),
            "metallaxis-ochiai" => Ok(Formula::MetallaxisOchiai),
            other => Err(format!("unknown formula '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Sbi,
    Ochiai,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MutantStats {
    pub mutant_id: usize,
    pub layer_id: usize,
    pub n_fail_impacted: usize,
    pub n_pass_impacted: usize,
    pub nonviable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerScore {
    pub layer_id: usize,
    pub score: f64,
    /// `(mutant id, score)`, highest score first, ties by ascending id.
    pub mutant_scores: Vec<(usize, f64)>,
}

/// Per-mutant impact counts, in matrix row order.
pub fn mutant_stats(
    mutants: &[MutantDescriptor],
    matrix: &ExecutionMatrix,
    split: &SplitResult,
) -> Vec<MutantStats> {
    assert_eq!(mutants.len(), matrix.rows(), "one matrix row per mutant");
    mutants
        .iter()
        .enumerate()
        .map(|(row, d)| {
            let mut stats = MutantStats {
                mutant_id: d.id,
                layer_id: d.layer_id,
                n_fail_impacted: 0,
                n_pass_impacted: 0,
                nonviable: matrix.is_nonviable(row),
            };
            for (col, &test) in matrix.test_ids.iter().enumerate() {
                if matrix.cell(row, col) == Cell::Impacted {
                    if split.is_passing(test) {
                        stats.n_pass_impacted += 1;
                    } else {
                        stats.n_fail_impacted += 1;
                    }
                }
            }
            stats
        })
        .collect()
}

pub fn sbi_mutant(n_fail_impacted: usize, n_pass_impacted: usize) -> f64 {
    let denom = n_fail_impacted + n_pass_impacted;
    if denom == 0 {
        return 0.0;
    }
    n_fail_impacted as f64 / denom as f64
}

pub fn ochiai_mutant(n_fail_impacted: usize, n_pass_impacted: usize, total_failing: usize) -> f64 {
    let denom = ((n_fail_impacted + n_pass_impacted) * total_failing) as f64;
    if denom == 0.0 {
        return 0.0;
    }
    n_fail_impacted as f64 / denom.sqrt()
}

fn kernel_score(s: &MutantStats, kernel: Kernel, total_failing: usize) -> f64 {
    if s.nonviable {
        return 0.0;
    }
    match kernel {
        Kernel::Sbi => sbi_mutant(s.n_fail_impacted, s.n_pass_impacted),
        Kernel::Ochiai => ochiai_mutant(s.n_fail_impacted, s.n_pass_impacted, total_failing),
    }
}

fn by_score_then_id(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

fn sorted(mut scores: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    scores.sort_by(by_score_then_id);
    scores
}

/// Metallaxis layer score: the best mutant score among viable mutants.
pub fn metallaxis_layer(
    layer_id: usize,
    stats: &[MutantStats],
    kernel: Kernel,
    total_failing: usize,
) -> LayerScore {
    debug_assert!(stats.iter().all(|s| s.layer_id == layer_id));
    let mutant_scores: Vec<(usize, f64)> = stats
        .iter()
        .map(|s| (s.mutant_id, kernel_score(s, kernel, total_failing)))
        .collect();
    let score = stats
        .iter()
        .zip(&mutant_scores)
        .filter(|(s, _)| !s.nonviable)
        .map(|(_, &(_, v))| v)
        .fold(0.0, f64::max);
    LayerScore {
        layer_id,
        score,
        mutant_scores: sorted(mutant_scores),
    }
}

/// Counts of failing points turned passing and passing points turned failing by
/// at least one mutant anywhere in a type-1 matrix.
pub fn flip_counts(matrix: &ExecutionMatrix, split: &SplitResult) -> (usize, usize) {
    let mut fail_to_pass = 0;
    let mut pass_to_fail = 0;
    for (col, &test) in matrix.test_ids.iter().enumerate() {
        if (0..matrix.rows()).any(|row| matrix.cell(row, col) == Cell::Impacted) {
            if split.is_passing(test) {
                pass_to_fail += 1;
            } else {
                fail_to_pass += 1;
            }
        }
    }
    (fail_to_pass, pass_to_fail)
}

/// Balancing constant `(|F->P| / |T_f|) * (|T_p| / |P->F|)`, or 0 where undefined.
pub fn muse_alpha(
    n_fail_to_pass: usize,
    n_pass_to_fail: usize,
    total_failing: usize,
    total_passing: usize,
) -> f64 {
    if n_pass_to_fail == 0 || total_failing == 0 {
        return 0.0;
    }
    (n_fail_to_pass as f64 / total_failing as f64) * (total_passing as f64 / n_pass_to_fail as f64)
}

fn ratio(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        n as f64 / total as f64
    }
}

fn muse_term(s: &MutantStats, alpha: f64, total_failing: usize, total_passing: usize) -> f64 {
    if s.nonviable {
        return 0.0;
    }
    ratio(s.n_fail_impacted, total_failing) - alpha * ratio(s.n_pass_impacted, total_passing)
}

/// MUSE layer score. Nonviable mutants count towards the layer's mutant total
/// but contribute nothing to the sum.
pub fn muse_layer(
    layer_id: usize,
    stats: &[MutantStats],
    alpha: f64,
    total_failing: usize,
    total_passing: usize,
) -> LayerScore {
    debug_assert!(stats.iter().all(|s| s.layer_id == layer_id));
    let mutant_scores: Vec<(usize, f64)> = stats
        .iter()
        .map(|s| {
            (
                s.mutant_id,
                muse_term(s, alpha, total_failing, total_passing),
            )
        })
        .collect();
    let score = if stats.iter().all(|s| s.nonviable) {
        0.0
    } else {
        mutant_scores.iter().map(|&(_, v)| v).sum::<f64>() / stats.len() as f64
    };
    LayerScore {
        layer_id,
        score,
        mutant_scores: sorted(mutant_scores),
    }
}

/// Orders layers by descending score, ties by ascending layer id.
pub fn rank(mut layer_scores: Vec<LayerScore>) -> Vec<LayerScore> {
    layer_scores.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.layer_id.cmp(&b.layer_id))
    });
    layer_scores
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutantEntry {
    pub id: usize,
    pub description: String,
    pub score: f64,
    pub n_fail_impacted: usize,
    pub n_pass_impacted: usize,
    pub nonviable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub id: usize,
    pub kind: String,
    pub score: f64,
    pub mutants: Vec<MutantEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    #[serde(rename = "T_f")]
    pub failing: usize,
    #[serde(rename = "T_p")]
    pub passing: usize,
    pub mutants: usize,
    pub nonviable: usize,
    /// MUSE only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
    /// Set when alpha was undefined (no passing point ever failed) and forced to 0.
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub alpha_guarded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspiciousnessReport {
    pub formula: Formula,
    pub impact_type: ImpactType,
    pub threshold: f64,
    pub layers: Vec<LayerEntry>,
    pub totals: Totals,
    pub matrix: MatrixSummary,
    pub warnings: Vec<String>,
}

impl SuspiciousnessReport {
    pub fn top_layer(&self) -> Option<&LayerEntry> {
        self.layers.first()
    }

    pub fn layer(&self, id: usize) -> Option<&LayerEntry> {
        self.layers.iter().find(|l| l.id == id)
    }
}

pub const WARN_NO_FAILING: &str = "no failing tests: every layer scores 0";
pub const WARN_EMPTY_POOL: &str = "no mutants were generated: every layer scores 0";
pub const WARN_ALPHA_GUARD: &str = "no mutant broke a passing test: MUSE alpha set to 0";

/// Scores and ranks every layer of the model.
///
/// `layer_kinds[i]` names layer `i + 1`; layers without mutants score 0.
pub fn localize(
    layer_kinds: &[&str],
    mutants: &[MutantDescriptor],
    matrix: &ExecutionMatrix,
    split: &SplitResult,
    formula: Formula,
    threshold: f64,
) -> SuspiciousnessReport {
    let stats = mutant_stats(mutants, matrix, split);
    let total_failing = split.failing_ids.len();
    let total_passing = split.passing_ids.len();

    let mut by_layer: BTreeMap<usize, Vec<MutantStats>> =
        (1..=layer_kinds.len()).map(|id| (id, Vec::new())).collect();
    for s in &stats {
        by_layer.entry(s.layer_id).or_default().push(*s);
    }

    let mut warnings = Vec::new();
    if split.no_failing_tests() {
        warnings.push(WARN_NO_FAILING.to_string());
    }
    if mutants.is_empty() {
        warnings.push(WARN_EMPTY_POOL.to_string());
    }

    let (alpha, alpha_guarded) = if formula == Formula::Muse {
        let (f2p, p2f) = flip_counts(matrix, split);
        let guarded = p2f == 0 || total_failing == 0;
        if guarded && !split.no_failing_tests() {
            warnings.push(WARN_ALPHA_GUARD.to_string());
        }
        (
            Some(muse_alpha(f2p, p2f, total_failing, total_passing)),
            guarded,
        )
    } else {
        (None, false)
    };

    let scores: Vec<LayerScore> = by_layer
        .iter()
        .map(|(&layer_id, stats)| match formula {
            Formula::MetallaxisSbi => metallaxis_layer(layer_id, stats, Kernel::Sbi, total_failing),
            Formula::MetallaxisOchiai => {
                metallaxis_layer(layer_id, stats, Kernel::Ochiai, total_failing)
            }
            Formula::Muse => muse_layer(
                layer_id,
                stats,
                alpha.unwrap_or(0.0),
                total_failing,
                total_passing,
            ),
        })
        .collect();

    let descriptor: BTreeMap<usize, &MutantDescriptor> =
        mutants.iter().map(|d| (d.id, d)).collect();
    let stat: BTreeMap<usize, &MutantStats> = stats.iter().map(|s| (s.mutant_id, s)).collect();
    let layers = rank(scores)
        .into_iter()
        .map(|ls| LayerEntry {
            id: ls.layer_id,
            kind: layer_kinds
                .get(ls.layer_id - 1)
                .copied()
                .unwrap_or("unknown")
                .to_string(),
            score: ls.score,
            mutants: ls
                .mutant_scores
                .iter()
                .map(|&(id, score)| {
                    let s = stat[&id];
                    MutantEntry {
                        id,
                        description: descriptor[&id].description.clone(),
                        score,
                        n_fail_impacted: s.n_fail_impacted,
                        n_pass_impacted: s.n_pass_impacted,
                        nonviable: s.nonviable,
                    }
                })
                .collect(),
        })
        .collect();

    SuspiciousnessReport {
        formula,
        impact_type: matrix.impact,
        threshold,
        layers,
        totals: Totals {
            failing: total_failing,
            passing: total_passing,
            mutants: mutants.len(),
            nonviable: stats.iter().filter(|s| s.nonviable).count(),
            alpha,
            alpha_guarded,
        },
        matrix: matrix.summary(),
        warnings,
    }
}
