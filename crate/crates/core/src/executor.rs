//! Mutation execution matrix.
//!
//! Rows are mutants, columns are test points. Rows are independent units of
//! work and are evaluated in parallel on the current rayon pool; results are
//! placed by row index, so the matrix does not depend on completion order.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{SequentialModel, Tensor};
use crate::mutgen::{materialize, Mutant, MutantDescriptor};
use crate::splitter::{outputs_match, Dataset, Expected, MatchPolicy, SplitResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpactType {
    /// Verdict flips: pass to fail or fail to pass.
    #[default]
    Type1,
    /// Output changes.
    Type2,
}

impl ImpactType {
    pub fn name(self) -> &'static str {
        match self {
            ImpactType::Type1 => "type1",
            ImpactType::Type2 => "type2",
        }
    }
}

impl fmt::Display for ImpactType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Impacted,
    NotImpacted,
    Nonviable,
}

impl Cell {
    pub fn symbol(self) -> char {
        match self {
            Cell::Impacted => '+',
            Cell::NotImpacted => '-',
            Cell::Nonviable => 'o',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionMatrix {
    pub impact: ImpactType,
    pub mutant_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    /// Row-major, `mutant_ids.len() x test_ids.len()`.
    cells: Vec<Cell>,
    nonviable: Vec<bool>,
}

impl ExecutionMatrix {
    /// Assembles a matrix from rows; a row is nonviable iff all its cells are.
    pub fn from_rows(
        impact: ImpactType,
        mutant_ids: Vec<usize>,
        test_ids: Vec<usize>,
        rows: Vec<Vec<Cell>>,
    ) -> Self {
        assert_eq!(rows.len(), mutant_ids.len(), "one row per mutant");
        let nonviable = rows
            .iter()
            .map(|r| !r.is_empty() && r.iter().all(|&c| c == Cell::Nonviable))
            .collect();
        let cells = rows
            .into_iter()
            .inspect(|r| assert_eq!(r.len(), test_ids.len(), "one cell per test"))
            .flatten()
            .collect();
        Self {
            impact,
            mutant_ids,
            test_ids,
            cells,
            nonviable,
        }
    }

    pub fn rows(&self) -> usize {
        self.mutant_ids.len()
    }

    pub fn cols(&self) -> usize {
        self.test_ids.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.cols() + col]
    }

    pub fn row(&self, row: usize) -> &[Cell] {
        let w = self.cols();
        &self.cells[row * w..(row + 1) * w]
    }

    pub fn is_nonviable(&self, row: usize) -> bool {
        self.nonviable[row]
    }

    pub fn summary(&self) -> MatrixSummary {
        let count = |c: Cell| self.cells.iter().filter(|&&x| x == c).count();
        MatrixSummary {
            rows: self.rows(),
            cols: self.cols(),
            impacted: count(Cell::Impacted),
            not_impacted: count(Cell::NotImpacted),
            nonviable: count(Cell::Nonviable),
            nonviable_rows: self.nonviable.iter().filter(|&&n| n).count(),
        }
    }

    pub fn dump(&self) -> MatrixDump {
        MatrixDump {
            impact_type: self.impact,
            tests: self.test_ids.clone(),
            summary: self.summary(),
            rows: (0..self.rows())
                .map(|r| DumpRow {
                    mutant: self.mutant_ids[r],
                    nonviable: self.nonviable[r],
                    cells: self.row(r).iter().map(|c| c.symbol()).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixSummary {
    pub rows: usize,
    pub cols: usize,
    pub impacted: usize,
    pub not_impacted: usize,
    pub nonviable: usize,
    pub nonviable_rows: usize,
}

/// Machine-readable matrix: one string per row, `+` impacted, `-` not, `o` nonviable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub impact_type: ImpactType,
    pub tests: Vec<usize>,
    pub summary: MatrixSummary,
    pub rows: Vec<DumpRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpRow {
    pub mutant: usize,
    pub nonviable: bool,
    pub cells: String,
}

/// Whether a mutant's output on one point counts as impacting it.
pub fn is_impacted(
    original_out: &Tensor,
    mutant_out: &Tensor,
    expected: &Expected,
    policy: &MatchPolicy,
    impact: ImpactType,
) -> bool {
    match impact {
        ImpactType::Type1 => {
            let before = outputs_match(expected, original_out, policy).unwrap_or(false);
            let after = outputs_match(expected, mutant_out, policy).unwrap_or(false);
            before != after
        }
        ImpactType::Type2 => !policy.same_output(original_out, mutant_out),
    }
}

/// Cells of one mutant row, for each requested impact type.
///
/// A mutant that fails to build, or builds but yields a different output shape
/// than the original, is nonviable across the whole row.
pub fn evaluate_row(
    model: &SequentialModel,
    mutant: &Mutant,
    dataset: &Dataset,
    split: &SplitResult,
    policy: &MatchPolicy,
    impacts: &[ImpactType],
) -> Vec<Vec<Cell>> {
    let nonviable = || vec![vec![Cell::Nonviable; dataset.len()]; impacts.len()];
    let Mutant::Viable(mutated) = mutant else {
        return nonviable();
    };
    let (Ok(original_shape), Ok(chain)) = (model.output_shape(), mutated.validate_shapes()) else {
        return nonviable();
    };
    if chain.last() != Some(&original_shape) {
        return nonviable();
    }
    let mut rows = vec![Vec::with_capacity(dataset.len()); impacts.len()];
    for point in &dataset.points {
        let Ok(prediction) = mutated.forward_with_chain(&point.input, &chain) else {
            return nonviable();
        };
        let original = split.original_output(point.id);
        for (row, &impact) in rows.iter_mut().zip(impacts) {
            let hit = is_impacted(
                original,
                &prediction.output,
                &point.expected,
                policy,
                impact,
            );
            row.push(if hit {
                Cell::Impacted
            } else {
                Cell::NotImpacted
            });
        }
    }
    rows
}

pub fn build_matrix(
    model: &SequentialModel,
    mutants: &[MutantDescriptor],
    dataset: &Dataset,
    split: &SplitResult,
    policy: &MatchPolicy,
    impact: ImpactType,
) -> ExecutionMatrix {
    build_matrices(model, mutants, dataset, split, policy, &[impact])
        .pop()
        .expect("one matrix per impact type")
}

/// One matrix per entry of `impacts`, sharing each mutant's forward passes.
pub fn build_matrices(
    model: &SequentialModel,
    mutants: &[MutantDescriptor],
    dataset: &Dataset,
    split: &SplitResult,
    policy: &MatchPolicy,
    impacts: &[ImpactType],
) -> Vec<ExecutionMatrix> {
    let per_mutant: Vec<Vec<Vec<Cell>>> = mutants
        .par_iter()
        .map(|d| {
            let mutant = materialize(model, d);
            evaluate_row(model, &mutant, dataset, split, policy, impacts)
        })
        .collect();

    let mutant_ids: Vec<usize> = mutants.iter().map(|d| d.id).collect();
    let test_ids: Vec<usize> = dataset.points.iter().map(|p| p.id).collect();
    let mut by_impact: Vec<Vec<Vec<Cell>>> = vec![Vec::with_capacity(mutants.len()); impacts.len()];
    for rows in per_mutant {
        for (slot, row) in by_impact.iter_mut().zip(rows) {
            slot.push(row);
        }
    }
    impacts
        .iter()
        .zip(by_impact)
        .map(|(&impact, rows)| {
            ExecutionMatrix::from_rows(impact, mutant_ids.clone(), test_ids.clone(), rows)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, Dense, Layer};
    use crate::mutgen::generate_mutants;
    use crate::splitter::{split, Task, DEFAULT_THRESHOLD};

    fn v(xs: &[f64]) -> Tensor {
        Tensor::vector(xs.to_vec())
    }

    #[test]
    fn type1_tracks_verdict_flips() {
        let p = MatchPolicy::classification();
        let label = Expected::Label(0);
        // pass -> fail
        assert!(is_impacted(
            &v(&[0.9, 0.1, 0.0]),
            &v(&[0.1, 0.9, 0.0]),
            &label,
            &p,
            ImpactType::Type1
        ));
        // fail -> pass
        assert!(is_impacted(
            &v(&[0.1, 0.9, 0.0]),
            &v(&[0.9, 0.1, 0.0]),
            &label,
            &p,
            ImpactType::Type1
        ));
        // fail -> fail with a different wrong label
        let (orig, mutant) = (v(&[0.1, 0.9, 0.0]), v(&[0.1, 0.0, 0.9]));
        assert!(!is_impacted(&orig, &mutant, &label, &p, ImpactType::Type1));
        assert!(is_impacted(&orig, &mutant, &label, &p, ImpactType::Type2));
    }

    #[test]
    fn type2_regression_uses_threshold() {
        let p = MatchPolicy::regression(DEFAULT_THRESHOLD);
        let e = Expected::Values(v(&[2.0]));
        assert!(!is_impacted(
            &v(&[2.0]),
            &v(&[2.0005]),
            &e,
            &p,
            ImpactType::Type2
        ));
        assert!(is_impacted(
            &v(&[2.0]),
            &v(&[2.0015]),
            &e,
            &p,
            ImpactType::Type2
        ));
        assert!(is_impacted(
            &v(&[2.0]),
            &v(&[f64::NAN]),
            &e,
            &p,
            ImpactType::Type2
        ));
        assert!(!is_impacted(
            &v(&[f64::NAN]),
            &v(&[f64::NAN]),
            &e,
            &p,
            ImpactType::Type2
        ));
    }

    fn fixture() -> (SequentialModel, Dataset) {
        let model = SequentialModel::new(
            vec![2],
            vec![
                Layer::Dense(Dense {
                    units: 3,
                    weights: Tensor::new(vec![2, 3], vec![0.5, -1.0, 0.25, 1.5, 0.75, -0.5])
                        .unwrap(),
                    bias: vec![0.1, -0.2, 0.3],
                    activation: Activation::Relu,
                }),
                Layer::Dense(Dense {
                    units: 2,
                    weights: Tensor::new(vec![3, 2], vec![1.0, -1.0, 0.5, 0.5, -0.25, 1.0])
                        .unwrap(),
                    bias: vec![0.0, 0.1],
                    activation: Activation::Softmax,
                }),
            ],
        );
        let data = Dataset::new(
            Task::Classification,
            [[1.0, 0.0], [0.0, 1.0], [-1.0, 2.0], [2.0, -1.0], [0.5, 0.5]]
                .iter()
                .enumerate()
                .map(|(i, x)| (v(x), Expected::Label(i % 2))),
        );
        (model, data)
    }

    #[test]
    fn identity_mutant_impacts_nothing() {
        let (model, data) = fixture();
        let policy = MatchPolicy::classification();
        let s = split(&model, &data, &policy).unwrap();
        let rows = evaluate_row(
            &model,
            &Mutant::Viable(model.clone()),
            &data,
            &s,
            &policy,
            &[ImpactType::Type1, ImpactType::Type2],
        );
        assert!(rows.iter().flatten().all(|&c| c == Cell::NotImpacted));
    }

    #[test]
    fn nonviable_rows_are_uniform_and_flagged() {
        let (model, data) = fixture();
        let policy = MatchPolicy::classification();
        let s = split(&model, &data, &policy).unwrap();
        let pool = generate_mutants(&model);
        let m = build_matrix(&model, &pool, &data, &s, &policy, ImpactType::Type2);
        assert_eq!((m.rows(), m.cols()), (pool.len(), data.len()));
        let mut saw_nonviable = false;
        for r in 0..m.rows() {
            let row = m.row(r);
            let nonviable = row.iter().filter(|&&c| c == Cell::Nonviable).count();
            assert!(nonviable == 0 || nonviable == row.len());
            assert_eq!(m.is_nonviable(r), nonviable == row.len());
            saw_nonviable |= m.is_nonviable(r);
        }
        // deleting layer 1 feeds 2 inputs into a 3-input layer
        assert!(saw_nonviable);
    }

    #[test]
    fn shared_forward_passes_match_separate_builds() {
        let (model, data) = fixture();
        let policy = MatchPolicy::classification();
        let s = split(&model, &data, &policy).unwrap();
        let pool = generate_mutants(&model);
        let both = build_matrices(
            &model,
            &pool,
            &data,
            &s,
            &policy,
            &[ImpactType::Type1, ImpactType::Type2],
        );
        assert_eq!(
            both[0],
            build_matrix(&model, &pool, &data, &s, &policy, ImpactType::Type1)
        );
        assert_eq!(
            both[1],
            build_matrix(&model, &pool, &data, &s, &policy, ImpactType::Type2)
        );
    }

    #[test]
    fn dump_round_trips_through_json() {
        let m = ExecutionMatrix::from_rows(
            ImpactType::Type1,
            vec![1, 2],
            vec![1, 2, 3],
            vec![
                vec![Cell::Impacted, Cell::NotImpacted, Cell::Impacted],
                vec![Cell::Nonviable; 3],
            ],
        );
        let dump = m.dump();
        assert_eq!(dump.rows[0].cells, "+-+");
        assert_eq!(dump.rows[1].cells, "ooo");
        assert!(dump.rows[1].nonviable);
        assert_eq!(dump.summary.impacted, 2);
        let json = serde_json::to_string(&dump).unwrap();
        assert_eq!(serde_json::from_str::<MatrixDump>(&json).unwrap(), dump);
    }
}
