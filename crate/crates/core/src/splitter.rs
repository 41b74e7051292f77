//! Pass/fail partition of the test data against the original model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ShapeError;
use crate::model::{SequentialModel, Tensor};

/// Default regression tolerance.
pub const DEFAULT_THRESHOLD: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

/// Ground truth for one data point.
#[derive(Debug, Clone, PartialEq)]
pub enum Expected {
    Label(usize),
    Values(Tensor),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    /// 1-based position in the dataset.
    pub id: usize,
    pub input: Tensor,
    pub expected: Expected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: Task,
    pub points: Vec<DataPoint>,
}

impl Dataset {
    /// Builds a dataset, numbering points from 1 in the given order.
    pub fn new(task: Task, points: impl IntoIterator<Item = (Tensor, Expected)>) -> Self {
        let points = points
            .into_iter()
            .enumerate()
            .map(|(i, (input, expected))| DataPoint {
                id: i + 1,
                input,
                expected,
            })
            .collect();
        Self { task, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPolicy {
    pub task: Task,
    /// Regression tolerance; unused for classification.
    pub threshold: f64,
}

impl MatchPolicy {
    pub fn classification() -> Self {
        Self {
            task: Task::Classification,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn regression(threshold: f64) -> Self {
        Self {
            task: Task::Regression,
            threshold,
        }
    }

    /// Whether two model outputs are the same answer: equal predicted labels for
    /// classification, every component within the threshold for regression.
    pub fn same_output(&self, a: &Tensor, b: &Tensor) -> bool {
        match self.task {
            Task::Classification => a.argmax() == b.argmax(),
            Task::Regression => {
                a.len() == b.len()
                    && a.data().iter().zip(b.data()).all(|(&x, &y)| {
                        (x.is_nan() && y.is_nan()) || x == y || (x - y).abs() <= self.threshold
                    })
            }
        }
    }
}

/// Whether `actual` counts as a correct answer for `expected`.
///
/// Any NaN in `actual` is a mismatch.
pub fn outputs_match(
    expected: &Expected,
    actual: &Tensor,
    policy: &MatchPolicy,
) -> Result<bool, ShapeError> {
    if actual.data().iter().any(|v| v.is_nan()) {
        return Ok(false);
    }
    match (policy.task, expected) {
        (Task::Classification, Expected::Label(label)) => {
            if *label >= actual.len() {
                return Err(ShapeError::new(
                    0,
                    format!(
                        "label {label} out of range for output width {}",
                        actual.len()
                    ),
                ));
            }
            Ok(actual.argmax() == Some(*label))
        }
        (Task::Regression, Expected::Values(values)) => {
            if values.len() != actual.len() {
                return Err(ShapeError::new(
                    0,
                    format!(
                        "expected {} output values, model produced {}",
                        values.len(),
                        actual.len()
                    ),
                ));
            }
            Ok(values
                .data()
                .iter()
                .zip(actual.data())
                .all(|(e, a)| (e - a).abs() <= policy.threshold))
        }
        (task, _) => Err(ShapeError::new(
            0,
            format!("ground truth does not fit a {task:?} policy"),
        )),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    /// Ascending ids of points the original model gets right.
    pub passing_ids: Vec<usize>,
    /// Ascending ids of points the original model gets wrong.
    pub failing_ids: Vec<usize>,
    /// Original output for each point, indexed by `id - 1`.
    pub original_outputs: Vec<Tensor>,
    /// `passing[id - 1]` is the verdict for point `id`.
    pub passing: Vec<bool>,
}

impl SplitResult {
    pub fn original_output(&self, id: usize) -> &Tensor {
        &self.original_outputs[id - 1]
    }

    pub fn is_passing(&self, id: usize) -> bool {
        self.passing[id - 1]
    }

    /// No failing points: localization has nothing to explain.
    pub fn no_failing_tests(&self) -> bool {
        self.failing_ids.is_empty()
    }
}

pub fn split(
    model: &SequentialModel,
    dataset: &Dataset,
    policy: &MatchPolicy,
) -> Result<SplitResult, ShapeError> {
    let chain = model.validate_shapes()?;
    let evaluated: Vec<(Tensor, bool)> = dataset
        .points
        .par_iter()
        .map(|p| {
            let out = model
                .forward_with_chain(&p.input, &chain)
                .map_err(|e| ShapeError::new(e.layer_id, format!("test {}: {}", p.id, e.reason)))?
                .output;
            let ok = outputs_match(&p.expected, &out, policy)
                .map_err(|e| ShapeError::new(e.layer_id, format!("test {}: {}", p.id, e.reason)))?;
            Ok((out, ok))
        })
        .collect::<Result<_, ShapeError>>()?;

    let mut result = SplitResult {
        passing_ids: Vec::new(),
        failing_ids: Vec::new(),
        original_outputs: Vec::with_capacity(evaluated.len()),
        passing: Vec::with_capacity(evaluated.len()),
    };
    for (p, (out, ok)) in dataset.points.iter().zip(evaluated) {
        if ok {
            result.passing_ids.push(p.id);
        } else {
            result.failing_ids.push(p.id);
        }
        result.original_outputs.push(out);
        result.passing.push(ok);
    }
    Ok(result)
}
