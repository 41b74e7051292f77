//! Model, dataset and report files.
//!
//! Models and datasets use a small JSON schema (see `docs/formats.md`).
//! Written files are canonical: fixed field order, two-space indentation and
//! every real number printed with 17 significant digits, so a save/load/save
//! cycle is byte-identical.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::executor::MatrixDump;
use crate::model::{
    Activation, BatchNorm, Conv, Dense, Layer, Lstm, LstmGate, MaxPool, Padding, SequentialModel,
    SimpleRnn, Tensor,
};
use crate::splitter::{Dataset, Expected, Task};
use crate::suspicion::SuspiciousnessReport;

pub const FORMAT_VERSION: u64 = 1;

const LAYER_KINDS: [&str; 10] = [
    "dense",
    "conv1d",
    "conv2d",
    "maxpool1d",
    "maxpool2d",
    "flatten",
    "dropout",
    "batchnorm",
    "simplernn",
    "lstm",
];

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u64,
    input_shape: Vec<usize>,
    layers: Vec<LayerRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GateRecord {
    input_weights: Value,
    recurrent_weights: Value,
    bias: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LayerRecord {
    Dense {
        units: usize,
        activation: Activation,
        weights: Value,
        bias: Vec<f64>,
    },
    Conv1d(ConvRecord),
    Conv2d(ConvRecord),
    Maxpool1d(PoolRecord),
    Maxpool2d(PoolRecord),
    Flatten,
    Dropout {
        rate: f64,
    },
    Batchnorm {
        gamma: Vec<f64>,
        beta: Vec<f64>,
        moving_mean: Vec<f64>,
        moving_variance: Vec<f64>,
        epsilon: f64,
    },
    Simplernn {
        units: usize,
        activation: Activation,
        input_weights: Value,
        recurrent_weights: Value,
        bias: Vec<f64>,
    },
    Lstm {
        units: usize,
        activation: Activation,
        recurrent_activation: Activation,
        input_gate: GateRecord,
        forget_gate: GateRecord,
        cell_gate: GateRecord,
        output_gate: GateRecord,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct ConvRecord {
    filters: usize,
    kernel_size: Vec<usize>,
    strides: Vec<usize>,
    padding: Padding,
    activation: Activation,
    weights: Value,
    bias: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PoolRecord {
    pool_size: Vec<usize>,
    /// Defaults to `pool_size`.
    #[serde(default)]
    strides: Option<Vec<usize>>,
}

/// Writes reals with 17 significant digits; everything else as pretty JSON.
struct CanonicalFormatter(PrettyFormatter<'static>);

impl CanonicalFormatter {
    fn new() -> Self {
        Self(PrettyFormatter::with_indent(b"  "))
    }
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    );
}

fn to_canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFormatter::new());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn schema(path: &Path, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn check_version(path: &Path, doc: &Value) -> Result<()> {
    match doc.get("format_version").and_then(Value::as_u64) {
        Some(FORMAT_VERSION) => Ok(()),
        Some(v) => Err(schema(
            path,
            format!("unsupported format_version {v}, expected {FORMAT_VERSION}"),
        )),
        None => Err(schema(path, "missing integer format_version")),
    }
}

/// Converts a nested list of numbers into a tensor, rejecting ragged input.
fn nested_to_tensor(value: &Value) -> std::result::Result<Tensor, String> {
    fn shape_of(v: &Value, shape: &mut Vec<usize>) -> std::result::Result<(), String> {
        if let Value::Array(items) = v {
            if items.is_empty() {
                return Err("empty array".into());
            }
            shape.push(items.len());
            shape_of(&items[0], shape)?;
        }
        Ok(())
    }
    fn flatten(v: &Value, shape: &[usize], out: &mut Vec<f64>) -> std::result::Result<(), String> {
        match (v, shape.split_first()) {
            (Value::Number(n), None) => {
                out.push(n.as_f64().ok_or("number out of range")?);
                Ok(())
            }
            (Value::Array(items), Some((&len, rest))) if items.len() == len => {
                items.iter().try_for_each(|item| flatten(item, rest, out))
            }
            (Value::Array(_), _) | (Value::Number(_), Some(_)) => Err("ragged array".into()),
            (other, _) => Err(format!("expected a number or list, found {other}")),
        }
    }
    let mut shape = Vec::new();
    shape_of(value, &mut shape)?;
    let mut data = Vec::with_capacity(shape.iter().product());
    flatten(value, &shape, &mut data)?;
    if shape.is_empty() {
        // bare scalar
        return Ok(Tensor::vector(data));
    }
    Tensor::new(shape, data).map_err(|e| e.reason)
}

fn tensor_to_nested(t: &Tensor) -> Value {
    fn build(data: &[f64], shape: &[usize]) -> Value {
        match shape.split_first() {
            None => Value::from(data[0]),
            Some((&len, rest)) => {
                let step = rest.iter().product::<usize>();
                Value::Array(
                    (0..len)
                        .map(|i| build(&data[i * step..(i + 1) * step], rest))
                        .collect(),
                )
            }
        }
    }
    build(t.data(), t.shape())
}

fn check_finite(path: &Path, what: &str, values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(schema(path, format!("{what} contains a non-finite value")));
    }
    Ok(())
}

fn layer_from_record(path: &Path, id: usize, record: LayerRecord) -> Result<Layer> {
    let tensor = |name: &str, v: &Value| {
        nested_to_tensor(v).map_err(|e| schema(path, format!("layer {id}: {name}: {e}")))
    };
    let gate = |name: &str, g: GateRecord| -> Result<LstmGate> {
        Ok(LstmGate {
            input_weights: tensor(&format!("{name}.input_weights"), &g.input_weights)?,
            recurrent_weights: tensor(&format!("{name}.recurrent_weights"), &g.recurrent_weights)?,
            bias: g.bias,
        })
    };
    let conv = |c: ConvRecord| -> Result<Conv> {
        Ok(Conv {
            filters: c.filters,
            kernel_size: c.kernel_size,
            strides: c.strides,
            padding: c.padding,
            weights: tensor("weights", &c.weights)?,
            bias: c.bias,
            activation: c.activation,
        })
    };
    let pool = |p: PoolRecord| MaxPool {
        strides: p.strides.unwrap_or_else(|| p.pool_size.clone()),
        pool_size: p.pool_size,
    };
    Ok(match record {
        LayerRecord::Dense {
            units,
            activation,
            weights,
            bias,
        } => Layer::Dense(Dense {
            units,
            weights: tensor("weights", &weights)?,
            bias,
            activation,
        }),
        LayerRecord::Conv1d(c) => Layer::Conv1D(conv(c)?),
        LayerRecord::Conv2d(c) => Layer::Conv2D(conv(c)?),
        LayerRecord::Maxpool1d(p) => Layer::MaxPool1D(pool(p)),
        LayerRecord::Maxpool2d(p) => Layer::MaxPool2D(pool(p)),
        LayerRecord::Flatten => Layer::Flatten,
        LayerRecord::Dropout { rate } => Layer::Dropout { rate },
        LayerRecord::Batchnorm {
            gamma,
            beta,
            moving_mean,
            moving_variance,
            epsilon,
        } => Layer::BatchNorm(BatchNorm {
            gamma,
            beta,
            moving_mean,
            moving_variance,
            epsilon,
        }),
        LayerRecord::Simplernn {
            units,
            activation,
            input_weights,
            recurrent_weights,
            bias,
        } => Layer::SimpleRnn(SimpleRnn {
            units,
            input_weights: tensor("input_weights", &input_weights)?,
            recurrent_weights: tensor("recurrent_weights", &recurrent_weights)?,
            bias,
            activation,
        }),
        LayerRecord::Lstm {
            units,
            activation,
            recurrent_activation,
            input_gate,
            forget_gate,
            cell_gate,
            output_gate,
        } => Layer::Lstm(Lstm {
            units,
            input_gate: gate("input_gate", input_gate)?,
            forget_gate: gate("forget_gate", forget_gate)?,
            cell_gate: gate("cell_gate", cell_gate)?,
            output_gate: gate("output_gate", output_gate)?,
            activation,
            recurrent_activation,
        }),
    })
}

fn record_from_layer(layer: &Layer) -> LayerRecord {
    let gate = |g: &LstmGate| GateRecord {
        input_weights: tensor_to_nested(&g.input_weights),
        recurrent_weights: tensor_to_nested(&g.recurrent_weights),
        bias: g.bias.clone(),
    };
    let conv = |c: &Conv| ConvRecord {
        filters: c.filters,
        kernel_size: c.kernel_size.clone(),
        strides: c.strides.clone(),
        padding: c.padding,
        activation: c.activation,
        weights: tensor_to_nested(&c.weights),
        bias: c.bias.clone(),
    };
    let pool = |p: &MaxPool| PoolRecord {
        pool_size: p.pool_size.clone(),
        strides: Some(p.strides.clone()),
    };
    match layer {
        Layer::Dense(d) => LayerRecord::Dense {
            units: d.units,
            activation: d.activation,
            weights: tensor_to_nested(&d.weights),
            bias: d.bias.clone(),
        },
        Layer::Conv1D(c) => LayerRecord::Conv1d(conv(c)),
        Layer::Conv2D(c) => LayerRecord::Conv2d(conv(c)),
        Layer::MaxPool1D(p) => LayerRecord::Maxpool1d(pool(p)),
        Layer::MaxPool2D(p) => LayerRecord::Maxpool2d(pool(p)),
        Layer::Flatten => LayerRecord::Flatten,
        Layer::Dropout { rate } => LayerRecord::Dropout { rate: *rate },
        Layer::BatchNorm(b) => LayerRecord::Batchnorm {
            gamma: b.gamma.clone(),
            beta: b.beta.clone(),
            moving_mean: b.moving_mean.clone(),
            moving_variance: b.moving_variance.clone(),
            epsilon: b.epsilon,
        },
        Layer::SimpleRnn(r) => LayerRecord::Simplernn {
            units: r.units,
            activation: r.activation,
            input_weights: tensor_to_nested(&r.input_weights),
            recurrent_weights: tensor_to_nested(&r.recurrent_weights),
            bias: r.bias.clone(),
        },
        Layer::Lstm(l) => LayerRecord::Lstm {
            units: l.units,
            activation: l.activation,
            recurrent_activation: l.recurrent_activation,
            input_gate: gate(&l.input_gate),
            forget_gate: gate(&l.forget_gate),
            cell_gate: gate(&l.cell_gate),
            output_gate: gate(&l.output_gate),
        },
    }
}

fn all_parameters(layer: &Layer) -> Vec<f64> {
    match layer {
        Layer::Dense(d) => d.weights.data().iter().chain(&d.bias).copied().collect(),
        Layer::Conv1D(c) | Layer::Conv2D(c) => {
            c.weights.data().iter().chain(&c.bias).copied().collect()
        }
        Layer::BatchNorm(b) => [&b.gamma, &b.beta, &b.moving_mean, &b.moving_variance]
            .into_iter()
            .flatten()
            .copied()
            .chain([b.epsilon])
            .collect(),
        Layer::SimpleRnn(r) => r
            .input_weights
            .data()
            .iter()
            .chain(r.recurrent_weights.data())
            .chain(&r.bias)
            .copied()
            .collect(),
        Layer::Lstm(l) => l
            .gates()
            .iter()
            .flat_map(|g| {
                g.input_weights
                    .data()
                    .iter()
                    .chain(g.recurrent_weights.data())
                    .chain(&g.bias)
                    .copied()
            })
            .collect(),
        Layer::Dropout { rate } => vec![*rate],
        _ => Vec::new(),
    }
}

/// Parses a model from JSON text. `path` is only used in error messages.
pub fn parse_model(text: &str, path: &Path) -> Result<SequentialModel> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    model_from_value(doc, path)
}

fn model_from_value(doc: Value, path: &Path) -> Result<SequentialModel> {
    check_version(path, &doc)?;
    if let Some(layers) = doc.get("layers").and_then(Value::as_array) {
        for (i, layer) in layers.iter().enumerate() {
            match layer.get("kind").and_then(Value::as_str) {
                Some(kind) if LAYER_KINDS.contains(&kind) => {}
                Some(kind) => {
                    return Err(schema(
                        path,
                        format!("layer {}: unknown kind '{kind}'", i + 1),
                    ))
                }
                None => return Err(schema(path, format!("layer {}: missing kind", i + 1))),
            }
        }
    }
    let file: ModelFile = serde_json::from_value(doc).map_err(|e| schema(path, e.to_string()))?;
    let layers = file
        .layers
        .into_iter()
        .enumerate()
        .map(|(i, r)| layer_from_record(path, i + 1, r))
        .collect::<Result<Vec<_>>>()?;
    let model = SequentialModel::new(file.input_shape, layers);
    model.validate_shapes()?;
    Ok(model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SequentialModel> {
    let path = path.as_ref();
    model_from_value(read_json(path)?, path)
}

/// Canonical text of a model file.
pub fn model_to_string(model: &SequentialModel) -> Result<String> {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        input_shape: model.input_shape.clone(),
        layers: model.layers.iter().map(record_from_layer).collect(),
    };
    to_canonical_json(&file).map_err(|e| Error::Config(e.to_string()))
}

pub fn save_model(model: &SequentialModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    for (i, layer) in model.layers.iter().enumerate() {
        check_finite(path, &format!("layer {}", i + 1), &all_parameters(layer))?;
    }
    let text = model_to_string(model)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetFile {
    format_version: u64,
    task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_classes: Option<usize>,
    points: Vec<PointRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PointRecord {
    input: Value,
    expected: Value,
}

fn dataset_from_value(doc: Value, path: &Path) -> Result<Dataset> {
    check_version(path, &doc)?;
    let file: DatasetFile = serde_json::from_value(doc).map_err(|e| schema(path, e.to_string()))?;
    if file.points.is_empty() {
        return Err(schema(path, "dataset needs at least one data point"));
    }
    let mut width = file.num_classes;
    let mut input_shape: Option<Vec<usize>> = None;
    let mut points = Vec::with_capacity(file.points.len());
    for (i, p) in file.points.into_iter().enumerate() {
        let id = i + 1;
        let input = nested_to_tensor(&p.input)
            .map_err(|e| schema(path, format!("point {id}: input: {e}")))?;
        match &input_shape {
            None => input_shape = Some(input.shape().to_vec()),
            Some(s) if s.as_slice() != input.shape() => {
                return Err(schema(
                    path,
                    format!(
                        "point {id}: input shape {:?} differs from {s:?}",
                        input.shape()
                    ),
                ))
            }
            _ => {}
        }
        let expected = match file.task {
            Task::Classification => {
                let label = match &p.expected {
                    Value::Number(n) => n.as_u64().map(|l| l as usize).ok_or_else(|| {
                        schema(
                            path,
                            format!("point {id}: label must be a non-negative integer"),
                        )
                    })?,
                    Value::Array(_) => {
                        let onehot = nested_to_tensor(&p.expected)
                            .map_err(|e| schema(path, format!("point {id}: expected: {e}")))?;
                        let label = one_hot_label(&onehot).ok_or_else(|| {
                            schema(
                                path,
                                format!("point {id}: expected is not a one-hot vector"),
                            )
                        })?;
                        match width {
                            None => width = Some(onehot.len()),
                            Some(w) if w != onehot.len() => {
                                return Err(schema(
                                    path,
                                    format!(
                                        "point {id}: one-hot width {} differs from {w}",
                                        onehot.len()
                                    ),
                                ))
                            }
                            _ => {}
                        }
                        label
                    }
                    other => {
                        return Err(schema(
                            path,
                            format!("point {id}: unsupported label {other}"),
                        ))
                    }
                };
                Expected::Label(label)
            }
            Task::Regression => Expected::Values(
                nested_to_tensor(&p.expected)
                    .map_err(|e| schema(path, format!("point {id}: expected: {e}")))?,
            ),
        };
        points.push((input, expected));
    }
    if let Some(w) = width {
        for (i, (_, e)) in points.iter().enumerate() {
            if let Expected::Label(l) = e {
                if *l >= w {
                    return Err(schema(
                        path,
                        format!("point {}: label {l} out of range for {w} classes", i + 1),
                    ));
                }
            }
        }
    }
    Ok(Dataset::new(file.task, points))
}

fn one_hot_label(t: &Tensor) -> Option<usize> {
    if t.rank() != 1 {
        return None;
    }
    let ones: Vec<usize> = t
        .data()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == 1.0)
        .map(|(i, _)| i)
        .collect();
    let zeros = t.data().iter().filter(|&&v| v == 0.0).count();
    (ones.len() == 1 && zeros + 1 == t.len()).then(|| ones[0])
}

pub fn parse_dataset(text: &str, path: &Path) -> Result<Dataset> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    dataset_from_value(doc, path)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    dataset_from_value(read_json(path)?, path)
}

pub fn dataset_to_string(dataset: &Dataset, num_classes: Option<usize>) -> Result<String> {
    let file = DatasetFile {
        format_version: FORMAT_VERSION,
        task: dataset.task,
        num_classes,
        points: dataset
            .points
            .iter()
            .map(|p| PointRecord {
                input: tensor_to_nested(&p.input),
                expected: match &p.expected {
                    Expected::Label(l) => Value::from(*l),
                    Expected::Values(v) => tensor_to_nested(v),
                },
            })
            .collect(),
    };
    to_canonical_json(&file).map_err(|e| Error::Config(e.to_string()))
}

pub fn save_dataset(
    dataset: &Dataset,
    num_classes: Option<usize>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let text = dataset_to_string(dataset, num_classes)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

/// Human-readable report: ranked layers first, then run totals.
///
/// `top` limits how many layers are listed.
pub fn render_text(report: &SuspiciousnessReport, top: Option<usize>) -> String {
    let mut out = String::new();
    let shown = top.unwrap_or(report.layers.len()).min(report.layers.len());
    for (rank, layer) in report.layers.iter().take(shown).enumerate() {
        out.push_str(&format!(
            "{}. layer {} ({})  score {:.6}\n",
            rank + 1,
            layer.id,
            layer.kind,
            layer.score
        ));
        for m in &layer.mutants {
            let status = if m.nonviable {
                "nonviable".to_string()
            } else {
                format!(
                    "failing {} / passing {}",
                    m.n_fail_impacted, m.n_pass_impacted
                )
            };
            out.push_str(&format!(
                "     M{:<4} {:>10.6}  {}  [{}]\n",
                m.id, m.score, m.description, status
            ));
        }
    }
    if shown < report.layers.len() {
        out.push_str(&format!(
            "({} more layers not shown)\n",
            report.layers.len() - shown
        ));
    }
    out.push('\n');
    out.push_str(&format!("formula: {}\n", report.formula));
    out.push_str(&format!("impact: {}\n", report.impact_type));
    out.push_str(&format!("threshold: {}\n", report.threshold));
    out.push_str(&format!("failing tests: {}\n", report.totals.failing));
    out.push_str(&format!("passing tests: {}\n", report.totals.passing));
    out.push_str(&format!(
        "mutants: {} ({} nonviable)\n",
        report.totals.mutants, report.totals.nonviable
    ));
    if let Some(alpha) = report.totals.alpha {
        out.push_str(&format!("alpha: {alpha:.6}\n"));
    }
    for w in &report.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}

pub fn render_json(report: &SuspiciousnessReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

pub fn save_report(
    report: &SuspiciousnessReport,
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        ReportFormat::Text => render_text(report, None),
        ReportFormat::Json => render_json(report),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn save_matrix_dump(dump: &MatrixDump, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(dump).expect("matrix dump serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
