//! Sequential networks and their inference engine.
//!
//! Everything runs in `f64`. Models are immutable once built; mutants are
//! produced as fresh copies by [`crate::mutgen::materialize`].

mod activation;
mod layer;
mod tensor;

pub use activation::Activation;
pub use layer::{BatchNorm, Conv, Dense, Layer, Lstm, LstmGate, MaxPool, Padding, SimpleRnn};
pub use tensor::Tensor;

use crate::error::ShapeError;

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialModel {
    pub input_shape: Vec<usize>,
    /// Layer `i` in this vector has id `i + 1`.
    pub layers: Vec<Layer>,
}

/// Result of a forward pass. `numeric_warning` is set when the output holds NaN or ±inf.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub output: Tensor,
    pub numeric_warning: bool,
}

impl SequentialModel {
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer>) -> Self {
        Self {
            input_shape,
            layers,
        }
    }

    pub fn layer(&self, id: usize) -> Option<&Layer> {
        id.checked_sub(1).and_then(|i| self.layers.get(i))
    }

    pub fn layer_ids(&self) -> impl Iterator<Item = usize> {
        1..=self.layers.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Layer::parameter_count).sum()
    }

    /// Output shape after every layer, in order.
    pub fn validate_shapes(&self) -> Result<Vec<Vec<usize>>, ShapeError> {
        if self.layers.is_empty() {
            return Err(ShapeError::new(0, "model has no layers"));
        }
        if self.input_shape.is_empty() || self.input_shape.contains(&0) {
            return Err(ShapeError::new(
                0,
                format!("invalid input shape {:?}", self.input_shape),
            ));
        }
        let mut chain = Vec::with_capacity(self.layers.len());
        let mut current = self.input_shape.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            current = layer.output_shape(i + 1, &current)?;
            if current.contains(&0) {
                return Err(ShapeError::new(
                    i + 1,
                    format!("empty output shape {current:?}"),
                ));
            }
            chain.push(current.clone());
        }
        Ok(chain)
    }

    /// Output shape of the final layer.
    pub fn output_shape(&self) -> Result<Vec<usize>, ShapeError> {
        Ok(self.validate_shapes()?.pop().expect("non-empty chain"))
    }

    pub fn forward(&self, input: &Tensor) -> Result<Prediction, ShapeError> {
        let chain = self.validate_shapes()?;
        self.forward_with_chain(input, &chain)
    }

    /// Forward pass reusing a shape chain from [`SequentialModel::validate_shapes`].
    pub fn forward_with_chain(
        &self,
        input: &Tensor,
        chain: &[Vec<usize>],
    ) -> Result<Prediction, ShapeError> {
        if input.shape() != self.input_shape.as_slice() {
            return Err(ShapeError::new(
                0,
                format!(
                    "input has shape {:?}, model expects {:?}",
                    input.shape(),
                    self.input_shape
                ),
            ));
        }
        let mut x = input.clone();
        for (layer, shape) in self.layers.iter().zip(chain) {
            x = layer.forward(&x, shape);
        }
        let numeric_warning = x.has_non_finite();
        Ok(Prediction {
            output: x,
            numeric_warning,
        })
    }
}
