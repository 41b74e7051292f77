//! Mutation-based fault localization for pre-trained sequential neural networks.
//!
//! The pipeline has four stages:
//!
//! 1. [`mutgen`] enumerates a deterministic pool of mutants of the model;
//! 2. [`splitter`] partitions the test data into passing and failing points;
//! 3. [`executor`] runs each mutant on each point and records which points it impacts;
//! 4. [`suspicion`] turns the resulting execution matrix into a ranked list of layers.
//!
//! [`pipeline::run`] wires the stages together; [`io`] reads and writes the
//! model, dataset and report formats described in `docs/formats.md`.

pub mod error;
pub mod executor;
pub mod io;
pub mod model;
pub mod mutgen;
pub mod pipeline;
pub mod splitter;
pub mod suspicion;

pub use error::{Error, Result, ShapeError};
