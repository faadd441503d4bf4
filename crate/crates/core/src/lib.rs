//! Integrated human-activity dataset construction, correlation-based
//! feature pruning and a small 1D-CNN classifier.
//!
//! Pipeline: [`ingest`] three public HAR sources into five canonical
//! classes, [`integrate`] them into one balanced shuffled dataset, prune
//! correlated features with [`drwcc`], train and evaluate a [`cnn`] and
//! score it with [`metrics`].

pub mod bench;
pub mod cnn;
pub mod drwcc;
pub mod error;
pub mod ingest;
pub mod integrate;
pub mod matrix;
pub mod metrics;
pub mod pipeline;

pub use error::{Error, ErrorKind, Result};
pub use matrix::Matrix;
