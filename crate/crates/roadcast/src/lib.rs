//! Simultaneous next-interval prediction of traffic volume and average
//! speed on a bidirectional road, built from scratch: a five-lag LSTM
//! encoder with an optional additive attention block, manual
//! backpropagation through time, Adam training, calendar feature encoders,
//! interval aggregation, rolling-origin cross-validation, and plot-data
//! export. The `roadcast` binary ties the pipeline together.

pub mod attention;
pub mod checkpoint;
pub mod cli;
pub mod dataio;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod linalg;
pub mod lstm;
pub mod network;
pub mod optimizer;

pub use error::{Error, Result};
