//! Recurrent-network toolkit for estimating a pouring cup's weight response
//! from its rotation-angle sequence, plus a quasi-static pouring simulator
//! that produces datasets in the same schema.
//!
//! Layout:
//! - [`data`]: trial records, feature rows, padding/masking, splits,
//!   normalization and the line-delimited dataset format.
//! - [`sim`]: tilted-cylinder geometry and synthetic trial generation.
//! - [`nn`]: LSTM/GRU/dense/dropout layers, model specs and checkpoints.
//! - [`train`]: masked losses, backpropagation through time, the
//!   finite-difference oracle, Adam and the training loop.
//! - [`cli`]: the `pour-rnn` command-line front end.

pub mod cli;
pub mod data;
pub mod error;
pub mod nn;
pub mod rng;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
