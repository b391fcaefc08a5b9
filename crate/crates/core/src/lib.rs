//! Fragment vocabulary, retrieval, genetic operators, oracles, metrics and
//! the optimisation loop.

pub mod config;
pub mod error;
pub mod genetic;
pub mod metrics;
pub mod optimizer;
pub mod oracles;
pub mod pipeline;
pub mod retrieval;
pub mod synth;
pub mod vocab;

pub use error::{CoreError, Result};
