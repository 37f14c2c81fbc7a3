//! Monte Carlo simulation and analysis of a context-sensitive random language
//! model whose context rule is a short-range Potts interaction.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod harness;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
pub use model::{ModelParams, SentenceState, SymbolCell};
