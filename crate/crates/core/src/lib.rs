//! Beam-aware training for neural sequence labeling.
//!
//! This crate implements a structured-prediction engine that trains
//! incremental scoring models *through* beam search instead of on gold
//! prefixes alone. The pieces:
//!
//! - [`corpus`] — TSV corpora, vocabularies with frequency-based UNK
//!   handling, and a synthetic task generator on which beam effects are
//!   measurable at desk scale.
//! - [`search`] — the per-example left-to-right search tree, Hamming
//!   completion costs, and the induced dynamic oracle.
//! - [`beam`] — beams, full-frontier expansion, the score/cost ranking
//!   permutations, and beam/transition cost functions.
//! - [`losses`] — six per-beam surrogate losses with values and
//!   subgradients with respect to the neighbor score vector.
//! - [`collect`] — training-time data collection strategies (stop,
//!   reset, reset-multiple, continue, oracle).
//! - [`ndiff`] — a minimal dense-tensor tape with reverse-mode
//!   differentiation, plus a text checkpoint format.
//! - [`model`] — the two scorers: a bi-LSTM encoder model and a
//!   simplified variant that must rely on the beam.
//! - [`train`] — the training loop (rollout, per-beam losses, SGD with
//!   a cosine schedule, validation-based selection), beam decoding, and
//!   accuracy evaluation.

pub mod beam;
pub mod collect;
pub mod corpus;
pub mod losses;
pub mod model;
pub mod ndiff;
pub mod search;
pub mod train;

/// Errors surfaced by corpus IO, checkpoint IO, and training.
///
/// Contract violations (calling an operation outside its stated
/// preconditions, e.g. expanding a terminal beam) are programming
/// errors and panic instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
