//! Multi-sense English word embeddings learned from word-aligned parallel
//! corpora in one or more foreign languages.
//!
//! Every English word owns up to `T` sense vectors under a truncated
//! Dirichlet-process (stick-breaking) prior; the number of senses actually
//! used is inferred from data. Aligned foreign words and their neighbors act
//! as extra context that helps tell senses apart, and several parallel
//! corpora can simply be concatenated.

pub mod cli;
pub mod corpus;
pub mod disambig;
pub mod error;
pub mod eval;
pub mod inference;
pub mod model;

pub use corpus::{AlignedSentencePair, CorpusSpec, Manifest, PairSource, Token, Vocabulary};
pub use error::{Error, Result};
pub use model::{ContextWord, SenseDistribution, SenseModel, TrainConfig, Variant};
