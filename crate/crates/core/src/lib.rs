//! Semantic matching between regulatory rules and institutional policies.
//!
//! The crate is organised the way the matching workflow runs:
//!
//! * [`corpus`] cleans raw documents, splits them into bounded-length
//!   sentences, tokenizes them and builds a [`corpus::Vocabulary`].
//! * [`count_embed`] derives word vectors from ramped-window co-occurrence
//!   counts followed by a truncated SVD.
//! * [`neural_embed`] trains skip-gram / CBOW vectors with negative sampling.
//! * [`attention`] is a one-layer multi-head attention encoder with mean
//!   pooling and a hand-written backward pass.
//! * [`search`] scores sentences with cosine similarity and matches rules to
//!   policies above a threshold.
//! * [`adapt`] holds the domain-adaptation loops: masked-token pretraining,
//!   multiple-negatives ranking fine-tuning and generative pseudo-labeling.
//! * [`eval`] builds an ensemble pseudo-labelled dataset and computes the two
//!   benchmark scores used to compare encoders.
//!
//! All randomness is driven by explicit `u64` seeds, so every routine is
//! reproducible bit for bit.

pub mod adapt;
pub mod attention;
pub mod corpus;
pub mod count_embed;
mod error;
pub mod eval;
pub mod linalg;
pub mod neural_embed;
pub mod search;
mod seed;
mod text_format;

pub use error::{Error, Result};
pub use text_format::{format_g6, read_vectors, write_vectors, NamedVectors};
