//! Structured extraction of colonoscopy findings from free-text clinical reports.
//!
//! The pipeline runs sentence boundary detection over cleaned, tokenized text,
//! encodes each token as a concatenation of word, character, and dictionary
//! feature embeddings, tags token sequences with a Bi-LSTM + CRF, and merges
//! the neural predictions with rule-based size/location/count extraction.

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod lexicon;
pub mod nn;
pub mod preprocess;
pub mod rules;
pub mod sbd;
pub mod tagger;

pub use error::{Error, Result};
