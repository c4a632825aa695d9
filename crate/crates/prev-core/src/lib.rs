//! Pattern-based pianoroll tokenization for symbolic piano music, with
//! baseline tokenizers, corpus tooling, and evaluation metrics.
//!
//! The core pipeline is MIDI → [`pianoroll::Pianoroll`] →
//! [`codec::TokenSequence`] and back. Around it sit reference baselines
//! ([`baselines`]), corpus ingestion and synthesis ([`corpus`]), and the
//! metrics used to compare tokenizations ([`metrics`]).

mod bytes;
mod hashing;

pub mod baselines;
pub mod codec;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod midi;
pub mod pianoroll;

pub use codec::{
    build_vocabulary, decode_tokens, encode_pianoroll, EncodingConfig, EncodingMode,
    TokenSequence, Vocabulary,
};
pub use error::{Error, Result};
pub use pianoroll::Pianoroll;
