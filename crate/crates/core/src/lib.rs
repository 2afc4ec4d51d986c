//! Hierarchical email-body generation.
//!
//! The pipeline has two generation stages. A word-level bidirectional LSTM
//! language model proposes candidate sentences by temperature sampling; a
//! sentence-level model predicts the paragraph vector of the next sentence
//! and the candidate closest to it (by cosine similarity) is kept. Around
//! that sit the corpus cleaning pipeline, a lexicon-based detector for
//! phishing cues, and evaluation metrics (perplexity, bigram coherence,
//! trigram overlap).
//!
//! The guide under `book/` walks through each stage; its code snippets are
//! compiled and run as doc-tests of this crate.

pub mod checkpoint;
pub mod config;
pub mod corpus;
pub mod cues;
pub mod docvec;
pub mod error;
pub mod hiergen;
pub mod metrics;
pub mod nn;
pub mod tags;
pub mod vocab;
pub mod wordlm;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/preprocessing.md")]
    mod preprocessing {}
    #[doc = include_str!("../../../book/src/cues.md")]
    mod cues {}
    #[doc = include_str!("../../../book/src/language-model.md")]
    mod language_model {}
    #[doc = include_str!("../../../book/src/paragraph-vectors.md")]
    mod paragraph_vectors {}
    #[doc = include_str!("../../../book/src/hierarchical.md")]
    mod hierarchical {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
