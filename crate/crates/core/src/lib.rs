//! Player classification of aligned basso continuo performances.
//!
//! The pipeline runs from MIDI performances and their alignments to a
//! continuo line ([`ingest`]), through griff extraction ([`griff`]) and
//! bag-of-words features ([`features`]), to a from-scratch kernel SVM
//! ([`classifier`]) and the evaluation protocols in [`eval`]. [`synth`]
//! generates corpora with known player styles for testing the whole chain.

pub mod classifier;
pub mod error;
pub mod eval;
pub mod features;
pub mod griff;
pub mod ingest;
pub mod sparse;
pub mod synth;

pub use error::{Error, Result};
