//! Word embeddings trained with a GloVe-style objective in which selected
//! dimensions are anchored to concept word-groups drawn from a thesaurus,
//! together with interpretability scoring and intrinsic evaluation.

pub mod cooccur;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod interpret;
pub mod lexicon;
pub mod numfmt;
pub mod pipeline;
pub mod trainer;

pub use error::{Error, Result};
