//! Mutation-mention extraction from biomedical text.
//!
//! The library covers the whole path from raw annotated abstracts to
//! evaluated predictions: corpus parsing and tokenization, tag-scheme
//! handling, token encoding, two sequence taggers (a linear-chain CRF and a
//! start/end span classifier), a token-level voting ensemble, cross-corpus
//! training-set expansion, and exact-match evaluation.

pub mod conll;
pub mod corpus;
pub mod crf;
pub mod encoding;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod expansion;
pub mod model_io;
pub mod optim;
pub mod pipeline;
pub mod span;
pub mod tags;

pub use error::{Error, Result};
