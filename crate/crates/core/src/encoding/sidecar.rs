//! Precomputed-embedding sidecar files.
//!
//! Format: a header line `dim=<d>`, then one record per token —
//! `doc_id<TAB>sent_idx<TAB>tok_idx<TAB>v1 v2 … vd` — with plain decimal
//! floats. The store supports exact lookup by (doc id, sentence index,
//! token index); the matching encoder returns stored vectors verbatim.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::TokenizedSentence;
use crate::error::{Error, Result};

use super::{Encoder, FeatureRow, RepresentationMatrix};

type Key = (String, usize, usize);

/// In-memory view of one sidecar file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: BTreeMap<Key, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        EmbeddingStore { dim, vectors: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Adds one vector; rejects wrong dimensions and duplicate keys.
    pub fn insert(&mut self, doc_id: &str, sent_idx: usize, tok_idx: usize, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        let key = (doc_id.to_string(), sent_idx, tok_idx);
        if self.vectors.contains_key(&key) {
            return Err(Error::DuplicateEmbedding {
                line: 0,
                key: format!("{doc_id}\t{sent_idx}\t{tok_idx}"),
            });
        }
        self.vectors.insert(key, v);
        Ok(())
    }

    pub fn get(&self, doc_id: &str, sent_idx: usize, tok_idx: usize) -> Option<&[f64]> {
        self.vectors
            .get(&(doc_id.to_string(), sent_idx, tok_idx))
            .map(Vec::as_slice)
    }

    /// Parses sidecar text. Blank lines are skipped; anything else must be a
    /// well-formed record.
    pub fn parse(input: &str) -> Result<EmbeddingStore> {
        let mut lines = input.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Malformed { line: 1, msg: "empty sidecar file".into() })?;
        let dim: usize = header
            .strip_prefix("dim=")
            .and_then(|d| d.parse().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::Malformed {
                line: 1,
                msg: format!("expected header dim=<d>, got {header:?}"),
            })?;

        let mut store = EmbeddingStore::new(dim);
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [doc_id, sent_idx, tok_idx, values] = fields[..] else {
                return Err(Error::Malformed {
                    line: lineno,
                    msg: format!("expected 4 tab-separated fields, got {}", fields.len()),
                });
            };
            let sent_idx: usize = sent_idx.parse().map_err(|_| Error::Malformed {
                line: lineno,
                msg: format!("bad sentence index {sent_idx:?}"),
            })?;
            let tok_idx: usize = tok_idx.parse().map_err(|_| Error::Malformed {
                line: lineno,
                msg: format!("bad token index {tok_idx:?}"),
            })?;
            let v = values
                .split_whitespace()
                .map(|f| {
                    f.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                        Error::Malformed {
                            line: lineno,
                            msg: format!("bad vector component {f:?}"),
                        }
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if v.len() != dim {
                return Err(Error::Malformed {
                    line: lineno,
                    msg: format!("expected {dim} vector components, got {}", v.len()),
                });
            }
            store.insert(doc_id, sent_idx, tok_idx, v).map_err(|e| match e {
                Error::DuplicateEmbedding { key, .. } => Error::DuplicateEmbedding { line: lineno, key },
                other => other,
            })?;
        }
        Ok(store)
    }

    /// Renders the store back into sidecar text (keys in sorted order).
    pub fn serialize(&self) -> String {
        let mut out = format!("dim={}\n", self.dim);
        for ((doc_id, sent_idx, tok_idx), v) in &self.vectors {
            let values = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            writeln!(out, "{doc_id}\t{sent_idx}\t{tok_idx}\t{values}").unwrap();
        }
        out
    }
}

/// Reads and parses a sidecar file from disk.
pub fn read_embedding_sidecar(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EmbeddingStore::parse(&text)
}

/// Encoder that looks sentences up in an [`EmbeddingStore`].
pub struct EmbeddingFileEncoder {
    store: EmbeddingStore,
}

impl EmbeddingFileEncoder {
    pub fn new(store: EmbeddingStore) -> Self {
        EmbeddingFileEncoder { store }
    }
}

impl Encoder for EmbeddingFileEncoder {
    fn dim(&self) -> usize {
        self.store.dim()
    }

    fn encode(&self, sentence: &TokenizedSentence) -> Result<RepresentationMatrix> {
        let rows = (0..sentence.tokens.len())
            .map(|tok_idx| {
                self.store
                    .get(&sentence.doc_id, sentence.sentence_index, tok_idx)
                    .map(|v| FeatureRow::Dense(v.to_vec()))
                    .ok_or_else(|| Error::MissingEmbedding {
                        doc_id: sentence.doc_id.clone(),
                        sentence_index: sentence.sentence_index,
                        token_index: tok_idx,
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RepresentationMatrix { dim: self.store.dim(), rows })
    }

    /// Path-independent on purpose: a model trained against one sidecar can
    /// be applied with another file of the same dimension (e.g. vectors for
    /// a new corpus from the same upstream encoder).
    fn digest(&self) -> String {
        format!("embedding/dim={}", self.store.dim())
    }
}
