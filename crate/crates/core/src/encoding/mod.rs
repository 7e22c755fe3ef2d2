//! Per-token representations consumed by both taggers.
//!
//! Each sentence becomes a [`RepresentationMatrix`] — one row per token —
//! produced by an [`Encoder`]. Two encoders are built in: a self-contained
//! orthographic feature hasher and a loader for precomputed embeddings kept
//! in a sidecar file. Downstream code only multiplies rows against weight
//! matrices, so it never cares which encoder produced them.

mod orthographic;
mod sidecar;

use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenizedSentence;
use crate::error::{Error, Result};

pub use orthographic::OrthographicEncoder;
pub use sidecar::{read_embedding_sidecar, EmbeddingFileEncoder, EmbeddingStore};

/// One token's representation: hashed binary features or a stored vector.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureRow {
    /// Sorted, deduplicated feature indices, each contributing `value`
    /// (1.0 except under dropout rescaling).
    Sparse { indices: Vec<u32>, value: f64 },
    Dense(Vec<f64>),
}

/// The per-sentence matrix H: one row per token, `dim` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationMatrix {
    pub dim: usize,
    pub rows: Vec<FeatureRow>,
}

impl RepresentationMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Multiplies every row against a `dim × n_out` weight matrix stored
    /// row-major by feature (`w[feature * n_out + output]`), producing one
    /// logit vector per token.
    pub fn project(&self, w: &[f64], n_out: usize) -> Vec<Vec<f64>> {
        assert_eq!(w.len(), self.dim * n_out, "weight shape mismatch");
        self.rows
            .iter()
            .map(|row| {
                let mut out = vec![0.0; n_out];
                match row {
                    FeatureRow::Sparse { indices, value } => {
                        for &i in indices {
                            let base = i as usize * n_out;
                            for (j, o) in out.iter_mut().enumerate() {
                                *o += value * w[base + j];
                            }
                        }
                    }
                    FeatureRow::Dense(x) => {
                        for (i, &xi) in x.iter().enumerate() {
                            if xi == 0.0 {
                                continue;
                            }
                            let base = i * n_out;
                            for (j, o) in out.iter_mut().enumerate() {
                                *o += xi * w[base + j];
                            }
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// Adds the outer product `row ⊗ coeff` into a gradient of the same
    /// `dim × n_out` layout as [`RepresentationMatrix::project`] uses.
    pub fn accumulate_outer(&self, row: usize, coeff: &[f64], grad: &mut [f64]) {
        let n_out = coeff.len();
        assert_eq!(grad.len(), self.dim * n_out, "gradient shape mismatch");
        match &self.rows[row] {
            FeatureRow::Sparse { indices, value } => {
                for &i in indices {
                    let base = i as usize * n_out;
                    for (j, &c) in coeff.iter().enumerate() {
                        grad[base + j] += value * c;
                    }
                }
            }
            FeatureRow::Dense(x) => {
                for (i, &xi) in x.iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    let base = i * n_out;
                    for (j, &c) in coeff.iter().enumerate() {
                        grad[base + j] += xi * c;
                    }
                }
            }
        }
    }

    /// Inverted dropout: keeps each component with probability `1 - p` and
    /// rescales survivors by `1 / (1 - p)` so expectations are unchanged.
    pub fn dropout(&self, p: f64, rng: &mut impl Rng) -> RepresentationMatrix {
        assert!((0.0..1.0).contains(&p), "dropout rate must be in [0,1)");
        if p == 0.0 {
            return self.clone();
        }
        let scale = 1.0 / (1.0 - p);
        let rows = self
            .rows
            .iter()
            .map(|row| match row {
                FeatureRow::Sparse { indices, value } => FeatureRow::Sparse {
                    indices: indices.iter().copied().filter(|_| !rng.gen_bool(p)).collect(),
                    value: value * scale,
                },
                FeatureRow::Dense(x) => FeatureRow::Dense(
                    x.iter()
                        .map(|&v| if rng.gen_bool(p) { 0.0 } else { v * scale })
                        .collect(),
                ),
            })
            .collect();
        RepresentationMatrix { dim: self.dim, rows }
    }
}

/// Turns sentences into representation matrices. Implementations are
/// immutable once built, so `encode` is safe to call concurrently.
pub trait Encoder: Send + Sync {
    /// Number of columns every produced matrix has.
    fn dim(&self) -> usize;

    fn encode(&self, sentence: &TokenizedSentence) -> Result<RepresentationMatrix>;

    /// Short fingerprint stored inside model files so a model is never
    /// applied with a differently-configured encoder.
    fn digest(&self) -> String;
}

fn default_hash_bits() -> u32 {
    18
}

/// Declarative encoder selection, as it appears in run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EncoderConfig {
    Orthographic {
        #[serde(default = "default_hash_bits")]
        hash_bits: u32,
        /// Defaults to the run seed when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    EmbeddingFile { path: PathBuf },
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig::Orthographic {
            hash_bits: default_hash_bits(),
            seed: None,
        }
    }
}

impl EncoderConfig {
    /// Instantiates the encoder; `run_seed` fills an unset orthographic seed.
    pub fn build(&self, run_seed: u64) -> Result<Box<dyn Encoder>> {
        match self {
            EncoderConfig::Orthographic { hash_bits, seed } => {
                if !(4..=30).contains(hash_bits) {
                    return Err(Error::Config(format!(
                        "hash_bits must be between 4 and 30, got {hash_bits}"
                    )));
                }
                Ok(Box::new(OrthographicEncoder::new(
                    *hash_bits,
                    seed.unwrap_or(run_seed),
                )))
            }
            EncoderConfig::EmbeddingFile { path } => {
                let store = read_embedding_sidecar(path)?;
                Ok(Box::new(EmbeddingFileEncoder::new(store)))
            }
        }
    }
}
