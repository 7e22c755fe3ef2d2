//! Cross-corpus training-set expansion.
//!
//! A dictionary of case-folded mention tokens is collected across all input
//! corpora. The expanded training set keeps every positive sentence (one
//! with at least one gold span) and keeps a negative sentence only when at
//! least one of its tokens hits the dictionary — negatives that share
//! surface material with known mentions are the hard cases worth training
//! on; the rest are dropped.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::TokenizedSentence;
use crate::error::{Error, Result};

/// Case-folded mention-token dictionary with occurrence counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MentionDictionary {
    counts: BTreeMap<String, usize>,
}

impl MentionDictionary {
    /// Collects every token of every gold span across all corpora,
    /// case-folded; counts are total occurrences.
    pub fn build(corpora: &[&[TokenizedSentence]]) -> MentionDictionary {
        let mut counts = BTreeMap::new();
        for corpus in corpora {
            for sentence in *corpus {
                for span in &sentence.gold_spans {
                    for token in &sentence.tokens[span.start..=span.end] {
                        *counts.entry(token.surface.to_lowercase()).or_insert(0) += 1;
                    }
                }
            }
        }
        MentionDictionary { counts }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.counts.contains_key(&token.to_lowercase())
    }

    pub fn count(&self, token: &str) -> usize {
        self.counts.get(&token.to_lowercase()).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// One `token<TAB>count` line per entry, sorted by token.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (token, count) in &self.counts {
            out.push_str(token);
            out.push('\t');
            out.push_str(&count.to_string());
            out.push('\n');
        }
        out
    }

    /// Inverse of [`MentionDictionary::serialize`].
    pub fn parse(input: &str) -> Result<MentionDictionary> {
        let mut counts = BTreeMap::new();
        for (idx, line) in input.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let Some((token, count)) = line.split_once('\t') else {
                return Err(Error::Malformed {
                    line: idx + 1,
                    msg: "expected token<TAB>count".into(),
                });
            };
            let count: usize = count.parse().map_err(|_| Error::Malformed {
                line: idx + 1,
                msg: format!("bad count {count:?}"),
            })?;
            counts.insert(token.to_lowercase(), count);
        }
        Ok(MentionDictionary { counts })
    }
}

/// Per-corpus expansion bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub corpus: String,
    pub positives: usize,
    pub negatives_kept: usize,
    pub negatives_dropped: usize,
}

/// A sentence retained by expansion, tagged with its source corpus.
#[derive(Debug, Clone)]
pub struct ExpandedSentence {
    pub corpus: String,
    pub sentence: TokenizedSentence,
}

/// The expanded training set.
#[derive(Debug, Clone, Default)]
pub struct ExpandedDataset {
    pub sentences: Vec<ExpandedSentence>,
    pub stats: Vec<CorpusStats>,
}

/// Filters the corpora against the dictionary: all positives, plus only the
/// negatives with at least one dictionary token. Corpus and sentence order
/// are preserved.
pub fn expand(
    corpora: &[(&str, &[TokenizedSentence])],
    dict: &MentionDictionary,
) -> ExpandedDataset {
    let mut out = ExpandedDataset::default();
    for (name, sentences) in corpora {
        let mut stats = CorpusStats {
            corpus: name.to_string(),
            positives: 0,
            negatives_kept: 0,
            negatives_dropped: 0,
        };
        for sentence in *sentences {
            let keep = if sentence.is_positive() {
                stats.positives += 1;
                true
            } else if sentence.tokens.iter().any(|t| dict.contains(&t.surface)) {
                stats.negatives_kept += 1;
                true
            } else {
                stats.negatives_dropped += 1;
                false
            };
            if keep {
                out.sentences.push(ExpandedSentence {
                    corpus: name.to_string(),
                    sentence: sentence.clone(),
                });
            }
        }
        out.stats.push(stats);
    }
    out
}
