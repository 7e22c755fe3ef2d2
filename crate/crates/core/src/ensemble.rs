//! Token-level majority voting over the three prediction streams.
//!
//! All three streams vote in BIO space (the BMEO tagger's output is
//! converted first, the span decoder's output is rendered as BIO). A label
//! backed by at least two streams wins its token; a three-way disagreement
//! falls back to the CRF-BIO stream — the only voter whose raw output is
//! already structurally constrained BIO. The voted sequence is then
//! repaired, so the result is always valid.

use crate::error::{Error, Result};
use crate::tags::{TagScheme, TagSequence};

/// The three aligned BIO streams for one sentence.
#[derive(Debug, Clone)]
pub struct VoteInput {
    pub crf_bio: TagSequence,
    /// CRF-BMEO output after `bmeo_to_bio`.
    pub crf_bmeo: TagSequence,
    /// Span-decoder output rendered as BIO.
    pub span: TagSequence,
}

impl VoteInput {
    fn validate(&self) -> Result<()> {
        for (name, seq) in [
            ("crf_bio", &self.crf_bio),
            ("crf_bmeo", &self.crf_bmeo),
            ("span", &self.span),
        ] {
            if seq.scheme != TagScheme::Bio {
                return Err(Error::SchemeMismatch {
                    expected: TagScheme::Bio.to_string(),
                    got: format!("{} for voter {name}", seq.scheme),
                });
            }
        }
        if self.crf_bmeo.len() != self.crf_bio.len() || self.span.len() != self.crf_bio.len() {
            return Err(Error::LengthMismatch(format!(
                "voters disagree on sentence length: crf_bio {}, crf_bmeo {}, span {}",
                self.crf_bio.len(),
                self.crf_bmeo.len(),
                self.span.len()
            )));
        }
        Ok(())
    }
}

/// Raw per-token vote, before repair. Exposed so the majority rule can be
/// checked independently of the repair pass.
pub fn token_vote(input: &VoteInput) -> Result<TagSequence> {
    input.validate()?;
    let tags = input
        .crf_bio
        .tags
        .iter()
        .zip(&input.crf_bmeo.tags)
        .zip(&input.span.tags)
        .map(|((&a, &b), &c)| {
            if a == b || a == c {
                a
            } else if b == c {
                b
            } else {
                a // three-way disagreement: the crf_bio stream decides
            }
        })
        .collect();
    TagSequence::new(TagScheme::Bio, tags)
}

/// The ensemble prediction: token-level majority, then repair.
pub fn majority_vote(input: &VoteInput) -> Result<TagSequence> {
    Ok(token_vote(input)?.repair())
}
