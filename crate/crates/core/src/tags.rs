//! Tag schemes for span ↔ label-sequence conversion.
//!
//! Two schemes are supported: BIO (Begin/Inside/Outside) and BMEO
//! (Begin/Middle/End/Outside). Labels are indexed densely — `O` is always 0,
//! followed by the per-type labels in mutation-type declaration order — so
//! tagger weight matrices can be addressed by label index.
//!
//! BMEO has no dedicated single-token tag; a one-token mention is encoded as
//! a lone `B-t`, and decoding treats a `B-t` not continued by `M-t`/`E-t` as
//! a complete mention. `repair` enforces the predecessor constraint
//! (promote-to-B) and closes unterminated `B (M)*` runs by ending them at
//! their last middle token, so any sequence decodes after repair.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{MutationType, TokenSpan};
use crate::error::{Error, Result};

/// Which label alphabet a sequence uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagScheme {
    Bio,
    Bmeo,
}

impl TagScheme {
    /// Labels per mutation type (besides the shared `O`).
    fn per_type(self) -> usize {
        match self {
            TagScheme::Bio => 2,
            TagScheme::Bmeo => 3,
        }
    }

    /// Total number of labels: 15 for BIO, 22 for BMEO.
    pub fn label_count(self) -> usize {
        1 + self.per_type() * MutationType::ALL.len()
    }

    /// All labels in index order.
    pub fn labels(self) -> Vec<Tag> {
        (0..self.label_count()).map(|i| Tag::from_index(self, i)).collect()
    }

    /// All label names in index order (`O`, `B-Sub`, …).
    pub fn label_names(self) -> Vec<String> {
        self.labels().iter().map(Tag::name).collect()
    }
}

impl fmt::Display for TagScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TagScheme::Bio => "bio",
            TagScheme::Bmeo => "bmeo",
        })
    }
}

impl FromStr for TagScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bio" | "BIO" => Ok(TagScheme::Bio),
            "bmeo" | "BMEO" => Ok(TagScheme::Bmeo),
            other => Err(Error::Config(format!("unknown tag scheme {other:?}"))),
        }
    }
}

/// One token's label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    O,
    B(MutationType),
    I(MutationType),
    M(MutationType),
    E(MutationType),
}

impl Tag {
    /// Dense index under `scheme`. `O` is 0; a type's labels are contiguous.
    pub fn index(self, scheme: TagScheme) -> usize {
        let per = scheme.per_type();
        match (scheme, self) {
            (_, Tag::O) => 0,
            (_, Tag::B(t)) => 1 + per * t.index(),
            (TagScheme::Bio, Tag::I(t)) => 2 + per * t.index(),
            (TagScheme::Bmeo, Tag::M(t)) => 2 + per * t.index(),
            (TagScheme::Bmeo, Tag::E(t)) => 3 + per * t.index(),
            (scheme, tag) => panic!("label {tag:?} does not belong to scheme {scheme}"),
        }
    }

    /// Inverse of [`Tag::index`].
    pub fn from_index(scheme: TagScheme, index: usize) -> Tag {
        assert!(index < scheme.label_count(), "label index {index} out of range");
        if index == 0 {
            return Tag::O;
        }
        let per = scheme.per_type();
        let t = MutationType::ALL[(index - 1) / per];
        match ((index - 1) % per, scheme) {
            (0, _) => Tag::B(t),
            (1, TagScheme::Bio) => Tag::I(t),
            (1, TagScheme::Bmeo) => Tag::M(t),
            (2, TagScheme::Bmeo) => Tag::E(t),
            _ => unreachable!(),
        }
    }

    /// Conventional name: `O`, `B-Sub`, `I-Del`, `M-SNP`, `E-FS`, …
    pub fn name(&self) -> String {
        match self {
            Tag::O => "O".into(),
            Tag::B(t) => format!("B-{}", t.short_name()),
            Tag::I(t) => format!("I-{}", t.short_name()),
            Tag::M(t) => format!("M-{}", t.short_name()),
            Tag::E(t) => format!("E-{}", t.short_name()),
        }
    }

    /// The mutation type this label marks, if any.
    pub fn mutation_type(self) -> Option<MutationType> {
        match self {
            Tag::O => None,
            Tag::B(t) | Tag::I(t) | Tag::M(t) | Tag::E(t) => Some(t),
        }
    }

    pub fn belongs_to(self, scheme: TagScheme) -> bool {
        match self {
            Tag::O | Tag::B(_) => true,
            Tag::I(_) => scheme == TagScheme::Bio,
            Tag::M(_) | Tag::E(_) => scheme == TagScheme::Bmeo,
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(Tag::O);
        }
        let (prefix, tail) = s
            .split_once('-')
            .ok_or_else(|| Error::BadTag(s.to_string()))?;
        let t: MutationType = tail.parse().map_err(|_| Error::BadTag(s.to_string()))?;
        match prefix {
            "B" => Ok(Tag::B(t)),
            "I" => Ok(Tag::I(t)),
            "M" => Ok(Tag::M(t)),
            "E" => Ok(Tag::E(t)),
            _ => Err(Error::BadTag(s.to_string())),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// A per-token label sequence under a fixed scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSequence {
    pub scheme: TagScheme,
    pub tags: Vec<Tag>,
}

impl TagSequence {
    pub fn new(scheme: TagScheme, tags: Vec<Tag>) -> Result<Self> {
        if let Some(bad) = tags.iter().find(|t| !t.belongs_to(scheme)) {
            return Err(Error::SchemeMismatch {
                expected: scheme.to_string(),
                got: bad.name(),
            });
        }
        Ok(TagSequence { scheme, tags })
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Label indices, for the taggers.
    pub fn indices(&self) -> Vec<usize> {
        self.tags.iter().map(|t| t.index(self.scheme)).collect()
    }

    /// Rebuild from label indices.
    pub fn from_indices(scheme: TagScheme, indices: &[usize]) -> TagSequence {
        let tags = indices.iter().map(|&i| Tag::from_index(scheme, i)).collect();
        TagSequence { scheme, tags }
    }

    /// Structural validity: every mention is well-formed under the scheme's
    /// grammar (BIO: `B I*`; BMEO: `B M* E` or a lone `B`).
    pub fn is_valid(&self) -> bool {
        match self.scheme {
            TagScheme::Bio => self.tags.iter().scan(Tag::O, |prev, &tag| {
                let ok = match tag {
                    Tag::I(t) => matches!(*prev, Tag::B(p) | Tag::I(p) if p == t),
                    _ => true,
                };
                *prev = tag;
                Some(ok)
            }).all(|ok| ok),
            TagScheme::Bmeo => {
                let mut prev = Tag::O;
                for &tag in &self.tags {
                    let compatible = |t| matches!(prev, Tag::B(p) | Tag::M(p) if p == t);
                    match tag {
                        Tag::M(t) | Tag::E(t) if !compatible(t) => return false,
                        _ => {}
                    }
                    // A lone B (followed by O or another B) is fine, but an
                    // M-run must be closed by E before anything else starts.
                    if matches!(prev, Tag::M(_)) && !matches!(tag, Tag::M(_) | Tag::E(_)) {
                        return false;
                    }
                    prev = tag;
                }
                // a trailing M leaves its mention unterminated
                !matches!(prev, Tag::M(_))
            }
        }
    }

    /// Left-to-right repair producing a valid sequence. First pass: a
    /// continuation label whose repaired predecessor is incompatible is
    /// promoted to `B-t`. Second pass (BMEO only): an `M-t` not followed by
    /// `M-t`/`E-t` closes its run as `E-t`, so no mention is left
    /// unterminated. Valid sequences are returned unchanged; the result is a
    /// fixpoint of `repair` and decodes to the same spans as the input.
    pub fn repair(&self) -> TagSequence {
        let mut out = Vec::with_capacity(self.tags.len());
        let mut prev = Tag::O;
        for &tag in &self.tags {
            let repaired = match tag {
                Tag::I(t) if !matches!(prev, Tag::B(p) | Tag::I(p) if p == t) => Tag::B(t),
                Tag::M(t) if !matches!(prev, Tag::B(p) | Tag::M(p) if p == t) => Tag::B(t),
                Tag::E(t) if !matches!(prev, Tag::B(p) | Tag::M(p) if p == t) => Tag::B(t),
                other => other,
            };
            out.push(repaired);
            prev = repaired;
        }
        if self.scheme == TagScheme::Bmeo {
            for i in 0..out.len() {
                let Tag::M(t) = out[i] else { continue };
                let continued = out
                    .get(i + 1)
                    .is_some_and(|&next| next == Tag::M(t) || next == Tag::E(t));
                if !continued {
                    out[i] = Tag::E(t);
                }
            }
        }
        TagSequence { scheme: self.scheme, tags: out }
    }

    /// Decodes the sequence into token spans, repairing it first.
    pub fn to_spans(&self) -> Vec<TokenSpan> {
        let repaired = self.repair();
        let tags = &repaired.tags;
        let mut spans = Vec::new();
        let mut i = 0;
        while i < tags.len() {
            let Tag::B(t) = tags[i] else {
                i += 1;
                continue;
            };
            let start = i;
            let mut end = i;
            match self.scheme {
                TagScheme::Bio => {
                    while end + 1 < tags.len() && tags[end + 1] == Tag::I(t) {
                        end += 1;
                    }
                }
                TagScheme::Bmeo => {
                    while end + 1 < tags.len() && tags[end + 1] == Tag::M(t) {
                        end += 1;
                    }
                    if end + 1 < tags.len() && tags[end + 1] == Tag::E(t) {
                        end += 1;
                    }
                }
            }
            spans.push(TokenSpan::new(start, end, t));
            i = end + 1;
        }
        spans
    }

    /// Maps a BMEO sequence into BIO: `M-t`/`E-t` become `I-t`. The decoded
    /// span set is preserved exactly.
    pub fn bmeo_to_bio(&self) -> Result<TagSequence> {
        if self.scheme != TagScheme::Bmeo {
            return Err(Error::SchemeMismatch {
                expected: TagScheme::Bmeo.to_string(),
                got: self.scheme.to_string(),
            });
        }
        let tags = self
            .tags
            .iter()
            .map(|&t| match t {
                Tag::M(t) | Tag::E(t) => Tag::I(t),
                other => other,
            })
            .collect();
        Ok(TagSequence { scheme: TagScheme::Bio, tags })
    }
}

/// Encodes non-overlapping token spans as a tag sequence over `len` tokens.
pub fn spans_to_tags(len: usize, spans: &[TokenSpan], scheme: TagScheme) -> Result<TagSequence> {
    let mut tags = vec![Tag::O; len];
    for span in spans {
        if span.end >= len || span.start > span.end {
            return Err(Error::SpanOutOfRange {
                start: span.start,
                end: span.end,
                len,
            });
        }
        for i in span.start..=span.end {
            if tags[i] != Tag::O {
                return Err(Error::OverlappingSpans { token: i });
            }
            let single = span.start == span.end;
            tags[i] = match scheme {
                _ if i == span.start => Tag::B(span.mtype),
                TagScheme::Bio => Tag::I(span.mtype),
                TagScheme::Bmeo if i == span.end && !single => Tag::E(span.mtype),
                TagScheme::Bmeo => Tag::M(span.mtype),
            };
        }
    }
    Ok(TagSequence { scheme, tags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use MutationType::{Deletion as Del, Snp, Substitution as Sub};

    fn seq(scheme: TagScheme, tags: Vec<Tag>) -> TagSequence {
        TagSequence::new(scheme, tags).unwrap()
    }

    #[test]
    fn label_counts() {
        assert_eq!(TagScheme::Bio.label_count(), 15);
        assert_eq!(TagScheme::Bmeo.label_count(), 22);
    }

    #[test]
    fn index_round_trip_all_labels() {
        for scheme in [TagScheme::Bio, TagScheme::Bmeo] {
            for i in 0..scheme.label_count() {
                let tag = Tag::from_index(scheme, i);
                assert_eq!(tag.index(scheme), i);
                let name = tag.name();
                assert_eq!(name.parse::<Tag>().unwrap(), tag);
            }
        }
    }

    #[test]
    fn outside_is_zero_and_order_is_stable() {
        assert_eq!(Tag::O.index(TagScheme::Bio), 0);
        assert_eq!(
            TagScheme::Bio.label_names()[..3],
            ["O".to_string(), "B-Sub".to_string(), "I-Sub".to_string()]
        );
        assert_eq!(
            TagScheme::Bmeo.label_names()[..4],
            ["O".to_string(), "B-Sub".to_string(), "M-Sub".to_string(), "E-Sub".to_string()]
        );
    }

    #[test]
    fn encodes_three_token_mention() {
        let spans = [TokenSpan::new(0, 2, Sub)];
        let bio = spans_to_tags(3, &spans, TagScheme::Bio).unwrap();
        assert_eq!(bio.tags, [Tag::B(Sub), Tag::I(Sub), Tag::I(Sub)]);
        let bmeo = spans_to_tags(3, &spans, TagScheme::Bmeo).unwrap();
        assert_eq!(bmeo.tags, [Tag::B(Sub), Tag::M(Sub), Tag::E(Sub)]);
    }

    #[test]
    fn encodes_short_mentions_in_bmeo() {
        let two = spans_to_tags(2, &[TokenSpan::new(0, 1, Snp)], TagScheme::Bmeo).unwrap();
        assert_eq!(two.tags, [Tag::B(Snp), Tag::E(Snp)]);
        let single = spans_to_tags(2, &[TokenSpan::new(1, 1, Snp)], TagScheme::Bmeo).unwrap();
        assert_eq!(single.tags, [Tag::O, Tag::B(Snp)]);
    }

    #[test]
    fn encode_rejects_bad_spans() {
        let out_of_range = spans_to_tags(2, &[TokenSpan::new(1, 2, Sub)], TagScheme::Bio);
        assert!(matches!(out_of_range, Err(Error::SpanOutOfRange { .. })));
        let overlapping = spans_to_tags(
            4,
            &[TokenSpan::new(0, 2, Sub), TokenSpan::new(2, 3, Del)],
            TagScheme::Bio,
        );
        assert!(matches!(overlapping, Err(Error::OverlappingSpans { token: 2 })));
    }

    #[test]
    fn decodes_bio() {
        let s = seq(TagScheme::Bio, vec![Tag::B(Sub), Tag::I(Sub), Tag::I(Sub)]);
        assert_eq!(s.to_spans(), [TokenSpan::new(0, 2, Sub)]);
        let empty = seq(TagScheme::Bio, vec![Tag::O, Tag::O, Tag::O]);
        assert_eq!(empty.to_spans(), []);
    }

    #[test]
    fn decodes_bmeo_with_lone_b() {
        let s = seq(TagScheme::Bmeo, vec![Tag::B(Del), Tag::E(Del), Tag::O, Tag::B(Snp)]);
        assert_eq!(
            s.to_spans(),
            [TokenSpan::new(0, 1, Del), TokenSpan::new(3, 3, Snp)]
        );
    }

    #[test]
    fn adjacent_mentions_stay_separate() {
        let s = seq(TagScheme::Bio, vec![Tag::B(Sub), Tag::B(Sub), Tag::I(Sub)]);
        assert_eq!(
            s.to_spans(),
            [TokenSpan::new(0, 0, Sub), TokenSpan::new(1, 2, Sub)]
        );
    }

    #[test]
    fn repair_promotes_orphans() {
        let s = seq(TagScheme::Bio, vec![Tag::O, Tag::I(Sub)]);
        assert_eq!(s.repair().tags, [Tag::O, Tag::B(Sub)]);
        let s = seq(TagScheme::Bio, vec![Tag::I(Del), Tag::I(Sub)]);
        assert_eq!(s.repair().tags, [Tag::B(Del), Tag::B(Sub)]);
        let s = seq(TagScheme::Bmeo, vec![Tag::O, Tag::M(Sub), Tag::E(Sub)]);
        assert_eq!(s.repair().tags, [Tag::O, Tag::B(Sub), Tag::E(Sub)]);
        let s = seq(TagScheme::Bmeo, vec![Tag::E(Snp)]);
        assert_eq!(s.repair().tags, [Tag::B(Snp)]);
    }

    #[test]
    fn repair_uses_repaired_predecessor() {
        // after the first I-Sub is promoted to B-Sub, the second one is valid
        let s = seq(TagScheme::Bio, vec![Tag::I(Sub), Tag::I(Sub)]);
        assert_eq!(s.repair().tags, [Tag::B(Sub), Tag::I(Sub)]);
    }

    #[test]
    fn repair_is_identity_on_valid_and_idempotent() {
        let valid = seq(
            TagScheme::Bmeo,
            vec![Tag::B(Sub), Tag::M(Sub), Tag::E(Sub), Tag::O, Tag::B(Del)],
        );
        assert!(valid.is_valid());
        assert_eq!(valid.repair(), valid);

        let broken = seq(TagScheme::Bmeo, vec![Tag::M(Sub), Tag::E(Del), Tag::E(Sub)]);
        let once = broken.repair();
        assert_eq!(once.repair(), once);
    }

    #[test]
    fn repair_closes_unterminated_middle_runs() {
        // trailing M becomes E, preserving the decoded span
        let s = seq(TagScheme::Bmeo, vec![Tag::B(Sub), Tag::M(Sub)]);
        let fixed = s.repair();
        assert_eq!(fixed.tags, [Tag::B(Sub), Tag::E(Sub)]);
        assert!(fixed.is_valid());
        assert_eq!(s.to_spans(), fixed.to_spans());

        // an interrupted run closes at its last middle token
        let s = seq(TagScheme::Bmeo, vec![Tag::B(Sub), Tag::M(Sub), Tag::O]);
        let fixed = s.repair();
        assert_eq!(fixed.tags, [Tag::B(Sub), Tag::E(Sub), Tag::O]);
        assert!(fixed.is_valid());
        assert_eq!(fixed.to_spans(), [TokenSpan::new(0, 1, Sub)]);

        // promotion then closure: the foreign middle starts its own mention
        let s = seq(TagScheme::Bmeo, vec![Tag::B(Sub), Tag::M(Sub), Tag::M(Del)]);
        let fixed = s.repair();
        assert_eq!(fixed.tags, [Tag::B(Sub), Tag::E(Sub), Tag::B(Del)]);
        assert!(fixed.is_valid());
    }

    #[test]
    fn validity_checks() {
        assert!(seq(TagScheme::Bio, vec![Tag::B(Sub), Tag::I(Sub)]).is_valid());
        assert!(!seq(TagScheme::Bio, vec![Tag::O, Tag::I(Sub)]).is_valid());
        assert!(!seq(TagScheme::Bio, vec![Tag::B(Del), Tag::I(Sub)]).is_valid());
        assert!(seq(TagScheme::Bmeo, vec![Tag::B(Snp)]).is_valid());
        assert!(seq(TagScheme::Bmeo, vec![Tag::B(Sub), Tag::M(Sub), Tag::E(Sub)]).is_valid());
        // unterminated middle run
        assert!(!seq(TagScheme::Bmeo, vec![Tag::B(Sub), Tag::M(Sub)]).is_valid());
        assert!(!seq(TagScheme::Bmeo, vec![Tag::B(Sub), Tag::M(Sub), Tag::O]).is_valid());
        // E must follow B/M of the same type
        assert!(!seq(TagScheme::Bmeo, vec![Tag::B(Sub), Tag::E(Del)]).is_valid());
        assert!(!seq(TagScheme::Bmeo, vec![Tag::O, Tag::E(Sub)]).is_valid());
    }

    #[test]
    fn unterminated_middle_run_decodes_to_its_last_token() {
        let s = seq(TagScheme::Bmeo, vec![Tag::B(Sub), Tag::M(Sub), Tag::O]);
        assert_eq!(s.to_spans(), [TokenSpan::new(0, 1, Sub)]);
    }

    #[test]
    fn bmeo_to_bio_maps_labels() {
        let s = seq(TagScheme::Bmeo, vec![Tag::B(Sub), Tag::M(Sub), Tag::E(Sub)]);
        let bio = s.bmeo_to_bio().unwrap();
        assert_eq!(bio.scheme, TagScheme::Bio);
        assert_eq!(bio.tags, [Tag::B(Sub), Tag::I(Sub), Tag::I(Sub)]);

        let all_o = seq(TagScheme::Bmeo, vec![Tag::O, Tag::O]);
        assert_eq!(all_o.bmeo_to_bio().unwrap().tags, [Tag::O, Tag::O]);

        let wrong = seq(TagScheme::Bio, vec![Tag::O]);
        assert!(wrong.bmeo_to_bio().is_err());
    }

    #[test]
    fn scheme_mismatch_rejected_at_construction() {
        assert!(TagSequence::new(TagScheme::Bio, vec![Tag::M(Sub)]).is_err());
        assert!(TagSequence::new(TagScheme::Bmeo, vec![Tag::I(Sub)]).is_err());
    }

    /// Random non-overlapping sorted span sets over a sentence length.
    fn random_spans(rng: &mut ChaCha8Rng, len: usize) -> Vec<TokenSpan> {
        let mut spans = Vec::new();
        let mut i = 0;
        while i < len {
            if rng.gen_bool(0.35) {
                let max = (len - i).min(4);
                let width = rng.gen_range(1..=max);
                let t = MutationType::ALL[rng.gen_range(0..MutationType::ALL.len())];
                spans.push(TokenSpan::new(i, i + width - 1, t));
                i += width;
            } else {
                i += 1;
            }
        }
        spans
    }

    #[test]
    fn encode_decode_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let len = rng.gen_range(1..20);
            let spans = random_spans(&mut rng, len);
            for scheme in [TagScheme::Bio, TagScheme::Bmeo] {
                let encoded = spans_to_tags(len, &spans, scheme).unwrap();
                assert!(encoded.is_valid(), "{:?}", encoded.tags);
                assert_eq!(encoded.to_spans(), spans, "scheme {scheme}");
            }
        }
    }

    #[test]
    fn bmeo_to_bio_preserves_spans_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let len = rng.gen_range(1..20);
            let spans = random_spans(&mut rng, len);
            let bmeo = spans_to_tags(len, &spans, TagScheme::Bmeo).unwrap();
            assert_eq!(bmeo.bmeo_to_bio().unwrap().to_spans(), bmeo.to_spans());
        }
    }
}
