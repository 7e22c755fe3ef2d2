//! Corpus data model: documents with character-offset mutation annotations,
//! tokenization, sentence splitting, and mention-to-token alignment.

mod pubtator;
mod sentences;
mod tokenize;

pub use pubtator::{parse_pubtator, write_pubtator};
pub use sentences::{align_mentions, split_sentences};
pub use tokenize::tokenize;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seven-way mutation taxonomy. Annotation types outside this set are
/// rejected at load time unless an alias maps them in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MutationType {
    Substitution,
    Deletion,
    Insertion,
    Duplication,
    InDel,
    Snp,
    FrameShift,
}

impl MutationType {
    pub const ALL: [MutationType; 7] = [
        MutationType::Substitution,
        MutationType::Deletion,
        MutationType::Insertion,
        MutationType::Duplication,
        MutationType::InDel,
        MutationType::Snp,
        MutationType::FrameShift,
    ];

    /// Short form used in tag symbols and corpus files ("Sub", "FS", ...).
    pub fn short_name(self) -> &'static str {
        match self {
            MutationType::Substitution => "Sub",
            MutationType::Deletion => "Del",
            MutationType::Insertion => "Ins",
            MutationType::Duplication => "Dup",
            MutationType::InDel => "InDel",
            MutationType::Snp => "SNP",
            MutationType::FrameShift => "FS",
        }
    }

    /// Canonical long form used in reports.
    pub fn long_name(self) -> &'static str {
        match self {
            MutationType::Substitution => "Substitution",
            MutationType::Deletion => "Deletion",
            MutationType::Insertion => "Insertion",
            MutationType::Duplication => "Duplication",
            MutationType::InDel => "InDel",
            MutationType::Snp => "SNP",
            MutationType::FrameShift => "FrameShift",
        }
    }

    /// Position in [`MutationType::ALL`].
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|t| *t == self).unwrap()
    }
}

impl fmt::Display for MutationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.long_name())
    }
}

impl FromStr for MutationType {
    type Err = Error;

    /// Parses canonical names only (long or short form). Corpus-specific
    /// spellings go through an [`AliasTable`].
    fn from_str(s: &str) -> Result<Self> {
        for t in MutationType::ALL {
            if s == t.long_name() || s == t.short_name() {
                return Ok(t);
            }
        }
        Err(Error::BadMutationType(s.to_string()))
    }
}

/// A character-offset annotation inside a document. `start` is inclusive,
/// `end` exclusive, both counted in chars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub mtype: MutationType,
}

/// A text unit (title + abstract joined by a newline) with its mentions,
/// sorted by start offset and non-overlapping after load-time resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub mentions: Vec<Mention>,
}

impl Document {
    /// Substring by char offsets (annotation offsets count chars, not bytes).
    pub fn char_slice(&self, start: usize, end: usize) -> String {
        char_slice(&self.text, start, end)
    }
}

pub(crate) fn char_slice(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end.saturating_sub(start)).collect()
}

/// One token with its absolute char offsets into the document text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

/// A token span, `start..=end` inclusive, carrying a mutation type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenSpan {
    pub start: usize,
    /// Inclusive index of the last token in the span.
    pub end: usize,
    pub mtype: MutationType,
}

impl TokenSpan {
    pub fn new(start: usize, end: usize, mtype: MutationType) -> Self {
        TokenSpan { start, end, mtype }
    }

    pub fn overlaps(&self, other: &TokenSpan) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// A tokenized sentence with gold mention spans resolved to token ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedSentence {
    pub doc_id: String,
    pub sentence_index: usize,
    pub tokens: Vec<Token>,
    pub gold_spans: Vec<TokenSpan>,
}

impl TokenizedSentence {
    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn is_positive(&self) -> bool {
        !self.gold_spans.is_empty()
    }
}

/// Non-fatal problem recorded while loading or aligning a corpus. The
/// affected annotation is dropped; the document is still loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based input line when known, 0 otherwise.
    pub line: usize,
    pub doc_id: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: doc {}: {}", self.line, self.doc_id, self.message)
        } else {
            write!(f, "doc {}: {}", self.doc_id, self.message)
        }
    }
}

/// Maps corpus-specific type spellings to the canonical taxonomy.
/// Lookup is case-insensitive; canonical names are always present.
#[derive(Debug, Clone)]
pub struct AliasTable {
    map: HashMap<String, MutationType>,
}

/// The alias table shipped with the crate, covering the short and long
/// canonical spellings.
const BUILTIN_ALIASES: &str = include_str!("../../assets/type_aliases.tsv");

impl Default for AliasTable {
    fn default() -> Self {
        AliasTable::parse(BUILTIN_ALIASES).expect("builtin alias table parses")
    }
}

impl AliasTable {
    /// Parses `alias<TAB>canonical` lines; `#` starts a comment, blank lines
    /// are skipped. Later entries override earlier ones.
    pub fn parse(text: &str) -> Result<AliasTable> {
        let mut table = AliasTable { map: HashMap::new() };
        for t in MutationType::ALL {
            table.map.insert(t.long_name().to_lowercase(), t);
            table.map.insert(t.short_name().to_lowercase(), t);
        }
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (alias, canonical) = line.split_once('\t').ok_or(Error::Malformed {
                line: i + 1,
                msg: format!("expected alias<TAB>canonical, got {line:?}"),
            })?;
            let mtype = canonical.trim().parse().map_err(|_| Error::Malformed {
                line: i + 1,
                msg: format!("unknown canonical type {canonical:?}"),
            })?;
            table.map.insert(alias.trim().to_lowercase(), mtype);
        }
        Ok(table)
    }

    pub fn resolve(&self, name: &str) -> Option<MutationType> {
        self.map.get(&name.to_lowercase()).copied()
    }
}
