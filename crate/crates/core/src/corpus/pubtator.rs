//! Line-oriented corpus reader/writer.
//!
//! A document block is `ID|t|<title>`, an optional `ID|a|<abstract>`, zero
//! or more tab-separated annotation lines `ID start end surface type
//! [normID]`, and a blank line terminator. Document text is title and
//! abstract joined by a single newline; annotation offsets count chars of
//! that joined text.

use super::{char_slice, AliasTable, Diagnostic, Document, Mention};
use crate::error::{Error, Result};

/// Parse result: documents plus per-annotation rejection diagnostics.
/// A structurally malformed line aborts the parse with `Err`; a bad
/// annotation only drops that annotation.
#[derive(Debug, Default)]
pub struct ParsedCorpus {
    pub documents: Vec<Document>,
    pub diagnostics: Vec<Diagnostic>,
}

struct Block {
    id: String,
    title: String,
    abstract_: Option<String>,
    // (line_no, start, end, surface, type)
    annotations: Vec<(usize, usize, usize, String, String)>,
}

pub fn parse_pubtator(input: &str, aliases: &AliasTable) -> Result<ParsedCorpus> {
    let mut out = ParsedCorpus::default();
    let mut block: Option<Block> = None;

    let finish = |block: &mut Option<Block>, out: &mut ParsedCorpus| {
        if let Some(b) = block.take() {
            out.documents.push(resolve_block(b, aliases, &mut out.diagnostics));
        }
    };

    for (i, raw) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            finish(&mut block, &mut out);
            continue;
        }

        if let Some((id, kind, text)) = split_text_line(line) {
            match kind {
                "t" => {
                    if block.is_some() {
                        return Err(Error::Malformed {
                            line: line_no,
                            msg: format!("title line for {id:?} inside an unterminated block"),
                        });
                    }
                    block = Some(Block {
                        id: id.to_string(),
                        title: text.to_string(),
                        abstract_: None,
                        annotations: Vec::new(),
                    });
                }
                "a" => {
                    let b = block.as_mut().ok_or_else(|| Error::Malformed {
                        line: line_no,
                        msg: "abstract line before any title line".into(),
                    })?;
                    if b.abstract_.is_some() {
                        return Err(Error::Malformed {
                            line: line_no,
                            msg: format!("second abstract line for doc {:?}", b.id),
                        });
                    }
                    b.abstract_ = Some(text.to_string());
                }
                _ => unreachable!(),
            }
            continue;
        }

        // Annotation line: ID \t start \t end \t surface \t type [\t normID]
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 5 || fields.len() > 6 {
            return Err(Error::Malformed {
                line: line_no,
                msg: format!("expected 5 or 6 tab-separated fields, got {}", fields.len()),
            });
        }
        let b = block.as_mut().ok_or_else(|| Error::Malformed {
            line: line_no,
            msg: "annotation line before any title line".into(),
        })?;
        let start: usize = fields[1].parse().map_err(|_| Error::Malformed {
            line: line_no,
            msg: format!("bad start offset {:?}", fields[1]),
        })?;
        let end: usize = fields[2].parse().map_err(|_| Error::Malformed {
            line: line_no,
            msg: format!("bad end offset {:?}", fields[2]),
        })?;
        if fields[0] != b.id {
            out.diagnostics.push(Diagnostic {
                line: line_no,
                doc_id: b.id.clone(),
                message: format!("annotation doc id {:?} does not match block id", fields[0]),
            });
            continue;
        }
        b.annotations
            .push((line_no, start, end, fields[3].to_string(), fields[4].to_string()));
    }
    finish(&mut block, &mut out);
    Ok(out)
}

fn split_text_line(line: &str) -> Option<(&str, &str, &str)> {
    let mut parts = line.splitn(3, '|');
    let id = parts.next()?;
    let kind = parts.next()?;
    let text = parts.next()?;
    if id.is_empty() || id.contains('\t') {
        return None;
    }
    match kind {
        "t" | "a" => Some((id, kind, text)),
        _ => None,
    }
}

fn resolve_block(block: Block, aliases: &AliasTable, diagnostics: &mut Vec<Diagnostic>) -> Document {
    let text = match &block.abstract_ {
        Some(a) => format!("{}\n{}", block.title, a),
        None => block.title.clone(),
    };
    let n_chars = text.chars().count();

    let mut mentions = Vec::new();
    for (line_no, start, end, surface, type_name) in block.annotations {
        if start >= end || end > n_chars {
            diagnostics.push(Diagnostic {
                line: line_no,
                doc_id: block.id.clone(),
                message: format!("offsets [{start},{end}) out of range for text of {n_chars} chars"),
            });
            continue;
        }
        let actual = char_slice(&text, start, end);
        if actual != surface {
            diagnostics.push(Diagnostic {
                line: line_no,
                doc_id: block.id.clone(),
                message: format!("surface {surface:?} does not match text {actual:?} at [{start},{end})"),
            });
            continue;
        }
        let Some(mtype) = aliases.resolve(&type_name) else {
            diagnostics.push(Diagnostic {
                line: line_no,
                doc_id: block.id.clone(),
                message: format!("unknown mutation type {type_name:?} with no alias"),
            });
            continue;
        };
        mentions.push(Mention { start, end, surface, mtype });
    }

    mentions.sort_by_key(|m| (m.start, m.end));
    let mentions = drop_overlaps(mentions, &block.id, diagnostics);
    Document { id: block.id, text, mentions }
}

/// Both recognition patterns assume flat non-overlapping spans: among
/// overlapping mentions keep the longest (earliest start on ties).
fn drop_overlaps(sorted: Vec<Mention>, doc_id: &str, diagnostics: &mut Vec<Diagnostic>) -> Vec<Mention> {
    let mut kept: Vec<Mention> = Vec::with_capacity(sorted.len());
    for m in sorted {
        match kept.last() {
            Some(prev) if m.start < prev.end => {
                let m_len = m.end - m.start;
                let prev_len = prev.end - prev.start;
                let (winner, loser) = if m_len > prev_len {
                    (m, kept.pop().unwrap())
                } else {
                    (kept.pop().unwrap(), m)
                };
                diagnostics.push(Diagnostic {
                    line: 0,
                    doc_id: doc_id.to_string(),
                    message: format!(
                        "mention {:?} at [{},{}) overlaps {:?}; kept the longest",
                        loser.surface, loser.start, loser.end, winner.surface
                    ),
                });
                kept.push(winner);
            }
            _ => kept.push(m),
        }
    }
    kept
}

/// Inverse of [`parse_pubtator`] for the same format; round-trips every
/// loaded document and its surviving mentions.
pub fn write_pubtator(documents: &[Document]) -> String {
    let mut out = String::new();
    for doc in documents {
        match doc.text.split_once('\n') {
            Some((title, abstract_)) => {
                out.push_str(&format!("{}|t|{}\n", doc.id, title));
                out.push_str(&format!("{}|a|{}\n", doc.id, abstract_));
            }
            None => out.push_str(&format!("{}|t|{}\n", doc.id, doc.text)),
        }
        for m in &doc.mentions {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                doc.id,
                m.start,
                m.end,
                m.surface,
                m.mtype.short_name()
            ));
        }
        out.push('\n');
    }
    out
}
