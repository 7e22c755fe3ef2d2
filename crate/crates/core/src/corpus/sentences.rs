//! Rule-based sentence splitting and mention-to-token alignment.

use super::{tokenize, Diagnostic, Document, Mention, Token, TokenSpan, TokenizedSentence};

/// Letter runs that suppress a split when they precede the terminal period.
const ABBREVIATIONS: [&str; 12] = [
    "al", "approx", "ca", "cf", "dr", "eq", "eqs", "fig", "figs", "no", "resp", "vs",
];

/// Splits a document into tokenized sentences and aligns its mentions to
/// token spans. A split point falling strictly inside any mention is
/// suppressed, so a mention never crosses a sentence boundary.
pub fn split_sentences(doc: &Document) -> (Vec<TokenizedSentence>, Vec<Diagnostic>) {
    let chars: Vec<char> = doc.text.chars().collect();
    let boundaries = sentence_boundaries(&chars, &doc.mentions);

    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut index = 0usize;
    for end in boundaries.into_iter().chain(std::iter::once(chars.len())) {
        let piece: String = chars[start..end].iter().collect();
        let mut tokens = tokenize(&piece);
        for t in &mut tokens {
            t.start += start;
            t.end += start;
        }
        if !tokens.is_empty() {
            sentences.push(TokenizedSentence {
                doc_id: doc.id.clone(),
                sentence_index: index,
                tokens,
                gold_spans: Vec::new(),
            });
            index += 1;
        }
        start = end;
    }

    let diagnostics = align_mentions(doc, &mut sentences);
    (sentences, diagnostics)
}

/// Candidate boundary positions (index just after the terminal character),
/// filtered by the abbreviation guards and mention suppression.
fn sentence_boundaries(chars: &[char], mentions: &[Mention]) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, &c) in chars.iter().enumerate() {
        let boundary = i + 1;
        let candidate = match c {
            '\n' => true, // title/abstract join is always a boundary
            '.' | '!' | '?' => follows_with_new_sentence(chars, boundary) && !is_abbreviation(chars, i),
            _ => false,
        };
        if candidate && !inside_any_mention(boundary, mentions) {
            out.push(boundary);
        }
    }
    out
}

/// Whitespace then an uppercase letter or digit must follow.
fn follows_with_new_sentence(chars: &[char], mut pos: usize) -> bool {
    let started = pos;
    while pos < chars.len() && chars[pos].is_whitespace() {
        pos += 1;
    }
    pos > started && pos < chars.len() && (chars[pos].is_uppercase() || chars[pos].is_numeric())
}

fn is_abbreviation(chars: &[char], period: usize) -> bool {
    let mut start = period;
    while start > 0 && chars[start - 1].is_alphabetic() {
        start -= 1;
    }
    let run: String = chars[start..period].iter().collect::<String>().to_lowercase();
    if ABBREVIATIONS.contains(&run.as_str()) {
        return true;
    }
    // Dotted initialisms like "e.g." / "i.e.": a single letter whose
    // preceding character is itself a period.
    run.chars().count() == 1 && start > 0 && chars[start - 1] == '.'
}

fn inside_any_mention(boundary: usize, mentions: &[Mention]) -> bool {
    mentions.iter().any(|m| m.start < boundary && boundary < m.end)
}

/// Fills `gold_spans` with the minimal contiguous token range covering each
/// mention. Boundaries falling strictly inside a token expand to the
/// covering tokens (with a warning); mentions that still cannot be placed
/// are dropped with a diagnostic.
pub fn align_mentions(doc: &Document, sentences: &mut [TokenizedSentence]) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();

    'mentions: for mention in &doc.mentions {
        for sentence in sentences.iter_mut() {
            let Some(span) = covering_token_range(&sentence.tokens, mention) else {
                continue;
            };
            let (first, last) = span;
            let exact = sentence.tokens[first].start == mention.start
                && sentence.tokens[last].end == mention.end;
            if !exact {
                diagnostics.push(Diagnostic {
                    line: 0,
                    doc_id: doc.id.clone(),
                    message: format!(
                        "mention {:?} at [{},{}) expanded to token boundaries [{},{})",
                        mention.surface,
                        mention.start,
                        mention.end,
                        sentence.tokens[first].start,
                        sentence.tokens[last].end
                    ),
                });
            }
            let span = TokenSpan::new(first, last, mention.mtype);
            if let Some(clash) = sentence.gold_spans.iter().position(|g| g.overlaps(&span)) {
                // Token expansion can make two char-disjoint mentions share a
                // token; keep the longest, mirroring the load-time rule.
                let kept = sentence.gold_spans[clash];
                if span.end - span.start > kept.end - kept.start {
                    sentence.gold_spans[clash] = span;
                }
                diagnostics.push(Diagnostic {
                    line: 0,
                    doc_id: doc.id.clone(),
                    message: format!(
                        "mention {:?} overlaps another span after token expansion; kept the longest",
                        mention.surface
                    ),
                });
            } else {
                sentence.gold_spans.push(span);
            }
            continue 'mentions;
        }
        diagnostics.push(Diagnostic {
            line: 0,
            doc_id: doc.id.clone(),
            message: format!(
                "mention {:?} at [{},{}) crosses a sentence boundary or covers no token",
                mention.surface, mention.start, mention.end
            ),
        });
    }

    for sentence in sentences.iter_mut() {
        sentence.gold_spans.sort();
    }
    diagnostics
}

/// Tokens overlapping [start, end), as an inclusive index range. Because
/// split points are suppressed inside mentions, overlap with one sentence's
/// tokens implies the mention belongs wholly to that sentence.
fn covering_token_range(tokens: &[Token], mention: &Mention) -> Option<(usize, usize)> {
    let mut first = None;
    let mut last = None;
    for (i, t) in tokens.iter().enumerate() {
        if t.end > mention.start && t.start < mention.end {
            if first.is_none() {
                first = Some(i);
            }
            last = Some(i);
        }
    }
    Some((first?, last?))
}
