//! Token/tag files in a CoNLL-like layout.
//!
//! Layout: a `# doc <id>` header opens each document, one line per token
//! with tab-separated fields `token<TAB>char_start<TAB>char_end<TAB>gold_tag`
//! (plus a fifth `pred_tag` column in prediction files), and a blank line
//! closes each sentence. All tag columns use the BIO scheme with short type
//! names (`B-Sub`, `I-Del`, …).
//!
//! Reading is strict about field counts, offsets, and tag names, but gold
//! columns are decoded through the standard repair pass, so a structurally
//! odd hand-written sequence (`O I-Sub`) loads as its repaired form.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::{Token, TokenizedSentence};
use crate::error::{Error, Result};
use crate::tags::{spans_to_tags, Tag, TagScheme, TagSequence};

/// A parsed token/tag file: sentences, plus predicted tags when the file
/// carried the fifth column.
#[derive(Debug, Clone, PartialEq)]
pub struct ConllData {
    pub sentences: Vec<TokenizedSentence>,
    pub preds: Option<Vec<TagSequence>>,
}

/// Renders sentences (grouped by document, in order) with gold BIO tags and
/// optionally a parallel predicted sequence per sentence.
pub fn write_conll(
    sentences: &[TokenizedSentence],
    preds: Option<&[TagSequence]>,
) -> Result<String> {
    if let Some(preds) = preds {
        if preds.len() != sentences.len() {
            return Err(Error::LengthMismatch(format!(
                "{} sentences but {} predicted sequences",
                sentences.len(),
                preds.len()
            )));
        }
    }
    let mut out = String::new();
    let mut current_doc: Option<&str> = None;
    for (i, sentence) in sentences.iter().enumerate() {
        if current_doc != Some(sentence.doc_id.as_str()) {
            writeln!(out, "# doc {}", sentence.doc_id).unwrap();
            current_doc = Some(sentence.doc_id.as_str());
        }
        let gold = spans_to_tags(sentence.tokens.len(), &sentence.gold_spans, TagScheme::Bio)?;
        let pred = match preds {
            Some(preds) => {
                let p = &preds[i];
                if p.scheme != TagScheme::Bio {
                    return Err(Error::SchemeMismatch {
                        expected: "bio".into(),
                        got: p.scheme.to_string(),
                    });
                }
                if p.len() != sentence.tokens.len() {
                    return Err(Error::LengthMismatch(format!(
                        "sentence {} of document {} has {} tokens but {} predicted tags",
                        sentence.sentence_index,
                        sentence.doc_id,
                        sentence.tokens.len(),
                        p.len()
                    )));
                }
                Some(p)
            }
            None => None,
        };
        for (t, token) in sentence.tokens.iter().enumerate() {
            write!(
                out,
                "{}\t{}\t{}\t{}",
                token.surface,
                token.start,
                token.end,
                gold.tags[t].name()
            )
            .unwrap();
            if let Some(p) = pred {
                write!(out, "\t{}", p.tags[t].name()).unwrap();
            }
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

fn malformed(line: usize, msg: impl Into<String>) -> Error {
    Error::Malformed { line, msg: msg.into() }
}

fn parse_bio_tag(field: &str, line: usize) -> Result<Tag> {
    let tag: Tag = field
        .parse()
        .map_err(|_| malformed(line, format!("unknown tag {field:?}")))?;
    if !tag.belongs_to(TagScheme::Bio) {
        return Err(malformed(line, format!("tag {field:?} is not a BIO tag")));
    }
    Ok(tag)
}

/// Parses the text form. Sentence indices are assigned 0.. per document in
/// file order (continuing if a document id reappears later in the file).
pub fn read_conll(text: &str) -> Result<ConllData> {
    struct Pending {
        tokens: Vec<Token>,
        gold: Vec<Tag>,
        pred: Vec<Tag>,
    }

    let mut sentences = Vec::new();
    let mut pred_seqs: Vec<TagSequence> = Vec::new();
    let mut has_pred_column: Option<bool> = None;
    let mut current_doc: Option<String> = None;
    let mut sentence_counts: HashMap<String, usize> = HashMap::new();
    let mut pending: Option<Pending> = None;

    let flush = |doc: &Option<String>,
                     pending: &mut Option<Pending>,
                     sentences: &mut Vec<TokenizedSentence>,
                     pred_seqs: &mut Vec<TagSequence>,
                     counts: &mut HashMap<String, usize>| {
        if let Some(p) = pending.take() {
            let doc_id = doc.clone().expect("tokens are only accepted under a header");
            let index = counts.entry(doc_id.clone()).or_insert(0);
            let gold = TagSequence::new(TagScheme::Bio, p.gold)
                .expect("tags validated per line");
            let gold_spans = gold.to_spans();
            sentences.push(TokenizedSentence {
                doc_id,
                sentence_index: *index,
                tokens: p.tokens,
                gold_spans,
            });
            *index += 1;
            if !p.pred.is_empty() {
                pred_seqs.push(TagSequence::new(TagScheme::Bio, p.pred).expect("validated"));
            }
        }
    };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            flush(&current_doc, &mut pending, &mut sentences, &mut pred_seqs, &mut sentence_counts);
            continue;
        }
        if let Some(rest) = raw.strip_prefix("# doc ") {
            flush(&current_doc, &mut pending, &mut sentences, &mut pred_seqs, &mut sentence_counts);
            let id = rest.trim();
            if id.is_empty() {
                return Err(malformed(line_no, "empty document id in header"));
            }
            current_doc = Some(id.to_string());
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 4 && fields.len() != 5 {
            return Err(malformed(
                line_no,
                format!("expected 4 or 5 tab-separated fields, got {}", fields.len()),
            ));
        }
        if current_doc.is_none() {
            return Err(malformed(line_no, "token line before any `# doc` header"));
        }
        let with_pred = fields.len() == 5;
        match has_pred_column {
            None => has_pred_column = Some(with_pred),
            Some(expected) if expected != with_pred => {
                return Err(malformed(
                    line_no,
                    "mixed 4- and 5-column token lines in one file",
                ));
            }
            Some(_) => {}
        }
        let surface = fields[0];
        if surface.is_empty() {
            return Err(malformed(line_no, "empty token surface"));
        }
        let start: usize = fields[1]
            .parse()
            .map_err(|_| malformed(line_no, format!("bad char_start {:?}", fields[1])))?;
        let end: usize = fields[2]
            .parse()
            .map_err(|_| malformed(line_no, format!("bad char_end {:?}", fields[2])))?;
        if end <= start {
            return Err(malformed(
                line_no,
                format!("char_end {end} must be greater than char_start {start}"),
            ));
        }
        let gold = parse_bio_tag(fields[3], line_no)?;
        let pending = pending.get_or_insert_with(|| Pending {
            tokens: Vec::new(),
            gold: Vec::new(),
            pred: Vec::new(),
        });
        pending.tokens.push(Token {
            surface: surface.to_string(),
            start,
            end,
        });
        pending.gold.push(gold);
        if with_pred {
            pending.pred.push(parse_bio_tag(fields[4], line_no)?);
        }
    }
    flush(&current_doc, &mut pending, &mut sentences, &mut pred_seqs, &mut sentence_counts);

    let preds = match has_pred_column {
        Some(true) => Some(pred_seqs),
        _ => None,
    };
    Ok(ConllData { sentences, preds })
}

pub fn read_conll_file(path: &Path) -> Result<ConllData> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_conll(&text)
}

pub fn write_conll_file(
    path: &Path,
    sentences: &[TokenizedSentence],
    preds: Option<&[TagSequence]>,
) -> Result<()> {
    let text = write_conll(sentences, preds)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, MutationType, TokenSpan};

    fn sentence(doc: &str, index: usize, text: &str, spans: Vec<TokenSpan>) -> TokenizedSentence {
        TokenizedSentence {
            doc_id: doc.into(),
            sentence_index: index,
            tokens: tokenize(text),
            gold_spans: spans,
        }
    }

    fn corpus() -> Vec<TokenizedSentence> {
        vec![
            sentence(
                "10022",
                0,
                "We found V600E here",
                vec![TokenSpan::new(2, 4, MutationType::Substitution)],
            ),
            sentence("10022", 1, "No mention", vec![]),
            sentence(
                "10023",
                0,
                "rs123 was seen",
                vec![TokenSpan::new(0, 1, MutationType::Snp)],
            ),
        ]
    }

    #[test]
    fn golden_write() {
        let text = write_conll(&corpus(), None).unwrap();
        let expected = "\
# doc 10022
We\t0\t2\tO
found\t3\t8\tO
V\t9\t10\tB-Sub
600\t10\t13\tI-Sub
E\t13\t14\tI-Sub
here\t15\t19\tO

No\t0\t2\tO
mention\t3\t10\tO

# doc 10023
rs\t0\t2\tB-SNP
123\t2\t5\tI-SNP
was\t6\t9\tO
seen\t10\t14\tO

";
        assert_eq!(text, expected);
    }

    #[test]
    fn round_trip_without_predictions() {
        let original = corpus();
        let data = read_conll(&write_conll(&original, None).unwrap()).unwrap();
        assert_eq!(data.sentences, original);
        assert_eq!(data.preds, None);
    }

    #[test]
    fn round_trip_with_predictions() {
        let original = corpus();
        let preds: Vec<TagSequence> = original
            .iter()
            .map(|s| spans_to_tags(s.tokens.len(), &s.gold_spans, TagScheme::Bio).unwrap())
            .collect();
        let text = write_conll(&original, Some(&preds)).unwrap();
        assert!(text.contains("V\t9\t10\tB-Sub\tB-Sub"));
        let data = read_conll(&text).unwrap();
        assert_eq!(data.sentences, original);
        assert_eq!(data.preds.as_deref(), Some(&preds[..]));
        // byte-identical re-render
        assert_eq!(
            write_conll(&data.sentences, data.preds.as_deref()).unwrap(),
            text
        );
    }

    #[test]
    fn empty_input_is_empty_output() {
        assert_eq!(write_conll(&[], None).unwrap(), "");
        let data = read_conll("").unwrap();
        assert!(data.sentences.is_empty());
        assert_eq!(data.preds, None);
    }

    #[test]
    fn sentence_indices_count_per_document() {
        let text = "# doc a\nx\t0\t1\tO\n\ny\t2\t3\tO\n\n# doc b\nz\t0\t1\tO\n";
        let data = read_conll(text).unwrap();
        let meta: Vec<(&str, usize)> = data
            .sentences
            .iter()
            .map(|s| (s.doc_id.as_str(), s.sentence_index))
            .collect();
        assert_eq!(meta, vec![("a", 0), ("a", 1), ("b", 0)]);
    }

    #[test]
    fn structurally_odd_gold_is_repaired_on_read() {
        let text = "# doc a\nx\t0\t1\tO\ny\t2\t3\tI-Sub\n";
        let data = read_conll(text).unwrap();
        assert_eq!(
            data.sentences[0].gold_spans,
            vec![TokenSpan::new(1, 1, MutationType::Substitution)]
        );
    }

    #[test]
    fn malformed_lines_carry_line_numbers() {
        let cases: Vec<(&str, usize)> = vec![
            ("# doc a\nx\t0\t1\n", 2),                       // 3 fields
            ("# doc a\nx\t0\t1\tO\tO\tO\n", 2),              // 6 fields
            ("x\t0\t1\tO\n", 1),                             // no header
            ("# doc a\nx\tzero\t1\tO\n", 2),                 // bad start
            ("# doc a\nx\t0\t0\tO\n", 2),                    // end ≤ start
            ("# doc a\nx\t0\t1\tB-Bogus\n", 2),              // unknown tag
            ("# doc a\nx\t0\t1\tM-Sub\n", 2),                // non-BIO tag
            ("# doc a\nx\t0\t1\tO\ny\t2\t3\tO\tB-Sub\n", 3), // mixed columns
            ("# doc \nx\t0\t1\tO\n", 1),                     // empty id
        ];
        for (text, expected_line) in cases {
            match read_conll(text) {
                Err(Error::Malformed { line, .. }) => {
                    assert_eq!(line, expected_line, "for input {text:?}")
                }
                other => panic!("expected Malformed for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn prediction_length_mismatch_is_rejected_on_write() {
        let original = corpus();
        let preds = vec![TagSequence::from_indices(TagScheme::Bio, &[0, 0])];
        assert!(matches!(
            write_conll(&original, Some(&preds)),
            Err(Error::LengthMismatch(_))
        ));
    }

    #[test]
    fn files_round_trip_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.conll");
        write_conll_file(&path, &corpus(), None).unwrap();
        let data = read_conll_file(&path).unwrap();
        assert_eq!(data.sentences, corpus());
    }
}
