//! Shared helpers for the integration suites: enumeration oracles for the
//! chain model, an independent span matcher, random labeled-data
//! generators, and a synthetic corpus builder.

#![allow(dead_code)]

use rand::Rng;
use varmark_core::corpus::{MutationType, Token, TokenSpan, TokenizedSentence};
use varmark_core::crf::LinearChain;
use varmark_core::encoding::{FeatureRow, RepresentationMatrix};

/// Calls `f` with every label sequence of length `n` over `0..l`, in
/// ascending lexicographic order (index 0 most significant).
pub fn for_each_sequence(l: usize, n: usize, mut f: impl FnMut(&[usize])) {
    assert!(l > 0, "need at least one label");
    let mut seq = vec![0usize; n];
    'outer: loop {
        f(&seq);
        let mut pos = n;
        while pos > 0 {
            pos -= 1;
            seq[pos] += 1;
            if seq[pos] < l {
                continue 'outer;
            }
            seq[pos] = 0;
        }
        return;
    }
}

/// Path score computed directly from the chain's tables, with its own mask
/// handling — the per-path arithmetic the enumeration oracles build on.
pub fn path_score(chain: &LinearChain, emissions: &[Vec<f64>], tags: &[usize]) -> f64 {
    let mut prev = chain.start();
    let mut total = 0.0;
    for (e, &y) in emissions.iter().zip(tags) {
        if !chain.allowed(prev, y) {
            return f64::NEG_INFINITY;
        }
        total += chain.transition(prev, y) + e[y];
        prev = y;
    }
    if !chain.allowed(prev, chain.stop()) {
        return f64::NEG_INFINITY;
    }
    total + chain.transition(prev, chain.stop())
}

/// Stable log-sum-exp over a slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// log Σ exp(score) over every mask-legal sequence, by full enumeration.
pub fn brute_log_partition(chain: &LinearChain, emissions: &[Vec<f64>]) -> f64 {
    let mut scores = Vec::new();
    for_each_sequence(chain.n_labels(), emissions.len(), |seq| {
        let s = path_score(chain, emissions, seq);
        if s > f64::NEG_INFINITY {
            scores.push(s);
        }
    });
    logsumexp(&scores)
}

/// Highest-scoring legal sequence by full enumeration. Among ties the
/// lexicographically first sequence wins (strictly-greater replacement over
/// an ascending enumeration).
pub fn brute_best(chain: &LinearChain, emissions: &[Vec<f64>]) -> Option<(Vec<usize>, f64)> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_sequence(chain.n_labels(), emissions.len(), |seq| {
        let s = path_score(chain, emissions, seq);
        if s > f64::NEG_INFINITY && best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((seq.to_vec(), s));
        }
    });
    best
}

/// Random non-overlapping, start-sorted spans over `n` tokens, each at most
/// `max_len` tokens long. Adjacent spans are produced now and then.
pub fn random_spans(rng: &mut impl Rng, n: usize, max_len: usize) -> Vec<TokenSpan> {
    let mut spans = Vec::new();
    let mut t = 0usize;
    while t < n {
        if rng.gen_bool(0.35) {
            let len = rng.gen_range(1..=max_len.min(n - t));
            let mtype = MutationType::ALL[rng.gen_range(0..MutationType::ALL.len())];
            spans.push(TokenSpan::new(t, t + len - 1, mtype));
            t += len + usize::from(rng.gen_bool(0.5));
        } else {
            t += 1;
        }
    }
    spans
}

/// Independent exact matcher: per-type multiset intersection of (start, end)
/// pairs within one sentence. Returns (tp, fp, fn) per mutation type.
pub fn brute_match(
    gold: &[TokenSpan],
    pred: &[TokenSpan],
) -> Vec<(MutationType, (usize, usize, usize))> {
    MutationType::ALL
        .iter()
        .map(|&ty| {
            let mut g: Vec<(usize, usize)> = gold
                .iter()
                .filter(|s| s.mtype == ty)
                .map(|s| (s.start, s.end))
                .collect();
            let mut p: Vec<(usize, usize)> = pred
                .iter()
                .filter(|s| s.mtype == ty)
                .map(|s| (s.start, s.end))
                .collect();
            g.sort_unstable();
            p.sort_unstable();
            let (mut i, mut j, mut tp) = (0usize, 0usize, 0usize);
            while i < g.len() && j < p.len() {
                match g[i].cmp(&p[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        tp += 1;
                        i += 1;
                        j += 1;
                    }
                }
            }
            (ty, (tp, p.len() - tp, g.len() - tp))
        })
        .collect()
}

/// Dense random representation rows, N(0,1)-ish via sum of uniforms.
pub fn dense_matrix(rng: &mut impl Rng, n: usize, dim: usize) -> RepresentationMatrix {
    let rows = (0..n)
        .map(|_| FeatureRow::Dense((0..dim).map(|_| gaussian(rng)).collect()))
        .collect();
    RepresentationMatrix { dim, rows }
}

/// Approximate standard normal (Irwin–Hall with 12 uniforms).
pub fn gaussian(rng: &mut impl Rng) -> f64 {
    (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0
}

/// A tokenized sentence over synthetic one-char-per-token offsets.
pub fn make_sentence(doc_id: &str, index: usize, surfaces: &[&str], spans: &[TokenSpan]) -> TokenizedSentence {
    let mut tokens = Vec::new();
    let mut pos = 0usize;
    for s in surfaces {
        let len = s.chars().count();
        tokens.push(Token {
            surface: (*s).to_string(),
            start: pos,
            end: pos + len,
        });
        pos += len + 1;
    }
    TokenizedSentence {
        doc_id: doc_id.to_string(),
        sentence_index: index,
        tokens,
        gold_spans: spans.to_vec(),
    }
}

// ---------------------------------------------------------------------
// Synthetic corpus: carrier English with injected mutation-like mentions.
// ---------------------------------------------------------------------

const PREFIXES: [&str; 6] = [
    "Patients with",
    "Sequencing detected",
    "Screening revealed",
    "The tumor carried",
    "Analysis confirmed",
    "Samples showed",
];

const SUFFIXES: [&str; 6] = [
    "in the cohort",
    "after treatment",
    "during follow up",
    "in tumor tissue",
    "across replicates",
    "at diagnosis",
];

const AMINO: [char; 8] = ['V', 'K', 'L', 'G', 'R', 'T', 'A', 'S'];
const RESIDUES: [&str; 8] = ["Val", "Leu", "Gly", "Arg", "Ser", "Thr", "Lys", "Ala"];

fn digit_run(rng: &mut impl Rng, min_len: usize, max_len: usize) -> String {
    let len = rng.gen_range(min_len..=max_len);
    let mut out = String::new();
    out.push(char::from(b'1' + rng.gen_range(0..9u8)));
    for _ in 1..len {
        out.push(char::from(b'0' + rng.gen_range(0..10u8)));
    }
    out
}

/// One surface mention of the given type, in that type's usual notation.
pub fn synthetic_mention(rng: &mut impl Rng, mtype: MutationType) -> String {
    match mtype {
        MutationType::Substitution => format!(
            "{}{}{}",
            AMINO[rng.gen_range(0..AMINO.len())],
            digit_run(rng, 2, 4),
            AMINO[rng.gen_range(0..AMINO.len())]
        ),
        MutationType::Deletion => format!("c.{}del", digit_run(rng, 2, 4)),
        MutationType::Insertion => format!("g.{}ins", digit_run(rng, 2, 4)),
        MutationType::Duplication => format!("m.{}dup", digit_run(rng, 2, 4)),
        MutationType::InDel => format!("d.{}delins", digit_run(rng, 2, 4)),
        MutationType::Snp => format!("rs{}", digit_run(rng, 4, 7)),
        MutationType::FrameShift => format!(
            "p.{}{}fs",
            RESIDUES[rng.gen_range(0..RESIDUES.len())],
            digit_run(rng, 2, 4)
        ),
    }
}

/// A PubTator corpus of `n_docs` single-sentence documents. Every eighth
/// document is an unannotated carrier sentence; the rest cycle through the
/// seven mutation types, one mention per document. ASCII only, so char
/// offsets equal byte offsets.
pub fn synthetic_corpus(rng: &mut impl Rng, n_docs: usize) -> String {
    let mut out = String::new();
    for i in 0..n_docs {
        let id = 1000 + i;
        let prefix = PREFIXES[rng.gen_range(0..PREFIXES.len())];
        let suffix = SUFFIXES[rng.gen_range(0..SUFFIXES.len())];
        if i % 8 == 7 {
            out.push_str(&format!("{id}|t|{prefix} stable readings {suffix}.\n\n"));
            continue;
        }
        let mtype = MutationType::ALL[i % MutationType::ALL.len()];
        let mention = synthetic_mention(rng, mtype);
        let start = prefix.len() + 1;
        let end = start + mention.len();
        out.push_str(&format!(
            "{id}|t|{prefix} {mention} {suffix}.\n{id}\t{start}\t{end}\t{mention}\t{ty}\n\n",
            ty = mtype.long_name()
        ));
    }
    out
}
