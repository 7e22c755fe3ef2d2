//! Start/end span tagger.
//!
//! Two independent per-token classifiers predict, for every token, which
//! mutation type (or none) starts there and which ends there. A greedy
//! left-to-right matcher then pairs starts with the nearest compatible end
//! within a length window, yielding non-overlapping spans. Class 0 is the
//! distinguished `none`; classes 1..=7 follow mutation-type declaration
//! order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{MutationType, TokenSpan, TokenizedSentence};
use crate::encoding::{Encoder, RepresentationMatrix};
use crate::error::{Error, Result};
use crate::optim::{Adam, TrainConfig};
use crate::tags::{spans_to_tags, TagScheme, TagSequence};

/// Classes per layer: `none` plus the seven mutation types.
pub const SPAN_CLASSES: usize = MutationType::ALL.len() + 1;

/// Class index of a type (`None` = the none class).
pub fn span_class(mtype: Option<MutationType>) -> usize {
    mtype.map_or(0, |t| 1 + t.index())
}

/// Inverse of [`span_class`].
pub fn class_type(class: usize) -> Option<MutationType> {
    (class > 0).then(|| MutationType::ALL[class - 1])
}

/// Class names in index order: `none`, then the seven type short names.
pub fn class_names() -> Vec<String> {
    (0..SPAN_CLASSES)
        .map(|c| class_type(c).map_or_else(|| "none".to_string(), |t| t.short_name().to_string()))
        .collect()
}

fn default_max_len() -> usize {
    20
}

/// Decoder window: a start only pairs with an end at most `max_len − 1`
/// tokens away.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanDecodeConfig {
    #[serde(default = "default_max_len")]
    pub max_len: usize,
}

impl Default for SpanDecodeConfig {
    fn default() -> Self {
        SpanDecodeConfig { max_len: default_max_len() }
    }
}

impl SpanDecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_len == 0 {
            return Err(Error::Config("max span length must be at least 1".into()));
        }
        Ok(())
    }
}

/// The trained start/end classifier pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanModel {
    /// Representation dimension d.
    pub dim: usize,
    /// Start-layer weights, `d × SPAN_CLASSES` row-major by feature.
    pub w_start: Vec<f64>,
    /// End-layer weights, same shape.
    pub w_end: Vec<f64>,
    pub encoder_digest: String,
}

impl SpanModel {
    /// Zero-initialized model.
    pub fn new(dim: usize, encoder_digest: String) -> Self {
        SpanModel {
            dim,
            w_start: vec![0.0; dim * SPAN_CLASSES],
            w_end: vec![0.0; dim * SPAN_CLASSES],
            encoder_digest,
        }
    }

    /// Per-token argmax classes of both layers (ties break toward the
    /// lowest class index, so `none` wins an all-way tie).
    pub fn predict_token_labels(&self, h: &RepresentationMatrix) -> Result<(Vec<usize>, Vec<usize>)> {
        if h.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: h.dim });
        }
        let starts = argmax_rows(&h.project(&self.w_start, SPAN_CLASSES));
        let ends = argmax_rows(&h.project(&self.w_end, SPAN_CLASSES));
        Ok((starts, ends))
    }

    /// Predicted spans for one sentence.
    pub fn predict_spans(
        &self,
        h: &RepresentationMatrix,
        config: &SpanDecodeConfig,
    ) -> Result<Vec<TokenSpan>> {
        let (starts, ends) = self.predict_token_labels(h)?;
        Ok(decode_spans(&starts, &ends, config))
    }

    /// Predicted spans rendered as a BIO sequence (the ensemble's common
    /// currency).
    pub fn predict_bio(
        &self,
        h: &RepresentationMatrix,
        config: &SpanDecodeConfig,
    ) -> Result<TagSequence> {
        spans_to_bio(&self.predict_spans(h, config)?, h.len())
    }

    /// Mean summed cross-entropy of both layers over the batch's tokens,
    /// plus an L2 penalty; with analytic gradients for both layers.
    pub fn loss_and_gradient(
        &self,
        batch: &[&SpanInstance],
        weight_decay: f64,
    ) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut loss = 0.0;
        let mut grad_s = vec![0.0; self.w_start.len()];
        let mut grad_e = vec![0.0; self.w_end.len()];
        let total_tokens: usize = batch.iter().map(|inst| inst.h.len()).sum();
        if total_tokens == 0 {
            return Err(Error::EmptyDataset);
        }

        for inst in batch {
            let n = inst.h.len();
            assert_eq!(n, inst.gold_start.len(), "gold/representation length mismatch");
            assert_eq!(n, inst.gold_end.len(), "gold/representation length mismatch");
            for (w, gold, grad) in [
                (&self.w_start, &inst.gold_start, &mut grad_s),
                (&self.w_end, &inst.gold_end, &mut grad_e),
            ] {
                let logits = inst.h.project(w, SPAN_CLASSES);
                for t in 0..n {
                    let (log_probs, mut coeff) = log_softmax_and_probs(&logits[t]);
                    loss -= log_probs[gold[t]];
                    coeff[gold[t]] -= 1.0;
                    inst.h.accumulate_outer(t, &coeff, grad);
                }
            }
        }

        let scale = 1.0 / total_tokens as f64;
        loss *= scale;
        for g in grad_s.iter_mut().chain(grad_e.iter_mut()) {
            *g *= scale;
        }
        if weight_decay != 0.0 {
            let mut sq = 0.0;
            for (g, &p) in grad_s.iter_mut().zip(&self.w_start) {
                sq += p * p;
                *g += weight_decay * p;
            }
            for (g, &p) in grad_e.iter_mut().zip(&self.w_end) {
                sq += p * p;
                *g += weight_decay * p;
            }
            loss += 0.5 * weight_decay * sq;
        }
        Ok((loss, grad_s, grad_e))
    }

    /// Mean data loss (no decay term) — the dev-selection criterion.
    pub fn mean_loss(&self, instances: &[SpanInstance]) -> Result<f64> {
        let refs: Vec<&SpanInstance> = instances.iter().collect();
        Ok(self.loss_and_gradient(&refs, 0.0)?.0)
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = self.w_start.clone();
        out.extend_from_slice(&self.w_end);
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let (s, e) = flat.split_at(self.w_start.len());
        self.w_start.copy_from_slice(s);
        self.w_end.copy_from_slice(e);
    }
}

/// Row-wise argmax with lowest-index tie-break.
fn argmax_rows(logits: &[Vec<f64>]) -> Vec<usize> {
    logits
        .iter()
        .map(|row| {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0usize;
            for (j, &v) in row.iter().enumerate() {
                if v > best {
                    best = v;
                    arg = j;
                }
            }
            arg
        })
        .collect()
}

/// Log-softmax of one logit row, returned together with the probabilities.
fn log_softmax_and_probs(logits: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let log_sum = max + sum.ln();
    let log_probs = logits.iter().map(|&v| v - log_sum).collect();
    let probs = exps.iter().map(|&e| e / sum).collect();
    (log_probs, probs)
}

/// Greedy start/end matching: at each start label Y ≠ none, take the
/// smallest t′ in the window with end label Y; matched spans are consumed
/// (scan resumes after them), unmatched starts are skipped.
pub fn decode_spans(starts: &[usize], ends: &[usize], config: &SpanDecodeConfig) -> Vec<TokenSpan> {
    assert_eq!(starts.len(), ends.len(), "start/end length mismatch");
    let n = starts.len();
    let mut spans = Vec::new();
    let mut t = 0usize;
    while t < n {
        let y = starts[t];
        let Some(mtype) = class_type(y) else {
            t += 1;
            continue;
        };
        let window_end = (t + config.max_len - 1).min(n - 1);
        match (t..=window_end).find(|&i| ends[i] == y) {
            Some(t2) => {
                spans.push(TokenSpan::new(t, t2, mtype));
                t = t2 + 1;
            }
            None => t += 1,
        }
    }
    spans
}

/// Standard BIO encoding of decoder output.
pub fn spans_to_bio(spans: &[TokenSpan], n: usize) -> Result<TagSequence> {
    spans_to_tags(n, spans, TagScheme::Bio)
}

/// Gold per-token start and end classes for one sentence.
pub fn gold_token_labels(sentence: &TokenizedSentence) -> (Vec<usize>, Vec<usize>) {
    let n = sentence.tokens.len();
    let mut starts = vec![0usize; n];
    let mut ends = vec![0usize; n];
    for span in &sentence.gold_spans {
        starts[span.start] = span_class(Some(span.mtype));
        ends[span.end] = span_class(Some(span.mtype));
    }
    (starts, ends)
}

/// One encoded, gold-labeled training sentence.
#[derive(Debug, Clone)]
pub struct SpanInstance {
    pub doc_id: String,
    pub sentence_index: usize,
    pub h: RepresentationMatrix,
    pub gold_start: Vec<usize>,
    pub gold_end: Vec<usize>,
}

/// Encodes and gold-labels sentences for training.
pub fn build_instances(
    sentences: &[TokenizedSentence],
    encoder: &dyn Encoder,
) -> Result<Vec<SpanInstance>> {
    sentences
        .iter()
        .filter(|s| !s.tokens.is_empty())
        .map(|s| {
            let h = encoder.encode(s)?;
            let (gold_start, gold_end) = gold_token_labels(s);
            Ok(SpanInstance {
                doc_id: s.doc_id.clone(),
                sentence_index: s.sentence_index,
                h,
                gold_start,
                gold_end,
            })
        })
        .collect()
}

/// Trains the two layers jointly with Adam over shuffled mini-batches.
/// Deterministic given the seed; dev handling mirrors the CRF trainer.
pub fn train_span(
    train: &[TokenizedSentence],
    dev: Option<&[TokenizedSentence]>,
    encoder: &dyn Encoder,
    config: &TrainConfig,
) -> Result<SpanModel> {
    config.validate()?;
    let instances = build_instances(train, encoder)?;
    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dev_instances = match dev {
        Some(sentences) if !sentences.is_empty() => Some(build_instances(sentences, encoder)?),
        _ => None,
    };

    let mut model = SpanModel::new(encoder.dim(), encoder.digest());
    let mut params = model.flat_params();
    let mut adam = Adam::new(params.len(), config.learning_rate);
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..instances.len()).collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut since_best = 0usize;

    for _epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let dropped: Vec<SpanInstance>;
            let batch: Vec<&SpanInstance> = if config.dropout > 0.0 {
                dropped = chunk
                    .iter()
                    .map(|&i| SpanInstance {
                        h: instances[i].h.dropout(config.dropout, &mut rng),
                        ..instances[i].clone()
                    })
                    .collect();
                dropped.iter().collect()
            } else {
                chunk.iter().map(|&i| &instances[i]).collect()
            };
            let (_, grad_s, grad_e) = model.loss_and_gradient(&batch, config.weight_decay)?;
            let mut grad = grad_s;
            grad.extend_from_slice(&grad_e);
            adam.step(&mut params, &grad);
            model.set_flat_params(&params);
        }

        if let Some(dev) = &dev_instances {
            let dev_loss = model.mean_loss(dev)?;
            let improved = best.as_ref().map_or(true, |(b, _)| dev_loss < *b);
            if improved {
                best = Some((dev_loss, params.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if config.patience > 0 && since_best >= config.patience {
                    break;
                }
            }
        }
    }

    if let Some((_, best_params)) = best {
        model.set_flat_params(&best_params);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use crate::encoding::{FeatureRow, OrthographicEncoder};
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    use MutationType::{Deletion as Del, Snp, Substitution as Sub};

    fn cls(t: MutationType) -> usize {
        span_class(Some(t))
    }

    fn sparse_h(dim: usize, rows: Vec<Vec<u32>>) -> RepresentationMatrix {
        RepresentationMatrix {
            dim,
            rows: rows
                .into_iter()
                .map(|indices| FeatureRow::Sparse { indices, value: 1.0 })
                .collect(),
        }
    }

    #[test]
    fn class_mapping_round_trips() {
        assert_eq!(SPAN_CLASSES, 8);
        assert_eq!(span_class(None), 0);
        assert_eq!(class_type(0), None);
        for t in MutationType::ALL {
            assert_eq!(class_type(span_class(Some(t))), Some(t));
        }
    }

    #[test]
    fn zero_model_predicts_none_everywhere() {
        let model = SpanModel::new(4, "test".into());
        let h = sparse_h(4, vec![vec![0], vec![1, 2]]);
        let (starts, ends) = model.predict_token_labels(&h).unwrap();
        assert_eq!(starts, vec![0, 0]);
        assert_eq!(ends, vec![0, 0]);
    }

    #[test]
    fn crafted_weights_pick_the_intended_class() {
        let mut model = SpanModel::new(2, "test".into());
        // feature 1 votes for Substitution in the start layer
        model.w_start[1 * SPAN_CLASSES + cls(Sub)] = 2.0;
        let h = sparse_h(2, vec![vec![0], vec![1]]);
        let (starts, ends) = model.predict_token_labels(&h).unwrap();
        assert_eq!(starts, vec![0, cls(Sub)]);
        assert_eq!(ends, vec![0, 0]);
    }

    #[test]
    fn argmax_ignores_per_token_logit_shifts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let row: Vec<f64> = (0..SPAN_CLASSES).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let shift = rng.gen_range(-10.0..10.0);
            let shifted: Vec<f64> = row.iter().map(|v| v + shift).collect();
            assert_eq!(argmax_rows(&[row]), argmax_rows(&[shifted]));
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let model = SpanModel::new(4, "test".into());
        let h = sparse_h(8, vec![vec![0]]);
        assert!(matches!(
            model.predict_token_labels(&h),
            Err(Error::DimensionMismatch { expected: 4, got: 8 })
        ));
    }

    fn none_row(n: usize) -> Vec<usize> {
        vec![0; n]
    }

    #[test]
    fn decode_all_none_is_empty() {
        let cfg = SpanDecodeConfig::default();
        assert_eq!(decode_spans(&none_row(4), &none_row(4), &cfg), []);
    }

    #[test]
    fn decode_hand_traces() {
        let cfg = SpanDecodeConfig::default();
        // start=[-,Sub,-,-], end=[-,-,Sub,-] → one span (1,2)
        let mut starts = none_row(4);
        starts[1] = cls(Sub);
        let mut ends = none_row(4);
        ends[2] = cls(Sub);
        assert_eq!(decode_spans(&starts, &ends, &cfg), [TokenSpan::new(1, 2, Sub)]);

        // start=[Del,-,-], no end anywhere → nothing
        let mut starts = none_row(3);
        starts[0] = cls(Del);
        assert_eq!(decode_spans(&starts, &none_row(3), &cfg), []);
    }

    #[test]
    fn decode_takes_nearest_end_and_consumes_it() {
        let cfg = SpanDecodeConfig::default();
        // two ends of the right type: nearest wins
        let mut starts = none_row(5);
        starts[0] = cls(Sub);
        let mut ends = none_row(5);
        ends[2] = cls(Sub);
        ends[4] = cls(Sub);
        assert_eq!(decode_spans(&starts, &ends, &cfg), [TokenSpan::new(0, 2, Sub)]);

        // a start inside a matched span is never revisited
        let mut starts = none_row(4);
        starts[0] = cls(Sub);
        starts[1] = cls(Sub);
        let mut ends = none_row(4);
        ends[2] = cls(Sub);
        assert_eq!(decode_spans(&starts, &ends, &cfg), [TokenSpan::new(0, 2, Sub)]);
    }

    #[test]
    fn decode_single_token_span() {
        let cfg = SpanDecodeConfig::default();
        let starts = vec![cls(Snp)];
        let ends = vec![cls(Snp)];
        assert_eq!(decode_spans(&starts, &ends, &cfg), [TokenSpan::new(0, 0, Snp)]);
    }

    #[test]
    fn decode_respects_the_window() {
        let cfg = SpanDecodeConfig { max_len: 3 };
        let mut starts = none_row(6);
        starts[0] = cls(Sub);
        let mut ends = none_row(6);
        ends[4] = cls(Sub); // 5 tokens away — outside a 3-token window
        assert_eq!(decode_spans(&starts, &ends, &cfg), []);

        ends[2] = cls(Sub); // exactly at the window edge (t + maxlen − 1)
        assert_eq!(decode_spans(&starts, &ends, &cfg), [TokenSpan::new(0, 2, Sub)]);
    }

    #[test]
    fn decode_requires_matching_types() {
        let cfg = SpanDecodeConfig::default();
        let mut starts = none_row(2);
        starts[0] = cls(Sub);
        let mut ends = none_row(2);
        ends[1] = cls(Del);
        assert_eq!(decode_spans(&starts, &ends, &cfg), []);
    }

    #[test]
    fn decoded_spans_never_overlap_and_fit_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cfg = SpanDecodeConfig { max_len: 4 };
        for _ in 0..500 {
            let n = rng.gen_range(1..15);
            let starts: Vec<usize> = (0..n).map(|_| rng.gen_range(0..SPAN_CLASSES)).collect();
            let ends: Vec<usize> = (0..n).map(|_| rng.gen_range(0..SPAN_CLASSES)).collect();
            let spans = decode_spans(&starts, &ends, &cfg);
            for w in spans.windows(2) {
                assert!(w[0].end < w[1].start);
            }
            for s in &spans {
                assert!(s.end - s.start + 1 <= cfg.max_len);
            }
        }
    }

    /// Gold labels always decode back to the gold spans (when they fit the
    /// window), so the decoder is a faithful inverse of the labeling.
    #[test]
    fn gold_round_trip_through_decoder() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = SpanDecodeConfig::default();
        for _ in 0..1000 {
            let len = rng.gen_range(1..20);
            let mut spans = Vec::new();
            let mut i = 0;
            while i < len {
                if rng.gen_bool(0.4) {
                    let width = rng.gen_range(1..=(len - i).min(5));
                    let t = MutationType::ALL[rng.gen_range(0..MutationType::ALL.len())];
                    spans.push(TokenSpan::new(i, i + width - 1, t));
                    i += width;
                } else {
                    i += 1;
                }
            }
            let sentence = TokenizedSentence {
                doc_id: "d".into(),
                sentence_index: 0,
                tokens: tokenize(&vec!["w"; len].join(" ")),
                gold_spans: spans.clone(),
            };
            let (starts, ends) = gold_token_labels(&sentence);
            assert_eq!(decode_spans(&starts, &ends, &cfg), spans);
        }
    }

    #[test]
    fn spans_to_bio_examples() {
        use crate::tags::Tag;
        assert_eq!(spans_to_bio(&[], 3).unwrap().tags, [Tag::O, Tag::O, Tag::O]);
        assert_eq!(
            spans_to_bio(&[TokenSpan::new(1, 2, Sub)], 4).unwrap().tags,
            [Tag::O, Tag::B(Sub), Tag::I(Sub), Tag::O]
        );
        assert_eq!(
            spans_to_bio(&[TokenSpan::new(0, 0, Snp), TokenSpan::new(2, 3, Del)], 4)
                .unwrap()
                .tags,
            [Tag::B(Snp), Tag::O, Tag::B(Del), Tag::I(Del)]
        );
        assert!(spans_to_bio(&[TokenSpan::new(2, 4, Sub)], 3).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let dim = 4;
        let mut model = SpanModel::new(dim, "test".into());
        for w in model.w_start.iter_mut().chain(model.w_end.iter_mut()) {
            *w = rng.gen_range(-0.5..0.5);
        }
        let instances = vec![
            SpanInstance {
                doc_id: "a".into(),
                sentence_index: 0,
                h: sparse_h(dim, vec![vec![0, 1], vec![2], vec![1, 3]]),
                gold_start: vec![0, cls(Sub), 0],
                gold_end: vec![0, 0, cls(Sub)],
            },
            SpanInstance {
                doc_id: "a".into(),
                sentence_index: 1,
                h: sparse_h(dim, vec![vec![3], vec![0, 2]]),
                gold_start: vec![cls(Snp), 0],
                gold_end: vec![cls(Snp), 0],
            },
        ];
        let refs: Vec<&SpanInstance> = instances.iter().collect();
        let weight_decay = 0.05;
        let (_, grad_s, grad_e) = model.loss_and_gradient(&refs, weight_decay).unwrap();
        let analytic: Vec<f64> = grad_s.iter().chain(grad_e.iter()).copied().collect();
        let mut params = model.flat_params();
        let h = 1e-5;
        for k in 0..params.len() {
            let orig = params[k];
            params[k] = orig + h;
            model.set_flat_params(&params);
            let up = model.loss_and_gradient(&refs, weight_decay).unwrap().0;
            params[k] = orig - h;
            model.set_flat_params(&params);
            let down = model.loss_and_gradient(&refs, weight_decay).unwrap().0;
            params[k] = orig;
            model.set_flat_params(&params);
            let fd = (up - down) / (2.0 * h);
            let rel = (analytic[k] - fd).abs() / analytic[k].abs().max(fd.abs()).max(1.0);
            assert!(rel < 1e-4, "param {k}: analytic {} vs fd {fd}", analytic[k]);
        }
    }

    fn tiny_corpus() -> Vec<TokenizedSentence> {
        let texts: [(&str, Option<(usize, usize)>); 6] = [
            ("the V600E mutation was found", Some((1, 3))),
            ("we observed V600E again", Some((2, 4))),
            ("patients carry V600E variants", Some((2, 4))),
            ("no mutation was found", None),
            ("the assay found nothing", None),
            ("controls were negative", None),
        ];
        texts
            .iter()
            .enumerate()
            .map(|(i, (text, span))| TokenizedSentence {
                doc_id: format!("d{i}"),
                sentence_index: 0,
                tokens: tokenize(text),
                gold_spans: span
                    .map(|(a, b)| vec![TokenSpan::new(a, b, Sub)])
                    .unwrap_or_default(),
            })
            .collect()
    }

    #[test]
    fn training_learns_a_tiny_corpus() {
        let corpus = tiny_corpus();
        let encoder = OrthographicEncoder::new(10, 42);
        let config = TrainConfig {
            epochs: 40,
            learning_rate: 0.05,
            batch_size: 3,
            weight_decay: 0.0001,
            ..TrainConfig::default()
        };
        let model = train_span(&corpus, None, &encoder, &config).unwrap();
        let decode_cfg = SpanDecodeConfig::default();
        for s in &corpus {
            let h = encoder.encode(s).unwrap();
            let spans = model.predict_spans(&h, &decode_cfg).unwrap();
            assert_eq!(spans, s.gold_spans, "on {:?}", s.doc_id);
        }
    }

    #[test]
    fn training_no_mention_corpus_predicts_none() {
        let corpus: Vec<TokenizedSentence> = tiny_corpus()
            .into_iter()
            .map(|mut s| {
                s.gold_spans.clear();
                s
            })
            .collect();
        let encoder = OrthographicEncoder::new(8, 1);
        let config = TrainConfig {
            epochs: 5,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let model = train_span(&corpus, None, &encoder, &config).unwrap();
        for s in &corpus {
            let h = encoder.encode(s).unwrap();
            let (starts, ends) = model.predict_token_labels(&h).unwrap();
            assert!(starts.iter().all(|&c| c == 0));
            assert!(ends.iter().all(|&c| c == 0));
        }
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = tiny_corpus();
        let encoder = OrthographicEncoder::new(8, 42);
        let config = TrainConfig { epochs: 3, ..TrainConfig::default() };
        let a = train_span(&corpus, None, &encoder, &config).unwrap();
        let b = train_span(&corpus, None, &encoder, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let encoder = OrthographicEncoder::new(8, 42);
        assert!(matches!(
            train_span(&[], None, &encoder, &TrainConfig::default()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn single_token_gold_span_marks_both_layers() {
        let s = TokenizedSentence {
            doc_id: "d".into(),
            sentence_index: 0,
            tokens: tokenize("found rs123 here"), // rs and 123 are separate tokens
            gold_spans: vec![TokenSpan::new(1, 1, Snp)],
        };
        let (starts, ends) = gold_token_labels(&s);
        assert_eq!(starts, vec![0, cls(Snp), 0, 0]);
        assert_eq!(ends, vec![0, cls(Snp), 0, 0]);
    }
}
