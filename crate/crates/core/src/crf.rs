//! Linear-chain CRF tagger.
//!
//! The chain assigns every tag sequence the score
//! `Σ_j emission[j][y_j] + T[y_{j−1}, y_j]`, including virtual START and
//! STOP bookends, and normalizes over all sequences permitted by a boolean
//! transition mask. The mask encodes the tag-scheme grammar, so decoded
//! output is structurally valid by construction. Inference is exact:
//! log-space forward for the partition function, forward–backward for the
//! marginals behind the analytic gradient, Viterbi for decoding.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::corpus::TokenizedSentence;
use crate::encoding::{Encoder, RepresentationMatrix};
use crate::error::{Error, Result};
use crate::optim::{Adam, TrainConfig};
use crate::tags::{spans_to_tags, Tag, TagScheme, TagSequence};

/// Transition structure shared by every chain: `n_labels` real labels plus
/// virtual START (index `n_labels`) and STOP (index `n_labels + 1`).
/// Disallowed transitions hold −∞ and are never updated.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearChain {
    n_labels: usize,
    /// `(n_labels+2)²` scores, row-major by source label.
    pub transitions: Vec<f64>,
    /// Same shape; `true` marks an allowed transition.
    pub mask: Vec<bool>,
}

impl LinearChain {
    /// Zero scores on allowed transitions, −∞ elsewhere.
    pub fn new(n_labels: usize, mask: Vec<bool>) -> Self {
        let width = n_labels + 2;
        assert_eq!(mask.len(), width * width, "mask shape mismatch");
        let transitions = mask
            .iter()
            .map(|&ok| if ok { 0.0 } else { f64::NEG_INFINITY })
            .collect();
        LinearChain { n_labels, transitions, mask }
    }

    /// A chain allowing every label-to-label transition (plus START→label
    /// and label→STOP) — handy for tests and enumeration oracles.
    pub fn unmasked(n_labels: usize) -> Self {
        let width = n_labels + 2;
        let start = n_labels;
        let stop = n_labels + 1;
        let mut mask = vec![false; width * width];
        for from in 0..width {
            for to in 0..width {
                let ok = from != stop
                    && to != start
                    && !(from == start && to == stop)
                    && (from < n_labels || from == start)
                    && (to < n_labels || to == stop);
                mask[from * width + to] = ok;
            }
        }
        LinearChain::new(n_labels, mask)
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn start(&self) -> usize {
        self.n_labels
    }

    pub fn stop(&self) -> usize {
        self.n_labels + 1
    }

    fn width(&self) -> usize {
        self.n_labels + 2
    }

    pub fn index(&self, from: usize, to: usize) -> usize {
        from * self.width() + to
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.transitions[self.index(from, to)]
    }

    pub fn allowed(&self, from: usize, to: usize) -> bool {
        self.mask[self.index(from, to)]
    }

    /// Sets one transition score; the entry must be allowed by the mask.
    pub fn set_transition(&mut self, from: usize, to: usize, value: f64) {
        let idx = self.index(from, to);
        assert!(self.mask[idx], "cannot set a masked transition");
        self.transitions[idx] = value;
    }

    /// Score of one tag sequence: emissions plus transitions, START and STOP
    /// included. A masked transition yields −∞, not an error.
    pub fn score(&self, emissions: &[Vec<f64>], tags: &[usize]) -> f64 {
        assert_eq!(emissions.len(), tags.len(), "tag/emission length mismatch");
        let mut total = 0.0;
        let mut prev = self.start();
        for (e, &y) in emissions.iter().zip(tags) {
            if !self.allowed(prev, y) {
                return f64::NEG_INFINITY;
            }
            total += self.transition(prev, y) + e[y];
            prev = y;
        }
        if !self.allowed(prev, self.stop()) {
            return f64::NEG_INFINITY;
        }
        total + self.transition(prev, self.stop())
    }

    /// Forward table; `alpha[t][y]` = log-sum over prefixes ending in `y` at
    /// position `t`, emission at `t` included.
    fn forward(&self, emissions: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = emissions.len();
        let l = self.n_labels;
        let mut alpha = vec![vec![f64::NEG_INFINITY; l]; n];
        for y in 0..l {
            if self.allowed(self.start(), y) {
                alpha[0][y] = self.transition(self.start(), y) + emissions[0][y];
            }
        }
        for pos in 1..n {
            for y in 0..l {
                alpha[pos][y] = logsumexp_with(l, |y1| alpha[pos - 1][y1] + self.transition(y1, y))
                    + emissions[pos][y];
            }
        }
        alpha
    }

    /// Backward table; `beta[t][y]` = log-sum over completions after
    /// position `t` given label `y` there (emission at `t` excluded).
    fn backward(&self, emissions: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = emissions.len();
        let l = self.n_labels;
        let mut beta = vec![vec![f64::NEG_INFINITY; l]; n];
        for y in 0..l {
            beta[n - 1][y] = self.transition(y, self.stop());
        }
        for pos in (0..n - 1).rev() {
            for y in 0..l {
                beta[pos][y] = logsumexp_with(l, |y2| {
                    self.transition(y, y2) + emissions[pos + 1][y2] + beta[pos + 1][y2]
                });
            }
        }
        beta
    }

    /// Log of the partition function: the normalizer over all mask-legal
    /// sequences. −∞ for an empty input (no sequences to sum).
    pub fn log_partition(&self, emissions: &[Vec<f64>]) -> f64 {
        if emissions.is_empty() {
            return f64::NEG_INFINITY;
        }
        let alpha = self.forward(emissions);
        let last = &alpha[emissions.len() - 1];
        logsumexp_with(self.n_labels, |y| last[y] + self.transition(y, self.stop()))
    }

    /// Exact node and edge marginals via forward–backward.
    pub fn posteriors(&self, emissions: &[Vec<f64>]) -> Posteriors {
        let n = emissions.len();
        let l = self.n_labels;
        assert!(n > 0, "posteriors of an empty sentence");
        let alpha = self.forward(emissions);
        let beta = self.backward(emissions);
        let log_z =
            logsumexp_with(l, |y| alpha[n - 1][y] + self.transition(y, self.stop()));
        assert!(log_z.is_finite(), "no mask-legal sequence exists");

        let node: Vec<Vec<f64>> = (0..n)
            .map(|t| (0..l).map(|y| (alpha[t][y] + beta[t][y] - log_z).exp()).collect())
            .collect();
        let edge: Vec<Vec<f64>> = (1..n)
            .map(|t| {
                let mut m = vec![0.0; l * l];
                for y1 in 0..l {
                    if alpha[t - 1][y1] == f64::NEG_INFINITY {
                        continue;
                    }
                    for y2 in 0..l {
                        if !self.allowed(y1, y2) {
                            continue;
                        }
                        let v = alpha[t - 1][y1]
                            + self.transition(y1, y2)
                            + emissions[t][y2]
                            + beta[t][y2]
                            - log_z;
                        m[y1 * l + y2] = v.exp();
                    }
                }
                m
            })
            .collect();
        Posteriors { log_z, node, edge }
    }

    /// Exact argmax sequence and its score. Ties break toward the lowest
    /// label index at every decision.
    pub fn viterbi(&self, emissions: &[Vec<f64>]) -> (Vec<usize>, f64) {
        let n = emissions.len();
        let l = self.n_labels;
        if n == 0 {
            return (Vec::new(), 0.0);
        }
        let mut delta = vec![f64::NEG_INFINITY; l];
        let mut back = vec![vec![0usize; l]; n];
        for y in 0..l {
            if self.allowed(self.start(), y) {
                delta[y] = self.transition(self.start(), y) + emissions[0][y];
            }
        }
        for pos in 1..n {
            let mut next = vec![f64::NEG_INFINITY; l];
            for y in 0..l {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0usize;
                for y1 in 0..l {
                    let v = delta[y1] + self.transition(y1, y);
                    if v > best {
                        best = v;
                        arg = y1;
                    }
                }
                next[y] = best + emissions[pos][y];
                back[pos][y] = arg;
            }
            delta = next;
        }
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0usize;
        for y in 0..l {
            let v = delta[y] + self.transition(y, self.stop());
            if v > best {
                best = v;
                arg = y;
            }
        }
        assert!(best.is_finite(), "no mask-legal sequence exists");
        let mut tags = vec![0usize; n];
        tags[n - 1] = arg;
        for pos in (1..n).rev() {
            tags[pos - 1] = back[pos][tags[pos]];
        }
        (tags, best)
    }
}

/// Marginals produced by [`LinearChain::posteriors`].
pub struct Posteriors {
    pub log_z: f64,
    /// `node[t][y]` = P(y at position t).
    pub node: Vec<Vec<f64>>,
    /// `edge[t-1][y1 * L + y2]` = P(y1 at t−1, y2 at t), for t ≥ 1.
    pub edge: Vec<Vec<f64>>,
}

fn logsumexp_with(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for i in 0..n {
        max = max.max(f(i));
    }
    if max == f64::NEG_INFINITY {
        return max;
    }
    let mut sum = 0.0;
    for i in 0..n {
        let v = f(i);
        if v > f64::NEG_INFINITY {
            sum += (v - max).exp();
        }
    }
    max + sum.ln()
}

/// Builds the transition mask encoding a scheme's grammar.
pub fn scheme_mask(scheme: TagScheme) -> Vec<bool> {
    let l = scheme.label_count();
    let width = l + 2;
    let mut mask = vec![false; width * width];
    for from in 0..width {
        for to in 0..width {
            if from == l + 1 || to == l {
                continue; // nothing leaves STOP, nothing enters START
            }
            let from_tag = (from < l).then(|| Tag::from_index(scheme, from));
            let to_tag = (to < l).then(|| Tag::from_index(scheme, to));
            mask[from * width + to] = transition_ok(scheme, from_tag, to_tag);
        }
    }
    mask
}

/// Grammar rule for one transition; `None` stands for START (as `from`) or
/// STOP (as `to`).
fn transition_ok(scheme: TagScheme, from: Option<Tag>, to: Option<Tag>) -> bool {
    match (from, to) {
        (None, None) => false, // empty sequences are out of scope
        (None, Some(t)) => matches!(t, Tag::O | Tag::B(_)),
        (Some(f), None) => match scheme {
            TagScheme::Bio => true,
            TagScheme::Bmeo => !matches!(f, Tag::M(_)), // a middle can't end the sentence
        },
        (Some(f), Some(t)) => match f {
            // inside a BMEO mention only M-s or E-s may follow
            Tag::M(s) => matches!(t, Tag::M(p) | Tag::E(p) if p == s),
            _ => match t {
                Tag::O | Tag::B(_) => true,
                Tag::I(ty) => matches!(f, Tag::B(p) | Tag::I(p) if p == ty),
                Tag::M(ty) | Tag::E(ty) => matches!(f, Tag::B(p) if p == ty),
            },
        },
    }
}

/// One encoded, gold-tagged training sentence.
#[derive(Debug, Clone)]
pub struct CrfInstance {
    pub doc_id: String,
    pub sentence_index: usize,
    pub h: RepresentationMatrix,
    pub gold: Vec<usize>,
}

/// A trained (or in-training) CRF tagger.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub scheme: TagScheme,
    /// Representation dimension d.
    pub dim: usize,
    /// Emission weights, `d × |L|` row-major by feature.
    pub w: Vec<f64>,
    pub chain: LinearChain,
    pub encoder_digest: String,
}

impl CrfModel {
    /// Zero-initialized model with the scheme's grammar mask.
    pub fn new(scheme: TagScheme, dim: usize, encoder_digest: String) -> Self {
        let chain = LinearChain::new(scheme.label_count(), scheme_mask(scheme));
        CrfModel {
            scheme,
            dim,
            w: vec![0.0; dim * scheme.label_count()],
            chain,
            encoder_digest,
        }
    }

    pub fn n_labels(&self) -> usize {
        self.scheme.label_count()
    }

    /// Per-token label logits `H · W`.
    pub fn emissions(&self, h: &RepresentationMatrix) -> Vec<Vec<f64>> {
        h.project(&self.w, self.n_labels())
    }

    /// Score of a specific tag sequence (−∞ if it violates the mask).
    pub fn sequence_score(&self, h: &RepresentationMatrix, tags: &TagSequence) -> Result<f64> {
        if tags.scheme != self.scheme {
            return Err(Error::SchemeMismatch {
                expected: self.scheme.to_string(),
                got: tags.scheme.to_string(),
            });
        }
        if tags.len() != h.len() {
            return Err(Error::LengthMismatch(format!(
                "{} tags for {} tokens",
                tags.len(),
                h.len()
            )));
        }
        Ok(self.chain.score(&self.emissions(h), &tags.indices()))
    }

    pub fn log_partition(&self, h: &RepresentationMatrix) -> f64 {
        self.chain.log_partition(&self.emissions(h))
    }

    /// Viterbi decoding; the mask guarantees a scheme-valid sequence.
    pub fn decode(&self, h: &RepresentationMatrix) -> TagSequence {
        let (tags, _) = self.chain.viterbi(&self.emissions(h));
        TagSequence::from_indices(self.scheme, &tags)
    }

    fn validate_gold(&self, inst: &CrfInstance) -> Result<()> {
        let mut prev = self.chain.start();
        for &y in &inst.gold {
            if y >= self.n_labels() || !self.chain.allowed(prev, y) {
                return Err(Error::InvalidGold {
                    doc_id: inst.doc_id.clone(),
                    sentence_index: inst.sentence_index,
                });
            }
            prev = y;
        }
        if !self.chain.allowed(prev, self.chain.stop()) {
            return Err(Error::InvalidGold {
                doc_id: inst.doc_id.clone(),
                sentence_index: inst.sentence_index,
            });
        }
        Ok(())
    }

    /// Mean negative log-likelihood of a batch plus an L2 penalty, with the
    /// analytic gradient over `w` and the transition matrix. The transition
    /// gradient has the chain's full shape; masked entries stay zero.
    pub fn nll_and_gradient(
        &self,
        batch: &[&CrfInstance],
        weight_decay: f64,
    ) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let l = self.n_labels();
        let mut loss = 0.0;
        let mut grad_w = vec![0.0; self.w.len()];
        let mut grad_t = vec![0.0; self.chain.transitions.len()];

        for inst in batch {
            self.validate_gold(inst)?;
            let n = inst.gold.len();
            assert_eq!(n, inst.h.len(), "gold/representation length mismatch");
            if n == 0 {
                continue;
            }
            let emissions = inst.h.project(&self.w, l);
            let post = self.chain.posteriors(&emissions);
            let gold_score = self.chain.score(&emissions, &inst.gold);
            loss += post.log_z - gold_score;

            // emission gradient: marginal − gold indicator, per token
            let mut coeff = vec![0.0; l];
            for t in 0..n {
                coeff.copy_from_slice(&post.node[t]);
                coeff[inst.gold[t]] -= 1.0;
                inst.h.accumulate_outer(t, &coeff, &mut grad_w);
            }

            // transition gradient: expected edge counts − gold edge counts
            let start = self.chain.start();
            let stop = self.chain.stop();
            for y in 0..l {
                grad_t[self.chain.index(start, y)] += post.node[0][y];
                grad_t[self.chain.index(y, stop)] += post.node[n - 1][y];
            }
            grad_t[self.chain.index(start, inst.gold[0])] -= 1.0;
            grad_t[self.chain.index(inst.gold[n - 1], stop)] -= 1.0;
            for t in 1..n {
                let edges = &post.edge[t - 1];
                for y1 in 0..l {
                    for y2 in 0..l {
                        let p = edges[y1 * l + y2];
                        if p != 0.0 {
                            grad_t[self.chain.index(y1, y2)] += p;
                        }
                    }
                }
                grad_t[self.chain.index(inst.gold[t - 1], inst.gold[t])] -= 1.0;
            }
        }

        let scale = 1.0 / batch.len() as f64;
        loss *= scale;
        for g in &mut grad_w {
            *g *= scale;
        }
        for g in &mut grad_t {
            *g *= scale;
        }

        if weight_decay != 0.0 {
            let mut sq = 0.0;
            for (g, &p) in grad_w.iter_mut().zip(&self.w) {
                sq += p * p;
                *g += weight_decay * p;
            }
            for (idx, &ok) in self.chain.mask.iter().enumerate() {
                if ok {
                    let p = self.chain.transitions[idx];
                    sq += p * p;
                    grad_t[idx] += weight_decay * p;
                }
            }
            loss += 0.5 * weight_decay * sq;
        }
        Ok((loss, grad_w, grad_t))
    }

    /// Mean data NLL (no decay term) — the dev-selection criterion.
    pub fn mean_nll(&self, instances: &[CrfInstance]) -> Result<f64> {
        let refs: Vec<&CrfInstance> = instances.iter().collect();
        let (loss, _, _) = self.nll_and_gradient(&refs, 0.0)?;
        Ok(loss)
    }

    /// Flat trainable parameters: `w` then the allowed transition entries in
    /// flat-index order.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = self.w.clone();
        for (idx, &ok) in self.chain.mask.iter().enumerate() {
            if ok {
                out.push(self.chain.transitions[idx]);
            }
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let (w, t) = flat.split_at(self.w.len());
        self.w.copy_from_slice(w);
        let mut it = t.iter();
        for (idx, &ok) in self.chain.mask.iter().enumerate() {
            if ok {
                self.chain.transitions[idx] = *it.next().expect("flat params too short");
            }
        }
        assert!(it.next().is_none(), "flat params too long");
    }

    /// Packs full-shape gradients into the flat layout of `flat_params`.
    pub fn flat_grad(&self, grad_w: &[f64], grad_t: &[f64]) -> Vec<f64> {
        let mut out = grad_w.to_vec();
        for (idx, &ok) in self.chain.mask.iter().enumerate() {
            if ok {
                out.push(grad_t[idx]);
            }
        }
        out
    }
}

/// Encodes and gold-tags sentences for training.
pub fn build_instances(
    sentences: &[TokenizedSentence],
    encoder: &dyn Encoder,
    scheme: TagScheme,
) -> Result<Vec<CrfInstance>> {
    sentences
        .iter()
        .filter(|s| !s.tokens.is_empty())
        .map(|s| {
            let h = encoder.encode(s)?;
            let gold = spans_to_tags(s.tokens.len(), &s.gold_spans, scheme)?.indices();
            Ok(CrfInstance {
                doc_id: s.doc_id.clone(),
                sentence_index: s.sentence_index,
                h,
                gold,
            })
        })
        .collect()
}

/// Trains a CRF with Adam over shuffled mini-batches. Deterministic given
/// the seed. With a dev split the returned model is the best-dev-loss
/// snapshot, and `patience` (if non-zero) stops training after that many
/// epochs without improvement.
pub fn train_crf(
    train: &[TokenizedSentence],
    dev: Option<&[TokenizedSentence]>,
    encoder: &dyn Encoder,
    scheme: TagScheme,
    config: &TrainConfig,
) -> Result<CrfModel> {
    config.validate()?;
    let instances = build_instances(train, encoder, scheme)?;
    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dev_instances = match dev {
        Some(sentences) if !sentences.is_empty() => {
            Some(build_instances(sentences, encoder, scheme)?)
        }
        _ => None,
    };

    let mut model = CrfModel::new(scheme, encoder.dim(), encoder.digest());
    for inst in &instances {
        model.validate_gold(inst)?;
    }

    let mut params = model.flat_params();
    let mut adam = Adam::new(params.len(), config.learning_rate);
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..instances.len()).collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut since_best = 0usize;

    for _epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let dropped: Vec<CrfInstance>;
            let batch: Vec<&CrfInstance> = if config.dropout > 0.0 {
                dropped = chunk
                    .iter()
                    .map(|&i| CrfInstance {
                        h: instances[i].h.dropout(config.dropout, &mut rng),
                        ..instances[i].clone()
                    })
                    .collect();
                dropped.iter().collect()
            } else {
                chunk.iter().map(|&i| &instances[i]).collect()
            };
            let (_, grad_w, grad_t) = model.nll_and_gradient(&batch, config.weight_decay)?;
            let grad = model.flat_grad(&grad_w, &grad_t);
            adam.step(&mut params, &grad);
            model.set_flat_params(&params);
        }

        if let Some(dev) = &dev_instances {
            let dev_loss = model.mean_nll(dev)?;
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
