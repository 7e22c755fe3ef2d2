//! End-to-end runs behind the CLI subcommands.
//!
//! Each `run_*` function takes one validated config struct, reads and writes
//! files, and returns a small summary for logging. Every run also writes an
//! effective-config echo (`<output>.config.json`) next to its main output so
//! results stay reproducible from the artifacts alone. All runs are
//! deterministic given the config.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conll::{read_conll_file, write_conll_file, ConllData};
use crate::corpus::{parse_pubtator, split_sentences, AliasTable};
use crate::corpus::{Diagnostic, TokenizedSentence};
use crate::encoding::{Encoder, EncoderConfig, RepresentationMatrix};
use crate::ensemble::{majority_vote, token_vote, VoteInput};
use crate::error::{Error, Result};
use crate::eval::{emit_report, exact_match_prf, EvalReport};
use crate::expansion::{expand, CorpusStats, MentionDictionary};
use crate::model_io::{load_model, save_crf_model, save_span_model, LoadedModel};
use crate::optim::TrainConfig;
use crate::span::{train_span, SpanDecodeConfig};
use crate::tags::{Tag, TagScheme, TagSequence};
use crate::{crf::train_crf, crf::CrfModel, span::SpanModel};

/// Which model family a training run produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pattern {
    CrfBio,
    CrfBmeo,
    Span,
}

impl Pattern {
    pub fn name(self) -> &'static str {
        match self {
            Pattern::CrfBio => "crf-bio",
            Pattern::CrfBmeo => "crf-bmeo",
            Pattern::Span => "span",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crf-bio" => Ok(Pattern::CrfBio),
            "crf-bmeo" => Ok(Pattern::CrfBmeo),
            "span" => Ok(Pattern::Span),
            other => Err(Error::Config(format!(
                "unknown pattern {other:?} (expected crf-bio, crf-bmeo, or span)"
            ))),
        }
    }
}

/// Prediction mode. The `expanded` variants behave like their plain
/// counterparts at prediction time; the name records that the models were
/// trained on an expanded training set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[default]
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "ensemble")]
    Ensemble,
    #[serde(rename = "expanded")]
    Expanded,
    #[serde(rename = "expanded+ensemble")]
    ExpandedEnsemble,
}

impl Mode {
    pub fn is_ensemble(self) -> bool {
        matches!(self, Mode::Ensemble | Mode::ExpandedEnsemble)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Raw => "raw",
            Mode::Ensemble => "ensemble",
            Mode::Expanded => "expanded",
            Mode::ExpandedEnsemble => "expanded+ensemble",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Mode::Raw),
            "ensemble" => Ok(Mode::Ensemble),
            "expanded" => Ok(Mode::Expanded),
            "expanded+ensemble" => Ok(Mode::ExpandedEnsemble),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected raw, ensemble, expanded, or expanded+ensemble)"
            ))),
        }
    }
}

fn default_seed() -> u64 {
    42
}

fn default_format() -> String {
    "tsv".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvertConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Extra `alias<TAB>canonical` rows; the built-in table is always loaded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alias_table: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandConfig {
    pub inputs: Vec<PathBuf>,
    pub output: PathBuf,
    /// Defaults to `<output>.dict.tsv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary_output: Option<PathBuf>,
    /// Defaults to `<output>.stats.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats_output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainPipelineConfig {
    pub pattern: Pattern,
    pub train: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev: Option<PathBuf>,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub training: TrainConfig,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    pub models: Vec<PathBuf>,
    pub input: PathBuf,
    pub output: PathBuf,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub span_decode: SpanDecodeConfig,
    /// Resolves an orthographic encoder with no explicit seed; must match
    /// the training seed for the digest check to pass.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub gold: PathBuf,
    pub predictions: PathBuf,
    pub output: PathBuf,
    #[serde(default = "default_format")]
    pub format: String,
    /// Report labels; default to the input file stems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleCheckConfig {
    pub models: Vec<PathBuf>,
    pub input: PathBuf,
    pub output: PathBuf,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub span_decode: SpanDecodeConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

/// Summary returned by [`run_convert`]. Diagnostics are non-fatal but the
/// CLI exits nonzero when any are present.
#[derive(Debug)]
pub struct ConvertReport {
    pub documents: usize,
    pub sentences: usize,
    pub diagnostics: Vec<Diagnostic>,
}

/// Side-output paths and per-corpus stats from [`run_expand`].
#[derive(Debug)]
pub struct ExpandReport {
    pub stats: Vec<CorpusStats>,
    pub dictionary_size: usize,
    pub dictionary_path: PathBuf,
    pub stats_path: PathBuf,
}

/// Token-level tally from [`run_ensemble_check`].
#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct EnsembleCheckReport {
    pub sentences: usize,
    pub tokens: usize,
    pub unanimous_tokens: usize,
    pub majority_tokens: usize,
    pub tie_break_tokens: usize,
    pub consistent: bool,
}

/// `<output>.config.json`, next to the main output.
pub fn config_echo_path(output: &Path) -> PathBuf {
    let name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    output.with_file_name(format!("{name}.config.json"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_config_echo<C: Serialize>(output: &Path, config: &C) -> Result<()> {
    let mut text = serde_json::to_string_pretty(config)?;
    text.push('\n');
    write_text(&config_echo_path(output), &text)
}

fn pipeline_err(msg: impl Into<String>) -> Error {
    Error::Pipeline(msg.into())
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

/// Assigns 0.. sentence indices per document, in order — the numbering the
/// token/tag file reader would assign after a round trip.
fn renumber_sentences(sentences: &mut [TokenizedSentence]) {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for s in sentences.iter_mut() {
        let c = counts.entry(s.doc_id.clone()).or_insert(0);
        s.sentence_index = *c;
        *c += 1;
    }
}

/// PubTator corpus → token/tag file.
pub fn run_convert(config: &ConvertConfig) -> Result<ConvertReport> {
    let text = fs::read_to_string(&config.input).map_err(|e| Error::io(&config.input, e))?;
    let aliases = match &config.alias_table {
        Some(path) => {
            let table = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            AliasTable::parse(&table)?
        }
        None => AliasTable::default(),
    };
    let parsed = parse_pubtator(&text, &aliases)?;
    let mut diagnostics = parsed.diagnostics;
    let mut sentences = Vec::new();
    for doc in &parsed.documents {
        // split_sentences also aligns the document's mentions to token spans
        let (doc_sentences, mut diags) = split_sentences(doc);
        diagnostics.append(&mut diags);
        sentences.extend(doc_sentences);
    }
    write_conll_file(&config.output, &sentences, None)?;
    write_config_echo(&config.output, config)?;
    Ok(ConvertReport {
        documents: parsed.documents.len(),
        sentences: sentences.len(),
        diagnostics,
    })
}

/// Merge converted corpora: keep every positive sentence, keep a negative
/// only when it shares a token with some mention, and export the mention
/// dictionary plus per-corpus stats.
pub fn run_expand(config: &ExpandConfig) -> Result<ExpandReport> {
    if config.inputs.is_empty() {
        return Err(pipeline_err("expand needs at least one input corpus"));
    }
    let mut corpora: Vec<(String, Vec<TokenizedSentence>)> = Vec::new();
    for path in &config.inputs {
        let name = file_stem(path);
        if corpora.iter().any(|(n, _)| *n == name) {
            return Err(pipeline_err(format!(
                "duplicate corpus name {name:?}; rename one of the input files"
            )));
        }
        let mut data = read_conll_file(path)?;
        for s in &mut data.sentences {
            s.doc_id = format!("{name}:{}", s.doc_id);
        }
        corpora.push((name, data.sentences));
    }

    let slices: Vec<&[TokenizedSentence]> = corpora.iter().map(|(_, s)| s.as_slice()).collect();
    let dictionary = MentionDictionary::build(&slices);
    let pairs: Vec<(&str, &[TokenizedSentence])> = corpora
        .iter()
        .map(|(n, s)| (n.as_str(), s.as_slice()))
        .collect();
    let expanded = expand(&pairs, &dictionary);

    let mut sentences: Vec<TokenizedSentence> =
        expanded.sentences.into_iter().map(|e| e.sentence).collect();
    renumber_sentences(&mut sentences);
    write_conll_file(&config.output, &sentences, None)?;

    let dictionary_path = config
        .dictionary_output
        .clone()
        .unwrap_or_else(|| config.output.with_file_name(format!(
            "{}.dict.tsv",
            config.output.file_name().unwrap_or_default().to_string_lossy()
        )));
    write_text(&dictionary_path, &dictionary.serialize())?;

    #[derive(Serialize)]
    struct StatsFile<'a> {
        dictionary_size: usize,
        corpora: &'a [CorpusStats],
    }
    let stats_path = config
        .stats_output
        .clone()
        .unwrap_or_else(|| config.output.with_file_name(format!(
            "{}.stats.json",
            config.output.file_name().unwrap_or_default().to_string_lossy()
        )));
    let mut stats_text = serde_json::to_string_pretty(&StatsFile {
        dictionary_size: dictionary.len(),
        corpora: &expanded.stats,
    })?;
    stats_text.push('\n');
    write_text(&stats_path, &stats_text)?;

    write_config_echo(&config.output, config)?;
    Ok(ExpandReport {
        stats: expanded.stats,
        dictionary_size: dictionary.len(),
        dictionary_path,
        stats_path,
    })
}

/// Train one pattern on a token/tag file and write the model file.
pub fn run_train(config: &TrainPipelineConfig) -> Result<()> {
    config.training.validate()?;
    let train_data = read_conll_file(&config.train)?.sentences;
    let dev_data = match &config.dev {
        Some(path) => Some(read_conll_file(path)?.sentences),
        None => None,
    };
    let encoder = config.encoder.build(config.training.seed)?;
    match config.pattern {
        Pattern::CrfBio | Pattern::CrfBmeo => {
            let scheme = if config.pattern == Pattern::CrfBio {
                TagScheme::Bio
            } else {
                TagScheme::Bmeo
            };
            let model = train_crf(
                &train_data,
                dev_data.as_deref(),
                encoder.as_ref(),
                scheme,
                &config.training,
            )?;
            save_crf_model(&model, &config.output)?;
        }
        Pattern::Span => {
            let model = train_span(
                &train_data,
                dev_data.as_deref(),
                encoder.as_ref(),
                &config.training,
            )?;
            save_span_model(&model, &config.output)?;
        }
    }
    write_config_echo(&config.output, config)?;
    Ok(())
}

fn check_digest(path: &Path, model: &LoadedModel, encoder: &dyn Encoder) -> Result<()> {
    if model.encoder_digest() != encoder.digest() {
        return Err(pipeline_err(format!(
            "model {} was trained with encoder {:?} but this run is configured for {:?}",
            path.display(),
            model.encoder_digest(),
            encoder.digest()
        )));
    }
    Ok(())
}

fn load_models(paths: &[PathBuf], encoder: &dyn Encoder) -> Result<Vec<(PathBuf, LoadedModel)>> {
    let mut models = Vec::new();
    for path in paths {
        let model = load_model(path)?;
        check_digest(path, &model, encoder)?;
        models.push((path.clone(), model));
    }
    Ok(models)
}

/// The three ensemble voters, in (crf-bio, crf-bmeo, span) order.
fn ensemble_triple(
    models: &[(PathBuf, LoadedModel)],
) -> Result<(&CrfModel, &CrfModel, &SpanModel)> {
    let given: Vec<&str> = models.iter().map(|(_, m)| m.pattern_name()).collect();
    let complaint = || {
        pipeline_err(format!(
            "ensemble mode requires exactly one crf-bio, one crf-bmeo, and one span model; got [{}]",
            given.join(", ")
        ))
    };
    if models.len() != 3 {
        return Err(complaint());
    }
    let mut crf_bio = None;
    let mut crf_bmeo = None;
    let mut span = None;
    for (_, model) in models {
        match model {
            LoadedModel::Crf(m) if m.scheme == TagScheme::Bio => {
                if crf_bio.replace(m).is_some() {
                    return Err(complaint());
                }
            }
            LoadedModel::Crf(m) => {
                if crf_bmeo.replace(m).is_some() {
                    return Err(complaint());
                }
            }
            LoadedModel::Span(m) => {
                if span.replace(m).is_some() {
                    return Err(complaint());
                }
            }
        }
    }
    match (crf_bio, crf_bmeo, span) {
        (Some(a), Some(b), Some(c)) => Ok((a, b, c)),
        _ => Err(complaint()),
    }
}

fn single_model_bio(
    model: &LoadedModel,
    h: &RepresentationMatrix,
    span_decode: &SpanDecodeConfig,
) -> Result<TagSequence> {
    match model {
        LoadedModel::Crf(m) => {
            let decoded = m.decode(h);
            if m.scheme == TagScheme::Bmeo {
                decoded.bmeo_to_bio()
            } else {
                Ok(decoded)
            }
        }
        LoadedModel::Span(m) => m.predict_bio(h, span_decode),
    }
}

fn ensemble_votes(
    triple: (&CrfModel, &CrfModel, &SpanModel),
    h: &RepresentationMatrix,
    span_decode: &SpanDecodeConfig,
) -> Result<VoteInput> {
    let (crf_bio, crf_bmeo, span) = triple;
    Ok(VoteInput {
        crf_bio: crf_bio.decode(h),
        crf_bmeo: crf_bmeo.decode(h).bmeo_to_bio()?,
        span: span.predict_bio(h, span_decode)?,
    })
}

/// Tag an input file with one model (`raw`) or the voting ensemble, writing
/// the same format with a predicted-tag column appended.
pub fn run_predict(config: &PredictConfig) -> Result<()> {
    config.span_decode.validate()?;
    let data: ConllData = read_conll_file(&config.input)?;
    let encoder = config.encoder.build(config.seed)?;
    let models = load_models(&config.models, encoder.as_ref())?;

    let mut preds: Vec<TagSequence> = Vec::with_capacity(data.sentences.len());
    if config.mode.is_ensemble() {
        let triple = ensemble_triple(&models)?;
        for sentence in &data.sentences {
            let h = encoder.encode(sentence)?;
            let votes = ensemble_votes(triple, &h, &config.span_decode)?;
            preds.push(majority_vote(&votes)?);
        }
    } else {
        if models.len() != 1 {
            return Err(pipeline_err(format!(
                "mode {} takes exactly one model, got {}",
                config.mode,
                models.len()
            )));
        }
        let (_, model) = &models[0];
        for sentence in &data.sentences {
            let h = encoder.encode(sentence)?;
            preds.push(single_model_bio(model, &h, &config.span_decode)?);
        }
    }

    write_conll_file(&config.output, &data.sentences, Some(&preds))?;
    write_config_echo(&config.output, config)?;
    Ok(())
}

/// Score a prediction file against a gold file; both must tokenize the same
/// sentences. Writes the rendered report and returns its text.
pub fn run_evaluate(config: &EvaluateConfig) -> Result<String> {
    let gold = read_conll_file(&config.gold)?;
    let predicted = read_conll_file(&config.predictions)?;
    let pred_tags = predicted.preds.as_ref().ok_or_else(|| {
        pipeline_err(format!(
            "{} has no predicted-tag column; run predict first",
            config.predictions.display()
        ))
    })?;
    if gold.sentences.len() != predicted.sentences.len() {
        return Err(pipeline_err(format!(
            "gold file has {} sentences but prediction file has {}",
            gold.sentences.len(),
            predicted.sentences.len()
        )));
    }
    let mut pairs = Vec::with_capacity(gold.sentences.len());
    for (g, (p, tags)) in gold
        .sentences
        .iter()
        .zip(predicted.sentences.iter().zip(pred_tags))
    {
        if g.doc_id != p.doc_id {
            return Err(pipeline_err(format!(
                "document order differs: gold {} vs predictions {}",
                g.doc_id, p.doc_id
            )));
        }
        if g.tokens.len() != p.tokens.len() {
            return Err(pipeline_err(format!(
                "token count mismatch in document {} sentence {}: gold {} vs predictions {}",
                g.doc_id,
                g.sentence_index,
                g.tokens.len(),
                p.tokens.len()
            )));
        }
        pairs.push((g.gold_spans.clone(), tags.to_spans()));
    }
    let dataset = config
        .dataset
        .clone()
        .unwrap_or_else(|| file_stem(&config.gold));
    let model = config
        .model
        .clone()
        .unwrap_or_else(|| file_stem(&config.predictions));
    let report: EvalReport = exact_match_prf(&pairs, &dataset, &model);
    let text = emit_report(&report, &config.format)?;
    write_text(&config.output, &text)?;
    write_config_echo(&config.output, config)?;
    Ok(text)
}

/// Re-derive the ensemble from its three voters and verify, token by token
/// with an independent tally, that the combined prediction follows the
/// majority rule (with the crf-bio tie-break) and repairs to valid BIO.
pub fn run_ensemble_check(config: &EnsembleCheckConfig) -> Result<EnsembleCheckReport> {
    config.span_decode.validate()?;
    let data = read_conll_file(&config.input)?;
    let encoder = config.encoder.build(config.seed)?;
    let models = load_models(&config.models, encoder.as_ref())?;
    let triple = ensemble_triple(&models)?;

    let mut report = EnsembleCheckReport {
        sentences: data.sentences.len(),
        tokens: 0,
        unanimous_tokens: 0,
        majority_tokens: 0,
        tie_break_tokens: 0,
        consistent: true,
    };
    let mut failure: Option<String> = None;

    'sentences: for sentence in &data.sentences {
        let h = encoder.encode(sentence)?;
        let votes = ensemble_votes(triple, &h, &config.span_decode)?;
        let voted = token_vote(&votes)?;
        let combined = majority_vote(&votes)?;

        for (t, tag) in voted.tags.iter().enumerate() {
            report.tokens += 1;
            let candidates = [
                &votes.crf_bio.tags[t],
                &votes.crf_bmeo.tags[t],
                &votes.span.tags[t],
            ];
            let count = |x: &Tag| candidates.iter().filter(|c| **c == x).count();
            let expected = candidates
                .iter()
                .find(|c| count(c) >= 2)
                .copied()
                .unwrap_or(&votes.crf_bio.tags[t]);
            match count(expected) {
                3 => report.unanimous_tokens += 1,
                2 => report.majority_tokens += 1,
                _ => report.tie_break_tokens += 1,
            }
            if tag != expected {
                failure = Some(format!(
                    "document {} sentence {} token {}: vote produced {} but the tally expects {}",
                    sentence.doc_id,
                    sentence.sentence_index,
                    t,
                    tag.name(),
                    expected.name()
                ));
                report.consistent = false;
                break 'sentences;
            }
        }
        if combined != voted.repair() || !combined.is_valid() {
            failure = Some(format!(
                "document {} sentence {}: combined sequence is not the repaired vote",
                sentence.doc_id, sentence.sentence_index
            ));
            report.consistent = false;
            break 'sentences;
        }
    }

    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_text(&config.output, &text)?;
    write_config_echo(&config.output, config)?;
    match failure {
        Some(msg) => Err(pipeline_err(msg)),
        None => Ok(report),
    }
}
