//! Model files: a versioned JSON envelope for trained models.
//!
//! Both model kinds share one self-describing format selected by a `kind`
//! tag. Floats round-trip exactly (shortest-representation printing), so a
//! save/load/save cycle is byte-identical. Masked transition cells are −∞
//! in memory, which JSON cannot hold; they are stored as `0.0` and the mask
//! restores them on load.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crf::{scheme_mask, CrfModel, LinearChain};
use crate::error::{Error, Result};
use crate::span::{class_names, SpanModel, SPAN_CLASSES};
use crate::tags::TagScheme;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ModelFile {
    Crf {
        format_version: u32,
        scheme: TagScheme,
        labels: Vec<String>,
        dim: usize,
        w: Vec<f64>,
        transitions: Vec<f64>,
        mask: Vec<bool>,
        encoder_digest: String,
    },
    Span {
        format_version: u32,
        labels: Vec<String>,
        dim: usize,
        w_start: Vec<f64>,
        w_end: Vec<f64>,
        encoder_digest: String,
    },
}

/// A model of either kind, as read back from disk.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    Crf(CrfModel),
    Span(SpanModel),
}

impl LoadedModel {
    /// The training-pattern name this model answers to on the command line.
    pub fn pattern_name(&self) -> &'static str {
        match self {
            LoadedModel::Crf(m) => match m.scheme {
                TagScheme::Bio => "crf-bio",
                TagScheme::Bmeo => "crf-bmeo",
            },
            LoadedModel::Span(_) => "span",
        }
    }

    pub fn encoder_digest(&self) -> &str {
        match self {
            LoadedModel::Crf(m) => &m.encoder_digest,
            LoadedModel::Span(m) => &m.encoder_digest,
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::ModelFile(msg.into())
}

fn check_finite(name: &str, values: impl Iterator<Item = f64>) -> Result<()> {
    for (i, v) in values.enumerate() {
        if !v.is_finite() {
            return Err(bad(format!("non-finite value in {name} at index {i}")));
        }
    }
    Ok(())
}

pub fn crf_model_to_json(model: &CrfModel) -> Result<String> {
    let mask = model.chain.mask.clone();
    let transitions: Vec<f64> = model
        .chain
        .transitions
        .iter()
        .zip(&mask)
        .map(|(&t, &ok)| if ok { t } else { 0.0 })
        .collect();
    let file = ModelFile::Crf {
        format_version: FORMAT_VERSION,
        scheme: model.scheme,
        labels: model.scheme.label_names(),
        dim: model.dim,
        w: model.w.clone(),
        transitions,
        mask,
        encoder_digest: model.encoder_digest.clone(),
    };
    let mut out = serde_json::to_string(&file)?;
    out.push('\n');
    Ok(out)
}

pub fn span_model_to_json(model: &SpanModel) -> Result<String> {
    let file = ModelFile::Span {
        format_version: FORMAT_VERSION,
        labels: class_names(),
        dim: model.dim,
        w_start: model.w_start.clone(),
        w_end: model.w_end.clone(),
        encoder_digest: model.encoder_digest.clone(),
    };
    let mut out = serde_json::to_string(&file)?;
    out.push('\n');
    Ok(out)
}

pub fn model_from_json(text: &str) -> Result<LoadedModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    match file {
        ModelFile::Crf {
            format_version,
            scheme,
            labels,
            dim,
            w,
            transitions,
            mask,
            encoder_digest,
        } => {
            if format_version != FORMAT_VERSION {
                return Err(bad(format!(
                    "unsupported format_version {format_version} (expected {FORMAT_VERSION})"
                )));
            }
            if labels != scheme.label_names() {
                return Err(bad(format!("label order does not match scheme {scheme}")));
            }
            let n = scheme.label_count();
            if w.len() != dim * n {
                return Err(bad(format!(
                    "w has {} entries, expected dim*labels = {}",
                    w.len(),
                    dim * n
                )));
            }
            let full = (n + 2) * (n + 2);
            if mask.len() != full || transitions.len() != full {
                return Err(bad(format!(
                    "transition table must have {full} entries, got {} values / {} mask bits",
                    transitions.len(),
                    mask.len()
                )));
            }
            if mask != scheme_mask(scheme) {
                return Err(bad(format!("transition mask does not match scheme {scheme}")));
            }
            check_finite("w", w.iter().copied())?;
            check_finite(
                "transitions",
                transitions
                    .iter()
                    .zip(&mask)
                    .filter(|(_, &ok)| ok)
                    .map(|(&t, _)| t),
            )?;
            let mut chain = LinearChain::new(n, mask.clone());
            for (i, (&t, &ok)) in transitions.iter().zip(&mask).enumerate() {
                if ok {
                    chain.set_transition(i / (n + 2), i % (n + 2), t);
                }
            }
            Ok(LoadedModel::Crf(CrfModel {
                scheme,
                dim,
                w,
                chain,
                encoder_digest,
            }))
        }
        ModelFile::Span {
            format_version,
            labels,
            dim,
            w_start,
            w_end,
            encoder_digest,
        } => {
            if format_version != FORMAT_VERSION {
                return Err(bad(format!(
                    "unsupported format_version {format_version} (expected {FORMAT_VERSION})"
                )));
            }
            if labels != class_names() {
                return Err(bad("label order does not match the span class set".to_string()));
            }
            let expected = dim * SPAN_CLASSES;
            if w_start.len() != expected || w_end.len() != expected {
                return Err(bad(format!(
                    "layer weights must have dim*classes = {expected} entries, got {} / {}",
                    w_start.len(),
                    w_end.len()
                )));
            }
            check_finite("w_start", w_start.iter().copied())?;
            check_finite("w_end", w_end.iter().copied())?;
            Ok(LoadedModel::Span(SpanModel {
                dim,
                w_start,
                w_end,
                encoder_digest,
            }))
        }
    }
}

pub fn save_crf_model(model: &CrfModel, path: &Path) -> Result<()> {
    let text = crf_model_to_json(model)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn save_span_model(model: &SpanModel, path: &Path) -> Result<()> {
    let text = span_model_to_json(model)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

pub fn load_crf_model(path: &Path) -> Result<CrfModel> {
    match load_model(path)? {
        LoadedModel::Crf(m) => Ok(m),
        LoadedModel::Span(_) => Err(bad(format!(
            "{}: expected a crf model, found a span model",
            path.display()
        ))),
    }
}

pub fn load_span_model(path: &Path) -> Result<SpanModel> {
    match load_model(path)? {
        LoadedModel::Crf(_) => Err(bad(format!(
            "{}: expected a span model, found a crf model",
            path.display()
        ))),
        LoadedModel::Span(m) => Ok(m),
    }
}
