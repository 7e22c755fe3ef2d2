//! Exact-match mention-level evaluation.
//!
//! A predicted span counts as a true positive only when a gold span in the
//! same sentence has identical token boundaries and mutation type — each
//! gold span matches at most one prediction. Precision, recall, and F1 are
//! reported micro-averaged and per mutation type, with 0/0 defined as 0.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{MutationType, TokenSpan};
use crate::error::{Error, Result};

/// Match counts with the derived ratios.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrfCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl PrfCounts {
    fn ratio(num: usize, den: usize) -> f64 {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    pub fn precision(&self) -> f64 {
        Self::ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        Self::ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

/// Evaluation result: micro plus one row per mutation type (all seven,
/// declaration order, zero rows included).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub model: String,
    pub micro: PrfCounts,
    pub per_type: Vec<(MutationType, PrfCounts)>,
}

/// Scores per-sentence (gold, predicted) span lists.
pub fn exact_match_prf(
    sentences: &[(Vec<TokenSpan>, Vec<TokenSpan>)],
    dataset: &str,
    model: &str,
) -> EvalReport {
    let mut per_type: Vec<(MutationType, PrfCounts)> = MutationType::ALL
        .iter()
        .map(|&t| (t, PrfCounts::default()))
        .collect();

    for (gold, pred) in sentences {
        let mut unmatched: HashSet<(usize, usize, MutationType)> =
            gold.iter().map(|s| (s.start, s.end, s.mtype)).collect();
        for p in pred {
            let row = &mut per_type[p.mtype.index()].1;
            if unmatched.remove(&(p.start, p.end, p.mtype)) {
                row.tp += 1;
            } else {
                row.fp += 1;
            }
        }
        for (_, _, mtype) in unmatched {
            per_type[mtype.index()].1.fn_ += 1;
        }
    }

    let micro = per_type.iter().fold(PrfCounts::default(), |acc, (_, c)| PrfCounts {
        tp: acc.tp + c.tp,
        fp: acc.fp + c.fp,
        fn_: acc.fn_ + c.fn_,
    });
    EvalReport {
        dataset: dataset.to_string(),
        model: model.to_string(),
        micro,
        per_type,
    }
}

/// One decimal place, as a percentage: 0.1666… → "16.7%".
fn percent(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

#[derive(Serialize)]
struct RowJson {
    tp: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    precision: f64,
    recall: f64,
    f1: f64,
}

impl From<&PrfCounts> for RowJson {
    fn from(c: &PrfCounts) -> Self {
        RowJson {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
        }
    }
}

#[derive(Serialize)]
struct ReportJson<'a> {
    dataset: &'a str,
    model: &'a str,
    micro: RowJson,
    per_type: Vec<(String, RowJson)>,
}

/// Renders a report as `json` or `tsv`. Both are deterministic; the TSV
/// prints percentages with one decimal and keeps the fixed type order.
pub fn emit_report(report: &EvalReport, format: &str) -> Result<String> {
    match format {
        "json" => {
            let mirror = ReportJson {
                dataset: &report.dataset,
                model: &report.model,
                micro: (&report.micro).into(),
                per_type: report
                    .per_type
                    .iter()
                    .map(|(t, c)| (t.long_name().to_string(), c.into()))
                    .collect(),
            };
            let mut out = serde_json::to_string_pretty(&mirror)?;
            out.push('\n');
            Ok(out)
        }
        "tsv" => {
            let mut out = String::from("type\ttp\tfp\tfn\tprecision\trecall\tf1\n");
            let mut row = |name: &str, c: &PrfCounts| {
                writeln!(
                    out,
                    "{name}\t{}\t{}\t{}\t{}\t{}\t{}",
                    c.tp,
                    c.fp,
                    c.fn_,
                    percent(c.precision()),
                    percent(c.recall()),
                    percent(c.f1())
                )
                .unwrap();
            };
            row("ALL", &report.micro);
            for (t, c) in &report.per_type {
                row(t.long_name(), c);
            }
            Ok(out)
        }
        other => Err(Error::BadReportFormat(other.to_string())),
    }
}
