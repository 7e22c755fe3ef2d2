//! `varmark` — extract mutation mentions from biomedical text.
//!
//! Subcommands mirror the workflow: `convert` a PubTator corpus to a
//! token/tag file, optionally `expand` a training set across corpora,
//! `train` the three tagging patterns, `predict` raw or ensemble output,
//! `evaluate` exact-match P/R/F1, and `ensemble-check` the voting logic.
//! Every subcommand accepts `--config <json>` plus `--set key=value`
//! overrides; the flags shown below override both. Data goes to files,
//! notes and diagnostics to stderr; the exit code is 0 only for a clean run.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use varmark_core::pipeline::{
    run_convert, run_ensemble_check, run_evaluate, run_expand, run_predict, run_train,
    ConvertConfig, EnsembleCheckConfig, EvaluateConfig, ExpandConfig, PredictConfig,
    TrainPipelineConfig,
};
use varmark_core::Result;

#[derive(Parser)]
#[command(name = "varmark", version, about = "Extract mutation mentions from biomedical text")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file for this subcommand
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key by dotted path, e.g. --set training.epochs=40
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn merged(&self) -> Result<Value> {
        let mut value = config::load_base(self.config.as_deref())?;
        for spec in &self.set {
            config::apply_set(&mut value, spec)?;
        }
        Ok(value)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Convert a PubTator corpus into a token/tag file
    Convert {
        #[command(flatten)]
        config: ConfigArgs,
        /// PubTator input file
        #[arg(long)]
        input: Option<PathBuf>,
        /// Token/tag output file
        #[arg(long)]
        output: Option<PathBuf>,
        /// Extra alias<TAB>canonical rows for mutation-type names
        #[arg(long)]
        alias_table: Option<PathBuf>,
    },
    /// Merge corpora, keeping negatives only when they share a mention token
    Expand {
        #[command(flatten)]
        config: ConfigArgs,
        /// Token/tag input file (repeat per corpus)
        #[arg(long = "input")]
        inputs: Vec<PathBuf>,
        /// Merged token/tag output file
        #[arg(long)]
        output: Option<PathBuf>,
        /// Dictionary export path (default <output>.dict.tsv)
        #[arg(long)]
        dictionary_output: Option<PathBuf>,
        /// Stats JSON path (default <output>.stats.json)
        #[arg(long)]
        stats_output: Option<PathBuf>,
    },
    /// Train one tagging pattern and write its model file
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// crf-bio, crf-bmeo, or span
        #[arg(long)]
        pattern: Option<String>,
        /// Training token/tag file
        #[arg(long)]
        train: Option<PathBuf>,
        /// Development token/tag file for best-epoch selection
        #[arg(long)]
        dev: Option<PathBuf>,
        /// Model output file
        #[arg(long)]
        output: Option<PathBuf>,
        /// Random seed (shuffling, encoder)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tag a token/tag file with one model or the three-model ensemble
    Predict {
        #[command(flatten)]
        config: ConfigArgs,
        /// Model file (repeat three times for ensemble mode)
        #[arg(long = "model")]
        models: Vec<PathBuf>,
        /// Token/tag input file
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output file (input columns plus a predicted-tag column)
        #[arg(long)]
        output: Option<PathBuf>,
        /// raw, ensemble, expanded, or expanded+ensemble
        #[arg(long)]
        mode: Option<String>,
        /// Seed resolving an orthographic encoder with no explicit seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a prediction file against a gold file (exact-match P/R/F1)
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Gold token/tag file
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Prediction file (must carry the predicted-tag column)
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Report output file
        #[arg(long)]
        output: Option<PathBuf>,
        /// tsv or json
        #[arg(long)]
        format: Option<String>,
        /// Dataset label in the report (default: gold file stem)
        #[arg(long)]
        dataset: Option<String>,
        /// Model label in the report (default: prediction file stem)
        #[arg(long)]
        model: Option<String>,
    },
    /// Verify ensemble output against an independent per-token tally
    EnsembleCheck {
        #[command(flatten)]
        config: ConfigArgs,
        /// Model file (exactly one each of crf-bio, crf-bmeo, span)
        #[arg(long = "model")]
        models: Vec<PathBuf>,
        /// Token/tag input file
        #[arg(long)]
        input: Option<PathBuf>,
        /// Tally JSON output file
        #[arg(long)]
        output: Option<PathBuf>,
        /// Seed resolving an orthographic encoder with no explicit seed
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn set_opt_path(value: &mut Value, key: &str, path: Option<PathBuf>) -> Result<()> {
    match path {
        Some(p) => config::set_path(value, key, Value::String(p.to_string_lossy().into_owned())),
        None => Ok(()),
    }
}

fn set_opt_string(value: &mut Value, key: &str, s: Option<String>) -> Result<()> {
    match s {
        Some(s) => config::set_path(value, key, Value::String(s)),
        None => Ok(()),
    }
}

fn set_opt_u64(value: &mut Value, key: &str, n: Option<u64>) -> Result<()> {
    match n {
        Some(n) => config::set_path(value, key, Value::from(n)),
        None => Ok(()),
    }
}

fn set_path_list(value: &mut Value, key: &str, paths: &[PathBuf]) -> Result<()> {
    if paths.is_empty() {
        return Ok(());
    }
    let list: Vec<Value> = paths
        .iter()
        .map(|p| Value::String(p.to_string_lossy().into_owned()))
        .collect();
    config::set_path(value, key, Value::Array(list))
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Convert { config, input, output, alias_table } => {
            let mut value = config.merged()?;
            set_opt_path(&mut value, "input", input)?;
            set_opt_path(&mut value, "output", output)?;
            set_opt_path(&mut value, "alias_table", alias_table)?;
            let cfg: ConvertConfig = config::finish(value)?;
            let report = run_convert(&cfg)?;
            for d in &report.diagnostics {
                eprintln!("warning: {d}");
            }
            eprintln!(
                "converted {} documents ({} sentences) -> {}",
                report.documents,
                report.sentences,
                cfg.output.display()
            );
            if report.diagnostics.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!(
                    "{} annotation(s) could not be carried over cleanly",
                    report.diagnostics.len()
                );
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Expand { config, inputs, output, dictionary_output, stats_output } => {
            let mut value = config.merged()?;
            set_path_list(&mut value, "inputs", &inputs)?;
            set_opt_path(&mut value, "output", output)?;
            set_opt_path(&mut value, "dictionary_output", dictionary_output)?;
            set_opt_path(&mut value, "stats_output", stats_output)?;
            let cfg: ExpandConfig = config::finish(value)?;
            let report = run_expand(&cfg)?;
            for s in &report.stats {
                eprintln!(
                    "{}: {} positives, kept {} negatives, dropped {}",
                    s.corpus, s.positives, s.negatives_kept, s.negatives_dropped
                );
            }
            eprintln!(
                "expanded training set -> {} ({} dictionary tokens)",
                cfg.output.display(),
                report.dictionary_size
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Train { config, pattern, train, dev, output, seed } => {
            let mut value = config.merged()?;
            set_opt_string(&mut value, "pattern", pattern)?;
            set_opt_path(&mut value, "train", train)?;
            set_opt_path(&mut value, "dev", dev)?;
            set_opt_path(&mut value, "output", output)?;
            set_opt_u64(&mut value, "training.seed", seed)?;
            let cfg: TrainPipelineConfig = config::finish(value)?;
            run_train(&cfg)?;
            eprintln!("trained {} -> {}", cfg.pattern, cfg.output.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict { config, models, input, output, mode, seed } => {
            let mut value = config.merged()?;
            set_path_list(&mut value, "models", &models)?;
            set_opt_path(&mut value, "input", input)?;
            set_opt_path(&mut value, "output", output)?;
            set_opt_string(&mut value, "mode", mode)?;
            set_opt_u64(&mut value, "seed", seed)?;
            let cfg: PredictConfig = config::finish(value)?;
            run_predict(&cfg)?;
            eprintln!("predicted ({} mode) -> {}", cfg.mode, cfg.output.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate { config, gold, predictions, output, format, dataset, model } => {
            let mut value = config.merged()?;
            set_opt_path(&mut value, "gold", gold)?;
            set_opt_path(&mut value, "predictions", predictions)?;
            set_opt_path(&mut value, "output", output)?;
            set_opt_string(&mut value, "format", format)?;
            set_opt_string(&mut value, "dataset", dataset)?;
            set_opt_string(&mut value, "model", model)?;
            let cfg: EvaluateConfig = config::finish(value)?;
            run_evaluate(&cfg)?;
            eprintln!("report -> {}", cfg.output.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::EnsembleCheck { config, models, input, output, seed } => {
            let mut value = config.merged()?;
            set_path_list(&mut value, "models", &models)?;
            set_opt_path(&mut value, "input", input)?;
            set_opt_path(&mut value, "output", output)?;
            set_opt_u64(&mut value, "seed", seed)?;
            let cfg: EnsembleCheckConfig = config::finish(value)?;
            let report = run_ensemble_check(&cfg)?;
            eprintln!(
                "ensemble consistent over {} sentences / {} tokens \
                 ({} unanimous, {} majority, {} tie-break) -> {}",
                report.sentences,
                report.tokens,
                report.unanimous_tokens,
                report.majority_tokens,
                report.tie_break_tokens,
                cfg.output.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
