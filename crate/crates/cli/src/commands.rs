//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use dialogaug_core::corpus::{
    corpus_stats, load_corpus, load_corpus_unchecked, validate as check_corpus, write_corpus, Corpus, SourceFormat,
};
use dialogaug_core::extrinsic::{multiwoz_rates, sgd_metrics, EpisodeTrace, FramePrediction, VenueDatabase};
use dialogaug_core::intrinsic::{corpus_intrinsic, toy_embedding_provider, EvalPair, IntrinsicBackends};
use dialogaug_core::pipeline::{records_to_jsonl, run_pipeline, Backends, PipelineConfig};
use dialogaug_core::prompt::{PromptConfig, PromptStyle};
use dialogaug_core::rank::{BleuScorer, BleurtScorer, CandidateScorer};
use dialogaug_core::services::http::{HttpGenerator, HttpScorer};
use dialogaug_core::services::{GenerationRequest, Generator, StubGenerator};

use crate::settings::{Resolver, UsageError, BACKEND_ENV, SCORER_ENV};
use crate::{AugmentArgs, InputArgs, IntrinsicArgs, MultiwozArgs, SgdArgs};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn parse_choice<T>(value: &str, what: &str) -> Result<T>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| UsageError(format!("invalid --{what} {value:?}: {e}")).into())
}

fn load_input(args: &InputArgs, resolver: &Resolver, checked: bool) -> Result<(PathBuf, SourceFormat, Corpus)> {
    let input: PathBuf = resolver.require(args.input.clone(), "input")?;
    let format: String = resolver.get_or(args.format.clone(), "format", "canonical".to_string())?;
    let format: SourceFormat = parse_choice(&format, "format")?;
    let corpus = if checked {
        load_corpus(&input, format)
    } else {
        load_corpus_unchecked(&input, format)
    }?;
    Ok((input, format, corpus))
}

fn format_name(format: SourceFormat) -> &'static str {
    match format {
        SourceFormat::Canonical => "canonical",
        SourceFormat::MultiWoz => "multiwoz",
        SourceFormat::Sgd => "sgd",
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(n, line)| serde_json::from_str(line).with_context(|| format!("{} line {}", path.display(), n + 1)))
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn write_manifest(next_to: &Path, manifest: &serde_json::Value) -> Result<()> {
    let path = with_suffix(next_to, ".manifest.json");
    write_text(&path, &pretty(manifest))?;
    eprintln!("manifest: {}", path.display());
    Ok(())
}

/// Prints the report and, when asked, writes it with a manifest.
fn emit_report<T: Serialize>(report: &T, out: Option<&Path>, manifest: serde_json::Value) -> Result<()> {
    let text = pretty(report);
    print!("{text}");
    if let Some(path) = out {
        write_text(path, &text)?;
        write_manifest(path, &manifest)?;
    }
    Ok(())
}

pub fn validate(args: &InputArgs, resolver: &Resolver) -> Result<ExitCode> {
    let (input, _, corpus) = load_input(args, resolver, false)?;
    let violations = check_corpus(&corpus);
    for v in &violations {
        println!("{v}");
    }
    println!(
        "{}: {} dialogs, {} violations",
        input.display(),
        corpus.dialogs.len(),
        violations.len()
    );
    Ok(if violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

pub fn stats(args: &InputArgs, resolver: &Resolver) -> Result<ExitCode> {
    let (_, _, corpus) = load_input(args, resolver, true)?;
    print!("{}", pretty(&corpus_stats(&corpus)));
    Ok(ExitCode::SUCCESS)
}

pub fn augment(args: &AugmentArgs, resolver: &Resolver) -> Result<ExitCode> {
    let fraction: f64 = resolver.require(args.fraction, "fraction")?;
    let out_corpus: PathBuf = resolver.require(args.out_corpus.clone(), "out-corpus")?;
    let out_records = resolver
        .get(args.out_records.clone(), "out-records")?
        .unwrap_or_else(|| with_suffix(&out_corpus, ".records.jsonl"));
    let style: String = resolver.get_or(args.style.clone(), "style", PromptStyle::default().name().to_string())?;
    let prompt = PromptConfig {
        style: parse_choice(&style, "style")?,
        include_future: !resolver.switch(args.no_future, "no-future")?,
        include_bs_slots: resolver.switch(args.bs_slots, "bs-slots")?,
        ..PromptConfig::default()
    };
    let config = PipelineConfig {
        fraction,
        seed: resolver.get_or(args.seed, "seed", 0)?,
        prompt,
        num_beams: resolver.get_or(args.num_beams, "num-beams", GenerationRequest::DEFAULT_NUM_BEAMS)?,
        num_return: resolver.get_or(args.num_return, "num-return", GenerationRequest::DEFAULT_NUM_RETURN)?,
        max_new_tokens: resolver.get_or(
            args.max_new_tokens,
            "max-new-tokens",
            GenerationRequest::DEFAULT_MAX_NEW_TOKENS,
        )?,
        filter_threshold: resolver.get(args.filter_threshold, "filter-threshold")?,
        concurrency: resolver.get_or(args.concurrency, "concurrency", 4)?,
    };
    config.validate().map_err(|e| UsageError(e.to_string()))?;

    let backend = resolver.endpoint(args.backend.clone(), "backend", BACKEND_ENV, "stub")?;
    let scorer_choice = resolver.endpoint(args.scorer.clone(), "scorer", SCORER_ENV, "bleu")?;
    let generator: Box<dyn Generator> = match backend.as_str() {
        "stub" => Box::new(StubGenerator::default()),
        url if url.starts_with("http://") || url.starts_with("https://") => Box::new(HttpGenerator::new(url)),
        other => return Err(UsageError(format!("--backend must be `stub` or an http(s) URL, got {other:?}")).into()),
    };
    let scorer: Box<dyn CandidateScorer> = match scorer_choice.as_str() {
        "bleu" => Box::new(BleuScorer),
        url if url.starts_with("http://") || url.starts_with("https://") => {
            Box::new(BleurtScorer::new(Arc::new(HttpScorer::new(url))))
        }
        other => return Err(UsageError(format!("--scorer must be `bleu` or an http(s) URL, got {other:?}")).into()),
    };

    let (input, format, corpus) = load_input(&args.input, resolver, true)?;
    let backends = Backends {
        generator: generator.as_ref(),
        scorer: scorer.as_ref(),
    };
    let run = run_pipeline(&corpus, &config, backends)?;
    write_corpus(&run.corpus, &out_corpus).with_context(|| format!("writing {}", out_corpus.display()))?;
    write_text(&out_records, &records_to_jsonl(&run.records))?;
    let c = &run.manifest.counts;
    log::info!(
        "{} targets: {} selected, {} filtered out, {} failed; {} -> {} dialogs",
        c.targets,
        c.selected,
        c.filtered_out,
        c.failed,
        c.input_dialogs,
        c.output_dialogs
    );
    write_manifest(
        &out_corpus,
        &json!({
            "command": "augment",
            "input": input,
            "format": format_name(format),
            "out_corpus": out_corpus,
            "out_records": out_records,
            "run": run.manifest,
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

pub fn eval_intrinsic(args: &IntrinsicArgs) -> Result<ExitCode> {
    let pairs: Vec<EvalPair> = read_jsonl(&args.pairs)?;
    let toy = match args.bertscore_toy_dim {
        Some(dim) if dim < 2 => return Err(UsageError("--bertscore-toy-dim must be at least 2".into()).into()),
        Some(dim) => Some(toy_embedding_provider(dim, args.bertscore_toy_seed)),
        None => None,
    };
    let scoring = match args.scorer.as_deref() {
        None | Some("bleu") => None,
        Some(url) if url.starts_with("http://") || url.starts_with("https://") => Some(HttpScorer::new(url)),
        Some(other) => return Err(UsageError(format!("--scorer must be an http(s) URL, got {other:?}")).into()),
    };
    let backends = IntrinsicBackends {
        embeddings: toy.as_ref().map(|p| p as _),
        scoring: scoring.as_ref().map(|s| s as _),
    };
    let report = corpus_intrinsic(&pairs, backends)?;
    for (metric, why) in &report.errors {
        log::warn!("{metric} unavailable: {why}");
    }
    emit_report(
        &report,
        args.out_report.as_deref(),
        json!({
            "command": "eval-intrinsic",
            "tool_version": TOOL_VERSION,
            "pairs": args.pairs,
            "scorer": args.scorer,
            "bertscore_toy_dim": args.bertscore_toy_dim,
            "bertscore_toy_seed": args.bertscore_toy_seed,
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

pub fn eval_multiwoz(args: &MultiwozArgs, resolver: &Resolver) -> Result<ExitCode> {
    let (input, _, corpus) = load_input(&args.input, resolver, true)?;
    let db_text = std::fs::read_to_string(&args.db).with_context(|| format!("reading {}", args.db.display()))?;
    let db: VenueDatabase = serde_json::from_str(&db_text).with_context(|| format!("parsing {}", args.db.display()))?;
    db.validate()?;
    let traces: Vec<EpisodeTrace> = read_jsonl(&args.traces)?;
    let episodes = traces
        .iter()
        .map(|trace| {
            let dialog = corpus
                .get(&trace.dialog_id)
                .ok_or_else(|| anyhow!("trace {:?} has no dialog in {}", trace.dialog_id, input.display()))?;
            Ok((dialog.goal.as_ref(), trace))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = multiwoz_rates(&episodes, &db)?;
    emit_report(
        &report,
        args.out_report.as_deref(),
        json!({
            "command": "eval-extrinsic-multiwoz",
            "tool_version": TOOL_VERSION,
            "input": input,
            "db": args.db,
            "traces": args.traces,
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

pub fn eval_sgd(args: &SgdArgs) -> Result<ExitCode> {
    let predictions: Vec<FramePrediction> = read_jsonl(&args.predictions)?;
    let golds: Vec<FramePrediction> = read_jsonl(&args.golds)?;
    let report = sgd_metrics(&predictions, &golds)?;
    emit_report(
        &report,
        args.out_report.as_deref(),
        json!({
            "command": "eval-extrinsic-sgd",
            "tool_version": TOOL_VERSION,
            "predictions": args.predictions,
            "golds": args.golds,
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}
