//! `dialogaug`: validate, augment and evaluate task-oriented dialog corpora.
//!
//! Exit codes: 0 success, 1 data or backend error, 2 usage error.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use settings::UsageError;

#[derive(Debug, Parser)]
#[command(
    name = "dialogaug",
    version,
    about = "Context-aware dialog augmentation and evaluation"
)]
struct Cli {
    /// Config file with key=value lines; flags take precedence over it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a corpus against every schema invariant. Writes no files.
    Validate(InputArgs),
    /// Print corpus counts as JSON.
    Stats(InputArgs),
    /// Augment one user turn in a sampled fraction of dialogs.
    Augment(AugmentArgs),
    /// BLEU, BERTScore, Bleurt and perplexity over augmentation/reference pairs.
    EvalIntrinsic(IntrinsicArgs),
    /// Inform and Success rates over episode traces.
    EvalExtrinsicMultiwoz(MultiwozArgs),
    /// Intent accuracy, requested-slot F1 and goal accuracies over frames.
    EvalExtrinsicSgd(SgdArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Corpus file (or SGD directory).
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// canonical, multiwoz or sgd [default: canonical]
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Fraction of dialogs to augment, in (0, 1]. Required.
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Sampling seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// special, natural-colon or natural-says [default: natural-colon]
    #[arg(long)]
    pub style: Option<String>,
    /// Prefix the mask with the turn's belief-state slots.
    #[arg(long)]
    pub bs_slots: bool,
    /// Leave the turns after the target out of the prompt.
    #[arg(long)]
    pub no_future: bool,
    /// `stub` or a generation server URL [default: stub]
    #[arg(long)]
    pub backend: Option<String>,
    /// `bleu` or a scoring server URL (Bleurt) [default: bleu]
    #[arg(long)]
    pub scorer: Option<String>,
    /// Drop selections scoring below this value.
    #[arg(long, allow_negative_numbers = true)]
    pub filter_threshold: Option<f64>,
    /// [default: 25]
    #[arg(long)]
    pub num_beams: Option<u32>,
    /// [default: 20]
    #[arg(long)]
    pub num_return: Option<u32>,
    /// [default: 64]
    #[arg(long)]
    pub max_new_tokens: Option<u32>,
    /// Parallel backend requests [default: 4]
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Augmented corpus output (canonical JSON). Required.
    #[arg(long, value_name = "PATH")]
    pub out_corpus: Option<PathBuf>,
    /// Records output [default: <out-corpus>.records.jsonl]
    #[arg(long, value_name = "PATH")]
    pub out_records: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IntrinsicArgs {
    /// JSONL of {"augmentation", "reference"} objects.
    #[arg(long, value_name = "PATH")]
    pub pairs: PathBuf,
    /// Scoring server URL for Bleurt and perplexity; omitted leaves both null.
    #[arg(long)]
    pub scorer: Option<String>,
    /// Compute BERTScore with the toy embedding provider of this dimension.
    #[arg(long, value_name = "DIM")]
    pub bertscore_toy_dim: Option<usize>,
    /// Seed for the toy embedding provider.
    #[arg(long, default_value_t = 0)]
    pub bertscore_toy_seed: u64,
    /// Also write the report here, with a manifest next to it.
    #[arg(long, value_name = "PATH")]
    pub out_report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MultiwozArgs {
    /// Corpus holding the user goals, matched to traces by dialog id.
    #[command(flatten)]
    pub input: InputArgs,
    /// Venue database JSON: {domain: [{"id", "attributes"}]}.
    #[arg(long, value_name = "PATH")]
    pub db: PathBuf,
    /// JSONL of episode traces.
    #[arg(long, value_name = "PATH")]
    pub traces: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out_report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SgdArgs {
    /// JSONL of predicted frames.
    #[arg(long, value_name = "PATH")]
    pub predictions: PathBuf,
    /// JSONL of gold frames.
    #[arg(long, value_name = "PATH")]
    pub golds: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out_report: Option<PathBuf>,
}

/// The error chain joined with `: `, skipping causes whose text already
/// appears (library errors often embed their source).
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = settings::Resolver::load(cli.config.as_deref()).and_then(|resolver| match cli.command {
        Command::Validate(args) => commands::validate(&args, &resolver),
        Command::Stats(args) => commands::stats(&args, &resolver),
        Command::Augment(args) => commands::augment(&args, &resolver),
        Command::EvalIntrinsic(args) => commands::eval_intrinsic(&args),
        Command::EvalExtrinsicMultiwoz(args) => commands::eval_multiwoz(&args, &resolver),
        Command::EvalExtrinsicSgd(args) => commands::eval_sgd(&args),
    });
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
