//! corpustag command-line interface.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or
//! configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use corpustag::eval::render_report;
use corpustag::pipeline::{
    load_pipeline_config, run_annotate, run_evaluate, run_fetch_seeds, run_stats, PipelineConfig,
};
use corpustag::Error;

/// Environment variable overriding the knowledge-base endpoint for both the
/// silver-seed fetch and generic-span refinement.
const KB_ENDPOINT_VAR: &str = "CORPUSTAG_KB_ENDPOINT";

#[derive(Parser)]
#[command(
    name = "corpustag",
    version,
    about = "Seed-lexicon corpus annotation engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Annotate a JSONL corpus and write CoNLL, JSONL, and report outputs.
    Annotate(AnnotateArgs),
    /// Fetch silver seeds from the knowledge base into a seed TSV.
    FetchSeeds(FetchSeedsArgs),
    /// Score a prediction CoNLL file against a gold CoNLL file.
    Evaluate(EvaluateArgs),
    /// Print span counts for an annotated JSONL corpus.
    Stats(StatsArgs),
}

#[derive(Args)]
struct AnnotateArgs {
    /// Pipeline configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Fail on bad generic-span records instead of skipping them.
    #[arg(long)]
    strict: bool,
    /// Match seed surfaces exactly instead of case-folded.
    #[arg(long)]
    case_sensitive: bool,
    /// Drop seed matches without a noun or proper-noun token (needs PoS tags).
    #[arg(long)]
    pos_filter: bool,
    /// Worker threads for the parallel stages (0 = automatic).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct FetchSeedsArgs {
    /// Pipeline configuration file (TOML) with a [seeds.fetch] section.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Gold CoNLL file.
    #[arg(long)]
    gold: PathBuf,
    /// Prediction CoNLL file.
    #[arg(long)]
    pred: PathBuf,
    /// Also write the report as JSON to this path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Annotated JSONL corpus produced by `annotate`.
    #[arg(long)]
    input: PathBuf,
}

fn load_config_with_env(path: &PathBuf) -> Result<PipelineConfig, Error> {
    let mut config = load_pipeline_config(path)?;
    if let Ok(endpoint) = std::env::var(KB_ENDPOINT_VAR) {
        if !endpoint.is_empty() {
            config.override_kb_endpoint(&endpoint);
        }
    }
    Ok(config)
}

fn cmd_annotate(args: AnnotateArgs) -> Result<(), Error> {
    let mut config = load_config_with_env(&args.config)?;
    if args.strict {
        config.strict = true;
    }
    if args.case_sensitive {
        config.case_sensitive = true;
    }
    if args.pos_filter {
        config.pos_filter = true;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }

    let summary = run_annotate(&config)?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "annotated {} documents, {} sentences, {} entities",
        summary.report.documents, summary.report.sentences, summary.report.entities
    );
    for (ty, count) in &summary.report.per_type {
        println!("  {ty}: {count}");
    }
    for out in &summary.outputs {
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_fetch_seeds(args: FetchSeedsArgs) -> Result<(), Error> {
    let config = load_config_with_env(&args.config)?;
    let summary = run_fetch_seeds(&config)?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "fetched {} silver seeds -> {} (cache: {})",
        summary.entries,
        summary.tsv_path.display(),
        summary.cache_path.display()
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let report = run_evaluate(&args.gold, &args.pred)?;
    print!("{}", render_report(&report));
    if let Some(json_path) = args.json {
        let mut value = serde_json::to_value(&report).expect("report serializes");
        value["config"] = serde_json::json!({
            "gold": args.gold.display().to_string(),
            "pred": args.pred.display().to_string(),
            "matching": "exact (start, end, type)",
        });
        let text = serde_json::to_string_pretty(&value).expect("report serializes") + "\n";
        std::fs::write(&json_path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", json_path.display())))?;
        println!("wrote {}", json_path.display());
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<(), Error> {
    let stats = run_stats(&args.input)?;
    for (ty, count) in &stats.per_type {
        println!("{ty}\t{count}");
    }
    println!("total entities\t{}", stats.total_entities);
    println!("total sentences\t{}", stats.total_sentences);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Annotate(args) => cmd_annotate(args),
        Command::FetchSeeds(args) => cmd_fetch_seeds(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Stats(args) => cmd_stats(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
