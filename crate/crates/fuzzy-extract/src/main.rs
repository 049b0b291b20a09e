use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fuzzy_extract::corpus::{build_idf_model, load_dictionary, load_documents};
use fuzzy_extract::eval::{
    generate_synthetic_corpus, score_predictions, GenConfig, TruthRecord,
};
use fuzzy_extract::pipeline::{
    Config, Engine, Extraction, ExtractMode, OverlapPolicy,
};

#[derive(Parser)]
#[command(name = "fuzzy-extract", version, about = "Dictionary-based approximate entity extraction")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract entity occurrences from documents.
    Extract(ExtractArgs),
    /// Score predictions against ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic labeled corpus.
    Synth(SynthArgs),
    /// Compare wall time and candidate counts across modes.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Dictionary file, one entity per line (line number = entity id).
    #[arg(long)]
    dict: PathBuf,
    /// Directory of .txt files or a JSON-lines file of {"id", "text"}.
    #[arg(long)]
    docs: PathBuf,
    /// Entity similarity threshold.
    #[arg(long, default_value_t = 0.9)]
    delta: f64,
    /// Token edit similarity threshold.
    #[arg(long, default_value_t = 0.8)]
    tau: f64,
    /// One of fed-e, fed-s, fj-e, fj-s, fed-a.
    #[arg(long, default_value = "fed-s")]
    mode: String,
    /// Output JSON-lines file.
    #[arg(long)]
    out: PathBuf,
    /// Seed spanning from every matched token instead of core tokens.
    #[arg(long)]
    no_core_tokens: bool,
    /// Overlap policy: all | best.
    #[arg(long, default_value = "all")]
    overlap: String,
}

#[derive(Args)]
struct EvalArgs {
    /// Predictions JSON-lines file (extract output).
    #[arg(long)]
    pred: PathBuf,
    /// Ground truth JSON-lines file.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    dict: PathBuf,
    /// Number of documents to generate.
    #[arg(long)]
    docs: usize,
    #[arg(long, default_value_t = 0.3)]
    typo_rate: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory receiving one .txt file per document.
    #[arg(long)]
    out_dir: PathBuf,
    /// Ground truth JSON-lines output file.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    dict: PathBuf,
    #[arg(long)]
    docs: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    delta: f64,
    #[arg(long, default_value_t = 0.8)]
    tau: f64,
    /// Comma-separated mode list.
    #[arg(long, default_value = "fed-e,fed-s,fj-e,fj-s,fed-a")]
    modes: String,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("initializing thread pool")?;
    }
    match cli.command {
        Command::Extract(args) => extract(args),
        Command::Eval(args) => eval(args),
        Command::Synth(args) => synth(args),
        Command::Bench(args) => bench(args),
    }
}

fn parse_mode(s: &str) -> Result<ExtractMode> {
    ExtractMode::parse(s)
        .with_context(|| format!("unknown mode {s:?}; expected fed-e, fed-s, fj-e, fj-s or fed-a"))
}

fn extract(args: ExtractArgs) -> Result<()> {
    let overlap = match args.overlap.as_str() {
        "all" => OverlapPolicy::All,
        "best" => OverlapPolicy::BestPerSpan,
        other => bail!("unknown overlap policy {other:?}; expected all or best"),
    };
    let cfg = Config {
        delta: args.delta,
        tau: args.tau,
        mode: parse_mode(&args.mode)?,
        core_tokens: !args.no_core_tokens,
        overlap,
    };
    let dictionary = load_dictionary(&args.dict)?;
    let docs = load_documents(&args.docs)?;
    let engine = Engine::build(dictionary, cfg)?;
    let (extractions, _) = engine.extract_corpus(&docs);
    write_atomic(
        &args.out,
        extractions.iter().map(Extraction::to_json_line),
    )?;
    eprintln!("{} extractions written to {}", extractions.len(), args.out.display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let preds: Vec<Extraction> = read_jsonl(&args.pred)?;
    let truth: Vec<TruthRecord> = read_jsonl(&args.truth)?;
    let s = score_predictions(&preds, &truth);
    println!("{:.6} {:.6} {:.6}", s.precision, s.recall, s.f1);
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let dictionary = load_dictionary(&args.dict)?;
    let model = build_idf_model(&dictionary)?;
    let (docs, truth, stats) = generate_synthetic_corpus(
        &dictionary,
        &model,
        GenConfig::new(args.docs, args.typo_rate, args.seed),
    );
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    for doc in &docs {
        // documents are built by joining tokens with single spaces
        let text: String = doc
            .tokens
            .iter()
            .map(|t| t.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        write_atomic(
            &args.out_dir.join(format!("{}.txt", doc.id)),
            std::iter::once(text),
        )?;
    }
    write_atomic(
        &args.truth,
        truth.iter().map(|t| serde_json::to_string(t).unwrap()),
    )?;
    eprintln!(
        "{} docs, {} planted occurrences ({} flagged tokens, {} subs, {} drops, {} dups)",
        docs.len(),
        stats.planted,
        stats.tokens_flagged,
        stats.subs_applied,
        stats.drops_applied,
        stats.dups_applied
    );
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let dictionary = load_dictionary(&args.dict)?;
    let docs = load_documents(&args.docs)?;
    for mode_str in args.modes.split(',') {
        let mode = parse_mode(mode_str.trim())?;
        let cfg = Config {
            delta: args.delta,
            tau: args.tau,
            mode,
            ..Config::default()
        };
        let start = Instant::now();
        let engine = Engine::build(dictionary.clone(), cfg)?;
        let build_ms = start.elapsed().as_millis();
        let start = Instant::now();
        let (extractions, stats) = engine.extract_corpus(&docs);
        let run_ms = start.elapsed().as_millis();
        println!(
            "mode={} build_ms={} run_ms={} candidates={} scored={} pruned_overlap={} pruned_fed={} extractions={}",
            mode.as_str(),
            build_ms,
            run_ms,
            stats.candidates_produced,
            stats.windows_scored,
            stats.pruned_overlap,
            stats.pruned_fed_bound,
            extractions.len()
        );
    }
    Ok(())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let data =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    data.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).with_context(|| format!("parsing record in {}", path.display()))
        })
        .collect()
}

/// Writes lines to a temp file in the target directory, then renames over
/// the destination so readers never observe a partial file.
fn write_atomic(path: &Path, lines: impl Iterator<Item = String>) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .with_context(|| format!("creating temp file for {}", path.display()))?;
    for line in lines {
        writeln!(tmp, "{line}")?;
    }
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
