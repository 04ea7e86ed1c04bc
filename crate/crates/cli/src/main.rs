use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use samplesize::corpus::{generate_synthetic, load_corpus, write_corpus, CorpusFormat, SyntheticSpec};
use samplesize::gridrunner::{load_results, persist, run_grid, GridConfig};
use samplesize::report::{
    emit_table, parse_proportion, proportion_label, recommend_min_n, summarize_cells, TableFormat,
};
use samplesize::textpipe::STOPWORDS;

#[derive(Parser)]
#[command(name = "samplesize", version, about = "Sample-size simulation for binary text classification")]
struct Cli {
    /// Print the embedded stopword list and exit.
    #[arg(long)]
    print_stopwords: bool,

    /// Print the default grid configuration as JSON and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the (family x size x proportion) grid over a corpus.
    Run(RunArgs),
    /// Summarize a results file into range tables.
    Report(ReportArgs),
    /// Smallest sample size reaching a target weighted F1.
    Recommend(RecommendArgs),
    /// Write a synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Corpus file (.jsonl or .csv).
    #[arg(long)]
    corpus: PathBuf,
    /// Grid configuration (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Results CSV to write.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
    /// Corpus format; inferred from the extension when omitted.
    #[arg(long, value_parser = parse_format)]
    format: Option<CorpusFormat>,
    #[arg(long)]
    no_stem: bool,
    #[arg(long)]
    drop_numbers: bool,
    #[arg(long)]
    min_df: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    /// md or csv.
    #[arg(long, default_value = "md")]
    format: TableFormat,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RecommendArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    target_f1: f64,
    /// Class proportion such as 50/50, 90/10 or 0.9.
    #[arg(long)]
    proportion: String,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    n_docs: usize,
    #[arg(long, default_value_t = 0.5)]
    prop_pos: f64,
    #[arg(long, default_value_t = 2000)]
    vocab_size: usize,
    #[arg(long, default_value_t = 60)]
    doc_len_mean: usize,
    #[arg(long, default_value_t = 1.0)]
    separability: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

fn parse_format(s: &str) -> Result<CorpusFormat, String> {
    match s.to_ascii_lowercase().as_str() {
        "jsonl" => Ok(CorpusFormat::Jsonl),
        "csv" => Ok(CorpusFormat::Csv),
        other => Err(format!("unknown corpus format {other:?} (expected jsonl or csv)")),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let format = match args.format {
        Some(f) => f,
        None => CorpusFormat::from_path(&args.corpus)?,
    };
    let corpus = load_corpus(&args.corpus, format)
        .with_context(|| format!("loading corpus {}", args.corpus.display()))?;
    let mut cfg = match &args.config {
        Some(p) => GridConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => GridConfig::default(),
    };
    if args.no_stem {
        cfg.pipeline.stem = false;
    }
    if args.drop_numbers {
        cfg.pipeline.drop_numbers = true;
    }
    if let Some(k) = args.min_df {
        cfg.pipeline.min_df = k;
    }
    cfg.validate()?;
    eprintln!(
        "running {} cells over {} documents ({} positive)",
        cfg.n_cells(),
        corpus.len(),
        corpus.n_pos()
    );
    let results = run_grid(&corpus, &cfg, args.workers)?;
    persist(&results, &args.output)?;
    let ok = results.iter().filter(|r| r.status.is_ok()).count();
    eprintln!("wrote {} rows ({ok} OK) to {}", results.len(), args.output.display());
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let results = load_results(&args.results)
        .with_context(|| format!("loading results {}", args.results.display()))?;
    let table = emit_table(&summarize_cells(&results), args.format);
    write_output(args.output.as_deref(), &table)
}

fn recommend(args: RecommendArgs) -> Result<()> {
    let Some(p) = parse_proportion(&args.proportion) else {
        bail!("cannot parse proportion {:?}", args.proportion);
    };
    let results = load_results(&args.results)
        .with_context(|| format!("loading results {}", args.results.display()))?;
    match recommend_min_n(&results, args.target_f1, p)? {
        Some(r) => println!("n={} family={} f1={:.2}", r.n, r.family, r.f1),
        None => println!(
            "none: no size reaches F1 {} at {}",
            args.target_f1,
            proportion_label(p)
        ),
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n_docs: args.n_docs,
        prop_pos: args.prop_pos,
        vocab_size: args.vocab_size,
        doc_len_mean: args.doc_len_mean,
        separability: args.separability,
        seed: args.seed,
    };
    let corpus = generate_synthetic(&spec)?;
    let format = CorpusFormat::from_path(&args.output)?;
    write_corpus(&corpus, &args.output, format)?;
    eprintln!(
        "wrote {} documents ({} positive) to {}",
        corpus.len(),
        corpus.n_pos(),
        args.output.display()
    );
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.print_stopwords {
        let mut text = STOPWORDS.join("\n");
        text.push('\n');
        return write_output(None, &text);
    }
    if cli.print_defaults {
        let text = serde_json::to_string_pretty(&GridConfig::default())? + "\n";
        return write_output(None, &text);
    }
    match cli.command {
        Some(Command::Run(a)) => run(a),
        Some(Command::Report(a)) => report(a),
        Some(Command::Recommend(a)) => recommend(a),
        Some(Command::Synth(a)) => synth(a),
        None => bail!("no command given; see --help"),
    }
}
