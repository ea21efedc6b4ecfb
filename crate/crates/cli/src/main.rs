mod corpus;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use ncdkit::similarity::distance_matrix_with_workers;
use ncdkit::taxonomy::DEFAULT_SEED;
use ncdkit::traffic::DetectionSummary;
use ncdkit::{
    classify, evaluate_classifier, fit_tree, load_rules, profile, reassemble, run_detection, CompressorKind,
    DistanceMatrix, SearchParams, DEFAULT_MIN_PAYLOAD, DEFAULT_UNKNOWN_THRESHOLD,
};
use serde::Serialize;

const DEFAULTS: &str = "\
Defaults:
  --compressor deflate        (also: bwt, rle)
  --unknown-threshold 0.65    classify/evaluate: NCD at or above this is UNKNOWN
  --min-payload 64            profile/detect: shorter sessions are skipped
  less_than=2.0               detect: upper bound of a ratio rule without less_than=
  --seed 407704141541         tree: search seed (0x5EED0F7EE5)";

#[derive(Parser)]
#[command(name = "ncdkit", version, about = "Compression-based similarity, taxonomy and traffic anomaly detection")]
#[command(after_help = DEFAULTS)]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand and echoed into JSON output.
#[derive(Args, Debug, Clone, Serialize)]
struct RunConfig {
    /// Compressor backend: deflate, bwt or rle.
    #[arg(long, global = true, default_value = "deflate")]
    compressor: CompressorKind,

    /// NCD at or above which a query is left UNKNOWN.
    #[arg(long, global = true, default_value_t = DEFAULT_UNKNOWN_THRESHOLD)]
    unknown_threshold: f64,

    /// Sessions with fewer payload bytes are not evaluated.
    #[arg(long, global = true, default_value_t = DEFAULT_MIN_PAYLOAD)]
    min_payload: usize,

    /// Seed of the tree search.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Independent restarts of the tree search.
    #[arg(long, global = true, default_value_t = SearchParams::default().restarts)]
    restarts: usize,

    /// A restart stops after this many consecutive non-improving mutations.
    #[arg(long, global = true, default_value_t = SearchParams::default().mutation_cap)]
    mutation_cap: usize,

    /// Worker threads for matrix computation (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Print JSON instead of text.
    #[arg(long, global = true)]
    #[serde(skip)]
    json: bool,
}

impl RunConfig {
    fn search(&self) -> SearchParams {
        SearchParams { restarts: self.restarts, mutation_cap: self.mutation_cap, seed: self.seed }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Pairwise NCD matrix of files (directories expand to their files, sorted by name).
    #[command(after_help = DEFAULTS)]
    Matrix {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Write the matrix here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fit a quartet-scored tree to a matrix file and print it in Newick form.
    #[command(after_help = DEFAULTS)]
    Tree { matrix: PathBuf },
    /// Assign a file to the family of its nearest corpus member.
    #[command(after_help = DEFAULTS)]
    Classify {
        query: PathBuf,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Leave-one-out evaluation of the classifier over a labelled corpus.
    #[command(after_help = DEFAULTS)]
    Evaluate {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Per-port compression ratio statistics of the TCP sessions in a capture.
    #[command(after_help = DEFAULTS)]
    Profile { capture: PathBuf },
    /// Run detection rules over a capture: alerts to stdout, summary to stderr.
    #[command(after_help = DEFAULTS)]
    Detect {
        capture: PathBuf,
        /// Rule file, one `rule <id> ...` per line.
        #[arg(long)]
        rules: PathBuf,
    },
}

#[derive(Args)]
struct CorpusArgs {
    /// Directory of labelled samples.
    #[arg(long)]
    corpus: PathBuf,
    /// File-to-family manifest (default: <corpus>/families.tsv).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = cli.config;
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Matrix { paths, output } => cmd_matrix(&cfg, &paths, output.as_deref(), &mut out),
        Command::Tree { matrix } => cmd_tree(&cfg, &matrix, &mut out),
        Command::Classify { query, corpus } => cmd_classify(&cfg, &query, &corpus, &mut out),
        Command::Evaluate { corpus } => cmd_evaluate(&cfg, &corpus, &mut out),
        Command::Profile { capture } => cmd_profile(&cfg, &capture, &mut out),
        Command::Detect { capture, rules } => cmd_detect(&cfg, &capture, &rules, &mut out),
    }
}

fn write_json(out: &mut impl Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_matrix(cfg: &RunConfig, paths: &[PathBuf], output: Option<&Path>, out: &mut impl Write) -> Result<()> {
    let files = corpus::expand_paths(paths)?;
    if files.len() < 2 {
        Cli::command()
            .error(ErrorKind::TooFewValues, format!("matrix needs at least 2 files, got {}", files.len()))
            .exit();
    }
    let samples = files.iter().map(|p| corpus::load_sample(p)).collect::<Result<Vec<_>>>()?;
    let matrix = distance_matrix_with_workers(&samples, cfg.compressor, cfg.workers)?;
    let text = if cfg.json { matrix.to_json()? + "\n" } else { matrix.to_text()? };
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Reads a matrix in either the text or the JSON form.
fn read_matrix(path: &Path) -> Result<DistanceMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let parsed = if text.trim_start().starts_with('{') {
        DistanceMatrix::from_json(&text)
    } else {
        DistanceMatrix::from_text(&text)
    };
    parsed.with_context(|| format!("invalid matrix {}", path.display()))
}

fn cmd_tree(cfg: &RunConfig, path: &Path, out: &mut impl Write) -> Result<()> {
    let matrix = read_matrix(path)?;
    let (tree, score) = fit_tree(&matrix, &cfg.search())?;
    if cfg.json {
        write_json(
            out,
            &serde_json::json!({
                "newick": tree.to_newick(),
                "score": score,
                "search": cfg.search(),
                "matrix_compressor": matrix.compressor,
            }),
        )
    } else {
        writeln!(out, "{}", tree.to_newick())?;
        writeln!(out, "normalized_score\t{}", score.normalized)?;
        writeln!(out, "raw_cost\t{}\nmin_cost\t{}\nmax_cost\t{}", score.raw_cost, score.min_cost, score.max_cost)?;
        Ok(())
    }
}

fn cmd_classify(cfg: &RunConfig, query: &Path, args: &CorpusArgs, out: &mut impl Write) -> Result<()> {
    let corpus = corpus::load_corpus(&args.corpus, args.manifest.as_deref())?;
    let query_canon = query.canonicalize().with_context(|| format!("cannot read {}", query.display()))?;
    let others: Vec<_> = corpus
        .samples
        .into_iter()
        .zip(&corpus.paths)
        .filter(|(_, p)| p.canonicalize().ok().as_ref() != Some(&query_canon))
        .map(|(s, _)| s)
        .collect();
    // Corpus ids are bare file names; an absolute path never collides with one.
    let mut q = corpus::load_sample(query)?;
    q.id = query_canon.display().to_string();
    let mut result = classify(&q, &others, cfg.compressor, cfg.unknown_threshold)?;
    result.query_id = query.display().to_string();
    if cfg.json {
        write_json(out, &serde_json::json!({ "result": result, "config": cfg }))
    } else {
        writeln!(out, "query\t{}", result.query_id)?;
        writeln!(out, "best_match\t{}", result.best_match_id)?;
        writeln!(out, "ncd\t{}", result.ncd_value)?;
        writeln!(out, "family\t{}", result.assigned_family)?;
        Ok(())
    }
}

fn cmd_evaluate(cfg: &RunConfig, args: &CorpusArgs, out: &mut impl Write) -> Result<()> {
    let corpus = corpus::load_corpus(&args.corpus, args.manifest.as_deref())?;
    let report = evaluate_classifier(&corpus.samples, cfg.compressor, cfg.unknown_threshold)?;
    if cfg.json {
        write_json(out, &serde_json::json!({ "report": report, "config": cfg }))
    } else {
        writeln!(out, "{report}")?;
        Ok(())
    }
}

fn cmd_profile(cfg: &RunConfig, path: &Path, out: &mut impl Write) -> Result<()> {
    let capture = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let sessions = reassemble(&capture).with_context(|| format!("invalid capture {}", path.display()))?;
    let report = profile(&sessions.sessions, cfg.compressor, cfg.min_payload);
    if cfg.json {
        return write_json(out, &serde_json::json!({ "profile": report, "reassembly": sessions.stats, "config": cfg }));
    }
    writeln!(out, "{:<12} {:>9} {:>11} {:>11}", "protocol", "sessions", "mean_ratio", "stddev")?;
    for p in &report.profiles {
        writeln!(out, "{:<12} {:>9} {:>11.4} {:>11.4}", p.label, p.session_count, p.mean_ratio, p.stddev_ratio)?;
    }
    writeln!(
        out,
        "# compressor={} min_payload={} excluded_sessions={}",
        cfg.compressor, cfg.min_payload, report.excluded_sessions
    )?;
    Ok(())
}

#[derive(Serialize)]
struct SummaryRecord<'a> {
    summary: &'a DetectionSummary,
    config: &'a RunConfig,
}

fn cmd_detect(cfg: &RunConfig, capture: &Path, rules: &Path, out: &mut impl Write) -> Result<()> {
    // Rules first: a bad rule file stops the run before any packet is read.
    let rules = load_rules(rules)?;
    let bytes = fs::read(capture).with_context(|| format!("cannot read {}", capture.display()))?;
    let report = run_detection(&bytes, &rules, cfg.min_payload)
        .with_context(|| format!("invalid capture {}", capture.display()))?;
    report.write_alerts(&mut *out)?;
    out.flush()?;
    let mut err = io::stderr().lock();
    serde_json::to_writer(&mut err, &SummaryRecord { summary: &report.summary, config: cfg })?;
    writeln!(err)?;
    Ok(())
}
