//! `coengage`: build, cluster, sweep and analyze coengagement networks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coengage::analysis::{BoolAttribute, Bucket};
use coengage::io::InputFormat;
use coengage::Error;

mod commands;

#[derive(Debug, Parser)]
#[command(
    name = "coengage",
    version,
    about = "Coengagement network projection and analysis"
)]
struct Cli {
    /// Worker threads; output does not depend on it.
    #[arg(long, global = true, env = "COENGAGE_THREADS")]
    threads: Option<usize>,

    /// Log progress to standard error.
    #[arg(long, global = true)]
    progress: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Project an interaction file to a coengagement graph.
    Project(ProjectArgs),
    /// Cluster and label an edge CSV of a coengagement graph.
    Cluster(ClusterArgs),
    /// Map cluster salience over a grid of (n, s) values.
    Sweep(SweepArgs),
    /// Run projection, clustering, labeling and every diagnostic.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic scenario from a JSON spec.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Interaction file (`engager,target[,count][,timestamp]` or JSONL).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: InputFormat,
    /// Keep rows whose engager equals the target.
    #[arg(long)]
    keep_self_loops: bool,
    /// Abort on the first malformed row.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct ProjectionArgs {
    /// Warn about engagers with more qualifying targets than this.
    #[arg(long)]
    max_fanout_cap: Option<usize>,
    /// Skip engagers above --max-fanout-cap instead of only warning.
    #[arg(long, requires = "max_fanout_cap")]
    cap_hard: bool,
    /// Abort with a capacity error if the projection would need more memory.
    #[arg(long)]
    memory_budget_mb: Option<u64>,
}

#[derive(Debug, Args)]
struct ClusteringArgs {
    #[arg(long, default_value_t = coengage::clustering::DEFAULT_RESOLUTION)]
    resolution: f64,
    #[arg(long, default_value_t = coengage::clustering::DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ProjectArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    s: u64,
    #[command(flatten)]
    projection: ProjectionArgs,
    #[arg(long)]
    out_gexf: PathBuf,
    #[arg(long)]
    out_edges: PathBuf,
    #[arg(long)]
    out_summary: PathBuf,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    /// Edge CSV with header `source,target,weight`.
    #[arg(long)]
    edges: PathBuf,
    /// Landmark CSV with header `label,handle`.
    #[arg(long)]
    landmarks: PathBuf,
    #[command(flatten)]
    clustering: ClusteringArgs,
    /// `n` the edge list was projected with (validated against weights).
    #[arg(long, default_value_t = 1)]
    n: u64,
    /// `s` the edge list was projected with (recorded only).
    #[arg(long, default_value_t = 1)]
    s: u64,
    #[arg(long)]
    out_summary: PathBuf,
    /// Optional `node,community,cluster` table.
    #[arg(long)]
    out_assignments: Option<PathBuf>,
    #[arg(long)]
    out_gexf: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated ascending n values.
    #[arg(long, value_parser = parse_list)]
    n_list: ValueList,
    /// Comma-separated ascending s values.
    #[arg(long, value_parser = parse_list)]
    s_list: ValueList,
    #[arg(long)]
    landmarks: PathBuf,
    #[command(flatten)]
    clustering: ClusteringArgs,
    #[command(flatten)]
    projection: ProjectionArgs,
    /// Existence-map CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    out_summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    s: u64,
    #[arg(long)]
    landmarks: PathBuf,
    /// Attribute CSV with header `node,label,followers,following,suspended[,cluster_hint]`.
    #[arg(long)]
    attrs: Option<PathBuf>,
    /// Boolean attribute to overlay on clusters.
    #[arg(long, requires = "attrs", value_parser = parse_overlay)]
    overlay: Option<BoolAttribute>,
    /// Account whose audience is split into a time series.
    #[arg(long)]
    focal: Option<String>,
    #[arg(long, default_value = "day", value_parser = parse_bucket)]
    bucket: Bucket,
    /// Minimum weighted degree of a satellite hub [default: 10 * n].
    #[arg(long)]
    hub_min_degree: Option<u64>,
    /// Half-width of the follower/following near-parity band.
    #[arg(long, default_value_t = coengage::analysis::DEFAULT_PARITY_EPSILON)]
    epsilon: f64,
    /// Number of most-engaged accounts checked for coverage.
    #[arg(long, default_value_t = 1000)]
    top_k: usize,
    #[command(flatten)]
    clustering: ClusteringArgs,
    #[command(flatten)]
    projection: ProjectionArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Clone)]
struct ValueList(Vec<u64>);

fn parse_list(raw: &str) -> Result<ValueList, String> {
    raw.split(',')
        .map(|v| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| format!("{v:?} is not an integer"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(ValueList)
}

fn parse_format(raw: &str) -> Result<InputFormat, String> {
    raw.parse().map_err(|e: Error| e.to_string())
}

fn parse_overlay(raw: &str) -> Result<BoolAttribute, String> {
    raw.parse().map_err(|e: Error| e.to_string())
}

fn parse_bucket(raw: &str) -> Result<Bucket, String> {
    raw.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Capacity { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let default_level = if cli.progress { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_level))
        .format_timestamp(None)
        .init();

    let threads = cli
        .threads
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
    {
        eprintln!("error: cannot start {threads} worker threads: {e}");
        return ExitCode::from(1);
    }

    let result = match cli.command {
        Command::Project(args) => commands::project(args, cli.progress),
        Command::Cluster(args) => commands::cluster(args),
        Command::Sweep(args) => commands::sweep(args, cli.progress),
        Command::Analyze(args) => commands::analyze(args, cli.progress),
        Command::Synth(args) => commands::synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
