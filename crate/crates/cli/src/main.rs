//! `edmkit` command-line tool.
//!
//! Matrix files hold squared dissimilarities as comma-separated rows. Every
//! command writes a `manifest.json` next to its outputs.

mod commands;
mod failure;
mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use failure::{code, CliResult, Failure};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "edmkit", version, about = "Classical MDS, its error decomposition and the kappa(r) lower bound")]
pub struct Cli {
    /// Worker threads for parallel sweeps (defaults to all cores).
    #[arg(long, global = true, env = "EDMKIT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a squared-dissimilarity matrix.
    Gen(GenArgs),
    /// Embed a matrix with cMDS, Lower+cMDS or the SSTRESS solver.
    Embed(EmbedArgs),
    /// Tabulate the cMDS error decomposition over a range of dimensions.
    Decompose(DecomposeArgs),
    /// Relative errors, method sweeps and 1-NN classification.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Squared Euclidean distances of --points.
    Euclidean,
    /// Squared shortest paths of the graph in --edges.
    Graph,
    /// Squared kNN-graph geodesics of --points.
    Geodesic,
    /// Squared distances of --points with coordinates dropped at random.
    Missing,
    /// Gaussian noise added to the squared entries of --matrix.
    PerturbPost,
    /// Gaussian noise added to the distances of --matrix before squaring.
    PerturbPre,
}

/// Input matrix options shared by several commands.
#[derive(Debug, Clone, Args, Serialize)]
pub struct MatrixInput {
    /// Matrix of squared dissimilarities (CSV).
    #[arg(long)]
    pub matrix: PathBuf,
    /// The file holds plain distances; square them on load.
    #[arg(long)]
    pub sqrt_input: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub generator: Generator,
    /// Output matrix CSV; a `.meta.json` sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Input matrix for the perturbation generators.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Input file holds plain distances; square them on load.
    #[arg(long)]
    pub sqrt_input: bool,
    /// Points file, one point per line.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Edge list, `u v [w]` per line.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Target signal-to-noise ratio ||signal||_F / ||noise||_F.
    #[arg(long)]
    pub snr: Option<f64>,
    /// Neighbours per point for geodesics.
    #[arg(long, default_value_t = edmkit::metrics::DEFAULT_K)]
    pub k: usize,
    /// Fraction of coordinates hidden by the missing-data generator.
    #[arg(long, default_value_t = 0.4)]
    pub drop_fraction: f64,
    /// Random seed; drawn and recorded when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedMethod {
    Cmds,
    LowerCmds,
    Sstress,
}

/// SSTRESS solver options.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    /// Stop once the change of D_hat between rounds is at most this.
    #[arg(long, default_value_t = edmkit::sstress::DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Iteration cap per solver phase.
    #[arg(long, default_value_t = edmkit::sstress::DEFAULT_MAX_ITERATIONS)]
    pub max_iter: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub input: MatrixInput,
    #[arg(long, value_enum)]
    pub method: EmbedMethod,
    /// Embedding dimension.
    #[arg(long)]
    pub dim: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write SSTRESS output even if the tolerance was not met.
    #[arg(long)]
    pub allow_unconverged: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub input: MatrixInput,
    /// Dimension range `A:B` (inclusive); defaults to 1:min(n-1, 1000).
    #[arg(long)]
    pub dims: Option<String>,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// ||other - reference||^2 / ||reference||^2.
    Relerr(RelerrArgs),
    /// Objective and relative errors per method and dimension.
    Sweep(SweepArgs),
    /// 1-NN accuracy of embeddings per method and dimension.
    Knn(KnnArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct RelerrArgs {
    #[command(flatten)]
    pub input: MatrixInput,
    /// Reference matrix (same format as --matrix).
    #[arg(long)]
    pub reference: PathBuf,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: MatrixInput,
    /// Comma-separated methods: cmds, lower-cmds, sstress, lower-bound.
    #[arg(long, value_delimiter = ',', default_value = "cmds,lower-cmds")]
    pub method: Vec<String>,
    /// Dimension range `A:B` (inclusive); defaults to 1:min(n-1, 1000).
    #[arg(long)]
    pub dims: Option<String>,
    /// Noise-free matrix for original-relative errors.
    #[arg(long)]
    pub original: Option<PathBuf>,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Skip SSTRESS rows above this many points.
    #[arg(long, default_value_t = edmkit::eval::DEFAULT_SSTRESS_MAX_N)]
    pub sstress_max_n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct KnnArgs {
    #[command(flatten)]
    pub input: MatrixInput,
    /// One integer label per line, in point order.
    #[arg(long)]
    pub labels: PathBuf,
    /// Comma-separated embedding methods: cmds, lower-cmds, sstress.
    #[arg(long, value_delimiter = ',', default_value = "cmds,lower-cmds")]
    pub method: Vec<String>,
    /// Dimension range `A:B` (inclusive); defaults to 1:min(n-1, 1000).
    #[arg(long)]
    pub dims: Option<String>,
    /// The first ceil(fraction * m) points train, the rest test.
    #[arg(long, default_value_t = 0.5)]
    pub train_fraction: f64,
    /// Shuffle points before splitting.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::new(code::OTHER, e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Embed(a) => commands::embed(&a),
        Command::Decompose(a) => commands::decompose(&a),
        Command::Eval(EvalCommand::Relerr(a)) => commands::relerr(&a),
        Command::Eval(EvalCommand::Sweep(a)) => commands::sweep(&a),
        Command::Eval(EvalCommand::Knn(a)) => commands::knn(&a),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(f) = run(cli) {
        eprintln!("error: {f}");
        std::process::exit(f.code);
    }
}
