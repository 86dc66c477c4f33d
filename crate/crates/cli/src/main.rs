mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gesmag_core::entropy::Estimator;
use gesmag_core::imset::DimensionKind;
use gesmag_core::markov::MarkovProperty;

#[derive(Parser)]
#[command(name = "gesmag", version, about = "Learn maximal ancestral graphs from Gaussian data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate random graphs and linear Gaussian data sets.
    Simulate(SimulateArgs),
    /// Run the greedy search on a data set.
    Learn(LearnArgs),
    /// Score a graph against a data set.
    Score(ScoreArgs),
    /// Compare an estimated graph with the truth.
    Eval(EvalArgs),
    /// Convert between MAGs, PAGs and ADMGs.
    Convert(ConvertArgs),
    /// List the independence statements of a Markov property, one JSON object per line.
    Markov(MarkovArgs),
    /// List heads and tails of a MAG.
    Heads(HeadsArgs),
    /// Measure search cost as the number of vertices grows.
    Probe(ProbeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Plugin,
    Debiased,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Plugin => Estimator::Plugin,
            EstimatorArg::Debiased => Estimator::Debiased,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PropertyArg {
    Refined,
    Local,
    Pairwise,
}

impl From<PropertyArg> for MarkovProperty {
    fn from(p: PropertyArg) -> Self {
        match p {
            PropertyArg::Refined => MarkovProperty::Refined,
            PropertyArg::Local => MarkovProperty::OrderedLocal,
            PropertyArg::Pairwise => MarkovProperty::Pairwise,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DimensionArg {
    Gaussian,
    Pset,
}

impl From<DimensionArg> for DimensionKind {
    fn from(d: DimensionArg) -> Self {
        match d {
            DimensionArg::Gaussian => DimensionKind::Gaussian,
            DimensionArg::Pset => DimensionKind::Pset,
        }
    }
}

#[derive(Args, Clone)]
struct ScoringArgs {
    #[arg(long, value_enum, default_value = "plugin")]
    estimator: EstimatorArg,
    #[arg(long, value_enum, default_value = "refined")]
    property: PropertyArg,
    /// Parameter count used in the penalty.
    #[arg(long, value_enum, default_value = "gaussian")]
    dimension: DimensionArg,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    /// Probability that an edge is directed.
    #[arg(long, default_value_t = 0.6)]
    pd: f64,
    #[arg(long, default_value_t = 3.0)]
    avg_degree: f64,
    #[arg(long, default_value_t = 0.1)]
    coef_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    coef_hi: f64,
    #[arg(long, default_value_t = 1)]
    reps: u64,
    /// Samples per data set.
    #[arg(long = "N", visible_alias = "samples", default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct LearnArgs {
    /// CSV data file, one column per variable.
    #[arg(long, required_unless_present = "batch_dir")]
    data: Option<PathBuf>,
    /// Learn every data_<k>.csv in this directory, writing est_<k>.graph.
    #[arg(long, conflicts_with_all = ["data", "out", "report"])]
    batch_dir: Option<PathBuf>,
    #[arg(long)]
    max_head_size: Option<usize>,
    /// Largest number of triples flipped by one turning move; 0 disables turning.
    #[arg(long = "turn", default_value_t = 1)]
    turn: usize,
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Graph whose adjacencies bound the search.
    #[arg(long)]
    skeleton: Option<PathBuf>,
    #[arg(long)]
    max_degree: Option<usize>,
    #[arg(long, default_value_t = 256)]
    branch_cap: usize,
    #[arg(long, default_value_t = gesmag_core::orient::DEFAULT_PATH_CAP)]
    path_cap: usize,
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    #[arg(long, required_unless_present = "batch_dir")]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Worker threads for scoring; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, required_unless_present = "batch")]
    est: Option<PathBuf>,
    #[arg(long, required_unless_present = "batch")]
    truth: Option<PathBuf>,
    /// Data for the BIC comparison.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Directory with est_<k>.graph, graph_<k>.graph and data_<k>.csv files.
    #[arg(long, conflicts_with_all = ["est", "truth", "data"])]
    batch: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "gaussian")]
    dimension: DimensionArg,
    /// JSON report, or the CSV table in batch mode.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Conversion {
    MagToPag,
    PagToMag,
    AdmgToMag,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("conversion").required(true).args(["mag_to_pag", "pag_to_mag", "admg_to_mag"]))]
struct ConvertArgs {
    #[arg(long)]
    mag_to_pag: bool,
    #[arg(long)]
    pag_to_mag: bool,
    #[arg(long)]
    admg_to_mag: bool,
    /// Stop at the arrow-complete PAG instead of orienting tails too.
    #[arg(long)]
    arrows_only: bool,
    #[arg(long)]
    input: PathBuf,
    /// Output graph file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConvertArgs {
    fn conversion(&self) -> Conversion {
        if self.mag_to_pag {
            Conversion::MagToPag
        } else if self.pag_to_mag {
            Conversion::PagToMag
        } else {
            Conversion::AdmgToMag
        }
    }
}

#[derive(Args)]
struct MarkovArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "refined")]
    property: PropertyArg,
    /// Comma-separated topological order; lowest index first when absent.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<usize>>,
}

#[derive(Args)]
struct HeadsArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    max_size: Option<usize>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    reps: u64,
    #[arg(long, default_value_t = 0.6)]
    pd: f64,
    #[arg(long, default_value_t = 3.0)]
    avg_degree: f64,
    #[arg(long = "N", visible_alias = "samples", default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    max_head_size: usize,
    #[arg(long = "turn", default_value_t = 0)]
    turn: usize,
    #[arg(long, default_value_t = 6)]
    max_degree: usize,
    #[arg(long, default_value_t = 1000)]
    path_cap: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GESMAG_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Learn(a) => commands::learn(a),
        Command::Score(a) => commands::score(a),
        Command::Eval(a) => commands::eval(a),
        Command::Convert(a) => commands::convert(a),
        Command::Markov(a) => commands::markov(a),
        Command::Heads(a) => commands::heads(a),
        Command::Probe(a) => commands::probe(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
