use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Sparse variable selection and clustering of partially labeled data via
/// ensembles of axis-aligned random projections.
///
/// Exit codes: 0 success, 2 configuration error, 3 data error,
/// 4 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "sharpssl", version)]
pub struct Cli {
    /// Log one line per phase on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    /// Worker threads (default: all cores). Affects wall time only.
    #[arg(long, global = true, env = "SHARPSSL_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank coordinates and report the selected set with the importance vector.
    Select(SelectArgs),
    /// Select coordinates, then assign a label to every row.
    Cluster(ClusterArgs),
    /// Run seeded replications of a synthetic benchmark and write a CSV table.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseArg {
    Lda,
    Em,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitArg {
    Sphere,
    Hier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    General,
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FinalArg {
    Em,
    Lda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreakArg {
    Smallest,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SingularArg {
    /// A singular projected within-class covariance scores zero.
    Zero,
    /// ... or counts as a failed projection.
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize, serde::Serialize)]
pub enum FigureArg {
    /// Three classes, identity covariance.
    #[value(name = "2-iso")]
    #[serde(rename = "2-iso")]
    TwoIso,
    /// Three classes, random rotated covariance.
    #[value(name = "2-aniso")]
    #[serde(rename = "2-aniso")]
    TwoAniso,
    /// Two symmetric classes, identity covariance.
    #[value(name = "3")]
    #[serde(rename = "3")]
    Three,
}

/// Flags of the projection ensemble and its base learner.
#[derive(Debug, Clone, Default, Args)]
pub struct EnsembleArgs {
    /// TOML config file; flags win on conflict.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Projection dimension d.
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of selected coordinates l.
    #[arg(long)]
    pub l: Option<usize>,
    /// Number of projection groups A [default: 150].
    #[arg(long)]
    pub groups: Option<usize>,
    /// Projections per group B [default: 75].
    #[arg(long)]
    pub per_group: Option<usize>,
    /// Base learner [default: em].
    #[arg(long, value_enum)]
    pub base: Option<BaseArg>,
    /// Master seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tie-break among equal importance entries [default: smallest].
    #[arg(long, value_enum)]
    pub tie_break: Option<TieBreakArg>,
    /// LDA base behaviour on a singular projection [default: zero].
    #[arg(long, value_enum)]
    pub lda_singular: Option<SingularArg>,
    /// EM iterations T [default: 100].
    #[arg(long)]
    pub em_iters: Option<usize>,
    /// EM starts M [default: 1].
    #[arg(long)]
    pub em_starts: Option<usize>,
    /// EM initialisation [default: hier].
    #[arg(long, value_enum)]
    pub em_init: Option<InitArg>,
    /// Sphere radius for --em-init sphere [default: 1].
    #[arg(long)]
    pub em_radius: Option<f64>,
    /// EM parameter constraint [default: general].
    #[arg(long, value_enum)]
    pub em_variant: Option<VariantArg>,
    /// Stop EM once no mean moves more than this.
    #[arg(long)]
    pub em_tol: Option<f64>,
    /// Write the output here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Include wall-clock timings per phase (output is then not byte-stable).
    #[arg(long)]
    pub timings: bool,
}

/// Flags describing the input CSV.
#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    pub input: PathBuf,
    /// Number of classes K [default: largest label seen].
    #[arg(long)]
    pub k: Option<usize>,
    /// Column with observed labels, or `none` [default: label].
    #[arg(long)]
    pub label_column: Option<String>,
    /// Cell value meaning "unlabeled"; empty cells always are [default: 0].
    #[arg(long)]
    pub unlabeled_token: Option<String>,
    /// Column with ground-truth labels, used only for metrics.
    #[arg(long)]
    pub truth: Option<String>,
    /// Known signal coordinates (0-based, comma separated) for recovery metrics.
    #[arg(long, value_delimiter = ',')]
    pub support: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Method fitted on the selected coordinates [default: em].
    #[arg(long = "final", value_enum)]
    pub final_method: Option<FinalArg>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Built-in benchmark.
    #[arg(long, value_enum, conflicts_with = "spec")]
    pub figure: Option<FigureArg>,
    /// Mixture spec file (JSON or TOML).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Replications per setting [default: 20].
    #[arg(long)]
    pub reps: Option<usize>,
    /// Signal-to-noise grid (built-in benchmarks only) [default: 4].
    #[arg(long, value_delimiter = ',')]
    pub snr: Option<Vec<f64>>,
    /// Sample-size grid [default: 250].
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Label-fraction grid [default: 0.05, or the value in the --spec file].
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// Ambient dimension of the built-in benchmarks [default: 200].
    #[arg(long)]
    pub p: Option<usize>,
    /// Sparsity of the two-class benchmark [default: 3].
    #[arg(long)]
    pub s: Option<usize>,
    /// Monte Carlo draws for the Bayes risk [default: 100000].
    #[arg(long)]
    pub bayes_draws: Option<usize>,
    /// Method fitted on the selected coordinates [default: em].
    #[arg(long = "final", value_enum)]
    pub final_method: Option<FinalArg>,
}
