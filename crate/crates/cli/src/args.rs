use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ecrm", version, about = "Estimated conditional risk minimization for structured prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and write it to a model file.
    Train(TrainArgs),
    /// Predict one output per input row.
    Predict(PredictArgs),
    /// Predict and print the mean loss against reference labels.
    Eval(EvalArgs),
    /// Per-sample margin surrogate losses and their mean.
    Surrogate(SurrogateArgs),
    /// Generalization bound terms for a trained model.
    Bound(BoundArgs),
    /// Write synthetic flow data.
    SimulateFlow(SimulateArgs),
    /// Training time against hierarchy size, as CSV.
    Bench(BenchArgs),
    /// Check a matrix for total unimodularity.
    TuCheck(TuArgs),
    /// Nearest-neighbor or projected ridge baseline for flows.
    Baseline(BaselineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpaceKind {
    Hierarchy,
    Assignment,
    Flow,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    ZeroOne,
    Hamming,
    Hierarchical,
    Footrule,
    Absolute,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterceptArg {
    None,
    Centered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Standard,
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NeighborhoodArg {
    #[value(name = "self")]
    SelfOnly,
    Adjacent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMethod {
    Knn,
    KrrProject,
}

#[derive(Debug, Clone, Args)]
pub struct SpaceArgs {
    /// Output space; inferred from the model's labels when omitted.
    #[arg(long, value_enum)]
    pub space: Option<SpaceKind>,
    /// Hierarchy file, one `parent child` arc per line.
    #[arg(long)]
    pub hierarchy: Option<PathBuf>,
    /// Network file; defaults to the six-node benchmark network.
    #[arg(long)]
    pub network: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value = "rbf")]
    pub kernel: KernelArg,
    /// RBF bandwidth in `exp(-gamma |x - x'|²)`.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub step_scale: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step_decay: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, value_enum, default_value = "none")]
    pub intercept: InterceptArg,
    #[arg(long, value_enum, default_value = "standard")]
    pub variant: VariantArg,
    /// Joint-kernel neighborhood of the additive variant.
    #[arg(long, value_enum, default_value = "adjacent")]
    pub neighborhood: NeighborhoodArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Loss to minimize; defaults by output space.
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write predictions here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SurrogateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    #[arg(long)]
    pub rho: f64,
    /// Cap `L`; defaults to the largest loss over the output space.
    #[arg(long)]
    pub cap: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub delta: f64,
    /// Bound on `k(x, x)`; defaults to its maximum over the training inputs.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub cap: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed of the path utility coefficients.
    #[arg(long, default_value_t = 0)]
    pub theta_seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 20)]
    pub p: usize,
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long)]
    pub x_out: PathBuf,
    #[arg(long)]
    pub y_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 500)]
    pub m: usize,
    /// Hierarchy sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    pub d: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    /// Timed fits per size; the median is reported.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TuArgs {
    /// Integer matrix, one row per line.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Largest number of square submatrices to examine.
    #[arg(long, default_value_t = 2_000_000)]
    pub cap: u128,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub method: BaselineMethod,
    #[arg(long)]
    pub train_x: PathBuf,
    #[arg(long)]
    pub train_labels: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    /// Neighbors for `knn`.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "rbf")]
    pub kernel: KernelArg,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
