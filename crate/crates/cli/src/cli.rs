use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "pollsel",
    version,
    about = "Choose which regular agents to poll in a stubborn-agent opinion network"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Relative stopping tolerance of the Lyapunov doubling iteration.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol_lyapunov: f64,

    /// Relative asymmetry above which the closed-form covariance is rejected.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol_sym: f64,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic instance as an edge list plus stubborn list.
    Generate(GenerateArgs),
    /// Select the regular agents to observe.
    Select(SelectArgs),
    /// Score regular agents by several centrality measures.
    Score(ScoreArgs),
    /// Residual-variance percentage as a function of the number of observed agents.
    Curve(CurveArgs),
    /// Run a numerical audit.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// Watts-Strogatz small world.
    Ws,
    /// Cycle with the first nodes stubborn.
    Cycle,
    /// Connected graph with a fixed edge count and integer weights.
    Weighted,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub model: Model,

    /// Number of nodes.
    #[arg(long)]
    pub n: usize,

    /// Number of stubborn agents.
    #[arg(long = "stubborn-count", default_value_t = 1)]
    pub stubborn_count: usize,

    /// Lattice degree (ws).
    #[arg(long, default_value_t = 4)]
    pub k: usize,

    /// Rewiring probability (ws).
    #[arg(long, default_value_t = 0.3)]
    pub beta: f64,

    /// Edge count (weighted).
    #[arg(long)]
    pub edges: Option<usize>,

    /// Largest integer weight (weighted).
    #[arg(long, default_value_t = 20)]
    pub max_weight: u32,

    /// Stubborn list path; defaults to the edge list path with `.stubborn` appended.
    #[arg(long)]
    pub stubborn_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelfLoops {
    Reject,
    Zero,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Weighted edge list `i j w`.
    #[arg(long)]
    pub graph: PathBuf,

    /// Comma-separated stubborn node ids.
    #[arg(long, conflicts_with = "stubborn_file", required_unless_present = "stubborn_file")]
    pub stubborn: Option<String>,

    /// File listing stubborn node ids.
    #[arg(long)]
    pub stubborn_file: Option<PathBuf>,

    /// Noise variances: `uniform:VALUE` or a file of `node sigma2` rows.
    #[arg(long, default_value = "uniform:1.0")]
    pub sigma2: String,

    /// Stubborn opinions: `uniform:VALUE` or a file of `node value` rows.
    #[arg(long, default_value = "uniform:1.0")]
    pub opinions: String,

    #[arg(long, value_enum, default_value_t = SelfLoops::Reject)]
    pub self_loops: SelfLoops,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Greedy,
    Exact,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    /// Number of agents to observe.
    #[arg(long)]
    pub k: usize,

    #[arg(long, value_enum, default_value_t = Method::Greedy)]
    pub method: Method,

    /// Largest number of subsets exact search may enumerate.
    #[arg(long, default_value_t = 1e7)]
    pub budget: f64,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    /// Comma-separated subset of var_reduction, eta, bonacich, intercentrality.
    #[arg(long, default_value = "var_reduction,eta,bonacich,intercentrality")]
    pub measures: String,

    /// Attenuation `a` of the walk-counting measures.
    #[arg(long, default_value_t = 1.0)]
    pub attenuation: f64,

    /// Base matrix of the walk-counting measures.
    #[arg(long, default_value = "normalized")]
    pub matrix: String,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    #[arg(long)]
    pub max_k: usize,

    /// Comma-separated subset of greedy, exact.
    #[arg(long, default_value = "greedy")]
    pub methods: String,

    #[arg(long, default_value_t = 1e7)]
    pub budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Monte Carlo sample moments against the computed mean and covariance.
    Moments,
    /// Diminishing returns of F and increasing returns of G.
    Submodularity,
    /// Greedy against exhaustive search.
    GreedyGuarantee,
    /// Incremental marginal gains against from-scratch evaluation.
    Incremental,
    /// Closed-form covariance acceptance against the Lyapunov solution.
    ClosedForm,
    /// Singleton variance reduction, eta and intercentrality identities.
    Identities,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InstanceFamily {
    /// Equal regular strengths with uniform variances; closed form accepted.
    ClosedForm,
    /// Arbitrary reachable graphs with heterogeneous variances.
    General,
    /// Arbitrary reachable graphs with variances proportional to strength.
    Proportional,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,

    /// Random instances to generate when no graph is given.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,

    /// Largest number of regular agents in generated instances.
    #[arg(long)]
    pub max_r: Option<usize>,

    #[arg(long, value_enum, default_value_t = InstanceFamily::ClosedForm)]
    pub instances: InstanceFamily,

    /// Monte Carlo replicas per noise family.
    #[arg(long, default_value_t = 10_000)]
    pub replicas: usize,

    /// Standard errors allowed by the moments suite.
    #[arg(long, default_value_t = 3.0)]
    pub n_se: f64,

    /// Validate a specific graph instead of generated instances.
    #[arg(long, requires = "stubborn_spec")]
    pub graph: Option<PathBuf>,

    #[arg(long, group = "stubborn_spec")]
    pub stubborn: Option<String>,

    #[arg(long, group = "stubborn_spec")]
    pub stubborn_file: Option<PathBuf>,

    #[arg(long, default_value = "uniform:1.0")]
    pub sigma2: String,

    #[arg(long, default_value = "uniform:1.0")]
    pub opinions: String,
}
