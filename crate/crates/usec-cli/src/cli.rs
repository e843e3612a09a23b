//! Flag definitions for the `usec` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "usec",
    about = "Min-max computation assignment over replicated storage, with an elastic-step simulator",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the optimal load assignment for one speed vector
    Solve(SolveArgs),
    /// Solve and emit the materialized row tasks as CSV
    Assign(AssignArgs),
    /// Compare placements over randomly drawn speed vectors
    Trials(TrialsArgs),
    /// Run an elastic power-iteration scenario in both assignment modes
    Simulate(SimulateArgs),
    /// Validate a placement file and optionally check straggler tolerance
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Placement: `repetition`, `cyclic`, `man` (one block per J-subset), or
    /// a placement file path
    #[arg(long)]
    pub placement: String,
    /// Machine count N (builtin placements)
    #[arg(long)]
    pub n: Option<usize>,
    /// Sub-matrix count G (defaults: cyclic/repetition N, man C(N, J))
    #[arg(long)]
    pub g: Option<usize>,
    /// Replication J: copies stored of each sub-matrix
    #[arg(long)]
    pub j: Option<usize>,
    /// Comma-separated machine speeds, e.g. `1,2,4,8,16,32`
    #[arg(long)]
    pub speeds: String,
    /// Straggler tolerance S
    #[arg(long, default_value_t = 0)]
    pub s: usize,
    /// Comma-separated 1-based available machines (default: all)
    #[arg(long)]
    pub avail: Option<String>,
    /// Also print the materialized row tasks
    #[arg(long)]
    pub assign: bool,
    /// Total row count q; must be divisible by G (default: smallest row
    /// count that realizes the optimal loads exactly)
    #[arg(long)]
    pub q: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AssignArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Write the task CSV here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrialsArgs {
    /// Number of random speed vectors
    #[arg(long, default_value_t = 5000)]
    pub trials: usize,
    /// Machine count N
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// Replication J
    #[arg(long, default_value_t = 3)]
    pub j: usize,
    /// Straggler tolerance S
    #[arg(long, default_value_t = 0)]
    pub s: usize,
    /// Speed distribution: `exp` or `uniform`
    #[arg(long, default_value = "exp")]
    pub dist: String,
    /// Rate of the exponential distribution
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    /// Lower bound of the uniform distribution
    #[arg(long, default_value_t = 0.5)]
    pub lo: f64,
    /// Upper bound of the uniform distribution
    #[arg(long, default_value_t = 2.0)]
    pub hi: f64,
    /// Base seed; trial t draws from seed + t
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Comma-separated placements to compare
    #[arg(long, default_value = "cyclic,repetition,man")]
    pub placements: String,
    /// Histogram bin count
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Directory for trials.csv, summary.csv, histogram.csv
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON file
    #[arg(long)]
    pub scenario: PathBuf,
    /// Assignment modes to run: `both`, `het`, or `hom`
    #[arg(long, default_value = "both")]
    pub mode: String,
    /// Directory for trace.csv
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Placement file to validate
    #[arg(long)]
    pub placement: PathBuf,
    /// Comma-separated machine speeds; enables solve + tolerance check
    #[arg(long)]
    pub speeds: Option<String>,
    /// Straggler tolerance S
    #[arg(long, default_value_t = 0)]
    pub s: usize,
    /// Comma-separated 1-based available machines (default: all)
    #[arg(long)]
    pub avail: Option<String>,
    /// Total row count q for the materialization check
    #[arg(long)]
    pub q: Option<usize>,
}
