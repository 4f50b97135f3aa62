use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mdclt::families::Family;

#[derive(Debug, Parser)]
#[command(
    name = "mdclt",
    version,
    about = "Exact and Monte Carlo CLT laboratory for non-homogeneous finite Markov chains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact condition values (α_n, α^β and the three CLT condition values) over the grid.
    Check {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        conditions: ConditionArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact martingale decomposition and its CLT diagnostics over the grid.
    Gordin {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo standardized sums and their KS distance to N(0, 1).
    Simulate {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Also write each sorted sample as `samples_n<N>.bin`.
        #[arg(long)]
        dump_samples: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Condition values and KS distance side by side, one row per n.
    Experiment {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        conditions: ConditionArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Randomized inequality suites; exit code 1 if any bound fails.
    Verify {
        /// Optional chain to check in addition to the random instances.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Random instances per suite.
        #[arg(long, default_value_t = mdclt::suite::DEFAULT_INSTANCES)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        conditions: ConditionArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Reference family: A (Dobrushin regime), B (β-condition regime), C (slow switching).
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub family: Option<Family>,
    /// Chain specification JSON file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Comma-separated horizons (families only); defaults to 256,512,…,16384.
    #[arg(long, value_delimiter = ',', conflicts_with = "input")]
    pub grid: Option<Vec<usize>>,
    /// Bad-step decay exponent (family B).
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Good-step spacing (family B).
    #[arg(long, default_value_t = 2)]
    pub period: usize,
    /// Expected switch count (family C).
    #[arg(long, default_value_t = 2.0)]
    pub lam: f64,
}

#[derive(Debug, Args)]
pub struct ConditionArgs {
    #[arg(long, value_enum, default_value_t = VariantArg::Consistent)]
    pub variant: VariantArg,
    /// `auto`, `companion`, `all-ones`, or an explicit bit string such as `0101`.
    #[arg(long, default_value = "auto")]
    pub beta: String,
    /// (H_β) minimal window; defaults to 2·period for family B and 4 otherwise.
    #[arg(long)]
    pub m0: Option<usize>,
    /// (H_β) density constant; defaults to 1/(2·period) for family B and 0.25 otherwise.
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 10_000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Directory for report files (created if missing).
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Consistent,
    AsPrinted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}
