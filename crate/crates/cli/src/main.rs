mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dcs_moe::eval::PolicySpec;

/// Directed controller synthesis on the air-traffic benchmark with learned
/// exploration experts.
#[derive(Debug, Parser)]
#[command(name = "dcs-moe", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write AT(n, k) in the automaton interchange format.
    GenAt {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        n: u32,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one expert on AT(n, k).
    Train {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        n: u32,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Training configuration (JSON); flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<u32>,
        #[arg(long)]
        budget: Option<usize>,
        /// Checkpoint path.
        #[arg(long)]
        out: PathBuf,
        /// Per-episode CSV `episode,steps,solved`.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Run every checkpoint over a grid and write one history per expert.
    Profile {
        #[arg(long)]
        checkpoints: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Greedy selection order over the expert rows of a results table.
    Select {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_size: usize,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate policies over a grid of instances.
    EvalGrid {
        #[command(flatten)]
        grid: GridArgs,
        /// Policy spec; repeatable.
        #[arg(long = "policy")]
        policies: Vec<PolicySpec>,
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        #[arg(long)]
        histories: Option<PathBuf>,
        #[command(flatten)]
        gate: GateArgs,
        #[arg(long)]
        log_gating: bool,
    },
    /// Solve a single instance and print the episode result.
    Synth {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        n: u32,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long)]
        policy: PolicySpec,
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        #[arg(long)]
        histories: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        gate: GateArgs,
        /// Write the extracted controller here.
        #[arg(long)]
        controller: Option<PathBuf>,
    },
    /// Check a controller against a system.
    Verify {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        controller: PathBuf,
    },
    /// Solve a system monolithically and print the initial verdict.
    Oracle {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = dcs_moe::des::DEFAULT_STATE_CAP)]
        cap: usize,
    },
    /// Render a heatmap (SVG) or a timing table (CSV) from a results table.
    Plot {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, value_enum)]
        metric: PlotMetric,
        /// Required for heatmaps.
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum PlotMetric {
    SuccessRate,
    MedianSteps,
    Timing,
}

/// Inclusive range written `lo:hi`, or a single value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Range(pub u32, pub u32);

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("{t:?}: {e}"));
        let (lo, hi) = match s.split_once(':') {
            Some((a, b)) => (num(a)?, num(b)?),
            None => {
                let v = num(s)?;
                (v, v)
            }
        };
        if lo == 0 || lo > hi {
            return Err(format!("range {s:?} is empty or starts at 0"));
        }
        Ok(Range(lo, hi))
    }
}

/// Grid flags shared by `profile` and `eval-grid`; each overrides the
/// configuration file.
#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Grid configuration (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_range: Option<Range>,
    #[arg(long)]
    pub k_range: Option<Range>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GateArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub sigma_n: Option<f64>,
    #[arg(long)]
    pub sigma_k: Option<f64>,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = true)]
pub struct SystemArgs {
    /// System in the interchange format.
    #[arg(long, conflicts_with_all = ["n", "k"])]
    pub system: Option<PathBuf>,
    #[arg(long, requires = "k", value_parser = clap::value_parser!(u32).range(1..))]
    pub n: Option<u32>,
    #[arg(long, requires = "n", value_parser = clap::value_parser!(u32).range(1..))]
    pub k: Option<u32>,
}

/// Failures after parsing; usage errors exit with 1, everything else with 2.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
