//! `aoi-outage`: optimize, evaluate and simulate blocklength allocation
//! policies, and regenerate the benchmark table and convergence study.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use aoi_outage::{DurationConvention, OutageRule, PenaltyKind};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "aoi-outage",
    version,
    about = "AoI outage analysis of a two-device FBL uplink"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the recursive policy optimizer from several random starts.
    Optimize {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// binary, sum-aoi, peak-aoi or exp-peak-aoi
        #[arg(long)]
        penalty: PenaltyKind,
        /// Number of random initial policies (default: from the scenario).
        #[arg(long)]
        seeds: Option<usize>,
        /// Master seed of the initial policies (default: from the scenario).
        #[arg(long)]
        master_seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Analytic outage probability and burst statistics of a policy.
    Evaluate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, value_enum, default_value_t = Convention::RunLength)]
        convention: Convention,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte-Carlo repetitions of a policy.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        periods: Option<usize>,
        #[arg(long)]
        master_seed: Option<u64>,
        /// Also write one CSV row per repetition here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Analytic and empirical outage rates of all six policies in every preset.
    ReproduceTable2 {
        /// Scenario files or preset names (default: the three presets).
        #[arg(long = "config")]
        configs: Vec<String>,
        #[arg(long, value_enum)]
        outage_rule: Option<Rule>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Normalized estimation errors of random policies at growing horizons.
    BurstConvergence {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 100)]
        policies: usize,
        /// Comma-separated period counts.
        #[arg(long, value_delimiter = ',', default_values_t = aoi_outage::experiments::CHECKPOINTS)]
        checkpoints: Vec<usize>,
        #[arg(long)]
        master_seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Convention::RunLength)]
        convention: Convention,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON file, or one of scenario_a, scenario_b, scenario_c.
    #[arg(long)]
    config: String,
    /// Overrides `state.outage_rule` of the scenario.
    #[arg(long, value_enum)]
    outage_rule: Option<Rule>,
}

#[derive(Args)]
struct PolicyArgs {
    /// naive, min-error, or a JSON policy file.
    #[arg(long)]
    policy: String,
}

#[derive(Args)]
struct OutArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    RunLength,
    Bracketed,
}

impl From<Convention> for DurationConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::RunLength => DurationConvention::RunLength,
            Convention::Bracketed => DurationConvention::Bracketed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Exceeds,
    Reaches,
}

impl From<Rule> for OutageRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Exceeds => OutageRule::Exceeds,
            Rule::Reaches => OutageRule::Reaches,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
