//! `hullbound` command-line tool.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};
use hullbound::{json, DEFAULT_RESOLUTION};

use commands::{Outcome, Usage};
use config::{parse_point, Format, RunConfig};

const EXAMPLE_RESOLUTION: usize = 4097;
const THREADS_VAR: &str = "HULLBOUND_THREADS";

#[derive(Parser)]
#[command(
    name = "hullbound",
    version,
    about = "Bounds on E[f(X)] from the convex hull of the graph of f"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Expression in x, e.g. "2 - x + sin(2*pi*x)"
    #[arg(long = "fn", value_name = "EXPR")]
    f: Option<String>,
    /// Domain such as "[0,1]" or "[-2,-1]u[1,2]"
    #[arg(long)]
    domain: Option<String>,
    /// Sample points per interval [default: 2049]
    #[arg(long)]
    resolution: Option<usize>,
    /// JSON run configuration; flags override its fields
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output file (a directory for `envelope`)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Print the effective configuration and exit
    #[arg(long)]
    print_config: bool,
}

#[derive(Args, Clone, Default)]
struct Sampling {
    #[arg(long)]
    seed: Option<u64>,
    /// Number of random instances
    #[arg(long)]
    trials: Option<usize>,
    /// JSON file with an explicit instance instead of random ones
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Lower and upper envelopes plus hull vertices
    Envelope(Common),
    /// Bounds on E[f(X)] given E[X]
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        mean: Option<f64>,
    },
    /// Multiplicative and additive constants
    Constants {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        mean: Option<f64>,
    },
    /// Distribution with at most three atoms hitting a point of the hull
    Witness {
        #[command(flatten)]
        common: Common,
        /// Target moment pair "E[X],E[f(X)]"
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        at: Option<[f64; 2]>,
    },
    /// Check bounds for row-stochastic matrices
    VerifyMarkov {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Check bounds for conditional expectations on finite partitions
    VerifyConditional {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Random discrete distributions against the hull
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Worked examples compared with reference values
    Example {
        #[arg(value_parser = ["ex1", "ex2"])]
        name: String,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        print_config: bool,
    },
}

fn flags(c: &Common) -> RunConfig {
    RunConfig {
        f: c.f.clone(),
        domain: c.domain.clone(),
        resolution: c.resolution,
        out: c.out.clone(),
        format: c.format,
        ..RunConfig::default()
    }
}

fn defaults(trials: Option<usize>, seed: Option<u64>) -> RunConfig {
    RunConfig {
        resolution: Some(DEFAULT_RESOLUTION),
        format: Some(Format::Json),
        trials,
        seed,
        ..RunConfig::default()
    }
}

fn resolve(common: &Common, base: RunConfig, extra: RunConfig) -> Result<RunConfig> {
    let file = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Ok(base.overlay(file).overlay(flags(common).overlay(extra)))
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("{THREADS_VAR}={v:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

type Action = Box<dyn Fn(&RunConfig) -> Result<Outcome>>;

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    let oracle_defaults = hullbound::OracleConfig::default();
    let (cfg, print, action): (RunConfig, bool, Action) = match cli.command {
        Command::Envelope(c) => (
            resolve(&c, defaults(None, None), RunConfig::default())?,
            c.print_config,
            Box::new(commands::envelope),
        ),
        Command::Bounds { common, mean } => {
            let extra = RunConfig {
                mean,
                ..RunConfig::default()
            };
            (
                resolve(&common, defaults(None, None), extra)?,
                common.print_config,
                Box::new(commands::bounds),
            )
        }
        Command::Constants { common, mean } => {
            let extra = RunConfig {
                mean,
                ..RunConfig::default()
            };
            (
                resolve(&common, defaults(None, None), extra)?,
                common.print_config,
                Box::new(commands::constants),
            )
        }
        Command::Witness { common, at } => {
            let extra = RunConfig {
                at,
                ..RunConfig::default()
            };
            (
                resolve(&common, defaults(None, None), extra)?,
                common.print_config,
                Box::new(commands::witness),
            )
        }
        Command::VerifyMarkov { common, sampling } => {
            let extra = RunConfig {
                seed: sampling.seed,
                trials: sampling.trials,
                input: sampling.input,
                ..RunConfig::default()
            };
            (
                resolve(&common, defaults(Some(50), Some(0)), extra)?,
                common.print_config,
                Box::new(commands::verify_markov),
            )
        }
        Command::VerifyConditional { common, sampling } => {
            let extra = RunConfig {
                seed: sampling.seed,
                trials: sampling.trials,
                input: sampling.input,
                ..RunConfig::default()
            };
            (
                resolve(&common, defaults(Some(100), Some(0)), extra)?,
                common.print_config,
                Box::new(commands::verify_conditional),
            )
        }
        Command::Oracle {
            common,
            seed,
            trials,
            tolerance,
        } => {
            let base = RunConfig {
                tolerance: Some(oracle_defaults.tolerance),
                ..defaults(Some(oracle_defaults.n_trials), Some(oracle_defaults.seed))
            };
            let extra = RunConfig {
                seed,
                trials,
                tolerance,
                ..RunConfig::default()
            };
            (
                resolve(&common, base, extra)?,
                common.print_config,
                Box::new(commands::oracle),
            )
        }
        Command::Example {
            name,
            resolution,
            print_config,
        } => {
            let cfg = RunConfig {
                resolution: Some(resolution.unwrap_or(EXAMPLE_RESOLUTION)),
                ..RunConfig::default()
            };
            (
                cfg,
                print_config,
                Box::new(move |c: &RunConfig| commands::example(&name, c)),
            )
        }
    };
    if print {
        println!("{}", json::to_string(&cfg)?);
        return Ok(ExitCode::SUCCESS);
    }
    let outcome = action(&cfg)?;
    let target = if outcome.written { None } else { cfg.out.as_deref() };
    commands::emit(target, &outcome.text)?;
    Ok(if outcome.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => match e.downcast_ref::<Usage>() {
            Some(u) => Cli::command()
                .error(clap::error::ErrorKind::MissingRequiredArgument, u)
                .exit(),
            None => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}
