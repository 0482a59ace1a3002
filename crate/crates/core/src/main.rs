use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kdnsim::cli::{self, parse_list, parse_u32_list, ScenarioSource};
use kdnsim::engine::Scenario;
use kdnsim::Error;

/// A parsed comma/range list; wrapped so clap keeps it as one value.
#[derive(Clone, Debug)]
struct List<T>(Vec<T>);

fn seeds(text: &str) -> Result<List<u64>, String> {
    parse_list(text).map(List)
}

fn ue_counts(text: &str) -> Result<List<u32>, String> {
    parse_u32_list(text).map(List)
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_IO: u8 = 4;

/// Small-cell network simulator with a Q-learning resource manager.
///
/// Exit codes: 0 success, 2 configuration error, 3 runtime error, 4 I/O error.
/// Set KDNSIM_LOG (error, warn, info, debug, trace) to change log verbosity.
#[derive(Parser)]
#[command(name = "kdnsim", version)]
struct Cli {
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario TOML file; built-in defaults when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Replace agent.episodes from the scenario.
    #[arg(long, value_name = "N")]
    episodes_override: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a q-table and write it with its learning curve.
    Train {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Single training seed; defaults to the scenario seed.
        #[arg(long, value_parser = seeds)]
        seeds: Option<List<u64>>,
    },
    /// Evaluate the scenario's policy greedily on one or more seeds.
    Evaluate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
        /// Seeds, e.g. `1,2,3` or `1..5:1`; defaults to the scenario seed.
        #[arg(long, value_parser = seeds)]
        seeds: Option<List<u64>>,
        /// Trained table for rl-kdn; trained per seed when omitted.
        #[arg(long)]
        qtable: Option<PathBuf>,
    },
    /// Paired RL-vs-baseline sweep over user counts and seeds.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = seeds, default_value = "1,2,3,4,5")]
        seeds: List<u64>,
        /// User counts, e.g. `20..300:40` or `20,60,100`.
        #[arg(long, value_parser = ue_counts, default_value = "20..300:40")]
        ue_counts: List<u32>,
    },
    /// Serve the scenario to one external agent over TCP.
    Serve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// 0 lets the OS choose; the bound address is printed either way.
        #[arg(long, default_value_t = 0)]
        port: u16,
    },
    /// Summarize a q-table file.
    InspectQtable { path: PathBuf },
}

fn load(args: &ScenarioArgs) -> kdnsim::Result<(Scenario, ScenarioSource)> {
    let (mut scenario, source) = match &args.scenario {
        Some(path) => cli::parse_scenario(path)?,
        None => (Scenario::default(), ScenarioSource::builtin()),
    };
    if let Some(n) = args.episodes_override {
        scenario.agent.episodes = n;
    }
    scenario.validate()?;
    Ok((scenario, source))
}

fn show(quiet: bool, path: &Path) {
    if !quiet {
        println!("wrote {}", path.display());
    }
}

fn run(cli: Cli) -> kdnsim::Result<()> {
    let quiet = cli.quiet;
    match cli.command {
        Command::Train {
            scenario,
            out,
            seeds,
        } => {
            let (mut sc, source) = load(&scenario)?;
            match seeds.as_ref().map(|l| l.0.as_slice()) {
                None => {}
                Some([seed]) => sc.seed = *seed,
                Some(_) => {
                    return Err(Error::InvalidParameter {
                        name: "seeds",
                        reason: "train takes a single seed".into(),
                    })
                }
            }
            let o = cli::cmd_train(&sc, &source, &out)?;
            for p in [&o.manifest, &o.qtable, &o.curve] {
                show(quiet, p);
            }
        }
        Command::Evaluate {
            scenario,
            out,
            seeds,
            qtable,
        } => {
            let (sc, source) = load(&scenario)?;
            let seeds = seeds.map_or_else(|| vec![sc.seed], |l| l.0);
            let o = cli::cmd_evaluate(&sc, &source, &seeds, qtable.as_deref(), &out)?;
            show(quiet, &o.manifest);
            show(quiet, &o.evaluation);
        }
        Command::Sweep {
            scenario,
            out,
            seeds,
            ue_counts,
        } => {
            let (sc, source) = load(&scenario)?;
            let o = cli::cmd_sweep(&sc, &source, &ue_counts.0, &seeds.0, &out)?;
            for p in [&o.manifest, &o.sweep, &o.runs].into_iter().chain(&o.plots) {
                show(quiet, p);
            }
        }
        Command::Serve { scenario, port } => {
            let (sc, _) = load(&scenario)?;
            cli::cmd_serve(&sc, port, |addr| {
                // Printed even with --quiet: clients need the port.
                println!("listening on {addr}");
            })?;
        }
        Command::InspectQtable { path } => {
            print!("{}", cli::cmd_inspect_qtable(&path)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KDNSIM_LOG", default_level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kdnsim: {e}");
            ExitCode::from(if e.is_config() {
                EXIT_CONFIG
            } else if e.is_io() {
                EXIT_IO
            } else {
                EXIT_RUNTIME
            })
        }
    }
}
