use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ccb_core::harness::{
    fuzz_lemma1, fuzz_surrogate, presets, run_streaming, run_sweep_with_threads, verify_oracle, write_round_header,
    write_round_row, write_sweep_csv, ExperimentConfig,
};
use ccb_core::types::ContextId;
use ccb_core::CcbError;
use clap::{Parser, Subcommand};
use serde::Serialize;

/// Constrained contextual bandit experiments.
#[derive(Debug, Parser)]
#[command(name = "ccb", version)]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Use a built-in experiment instead of a config file.
    #[arg(long, global = true, value_name = "REGIME")]
    preset: Option<String>,
    /// Seed for single runs and fuzz checks; first seed of a sweep.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (defaults to the config's `output_dir`, then `.`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One run: writes rounds.csv and summary.json.
    Run {
        /// Horizon (defaults to the config's first horizon).
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Every (horizon, seed) pair: writes sweep.csv and sweep_summary.json.
    Sweep,
    /// Fuzz the IGW regret inequality.
    CheckLemma1 {
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Fuzz the one-round surrogate inequality.
    CheckSurrogate {
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Feed the reward oracle uniformly logged data and compare its error with U_T.
    VerifyOracle {
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Print the benchmark policy and its feasibility certificate.
    SolveBenchmark {
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Print a built-in config.
    Preset { regime: String },
}

enum Failure {
    Input(String),
    Runtime(String),
}

impl From<CcbError> for Failure {
    fn from(e: CcbError) -> Self {
        if e.is_input_error() || matches!(e, CcbError::Infeasible(_)) {
            Failure::Input(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    match (&cli.config, &cli.preset) {
        (Some(path), _) => ExperimentConfig::load(path).map_err(|e| match e {
            CcbError::Io(io) => Failure::Input(format!("cannot read {}: {io}", path.display())),
            other => other.into(),
        }),
        (None, Some(name)) => presets::by_name(name).ok_or_else(|| Failure::Input(format!("unknown preset `{name}`"))),
        (None, None) => Err(Failure::Input(
            "this command needs --config PATH or --preset REGIME".into(),
        )),
    }
}

fn out_dir(cli: &Cli, config: &ExperimentConfig) -> Result<PathBuf, Failure> {
    let dir = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn first_horizon(config: &ExperimentConfig, horizon: Option<u64>) -> Result<u64, Failure> {
    horizon
        .or_else(|| config.horizons.first().copied())
        .ok_or_else(|| Failure::Input("no horizon given and the config lists none".into()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(runtime)?;
    writeln!(w).and_then(|_| w.flush()).map_err(runtime)
}

fn print_json(value: &impl Serialize) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value).map_err(runtime)?);
    Ok(())
}

fn report_slack(what: &str, trials: u64, worst: f64) -> Result<(), Failure> {
    println!("{what}: min slack {worst:e} over {trials} trials");
    if worst >= -1e-9 {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{what} violated (slack {worst:e})")))
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run { horizon } => {
            let config = load_config(cli)?;
            let horizon = first_horizon(&config, *horizon)?;
            let seed = cli.seed.or_else(|| config.seeds.first().copied()).unwrap_or(0);
            let dir = out_dir(cli, &config)?;
            let mut rounds = create(&dir.join("rounds.csv"))?;
            write_round_header(&mut rounds, config.spec.m()).map_err(runtime)?;
            let mut io_error = None;
            let summary = run_streaming(&config, horizon, seed, |log| {
                if io_error.is_none() {
                    io_error = write_round_row(&mut rounds, log).err();
                }
            })?;
            if let Some(e) = io_error {
                return Err(runtime(e));
            }
            rounds.flush().map_err(runtime)?;
            write_json(&dir.join("summary.json"), &summary)?;
            println!(
                "T={} seed={} regret={} ccv={} -> {}",
                summary.horizon,
                summary.seed,
                summary.regret,
                summary.ccv,
                dir.display()
            );
            Ok(())
        }
        Command::Sweep => {
            let mut config = load_config(cli)?;
            if let Some(first) = cli.seed {
                let n = config.seeds.len() as u64;
                config.seeds = (first..first + n).collect();
            }
            let dir = out_dir(cli, &config)?;
            let out = run_sweep_with_threads(&config, cli.threads)?;
            let mut csv = create(&dir.join("sweep.csv"))?;
            write_sweep_csv(&mut csv, &out.runs)
                .and_then(|_| csv.flush())
                .map_err(runtime)?;
            write_json(&dir.join("sweep_summary.json"), &out.summary)?;
            let s = &out.summary;
            println!(
                "regret slope {:.4} (r2 {:.4}), ccv slope {:.4} (r2 {:.4}) -> {}",
                s.regret_fit.slope,
                s.regret_fit.r2,
                s.ccv_fit.slope,
                s.ccv_fit.r2,
                dir.display()
            );
            Ok(())
        }
        Command::CheckLemma1 { trials } => {
            let worst = fuzz_lemma1(*trials, cli.seed.unwrap_or(0))?;
            report_slack("IGW inequality", *trials, worst)
        }
        Command::CheckSurrogate { trials } => {
            let worst = fuzz_surrogate(*trials, cli.seed.unwrap_or(0))?;
            report_slack("surrogate inequality", *trials, worst)
        }
        Command::VerifyOracle { horizon } => {
            let config = load_config(cli)?;
            let horizon = first_horizon(&config, *horizon)?;
            let check = verify_oracle(&config, horizon, cli.seed.unwrap_or(0))?;
            print_json(&check)
        }
        Command::SolveBenchmark { horizon } => {
            let config = load_config(cli)?;
            let horizon = first_horizon(&config, *horizon)?;
            let benchmark = config.nominal_benchmark(horizon)?;
            let weights = config.spec.context_process.nominal_weights(config.spec.n_contexts());
            let counts: Vec<f64> = weights.iter().map(|w| w * horizon as f64).collect();
            let certificate = config.certify(&benchmark, horizon, &counts);
            let contexts: Vec<_> = (0..config.spec.n_contexts())
                .map(|x| {
                    serde_json::json!({
                        "context": x,
                        "policy": benchmark.per_context[x].probs(),
                        "value": benchmark.value_per_context[x],
                        "consumption": benchmark.consumption(&config.spec, ContextId(x)),
                    })
                })
                .collect();
            print_json(&serde_json::json!({
                "regime": config.regime(),
                "horizon": horizon,
                "budget": config.budget(horizon),
                "contexts": contexts,
                "certificate": certificate,
            }))?;
            if certificate.verified {
                Ok(())
            } else {
                Err(Failure::Input("benchmark fails its feasibility certificate".into()))
            }
        }
        Command::Preset { regime } => {
            let config =
                presets::by_name(regime).ok_or_else(|| Failure::Input(format!("unknown preset `{regime}`")))?;
            println!("{}", config.to_json());
            Ok(())
        }
    }
}
