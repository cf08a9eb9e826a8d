//! Command-line runner for the GenPU game, its theory checks and baselines.

mod config;
mod experiment;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use genpu::checkpoint::Checkpoint;
use genpu::datagen::LabeledDataset;
use genpu::genpu::Class;

use config::{ConfigError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "genpu", version, about = "Generative positive-unlabeled learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the game and the baselines from a config file.
    Run {
        config: PathBuf,
        /// Override a config field, e.g. `--set genpu.iterations=100`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Artifact directory; defaults to `$GENPU_OUTPUT_ROOT/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
        /// Start every weight and bias at exactly zero instead of Glorot.
        #[arg(long)]
        paper_init: bool,
    },
    /// Exact checks on discrete games.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Sample from a trained generator as CSV on stdout.
    Generate {
        checkpoint: PathBuf,
        #[arg(long, value_enum)]
        class: ClassArg,
        #[arg(short = 'n')]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Accuracy of a checkpoint's classifier on a labeled CSV.
    Eval { checkpoint: PathBuf, test_csv: PathBuf },
}

#[derive(Subcommand)]
enum OracleCommand {
    Verify {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    P,
    N,
}

/// The oracle suite found a violated invariant; exit code 4.
#[derive(Debug)]
struct VerificationFailed;

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("oracle verification failed")
    }
}

impl std::error::Error for VerificationFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if cause.is::<VerificationFailed>() {
            return 4;
        }
        if let Some(e) = cause.downcast_ref::<genpu::Error>() {
            return match e {
                genpu::Error::Divergence { .. } => 3,
                genpu::Error::Parameter(_) | genpu::Error::Mode(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            overrides,
            out,
            quiet,
            paper_init,
        } => {
            let mut overrides = overrides;
            if paper_init {
                overrides.push("genpu.architecture.init=zero".into());
            }
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let dir = experiment::output_dir(&cfg, out.as_deref());
            let summary = experiment::run(&cfg, &dir, quiet)?;
            println!("{}", serde_json::to_string_pretty(&summary.accuracy)?);
            eprintln!("artifacts in {}", dir.display());
        }
        Command::Oracle {
            command: OracleCommand::Verify {
                trials,
                seed,
                inject_fault,
            },
        } => {
            let report = genpu::oracle::run_suite(trials, seed, inject_fault)?;
            for c in &report.checks {
                println!(
                    "{:<40} {} trials  max deviation {:.3e}  tolerance {:.0e}  {}",
                    c.name,
                    c.trials,
                    c.max_deviation,
                    c.tolerance,
                    if c.passed { "ok" } else { "FAILED" }
                );
            }
            if !report.passed() {
                bail!(VerificationFailed);
            }
        }
        Command::Generate {
            checkpoint,
            class,
            n,
            seed,
        } => {
            let ck = load_checkpoint(&checkpoint)?;
            let state = ck.restore()?;
            let (which, label) = match class {
                ClassArg::P => (Class::Positive, 1),
                ClassArg::N => (Class::Negative, -1),
            };
            let points = state.generate(which, n, seed)?;
            let data = LabeledDataset::new(points, vec![label; n])?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            data.write_csv(&mut lock)?;
            lock.flush()?;
        }
        Command::Eval { checkpoint, test_csv } => {
            let ck = load_checkpoint(&checkpoint)?;
            let Some(clf) = ck.classifier else {
                bail!(ConfigError(format!("{} holds no classifier", checkpoint.display())));
            };
            let file = std::fs::File::open(&test_csv).with_context(|| format!("opening {}", test_csv.display()))?;
            let data = LabeledDataset::read_csv(file)?;
            let acc = genpu::baselines::evaluate(&clf, &data)?;
            println!("{}", serde_json::json!({ "accuracy": acc, "n": data.len() }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
