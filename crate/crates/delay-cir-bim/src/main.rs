use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};

use delay_cir_bim::cli::{self, CliCommand};

/// Monte Carlo experiments for the delay CIR model with jumps.
#[derive(Parser)]
#[command(name = "delay-cir-bim", disable_help_subcommand = true)]
struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    command: Command,
    /// Experiment configuration (flat `key = value` file).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path, overriding the config's `out` key.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cap on worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Command {
    Paths,
    Converge,
    Moments,
    Bond,
    Barrier,
}

impl From<Command> for CliCommand {
    fn from(command: Command) -> Self {
        match command {
            Command::Paths => CliCommand::Paths,
            Command::Converge => CliCommand::Converge,
            Command::Moments => CliCommand::Moments,
            Command::Bond => CliCommand::Bond,
            Command::Barrier => CliCommand::Barrier,
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    let mut config = match cli::load_config(&args.config) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("config error: {err}");
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(out) = args.out {
        config.out = Some(out.to_string_lossy().into_owned());
    }

    let command = CliCommand::from(args.command);
    let result = match args.threads {
        Some(threads) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => pool,
                Err(err) => {
                    eprintln!("runtime error: {err}");
                    return ExitCode::from(2);
                }
            };
            pool.install(|| cli::run(command, &config))
        }
        None => cli::run(command, &config),
    };

    match result {
        Ok(outcome) => {
            println!("{} -> {}", outcome.summary, outcome.out_path.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!(
                "{} error: {err}",
                if err.exit_code() == 1 {
                    "config"
                } else {
                    "runtime"
                }
            );
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
