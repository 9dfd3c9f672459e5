use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use modcorr_cli::config::{Command, ExperimentConfig};
use modcorr_cli::output::write_outcome;
use modcorr_cli::run::{run, RunError};

/// Correlation experiments for fractional parts of sequences modulo one.
#[derive(Parser, Debug)]
#[command(name = "modcorr", version)]
struct Cli {
    command: Command,
    /// Experiment config (`key = value` lines, `#` comments).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; overrides the config. Defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn execute(cli: &Cli) -> Result<(), RunError> {
    let start = Instant::now();
    let text = std::fs::read_to_string(&cli.config).map_err(|e| {
        RunError::Config(modcorr_cli::config::ConfigError(format!(
            "{}: {e}",
            cli.config.display()
        )))
    })?;
    let cfg = ExperimentConfig::parse(&text, cli.command)?;
    let threads = cli
        .threads
        .or(cfg.threads)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(RunError::Config(modcorr_cli::config::ConfigError(
            "threads must be at least 1".into(),
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Io(std::io::Error::other(e.to_string())))?;
    let outcome = pool.install(|| run(&cfg))?;
    let files = write_outcome(&cli.out, &cfg, &outcome, threads, start.elapsed().as_secs_f64())?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("modcorr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
