use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use schelling_core::harness::{run_config, ExperimentConfig, HarnessError};

/// Run Schelling spin-system experiments.
#[derive(Debug, Parser)]
#[command(name = "schelling", version)]
struct Cli {
    /// simulate, sweep, bounds, fpp or percolation
    mode: String,
    /// key=value configuration file
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    replicas: Option<u32>,
    /// Extra key=value settings, applied last
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let text =
        std::fs::read_to_string(&cli.config).map_err(|e| HarnessError::io(&cli.config, e))?;
    let mut cfg = ExperimentConfig::parse_unvalidated(&text)?;
    cfg.set("mode", &cli.mode)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(n) = cli.replicas {
        cfg.replicas = n;
    }
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = load(&cli).and_then(|cfg| run_config(&cfg));
    match result {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("schelling: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
