//! Command-line entry point: `run`, `validate`, and `synth`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use factorlab::study::{self, StudyConfig, StudyError};

#[derive(Parser)]
#[command(
    name = "factorlab",
    about = "Factor-research engine for intangible-intensity factor studies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured study tables and write artifacts.
    Run {
        /// Config file (flat key = value text).
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated table subset, e.g. T1,T4,T5 (default: all).
        #[arg(long)]
        tables: Option<String>,
        /// Output directory override.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Abort on the first invalid input row instead of quarantining it.
        #[arg(long)]
        strict: bool,
    },
    /// Dry-run schema and window checks over the configured inputs.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate a synthetic panel (three CSVs plus the oracle sidecar).
    Synth {
        /// Synthetic-panel spec file (flat key = value text).
        #[arg(long)]
        spec: PathBuf,
        /// Output directory for the generated files.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(
    path: &Path,
    tables: Option<&str>,
    out: Option<&PathBuf>,
    strict: bool,
) -> Result<StudyConfig, StudyError> {
    let mut config = StudyConfig::from_file(path)?;
    if let Some(raw) = tables {
        config.tables = study::config::parse_tables(raw)?;
    }
    if let Some(dir) = out {
        config.out_dir = dir.clone();
    }
    if strict {
        config.strict = true;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), StudyError> {
    match cli.command {
        Command::Run {
            config,
            tables,
            out,
            strict,
        } => {
            let config = load_config(&config, tables.as_deref(), out.as_ref(), strict)?;
            let manifest = study::run_study(&config)?;
            println!(
                "wrote {} artifacts to {}",
                manifest.artifacts.len(),
                config.out_dir.display()
            );
            Ok(())
        }
        Command::Validate { config } => {
            let config = StudyConfig::from_file(&config)?;
            let summary = study::validate_study(&config)?;
            println!("{summary}");
            Ok(())
        }
        Command::Synth { spec, out } => {
            study::run_synth(&spec, &out)?;
            println!("wrote synthetic panel to {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
