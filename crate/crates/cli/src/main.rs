//! Single entry point for the experiment pipeline. Exit codes: 0 when the
//! requested artifacts were fully produced, 2 for usage and configuration
//! errors, 1 for runtime failures.

mod commands;
mod provenance;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "fundusnet",
    version,
    about = "Dual-attention glaucoma classifier pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a dataset tree and write a stratified k-fold split file.
    Split {
        /// Dataset root directory.
        #[arg(long)]
        root: std::path::PathBuf,
        /// Label layout: class_folders or acrima_filename.
        #[arg(long, default_value = "class_folders")]
        layout: String,
        /// Number of folds.
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Shuffle seed recorded in the provenance record.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Dataset name used in reports and file names.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: std::path::PathBuf,
        /// Allow writing into a non-empty output directory.
        #[arg(long)]
        force: bool,
    },
    /// Run k-fold cross-validation training and write reports + checkpoints.
    Train {
        /// Fold file produced by `split`.
        #[arg(long)]
        folds: std::path::PathBuf,
        /// Flat key = value config file.
        #[arg(long)]
        config: Option<std::path::PathBuf>,
        /// Config overrides, key=value; highest precedence.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: std::path::PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Score a saved checkpoint on one held-out fold.
    Evaluate {
        #[arg(long)]
        checkpoint: std::path::PathBuf,
        #[arg(long)]
        folds: std::path::PathBuf,
        /// Fold index to evaluate on.
        #[arg(long, default_value_t = 0)]
        fold: usize,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: std::path::PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Cross-validate the four attention configurations (optionally the four
    /// backbones) and emit one comparative table.
    Ablate {
        #[arg(long)]
        folds: std::path::PathBuf,
        #[arg(long)]
        config: Option<std::path::PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Also sweep the four named backbones (expensive at full scale).
        #[arg(long)]
        backbones: bool,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: std::path::PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Render attention heatmaps for one or more fundus images.
    Heatmap {
        #[arg(long)]
        checkpoint: std::path::PathBuf,
        #[arg(long)]
        out: std::path::PathBuf,
        #[arg(long)]
        force: bool,
        /// Input images (.jpg / .png).
        #[arg(required = true)]
        images: Vec<std::path::PathBuf>,
    },
}

/// Usage/config failures exit 2, runtime failures exit 1.
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<fundusnet::Error> for CliError {
    fn from(e: fundusnet::Error) -> Self {
        match &e {
            fundusnet::Error::Config(_) | fundusnet::Error::Validation(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Split {
            root,
            layout,
            k,
            seed,
            name,
            out,
            force,
        } => commands::run_split(&root, &layout, k, seed, name.as_deref(), &out, force),
        Command::Train {
            folds,
            config,
            overrides,
            name,
            out,
            force,
        } => commands::run_train(&folds, config.as_deref(), &overrides, name.as_deref(), &out, force),
        Command::Evaluate {
            checkpoint,
            folds,
            fold,
            overrides,
            name,
            out,
            force,
        } => commands::run_evaluate(
            &checkpoint,
            &folds,
            fold,
            &overrides,
            name.as_deref(),
            &out,
            force,
        ),
        Command::Ablate {
            folds,
            config,
            overrides,
            backbones,
            name,
            out,
            force,
        } => commands::run_ablate(
            &folds,
            config.as_deref(),
            &overrides,
            backbones,
            name.as_deref(),
            &out,
            force,
        ),
        Command::Heatmap {
            checkpoint,
            out,
            force,
            images,
        } => commands::run_heatmap(&checkpoint, &images, &out, force),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
