//! Batch front end composing the pipeline:
//! preprocess → count → train → eval.
//!
//! Exit codes: 0 success, 1 usage error, 2 malformed input, 3 I/O error.

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "malformed input: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "morphlm", version, about = "Morphology-aware n-gram language modeling pipeline")]
struct Cli {
    /// key = value file supplying defaults for unset flags.
    #[arg(long, global = true, env = "MORPHLM_CONFIG")]
    config: Option<PathBuf>,

    /// Print the fully resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,

    /// Worker threads (0 = all available cores). Results are independent
    /// of the thread count.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Deglutinize, deduplicate, threshold, shuffle and split a corpus.
    Preprocess(commands::preprocess::PreprocessArgs),
    /// Count n-grams into a binary count file (or merge count files).
    Count(commands::count::CountArgs),
    /// Estimate a modified Kneser-Ney model from a count file.
    Train(commands::train::TrainArgs),
    /// Build a class-model bundle from an annotated corpus.
    TrainClass(commands::train_class::TrainClassArgs),
    /// Compute perplexity reports, optionally with a class model.
    Eval(commands::eval::EvalArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            log::warn!("could not set thread pool size: {e}");
        }
    }

    let config = match config::ConfigFile::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code());
        }
    };

    let result = match cli.command {
        Command::Preprocess(args) => {
            commands::preprocess::run(args, &config, cli.print_config)
        }
        Command::Count(args) => commands::count::run(args, &config, cli.print_config),
        Command::Train(args) => commands::train::run(args, &config, cli.print_config),
        Command::TrainClass(args) => {
            commands::train_class::run(args, &config, cli.print_config)
        }
        Command::Eval(args) => commands::eval::run(args, &config, cli.print_config),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
