use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quill_cli::driver::{self, Exit, Report};
use quill_core::eval::DEFAULT_BUDGET;

/// Type inference, checking and evaluation for the Quill linear calculus.
#[derive(Parser)]
#[command(name = "quill", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the principal type of every definition.
    Infer { file: PathBuf },
    /// Evaluate `main`.
    Run {
        file: PathBuf,
        /// Report discarded and duplicated values.
        #[arg(long)]
        audit: bool,
        /// Print one line per rule application and show value indices.
        #[arg(long)]
        trace: bool,
        /// Maximum number of rule applications.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Re-check elaborated definitions with the syntax-directed rules.
    Check { file: PathBuf },
    /// Run the embedded example corpus.
    Corpus,
}

fn read(path: &PathBuf) -> Result<String, Report> {
    std::fs::read_to_string(path).map_err(|e| Report {
        exit: Exit::InputError,
        stdout: String::new(),
        stderr: format!("error: cannot read {}: {e}\n", path.display()),
    })
}

fn execute(cli: Cli) -> Report {
    let result = match &cli.command {
        Command::Infer { file } => read(file).map(|s| driver::infer(&s)),
        Command::Run { file, audit, trace, budget } => read(file).map(|s| driver::run(&s, *audit, *trace, *budget)),
        Command::Check { file } => read(file).map(|s| driver::check(&s)),
        Command::Corpus => Ok(driver::corpus_table()),
    };
    result.unwrap_or_else(|r| r)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Inference and evaluation recurse over the term structure.
    let report = std::thread::Builder::new()
        .stack_size(512 << 20)
        .spawn(move || execute(cli))
        .expect("spawn worker thread")
        .join()
        .expect("worker thread panicked");
    print!("{}", report.stdout);
    eprint!("{}", report.stderr);
    let _ = std::io::stdout().flush();
    ExitCode::from(report.exit as u8)
}
