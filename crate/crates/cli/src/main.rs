use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use olab::config::{ExperimentConfig, SUITES};
use olab::corpus::{write_corpus, Corpus};
use olab::output::{print_table, read_summary, write_plot};

#[derive(Parser)]
#[command(name = "olab", version, about = "Dyadic Orlicz maximal operator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Materialize the weight and function corpus with a manifest
    Corpus { config: PathBuf },
    /// Run every suite listed in the config
    Run { config: PathBuf },
    /// Print the summary table of a run directory and write plot.csv
    Report { dir: PathBuf },
    /// Run a single suite
    Verify { suite: String, config: PathBuf },
}

enum Failure {
    Config(anyhow::Error),
    Violation,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

fn set_threads() -> Result<()> {
    if let Ok(s) = std::env::var("OLAB_THREADS") {
        let n: usize = s.trim().parse().map_err(|_| anyhow::anyhow!("OLAB_THREADS must be a positive integer"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run_and_report(cfg: &ExperimentConfig, suites: Option<&[String]>) -> Result<(), Failure> {
    let summary = olab::run(cfg, suites)?;
    print_table(std::io::stdout().lock(), &summary)?;
    println!("wrote {}", cfg.output.display());
    if summary.pass {
        Ok(())
    } else {
        Err(Failure::Violation)
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    set_threads()?;
    match cli.command {
        Command::Corpus { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let corpus = Corpus::build(&cfg)?;
            let files = write_corpus(&cfg, &corpus)?;
            println!("wrote {files} files to {}", cfg.output.join("corpus").display());
            Ok(())
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            run_and_report(&cfg, None)
        }
        Command::Verify { suite, config } => {
            if !SUITES.contains(&suite.as_str()) {
                return Err(anyhow::anyhow!("unknown suite {suite:?}; known: {}", SUITES.join(", ")).into());
            }
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.suites = vec![suite];
            cfg.validate()?;
            run_and_report(&cfg, None)
        }
        Command::Report { dir } => {
            let summary = read_summary(&dir)?;
            print_table(std::io::stdout().lock(), &summary)?;
            let rows = write_plot(&dir, &summary)?;
            println!("wrote {} ({rows} rows)", dir.join("plot.csv").display());
            if summary.pass {
                Ok(())
            } else {
                Err(Failure::Violation)
            }
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
