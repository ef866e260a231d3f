//! Config-driven experiment runner for the `olab-core` verifiers.

pub mod config;
pub mod corpus;
pub mod output;
pub mod suites;

use anyhow::Result;

use config::ExperimentConfig;
use corpus::Corpus;
use output::Summary;

/// Builds the corpus, runs `suites` (the config's list when `None`) and
/// writes all report files to the config's output directory.
pub fn run(cfg: &ExperimentConfig, suites: Option<&[String]>) -> Result<Summary> {
    let corpus = Corpus::build(cfg)?;
    let names = suites.unwrap_or(&cfg.suites);
    let reports = suites::run_suites(cfg, &corpus, names)?;
    let summary = output::summarize(cfg.seed, &reports)?;
    output::write_outputs(&cfg.output, &reports, &summary)?;
    Ok(summary)
}
