//! Batch driver: runs the verification, constant, angle and grid-oracle
//! suites from a JSON config and writes `report.json`, `summary.csv` and
//! `estimates.json`.
//!
//! Exit status: 0 when every asserted record passes, 1 when any fails,
//! 2 for config, usage or runtime errors.

pub mod config;
pub mod report;
pub mod suites;

use anyhow::Result;

pub use config::{parse_config, parse_config_with, Command, ConfigError, RunConfig};
pub use report::Report;
pub use suites::SuiteOutput;

/// Runs the configured command on a pool of `workers` threads (rayon's
/// default when `None`). Nothing is written.
pub fn execute(config: &RunConfig, workers: Option<usize>) -> Result<(Report, SuiteOutput)> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build()?;
    let mut output = pool.install(|| match config.command {
        Command::Verify => suites::verify(config),
        Command::Sharp => suites::sharp(config),
        Command::Angle => suites::angle(config),
        Command::Oracle => suites::oracle(config),
        Command::Sweep => suites::sweep(config),
    })?;
    let records = std::mem::take(&mut output.records);
    Ok((Report::new(config.clone(), records), output))
}

/// [`execute`], then writes the three output files into `config.out`.
pub fn run(config: &RunConfig, workers: Option<usize>) -> Result<Report> {
    let (report, output) = execute(config, workers)?;
    report.write(&config.out, &output.estimates)?;
    Ok(report)
}

/// The defaults, as the JSON document `--help` prints.
pub fn default_config_json() -> String {
    serde_json::to_string_pretty(&RunConfig::new(Command::Sweep)).unwrap_or_default()
}
