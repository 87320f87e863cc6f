use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use rellich_cli::{parse_config_with, run, Command};

#[derive(Parser)]
#[command(name = "rellich", version, about = "Numerical checks of mode-reduced Rellich-type identities and inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Option<Sub>,
    /// JSON config; keys not given take the defaults below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config's "out".
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Base seed, overriding the config's "seed".
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Mode identity, cross-term sign, dissipativity and Rellich checks on random profiles.
    Verify,
    /// Eigen-solver constants against the Mellin symbol.
    Sharp,
    /// Angle search, plus the n = 3 spherical-part bound.
    Angle,
    /// Tensor-grid certification of the mode reduction.
    Oracle,
    /// All of the above.
    Sweep,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Verify => Command::Verify,
            Sub::Sharp => Command::Sharp,
            Sub::Angle => Command::Angle,
            Sub::Oracle => Command::Oracle,
            Sub::Sweep => Command::Sweep,
        }
    }
}

fn main() -> ExitCode {
    let help = format!("Config defaults (command comes from the subcommand or the config):\n{}", rellich_cli::default_config_json());
    let matches = Cli::command().after_long_help(help).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };

    let text = match &cli.config {
        Some(path) => match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => "{}".to_string(),
    };
    let mut config = match parse_config_with(&text, cli.command.map(Command::from)) {
        Ok(c) => c,
        Err(e) => {
            let source = cli.config.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<defaults>".into());
            eprintln!("{source}: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(out) = cli.out {
        config.out = out;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }

    match run(&config, cli.workers) {
        Ok(report) => {
            for r in report.failures() {
                eprintln!(
                    "FAIL {} n={} ell={} seed={}",
                    r.check,
                    r.n,
                    r.ell.map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
                    r.seed.map(|s| s.to_string()).unwrap_or_else(|| "-".into())
                );
            }
            println!(
                "{}: {} records, {} asserted, {} failed; reports in {}",
                config.command.name(),
                report.totals.records,
                report.totals.asserted,
                report.totals.failed,
                config.out.display()
            );
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
