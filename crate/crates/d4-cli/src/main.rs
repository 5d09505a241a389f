mod args;
mod commands;
mod output;
mod selftest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Common};
use output::CliError;

fn set_threads(n: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Resource(e.to_string()))?;
    }
    Ok(())
}

fn with(common: &Common) -> Result<args::RunConfig, CliError> {
    let cfg = common.resolve()?;
    set_threads(cfg.threads)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Prepare(c) => commands::prepare(&with(&c)?),
        Command::Stabilizers { common, apply } => commands::stabilizers(&with(&common)?, &apply),
        Command::Braid { common, spec, named } => commands::braid(&with(&common)?, spec.as_deref(), named),
        Command::Borromean { common, rings, schedule } => commands::borromean(&with(&common)?, rings.into(), schedule.into()),
        Command::Sectors { common, list } => commands::sectors(&with(&common)?, list),
        Command::SingleAnyon(c) => commands::single_anyon(&with(&c)?),
        Command::DegeneracyScan { common, trials, ensemble } => commands::degeneracy_scan(&with(&common)?, trials, ensemble.into()),
        Command::FidelityBound { common, expectations, sites, alternate } => {
            commands::fidelity_bound(&with(&common)?, expectations.as_deref(), sites, alternate)
        }
        Command::AnyonTable { fuse, output } => commands::anyon_table(fuse.as_deref(), output.as_deref()),
        Command::Selftest { output } => {
            let s = selftest::run();
            output::write_json(&s, output.as_deref())?;
            if s.passed {
                Ok(())
            } else {
                let failed: Vec<&str> = s.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
                Err(CliError::Internal(format!("selftest failed: {}", failed.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
