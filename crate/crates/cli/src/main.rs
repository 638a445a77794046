mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command, RunConfig};
use output::{write_artifacts, write_error, Outcome, Table};

fn execute(cfg: &RunConfig) -> bool {
    let outcome = commands::run(cfg);
    match outcome.and_then(|o| write_artifacts(cfg, &o).map(|paths| (o, paths))) {
        Ok((o, paths)) => {
            let status = if o.passed() { "ok" } else { "FAILED" };
            println!("{}: {status} ({})", cfg.command.name(), paths[0].display());
            for f in &o.failures {
                eprintln!("  {f}");
            }
            o.passed()
        }
        Err(e) => {
            eprintln!("{}: error: {e:#}", cfg.command.name());
            if let Err(w) = write_error(cfg, &e) {
                eprintln!("could not write failure record: {w:#}");
            }
            false
        }
    }
}

fn report(cli: &Cli) -> anyhow::Result<bool> {
    let mut table = Table::new(&["command", "passed"]);
    let mut all = true;
    for cmd in Command::ALL {
        let sub = RunConfig::resolve_with(cli, cmd, Some(25))?;
        let ok = execute(&sub);
        all &= ok;
        table.push(vec![cmd.name().into(), ok.to_string()]);
    }
    let cfg = RunConfig::resolve(cli, Command::Report)?;
    let outcome = Outcome {
        result: serde_json::json!({ "all_passed": all }),
        tables: vec![("report".into(), table)],
        failures: if all { vec![] } else { vec!["at least one command failed".into()] },
    };
    write_artifacts(&cfg, &outcome)?;
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(2);
    }
    if cli.command == Command::Report {
        return match report(&cli) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        };
    }
    let cfg = match RunConfig::resolve(&cli, cli.command) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if execute(&cfg) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
