mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, CommandName, RunSpec};
use report::Report;

fn build(cli: &Cli) -> Result<(RunSpec, Option<std::path::PathBuf>), String> {
    let (name, common) = match &cli.command {
        Command::Analyze(c) => (CommandName::Analyze, c),
        Command::Limits(l) => (CommandName::Limits, &l.common),
        Command::Oracle(c) => (CommandName::Oracle, c),
        Command::Simulate(s) => (CommandName::Simulate, &s.common),
        Command::Classify(c) => (CommandName::Classify, c),
    };
    let mut spec = RunSpec::from_common(name, common)?;
    match &cli.command {
        Command::Limits(l) => {
            for g in [&l.y_grid, &l.s_grid].into_iter().flatten() {
                if let Some(x) = g.iter().find(|x| !x.is_finite()) {
                    return Err(format!("grid points must be finite, got {x}"));
                }
            }
            if let Some(s) = l.s_grid.iter().flatten().find(|&&s| s <= 0.0) {
                return Err(format!("--s-grid points must be positive, got {s}"));
            }
            spec.y_grid = l.y_grid.clone();
            spec.s_grid = l.s_grid.clone();
            spec.simulate = Some(l.simulate);
        }
        Command::Simulate(s) => spec.raw_out = s.raw_out.as_ref().map(|p| p.display().to_string()),
        _ => {}
    }
    Ok((spec, common.out.clone()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (spec, out) = match build(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let command = spec.command;
    let mut report = Report::new(spec, out);
    match command {
        CommandName::Analyze => commands::analyze(&mut report),
        CommandName::Limits => commands::limits(&mut report),
        CommandName::Oracle => commands::oracle(&mut report),
        CommandName::Simulate => commands::simulate(&mut report),
        CommandName::Classify => commands::classify_cmd(&mut report),
    }
    if let Err(e) = report.emit() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if report.failed() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
