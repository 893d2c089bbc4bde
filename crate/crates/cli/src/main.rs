mod args;
mod commands;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command, OutputArgs};
use commands::Outcome;

fn run(cli: &Cli) -> Result<Outcome> {
    let (report, outcome, out) = match &cli.command {
        Command::Visibility(a) => {
            let (r, o) = commands::visibility(a)?;
            (r, o, &a.out)
        }
        Command::Qfunction(a) => {
            let (r, o) = commands::qfunction(a)?;
            (r, o, &a.out)
        }
        Command::Fringe(a) => {
            let (r, o) = commands::fringe(a)?;
            (r, o, &a.out)
        }
        Command::Sweep(a) => {
            let (r, o) = commands::sweep_cmd(a)?;
            (r, o, &a.out)
        }
    };
    emit(&report, out)?;
    Ok(outcome)
}

fn emit(report: &report::Report, out: &OutputArgs) -> Result<()> {
    match &out.output {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut w = BufWriter::new(file);
            report.write(out.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            report.write(out.format, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CATVIS_LOG", level)).format_timestamp(None).init();

    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::RowErrors) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
