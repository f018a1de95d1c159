//! `paramres`: command-line runner for the driven Klein-Gordon laboratory.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, EXIT_CONFIG};
use config::Settings;

#[derive(Parser)]
#[command(name = "paramres", version, about = "Resonance crossings in a parametrically driven Klein-Gordon equation")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Override one configuration key (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Verb {
    /// Resonance crossings over the schedule window at the probe position.
    Resonances,
    /// Layer connection coefficients and the c2 phase verdict over `layer.F`.
    Layer,
    /// Evolve a soliton envelope with the NLSE solver.
    Nlse,
    /// Direct Klein-Gordon run with jump measurement (writes `<out>/run-<tag>`).
    Kg,
    /// Recompute the per-crossing comparison of a finished run.
    Match {
        /// Run directory; defaults to `<out>/run-<tag>`.
        run_dir: Option<PathBuf>,
    },
}

fn settings(cli: &Cli) -> Result<Settings, Failure> {
    let mut s = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    for a in &cli.set {
        s.assign(a)?;
    }
    Ok(s)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let s = settings(cli)?;
    match &cli.verb {
        Verb::Resonances => commands::resonances(&s, &cli.out, cli.force),
        Verb::Layer => commands::layer(&s, &cli.out, cli.force),
        Verb::Nlse => commands::nlse(&s, &cli.out, cli.force),
        Verb::Kg => commands::kg(&s, &cli.out, cli.force),
        Verb::Match { run_dir } => {
            let dir = match run_dir {
                Some(d) => d.clone(),
                None => commands::run_dir(&s, &cli.out)?,
            };
            commands::match_run(&s, &dir, &cli.set, cli.force)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
