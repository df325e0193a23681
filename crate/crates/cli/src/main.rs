//! Command-line driver for the nisac workspace.
//!
//! `gen` draws a dataset, `train` fits the map network on one, `eval` scores
//! a checkpoint, `verify` runs the statistical estimator suites, and `sweep`
//! repeats gen+train+eval across one swept parameter axis. Every command is
//! reproducible from its config and seed, and every artifact echoes the
//! config (or its hash) it was produced under.
//!
//! Exit codes: 0 success (for `verify`, all checks passed), 1 config or
//! usage problems (including failed verify checks), 2 I/O or artifact
//! format failures.

mod commands;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nisac_core::Error;

#[derive(Parser)]
#[command(name = "nisac", version, about = "Desk-scale sensing/communication simulator driver")]
struct Cli {
    /// Worker threads for the internal thread pool; defaults to the CPU
    /// count. Results do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file from a run config.
    Gen {
        /// TOML run config.
        #[arg(long)]
        config: PathBuf,
        /// Dataset output path.
        #[arg(long)]
        out: PathBuf,
        /// Generation seed; overrides the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Record count; overrides the config's `dataset.n_records`.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Train the configured network on a dataset.
    Train {
        /// Dataset produced by `gen`; the run config travels inside it.
        #[arg(long)]
        data: PathBuf,
        /// Output directory; receives checkpoint.nncp and history.json.
        #[arg(long)]
        out: PathBuf,
        /// Training seed; overrides the dataset config's `train.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a trained checkpoint on a dataset's held-out slice.
    Eval {
        /// Dataset produced by `gen`.
        #[arg(long)]
        data: PathBuf,
        /// Checkpoint produced by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Report path; written to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Training seed override; must match the value used by `train`,
        /// the validation split depends on it.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the statistical verification suites and report each check.
    Verify {
        /// Single suite to run; all suites when omitted.
        #[arg(long)]
        suite: Option<String>,
        /// Seed for the suites' random draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report path; written to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run gen+train+eval at every point of one swept axis and tabulate the
    /// resulting metrics as CSV.
    Sweep {
        /// TOML run config for the sweep baseline.
        #[arg(long)]
        config: PathBuf,
        /// Which parameter the sweep varies.
        #[arg(long, value_enum)]
        axis: sweep::Axis,
        /// Comma-separated axis values, e.g. `1e-4,1e-2,1` or `sub,nor`.
        #[arg(long)]
        values: String,
        /// Comma-separated seeds; each point runs once per seed.
        #[arg(long, default_value = "0,1,2")]
        seeds: String,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests parse as "errors" but exit clean;
            // real usage mistakes count as config problems.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global()
        {
            eprintln!("error: cannot size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) | Error::Format(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

/// Returns whether the command counts as fully successful; only `verify`
/// with failing checks reports `false` without an error.
fn run(command: Command) -> nisac_core::Result<bool> {
    match command {
        Command::Gen { config, out, seed, n } => {
            commands::gen(&config, &out, seed, n)?;
            Ok(true)
        }
        Command::Train { data, out, seed } => {
            commands::train(&data, &out, seed)?;
            Ok(true)
        }
        Command::Eval { data, model, out, seed } => {
            commands::eval(&data, &model, out.as_deref(), seed)?;
            Ok(true)
        }
        Command::Verify { suite, seed, out } => {
            commands::verify(suite.as_deref(), seed, out.as_deref())
        }
        Command::Sweep { config, axis, values, seeds, out } => {
            sweep::run(&config, axis, &values, &seeds, &out)?;
            Ok(true)
        }
    }
}
