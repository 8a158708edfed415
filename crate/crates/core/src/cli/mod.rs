//! Configuration-driven front end: reads a JSON run config, executes one
//! pipeline and writes `report.json` plus CSV tables.
//!
//! Exit codes: `0` completed with a positive verdict, `1` completed with a
//! negative verdict, `2` the run could not be carried out.

mod config;
mod plots;
mod run;

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;

pub use config::{
    Command, ComposeInputs, LacunarySpec, RunConfig, Scaling, SeriesInputs, TargetSpec, VerifySpec, WeightsInputs,
    WitnessInputs, WitnessSpec,
};
pub use plots::emit_plots_data;
pub use run::{lacunary_series, run, BuildSummary, LevelRow, Outcome, Overrides, Report, VerifySummary, FAMILY_DIR};

use crate::error::{Error, Result};
use crate::witness::Mode;

pub const EXIT_INPUT_ERROR: i32 = 2;

/// Default output directory.
pub const DEFAULT_OUT: &str = "lacuna-out";

#[derive(Debug, Parser)]
#[command(name = "lacuna", version, about = "Gap series, growth witnesses and composition operator criteria")]
pub struct Args {
    /// Pipeline to run; overrides `command` in the config.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (speed only; results do not depend on it).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Constant set for witness commands.
    #[arg(long)]
    pub mode: Option<Mode>,
}

/// Writes `report.json`, the CSV tables and, for `witness-build`, the family
/// directory.
pub fn write_outputs(report: &Report, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let path = out.join("report.json");
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&path, text)?;
    let mut files = vec![path];
    if let Some(fam) = &report.family {
        let dir = out.join(FAMILY_DIR);
        fam.write_dir(&dir)?;
        files.push(dir);
    }
    files.extend(emit_plots_data(report, out)?);
    Ok(files)
}

fn execute_inner(args: &Args) -> Result<(Report, PathBuf)> {
    let config = RunConfig::load(&args.config)?;
    let overrides = Overrides {
        command: args.command,
        seed: args.seed,
        mode: args.mode,
    };
    let out = args
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(|p| config.resolve_path(p)))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let report = match args.threads {
        Some(0) => return Err(Error::Config("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| run(&config, &overrides))?,
        None => run(&config, &overrides)?,
    };
    write_outputs(&report, &out)?;
    Ok((report, out))
}

/// Runs the command line and returns the process exit code.
pub fn execute(args: &Args) -> i32 {
    match execute_inner(args) {
        Ok((report, out)) => {
            println!("{}: {} (report in {})", report.command, report.verdict, out.display());
            report.exit_code
        }
        Err(e) => {
            eprintln!("lacuna: {e}");
            EXIT_INPUT_ERROR
        }
    }
}
