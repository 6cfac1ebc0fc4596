//! Library side of the `brwlab` command-line tool: configuration, command
//! dispatch, output writers and the acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::output::OutputSink;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    Constants,
    SimulateMax,
    Fpt,
    Production,
    Clusters,
    Barrier,
    Counts,
    Clt,
    Twodesc,
    Escape,
    Ballot,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Constants,
        Experiment::SimulateMax,
        Experiment::Fpt,
        Experiment::Production,
        Experiment::Clusters,
        Experiment::Barrier,
        Experiment::Counts,
        Experiment::Clt,
        Experiment::Twodesc,
        Experiment::Escape,
        Experiment::Ballot,
    ];
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    HashMismatch(String),
    #[error("acceptance failed: {0}")]
    Acceptance(String),
    #[error(transparent)]
    Run(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::HashMismatch(_) => 2,
            CliError::Acceptance(_) => 3,
            CliError::Run(_) => 1,
        }
    }
}

/// Runs one experiment, writing into `config.output.dir`.
pub fn run_experiment(experiment: Experiment, config: &Config, dump_arena: Option<usize>) -> Result<commands::CommandOutcome, CliError> {
    // laws are checked up front so bad parameters surface as config errors
    config.model()?;
    let mut sink = OutputSink::new(config).map_err(anyhow::Error::from)?;
    let out = match experiment {
        Experiment::Constants => commands::constants(config, &mut sink),
        Experiment::SimulateMax => commands::simulate_max(config, &mut sink, dump_arena),
        Experiment::Fpt => commands::fpt(config, &mut sink),
        Experiment::Production => commands::production(config, &mut sink),
        Experiment::Clusters => commands::clusters(config, &mut sink),
        Experiment::Barrier => commands::barrier(config, &mut sink),
        Experiment::Counts => commands::counts(config, &mut sink),
        Experiment::Clt => commands::clt(config, &mut sink),
        Experiment::Twodesc => commands::twodesc(config, &mut sink),
        Experiment::Escape => commands::escape(config, &mut sink),
        Experiment::Ballot => commands::ballot(config, &mut sink),
    }?;
    Ok(out)
}

/// Output files under `dir` (csv, json, svg), sorted.
pub fn output_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "json" | "svg")))
        .collect();
    files.sort();
    Ok(files)
}

/// Checks that every output file under `dir` carries the same config hash
/// and returns it. Files without a hash (such as an arena dump) are skipped.
pub fn check_output_hashes(dir: &Path) -> Result<Option<String>, CliError> {
    let mut seen: Option<(String, PathBuf)> = None;
    for path in output_files(dir).map_err(anyhow::Error::from)? {
        let hash = output::embedded_hash(&path).map_err(|e| CliError::HashMismatch(e.to_string()))?;
        let Some(hash) = hash else { continue };
        match &seen {
            None => seen = Some((hash, path)),
            Some((h, first)) if *h != hash => {
                return Err(CliError::HashMismatch(format!(
                    "{} has config hash {hash} but {} has {h}",
                    path.display(),
                    first.display()
                )))
            }
            Some(_) => {}
        }
    }
    Ok(seen.map(|(h, _)| h))
}
