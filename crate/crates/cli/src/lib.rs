//! Batch driver for the Willmore laboratory: runs one experiment from a JSON
//! config and writes a JSON report plus CSV tables.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use willmore_core::report::Report;

pub use config::{Command, ConfigError, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{what}: {source}")]
    Command {
        what: &'static str,
        source: willmore_core::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot serialize report: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl CliError {
    /// Bad input, as opposed to a failure while computing.
    pub fn is_usage(&self) -> bool {
        matches!(self, Self::Config(_))
    }
}

/// Flags given on the command line; each replaces the config value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
    }
}

pub const DEFAULT_OUT: &str = "willmore-out";

/// A finished run: the report and every auxiliary file, not yet written.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.report.all_passed()
    }

    /// Writes `report.json` and the auxiliary files into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Write { path, source }
        };
        std::fs::create_dir_all(dir).map_err(err(dir))?;
        let json = self.report.to_json().map_err(|e| match e {
            willmore_core::Error::Json(j) => CliError::Serialize(j),
            other => CliError::Command {
                what: "report",
                source: other,
            },
        })?;
        let path = dir.join("report.json");
        std::fs::write(&path, json).map_err(err(&path))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(err(&path))?;
        }
        Ok(())
    }
}

/// Validates `cfg` and runs `command`, building all outputs in memory.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate(command)?;
    let (checks, files) = match command {
        Command::Verify => commands::verify(cfg)?,
        Command::Potentials => commands::potentials(cfg)?,
        Command::Expand => commands::expand(cfg)?,
        Command::Minimize => commands::minimize_cmd(cfg)?,
        Command::Estimates => commands::estimates(cfg)?,
    };
    // the echo omits the output directory so reports do not depend on it
    let mut echo = cfg.clone();
    echo.out = None;
    let mut report = Report::new(command.name(), cfg.seed, serde_json::to_value(&echo)?);
    report.extend(checks);
    Ok(Outcome { report, files })
}

/// Loads the config file, applies flags, runs, and writes the outputs.
pub fn execute(command: Command, config: &Path, overrides: &Overrides) -> Result<(Outcome, PathBuf), CliError> {
    let mut cfg = RunConfig::load(config)?;
    overrides.apply(&mut cfg);
    let outcome = run(command, &cfg)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    outcome.write(&dir)?;
    Ok((outcome, dir))
}
