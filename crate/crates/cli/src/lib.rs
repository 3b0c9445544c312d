//! Command-line front end for `pumped-core`: configuration parsing, the
//! `run`, `spectrum`, `sweep`, `ensemble-verify` and `fixtures` commands, and
//! their CSV outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;

pub use config::{parse_config, ConfigError, RunConfig};
pub use error::CliError;

use std::path::{Path, PathBuf};

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_config(&text)?)
}

/// `--out` wins over the config's `output_dir`, which wins over the working
/// directory.
pub fn output_dir(flag: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}
