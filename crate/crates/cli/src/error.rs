use std::fmt;
use std::path::PathBuf;

use crate::config::ConfigError;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;
pub const EXIT_THRESHOLD: u8 = 5;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Usage(String),
    Io { path: PathBuf, source: std::io::Error },
    Core(pumped_core::Error),
    /// A verification ran to completion but missed its threshold; `report`
    /// is the output it would have printed on success.
    Threshold { report: String, message: String },
    /// A sweep point failed.
    AtPoint { param: String, value: f64, source: Box<CliError> },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use pumped_core::Error as E;
        match self {
            Self::Config(ConfigError::Validation(_)) => EXIT_VALIDATION,
            Self::Config(_) | Self::Usage(_) | Self::Io { .. } => EXIT_CONFIG,
            Self::Threshold { .. } => EXIT_THRESHOLD,
            Self::AtPoint { source, .. } => source.exit_code(),
            Self::Core(e) => match e {
                E::Validation(_) | E::UnsupportedRelaxation(_) | E::Domain(_) | E::UnboundedGrowth(_) => {
                    EXIT_VALIDATION
                }
                E::Dimension(_) | E::InvalidFixture(_) => EXIT_CONFIG,
                _ => EXIT_NUMERIC,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "config: {e}"),
            Self::Usage(msg) => f.write_str(msg),
            Self::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Self::Core(e) => e.fmt(f),
            Self::Threshold { message, .. } => write!(f, "threshold not met: {message}"),
            Self::AtPoint { param, value, source } => write!(f, "{param} = {value}: {source}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<pumped_core::Error> for CliError {
    fn from(e: pumped_core::Error) -> Self {
        Self::Core(e)
    }
}
