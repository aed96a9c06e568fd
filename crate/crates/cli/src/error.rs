use std::fmt;
use std::path::Path;

use pcdforge_core::analytics::AnalyticsError;
use pcdforge_core::clinical::ClinicalError;
use pcdforge_core::geometry::GeometryError;
use pcdforge_core::network::NetworkError;
use pcdforge_core::synthheart::SynthError;
use pcdforge_core::training::TrainingError;

/// Failure of a command, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid arguments, configuration or input data (exit 2).
    Validation(String),
    /// NaN, singular system or non-convergence (exit 3).
    Numerical(String),
    /// Filesystem failure (exit 4).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Io { .. } => CliError::Io(e.to_string()),
            SynthError::Geometry(g) => g.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::Io { .. } => CliError::Io(e.to_string()),
            NetworkError::Geometry(g) => g.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<TrainingError> for CliError {
    fn from(e: TrainingError) -> Self {
        match e {
            TrainingError::NonFiniteLoss { .. } => CliError::Numerical(e.to_string()),
            TrainingError::Network(n) => n.into(),
            TrainingError::Geometry(g) => g.into(),
            TrainingError::Observer(m) => CliError::Io(m),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ClinicalError> for CliError {
    fn from(e: ClinicalError) -> Self {
        match e {
            ClinicalError::NonFinite
            | ClinicalError::NonPhysicalWall { .. }
            | ClinicalError::NonPositiveVolume(_)
            | ClinicalError::ZeroReference => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<AnalyticsError> for CliError {
    fn from(e: AnalyticsError) -> Self {
        match e {
            AnalyticsError::NonFinite
            | AnalyticsError::Singular
            | AnalyticsError::NonConvergence { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
