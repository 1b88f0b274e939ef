use std::path::PathBuf;

use phonon_core::boson_stats::StatsError;
use phonon_core::dd_compiler::CompileError;
use phonon_core::detection::DetectionError;
use phonon_core::ion_chain::ChainError;
use phonon_core::linear_optics::OpticsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or inconsistent configuration; the message leads with the field.
    #[error("config: {0}")]
    Config(String),
    #[error("missing artifact {path}: run the {stage} stage first")]
    MissingArtifact { path: PathBuf, stage: &'static str },
    #[error("artifact {path}: {msg}")]
    Artifact { path: PathBuf, msg: String },
    #[error("{0}")]
    Validation(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("tolerance violated: {}", .0.join("; "))]
    Tolerance(Vec<String>),
    #[error("io: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => 2,
            CliError::Tolerance(_) => 3,
            _ => 1,
        }
    }
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::NoConvergence { .. } => CliError::Solver(e.to_string()),
            _ => CliError::Validation(format!("chain: {e}")),
        }
    }
}

impl From<OpticsError> for CliError {
    fn from(e: OpticsError) -> Self {
        CliError::Validation(format!("optics: {e}"))
    }
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        CliError::Validation(format!("compile: {e}"))
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::NotNormalized(_) => CliError::Solver(format!("distribution: {e}")),
            _ => CliError::Validation(format!("distribution: {e}")),
        }
    }
}

impl From<DetectionError> for CliError {
    fn from(e: DetectionError) -> Self {
        CliError::Validation(format!("detection: {e}"))
    }
}
