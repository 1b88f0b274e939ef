//! File formats, configuration and the staged pipeline behind the
//! `phonon-bs` binary.

pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;

pub use config::RunConfig;
pub use error::CliError;
pub use pipeline::{Pipeline, Stage};
