//! Scenario files, Matrix Market IO, CSV output and experiment drivers for
//! `richards-core`.

pub mod config;
pub mod experiments;
pub mod mtx;
pub mod output;

use thiserror::Error;

pub use config::Scenario;

#[derive(Debug, Error)]
pub enum KitError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("`{key}` out of range: {value}")]
    Range { key: String, value: String },
    #[error("io: {0}")]
    Io(String),
    #[error("{0}")]
    Core(String),
    #[error("solver failed: {0}")]
    Solver(String),
}
