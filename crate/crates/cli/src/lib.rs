//! Orchestration for the six-step divergence analysis: config loading,
//! step execution with resumable artifacts, reports and plot specs.

pub mod artifacts;
pub mod config;
pub mod pipeline;
pub mod plots;
pub mod report;

use std::path::PathBuf;

pub use config::RunConfig;
pub use pipeline::{Options, Pipeline, Step};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, #[source] std::io::Error),
    #[error("csv: {0}")]
    Csv(String),
    #[error("{step} needs the simulate artifacts: run simulate first")]
    MissingUpstream { step: String },
    #[error("invalid {kind} plot spec: {message}")]
    PlotSpec { kind: String, message: String },
    #[error(transparent)]
    Survey(#[from] simdiverge::survey::SurveyError),
    #[error(transparent)]
    Gateway(#[from] simdiverge::gateway::GatewayError),
    #[error(transparent)]
    Trace(#[from] simdiverge::trace::TraceError),
    #[error(transparent)]
    Analysis(#[from] simdiverge::analysis::AnalysisError),
}

pub type Result<T> = std::result::Result<T, Error>;
