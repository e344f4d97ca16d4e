//! Configuration, checker suites and reproductions behind the `palmlab` binary.

pub mod config;
pub mod report;
pub mod repro;
pub mod suite;

use std::fmt::Display;

use thiserror::Error;

pub use config::{parse_group, CheckName, MeasureSpec, Model, RunConfig, SpaceSpec, CONFIG_SCHEMA};
pub use report::{decimal12, round_floats, CheckReport, SuiteReport, REPORT_SCHEMA};
pub use repro::{repro, ReproName, ReproReport};
pub use suite::run_suite;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("internal defect: {0}")]
    Defect(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Defect(_) => 4,
        }
    }
}

pub(crate) fn invalid(e: impl Display) -> CliError {
    CliError::Config(e.to_string())
}
