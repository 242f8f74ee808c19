//! Exit-code policy. Every failure is classified into exactly one of three
//! buckets, so scripts can branch on the code alone:
//!
//!   2  bad input: config file, flag values, presets, trace parsing, io
//!   3  the physics gave up: equilibrium solver or virtual instrument
//!   4  the numbers exist but the analysis cannot use them
//!
//! Success is 0. No other codes are ever returned.

use std::fmt;

use probe_core::error::{AnalysisError, InstrumentError, SolveError, SpecError, TraceError};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Solver(String),
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Analysis(_) => 4,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Analysis(m) => write!(f, "analysis failure: {m}"),
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// A bad spec buried in the instrument stack is still a config problem;
/// anything that happened while actually measuring is a solver problem.
fn instrument_is_input(e: &InstrumentError) -> bool {
    match e {
        InstrumentError::Spec(_) => true,
        InstrumentError::AtStep { source, .. } => instrument_is_input(source),
        _ => false,
    }
}

impl From<InstrumentError> for CliError {
    fn from(e: InstrumentError) -> Self {
        if instrument_is_input(&e) {
            CliError::Input(e.to_string())
        } else {
            CliError::Solver(e.to_string())
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            // Defects of the data or flags the user handed us.
            AnalysisError::EmptyTrace
            | AnalysisError::NonMonotonicZ { .. }
            | AnalysisError::NonFinite { .. }
            | AnalysisError::BadBias { .. } => CliError::Input(e.to_string()),
            AnalysisError::Solve(inner) => CliError::Solver(inner.to_string()),
            _ => CliError::Analysis(e.to_string()),
        }
    }
}
