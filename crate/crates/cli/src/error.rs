use std::fmt;
use std::path::Path;

use etngen::dynamics::DynError;
use etngen::gen::GenError;
use etngen::metrics::MetricsError;
use etngen::model::ModelError;
use etngen::tempgraph::GraphError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Internal,
}

impl Kind {
    pub fn exit_code(self) -> u8 {
        match self {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Internal => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { kind: Kind::Usage, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { kind: Kind::Data, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError { kind: Kind::Internal, message: message.into() }
    }

    /// Failure to read an input file.
    pub fn input(path: &Path, err: impl fmt::Display) -> Self {
        CliError::data(format!("{}: {err}", path.display()))
    }

    /// Failure to write an output file.
    pub fn output(path: &Path, err: impl fmt::Display) -> Self {
        CliError::internal(format!("writing {}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<GenError> for CliError {
    fn from(err: GenError) -> Self {
        match err {
            GenError::Graph(e) => CliError::internal(e.to_string()),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<DynError> for CliError {
    fn from(err: DynError) -> Self {
        match err {
            DynError::BadProbability(_) | DynError::ZeroRuns => CliError::usage(err.to_string()),
            other => CliError::data(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(err: MetricsError) -> Self {
        match err {
            MetricsError::Io(e) => CliError::internal(e.to_string()),
            other => CliError::data(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(err: ModelError) -> Self {
        CliError::data(err.to_string())
    }
}

impl From<GraphError> for CliError {
    fn from(err: GraphError) -> Self {
        CliError::data(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
