use thiserror::Error;
use triage_core::{DataError, FilterError, IrtError, MetricsError, SchemaError, SynthError};

/// Process exit codes.
pub mod exit {
    pub const INGESTION: i32 = 3;
    pub const FIT: i32 = 4;
    pub const ANALYSIS: i32 = 5;
    pub const OUTPUT: i32 = 6;
    pub const CONFIG: i32 = 7;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("fit error: {0}")]
    Fit(#[from] IrtError),
    #[error("analysis error: {0}")]
    Analysis(String),
    #[error("output error: {0}")]
    Output(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => exit::INGESTION,
            CliError::Fit(_) => exit::FIT,
            CliError::Analysis(_) => exit::ANALYSIS,
            CliError::Output(_) => exit::OUTPUT,
            CliError::Config(_) => exit::CONFIG,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        CliError::Analysis(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Analysis(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Config(e.to_string())
    }
}
