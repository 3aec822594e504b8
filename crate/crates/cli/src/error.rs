use std::fmt;
use std::path::Path;

use hsbr_core::{
    AnalysisError, DebianError, FixtureError, ForgeError, ScanError, ScoringError, WeightError,
};

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Validation = 1,
    Scoring = 2,
    Network = 3,
    SemanticUnavailable = 4,
}

impl ExitKind {
    pub fn label(self) -> &'static str {
        match self {
            ExitKind::Validation => "validation",
            ExitKind::Scoring => "scoring",
            ExitKind::Network => "network",
            ExitKind::SemanticUnavailable => "semantic-unavailable",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Validation, message)
    }

    pub fn scoring(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Scoring, message)
    }

    pub fn missing_path(what: &str, path: &Path) -> Self {
        Self::validation(format!("{what} not found: {}", path.display()))
    }

    /// One JSON line for the diagnostic stream.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "error": self.kind.label(),
            "exit_code": self.kind as i32,
            "message": self.message,
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.label(), self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<WeightError> for CliError {
    fn from(e: WeightError) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<DebianError> for CliError {
    fn from(e: DebianError) -> Self {
        CliError::scoring(e.to_string())
    }
}

impl From<FixtureError> for CliError {
    fn from(e: FixtureError) -> Self {
        CliError::scoring(e.to_string())
    }
}

impl From<ScanError> for CliError {
    fn from(e: ScanError) -> Self {
        CliError::scoring(e.to_string())
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        CliError::scoring(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::scoring(e.to_string())
    }
}

impl From<ForgeError> for CliError {
    fn from(e: ForgeError) -> Self {
        let kind = match &e {
            _ if e.is_network() => ExitKind::Network,
            ForgeError::NotFound(_) | ForgeError::BadRef(_) | ForgeError::Unauthorized { .. } => {
                ExitKind::Validation
            }
            _ => ExitKind::Scoring,
        };
        CliError::new(kind, e.to_string())
    }
}
