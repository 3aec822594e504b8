use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),
    #[error("invalid risk thresholds: medium={medium}, high={high}")]
    Thresholds { medium: f64, high: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("weight for `{key}` is negative ({value})")]
    Negative { key: String, value: f64 },
    #[error("weight for `{key}` is not finite")]
    NonFinite { key: String },
    #[error("weight group `{group}` sums to zero")]
    ZeroGroup { group: String },
    #[error("weight for `{key}` is missing")]
    Missing { key: String },
    #[error("unknown weight key `{0}`")]
    UnknownKey(String),
    #[error("malformed weight file: {0}")]
    Syntax(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum DebianError {
    #[error("stanza `{stanza}` line {line}: malformed dependency field: {reason}")]
    Depends {
        stanza: String,
        line: usize,
        reason: String,
    },
    #[error("line {line}: malformed field line")]
    FieldLine { line: usize },
    #[error("unknown package `{0}`")]
    UnknownPackage(String),
    #[error("mapping line {line}: {reason}")]
    Mapping { line: usize, reason: String },
}

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("cannot read scan root {path}: {source}")]
    Root {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed scan rule file: {0}")]
    Rules(String),
}

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("repository `{0}` not found")]
    NotFound(String),
    #[error("rate limited by forge API (reset at epoch {reset:?})")]
    RateLimited { reset: Option<u64> },
    #[error("authentication rejected (HTTP {status})")]
    Unauthorized { status: u16 },
    #[error("network error after {attempts} attempts: {message}")]
    Network { attempts: u32, message: String },
    #[error("unexpected HTTP {status} from {url}")]
    Http { status: u16, url: String },
    #[error("malformed API response from {url}: {message}")]
    Decode { url: String, message: String },
    #[error("invalid repository reference `{0}` (expected owner/name)")]
    BadRef(String),
}

impl ForgeError {
    pub fn is_network(&self) -> bool {
        matches!(
            self,
            ForgeError::Network { .. } | ForgeError::RateLimited { .. } | ForgeError::Http { .. }
        )
    }
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("fixture file {path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("fixture schema version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("fixture is inconsistent: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemanticError {
    #[error("semantic backend unavailable: {0}")]
    Unavailable(String),
    #[error("invalid semantic task: {0}")]
    InvalidTask(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("calibration requires at least one repository")]
    EmptyCorpus,
    #[error("no calibration data for metric `{0}`")]
    MissingStats(String),
    #[error("missing normalized score for `{0}`")]
    MissingScore(String),
    #[error("missing raw value for `{0}`")]
    MissingRaw(String),
    #[error("invalid raw value for `{metric}`: {reason}")]
    InvalidRaw { metric: String, reason: String },
    #[error("missing dimension score `{0}`")]
    MissingDimension(String),
    #[error("histogram has no observations; expectation undefined")]
    UndefinedExpectation,
    #[error("calibration file: {0}")]
    CalibrationFile(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("score maps have different repository sets")]
    KeyMismatch,
    #[error("need at least {needed} repositories, got {got}")]
    TooSmall { needed: usize, got: usize },
    #[error("correlation undefined: zero variance")]
    ZeroVariance,
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}
