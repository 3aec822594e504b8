//! High-stealth backdoor risk (HSBR) evaluation for open-source repositories.
//!
//! Raw signals are gathered per dimension (`debian`, `scan`, `community`,
//! `ci`), calibrated against a corpus and aggregated in `scoring`.

pub mod ci;
pub mod community;
pub mod debian;
pub mod error;
pub mod forge;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod scan;
pub mod scoring;
pub mod semantic;
pub mod sensitivity;
pub mod weights;

pub use error::{
    AnalysisError, DebianError, FixtureError, ForgeError, ModelError, ScanError, ScoringError,
    SemanticError, WeightError,
};
pub use model::{
    Dimension, Direction, Group, Histogram, HsbrReport, MetricId, MetricKind, Provenance,
    RawValue, RiskLevel, RiskThresholds, RiskVector,
};
pub use weights::{validate_weights, RawWeights, WeightTable};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
