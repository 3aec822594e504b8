//! Shared domain types: metric identifiers, dimensions, histograms, risk
//! vectors and reports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// The four risk dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dimension {
    #[serde(rename = "DI")]
    DependencyImpact,
    #[serde(rename = "PC")]
    PayloadConcealment,
    #[serde(rename = "CQ")]
    CommunityQuality,
    #[serde(rename = "CI")]
    ContinuousIntegration,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::DependencyImpact,
        Dimension::PayloadConcealment,
        Dimension::CommunityQuality,
        Dimension::ContinuousIntegration,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Dimension::DependencyImpact => "DI",
            Dimension::PayloadConcealment => "PC",
            Dimension::CommunityQuality => "CQ",
            Dimension::ContinuousIntegration => "CI",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Dimension::DependencyImpact => "Dependency Impact",
            Dimension::PayloadConcealment => "Payload Concealment",
            Dimension::CommunityQuality => "Community Quality",
            Dimension::ContinuousIntegration => "Continuous Integration",
        }
    }

    /// The weight group holding this dimension's direct members.
    pub fn group(self) -> Group {
        match self {
            Dimension::DependencyImpact => Group::Dependency,
            Dimension::PayloadConcealment => Group::Payload,
            Dimension::CommunityQuality => Group::Community,
            Dimension::ContinuousIntegration => Group::Ci,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Dimension {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.code() == s)
            .ok_or_else(|| ModelError::UnknownDimension(s.to_string()))
    }
}

/// A set of weights that must sum to one.
///
/// Each dimension owns one group; the community dimension additionally owns
/// three sub-groups (popularity, review, privilege barrier) whose members are
/// the community sub-metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    Dependency,
    Payload,
    Community,
    Ci,
    Popularity,
    Review,
    Privilege,
}

impl Group {
    pub const ALL: [Group; 7] = [
        Group::Dependency,
        Group::Payload,
        Group::Community,
        Group::Ci,
        Group::Popularity,
        Group::Review,
        Group::Privilege,
    ];

    pub fn members(self) -> &'static [MetricId] {
        use MetricId::*;
        match self {
            Group::Dependency => &[D1, D2, D3, D4],
            Group::Payload => &[P1, P2, P3, P4, P5, P6],
            Group::Community => &[Q1, Q2, Q3],
            Group::Ci => &[C1, C2, C3],
            Group::Popularity => &[
                Stargazers,
                Watchers,
                Forks,
                ActiveUsers,
                AvgIssueParticipants,
                AvgPrParticipants,
            ],
            Group::Review => &[
                DirectCommitRatio,
                DirectCommitUsers,
                RequiredApprovesDist,
                UndiscussedMergeRatio,
                InconsistentPrRatio,
            ],
            Group::Privilege => &[MaintainerCount, ApproverCount, PrsToMaintainer, PrsToApprover],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Group::Dependency => "DI",
            Group::Payload => "PC",
            Group::Community => "CQ",
            Group::Ci => "CI",
            Group::Popularity => "Q1",
            Group::Review => "Q2",
            Group::Privilege => "Q3",
        }
    }
}

/// How a raw metric value is turned into a normalized score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    /// Raw value in {0, 1}; passes through normalization unchanged.
    Boolean,
    /// Nonnegative count; percentile-normalized on the `log10(1 + x)` domain.
    CountLog,
    /// Proportion in [0, 1]; percentile-normalized on the raw domain.
    Ratio,
    /// Nonnegative real (e.g. an average); percentile-normalized on the raw domain.
    NormalizedDirect,
    /// Histogram reduced to its expectation, then reverse-normalized by P95.
    HistogramExpectation,
}

/// Whether a larger raw value means more or less risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

macro_rules! metric_ids {
    ($($variant:ident => $key:literal, $title:literal;)*) => {
        /// Every scored metric: the 16 top-level metrics followed by the 15
        /// community sub-metrics.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum MetricId {
            $(#[serde(rename = $key)] $variant,)*
        }

        impl MetricId {
            pub const ALL: [MetricId; 31] = [$(MetricId::$variant,)*];

            pub fn key(self) -> &'static str {
                match self { $(MetricId::$variant => $key,)* }
            }

            pub fn title(self) -> &'static str {
                match self { $(MetricId::$variant => $title,)* }
            }
        }

        impl FromStr for MetricId {
            type Err = ModelError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($key => Ok(MetricId::$variant),)*
                    other => Err(ModelError::UnknownMetric(other.to_string())),
                }
            }
        }
    };
}

metric_ids! {
    D1 => "D1", "Self Priority Exposure";
    D2 => "D2", "Self Essential Exposure";
    D3 => "D3", "Dependency Priority Exposure";
    D4 => "D4", "Dependency Essential Exposure";
    P1 => "P1", "Binary in Test Files";
    P2 => "P2", "Binary in Documentation";
    P3 => "P3", "Binary in Code Files";
    P4 => "P4", "Binary in Asset Files";
    P5 => "P5", "Binary in Other Files";
    P6 => "P6", "Total Binary File Count";
    Q1 => "Q1", "Community Popularity";
    Q2 => "Q2", "Community Review";
    Q3 => "Q3", "Community Privilege Barrier";
    C1 => "C1", "Dependabot Disabled";
    C2 => "C2", "Dangerous Action Provider";
    C3 => "C3", "Dangerous Action Pin";
    Stargazers => "stargazers", "Community Stargazers Count";
    Watchers => "watchers", "Community Watchers Count";
    Forks => "forks", "Community Forks Count";
    ActiveUsers => "active-users", "Active Community Users";
    AvgIssueParticipants => "avg-issue-participants", "Avg. Participants per Issue";
    AvgPrParticipants => "avg-pr-participants", "Avg. Participants per PR";
    DirectCommitRatio => "direct-commit-ratio", "Direct Commits Ratio";
    DirectCommitUsers => "direct-commit-users", "Direct Commit Users Count";
    RequiredApprovesDist => "required-approves-dist", "Required Approves Distribution";
    UndiscussedMergeRatio => "undiscussed-merge-ratio", "PRs Merged without Discussion Ratio";
    InconsistentPrRatio => "inconsistent-pr-ratio", "PRs with Inconsistent Description Ratio";
    MaintainerCount => "maintainer-count", "Maintainers Count";
    ApproverCount => "approver-count", "Approvers Count";
    PrsToMaintainer => "prs-to-maintainer", "PRs Needed to Become Maintainer";
    PrsToApprover => "prs-to-approver", "PRs Needed to Become Approver";
}

impl MetricId {
    /// The 16 top-level metrics in report order.
    pub const TOP_LEVEL: [MetricId; 16] = [
        MetricId::D1,
        MetricId::D2,
        MetricId::D3,
        MetricId::D4,
        MetricId::P1,
        MetricId::P2,
        MetricId::P3,
        MetricId::P4,
        MetricId::P5,
        MetricId::P6,
        MetricId::Q1,
        MetricId::Q2,
        MetricId::Q3,
        MetricId::C1,
        MetricId::C2,
        MetricId::C3,
    ];

    /// The 15 community sub-metrics in report order.
    pub const COMMUNITY: [MetricId; 15] = [
        MetricId::Stargazers,
        MetricId::Watchers,
        MetricId::Forks,
        MetricId::ActiveUsers,
        MetricId::AvgIssueParticipants,
        MetricId::AvgPrParticipants,
        MetricId::DirectCommitRatio,
        MetricId::DirectCommitUsers,
        MetricId::RequiredApprovesDist,
        MetricId::UndiscussedMergeRatio,
        MetricId::InconsistentPrRatio,
        MetricId::MaintainerCount,
        MetricId::ApproverCount,
        MetricId::PrsToMaintainer,
        MetricId::PrsToApprover,
    ];

    /// The group this metric is weighted within.
    pub fn group(self) -> Group {
        *Group::ALL
            .iter()
            .find(|g| g.members().contains(&self))
            .expect("every metric belongs to a group")
    }

    pub fn dimension(self) -> Dimension {
        match self.group() {
            Group::Dependency => Dimension::DependencyImpact,
            Group::Payload => Dimension::PayloadConcealment,
            Group::Ci => Dimension::ContinuousIntegration,
            Group::Community | Group::Popularity | Group::Review | Group::Privilege => {
                Dimension::CommunityQuality
            }
        }
    }

    /// True for the community group scores Q1–Q3, which are aggregated from
    /// sub-metrics rather than measured.
    pub fn is_aggregate(self) -> bool {
        matches!(self, MetricId::Q1 | MetricId::Q2 | MetricId::Q3)
    }

    /// The sub-group an aggregate metric is computed from.
    pub fn subgroup(self) -> Option<Group> {
        match self {
            MetricId::Q1 => Some(Group::Popularity),
            MetricId::Q2 => Some(Group::Review),
            MetricId::Q3 => Some(Group::Privilege),
            _ => None,
        }
    }

    /// Metrics that carry a measured raw value (everything except Q1–Q3).
    pub fn leaves() -> impl Iterator<Item = MetricId> {
        MetricId::ALL.into_iter().filter(|m| !m.is_aggregate())
    }

    pub fn kind(self) -> MetricKind {
        use MetricId::*;
        match self {
            P1 | P2 | P3 | P4 | P5 | C1 => MetricKind::Boolean,
            D1 | D2 | D3 | D4 | P6 => MetricKind::CountLog,
            Stargazers | Watchers | Forks | ActiveUsers => MetricKind::CountLog,
            DirectCommitUsers | MaintainerCount | ApproverCount => MetricKind::CountLog,
            AvgIssueParticipants | AvgPrParticipants => MetricKind::NormalizedDirect,
            Q1 | Q2 | Q3 => MetricKind::NormalizedDirect,
            C2 | C3 | DirectCommitRatio | UndiscussedMergeRatio | InconsistentPrRatio => {
                MetricKind::Ratio
            }
            RequiredApprovesDist | PrsToMaintainer | PrsToApprover => {
                MetricKind::HistogramExpectation
            }
        }
    }

    /// Risk direction of the raw value. Histogram metrics report `Decreasing`
    /// because their reverse normalization already encodes the flip.
    pub fn direction(self) -> Direction {
        use MetricId::*;
        match self {
            Stargazers | Watchers | Forks | ActiveUsers | AvgIssueParticipants
            | AvgPrParticipants | MaintainerCount | ApproverCount => Direction::Decreasing,
            RequiredApprovesDist | PrsToMaintainer | PrsToApprover => Direction::Decreasing,
            _ => Direction::Increasing,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// A histogram-like dictionary mapping an action count (e.g. PRs submitted)
/// to the number of users observed with that count.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Histogram {
    bins: BTreeMap<u64, u64>,
}

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one observation with value `key`.
    pub fn record(&mut self, key: u64) {
        *self.bins.entry(key).or_insert(0) += 1;
    }

    pub fn add(&mut self, key: u64, freq: u64) {
        if freq > 0 {
            *self.bins.entry(key).or_insert(0) += freq;
        }
    }

    pub fn bins(&self) -> &BTreeMap<u64, u64> {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.bins.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Smallest key with a nonzero frequency.
    pub fn min_key(&self) -> Option<u64> {
        self.bins.iter().find(|(_, v)| **v > 0).map(|(k, _)| *k)
    }
}

impl FromIterator<(u64, u64)> for Histogram {
    fn from_iter<I: IntoIterator<Item = (u64, u64)>>(iter: I) -> Self {
        let mut h = Histogram::new();
        for (k, v) in iter {
            h.add(k, v);
        }
        h
    }
}

/// A raw metric value as measured, before normalization.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum RawValue {
    Number(f64),
    Histogram(Histogram),
}

// Hand-written so histogram keys survive formats that stringify map keys;
// the derived untagged form buffers content and rejects "3" as a u64 key.
impl<'de> Deserialize<'de> for RawValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> serde::de::Visitor<'de> for V {
            type Value = RawValue;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a histogram object")
            }

            fn visit_f64<E: serde::de::Error>(self, x: f64) -> Result<RawValue, E> {
                Ok(RawValue::Number(x))
            }

            fn visit_u64<E: serde::de::Error>(self, x: u64) -> Result<RawValue, E> {
                Ok(RawValue::Number(x as f64))
            }

            fn visit_i64<E: serde::de::Error>(self, x: i64) -> Result<RawValue, E> {
                Ok(RawValue::Number(x as f64))
            }

            fn visit_map<A: serde::de::MapAccess<'de>>(self, mut map: A) -> Result<RawValue, A::Error> {
                let mut h = Histogram::new();
                while let Some((k, v)) = map.next_entry::<String, u64>()? {
                    let key = k
                        .parse()
                        .map_err(|_| serde::de::Error::custom(format!("histogram key `{k}` is not a count")))?;
                    h.add(key, v);
                }
                Ok(RawValue::Histogram(h))
            }
        }
        d.deserialize_any(V)
    }
}

impl RawValue {
    pub fn flag(b: bool) -> Self {
        RawValue::Number(if b { 1.0 } else { 0.0 })
    }

    pub fn count(n: usize) -> Self {
        RawValue::Number(n as f64)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            RawValue::Number(x) => Some(*x),
            RawValue::Histogram(_) => None,
        }
    }

    pub fn as_histogram(&self) -> Option<&Histogram> {
        match self {
            RawValue::Histogram(h) => Some(h),
            RawValue::Number(_) => None,
        }
    }
}

/// Raw metric values for one repository plus, once scored, their normalized
/// risk scores in [0, 1] (higher is riskier).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RiskVector {
    pub raw: BTreeMap<MetricId, RawValue>,
    pub normalized: BTreeMap<MetricId, f64>,
    /// Supporting counts used to word explanations (e.g. `unpinned_actions`).
    #[serde(default)]
    pub facts: BTreeMap<String, f64>,
}

impl RiskVector {
    pub fn set_raw(&mut self, id: MetricId, value: RawValue) {
        self.raw.insert(id, value);
    }

    pub fn raw_number(&self, id: MetricId) -> Option<f64> {
        self.raw.get(&id).and_then(RawValue::as_number)
    }

    pub fn score(&self, id: MetricId) -> Option<f64> {
        self.normalized.get(&id).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RiskLevel {
    Low,
    Medium,
    High,
}

impl fmt::Display for RiskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RiskLevel::Low => "Low",
            RiskLevel::Medium => "Medium",
            RiskLevel::High => "High",
        })
    }
}

/// Cut points between risk levels: `total < medium` is Low, `total < high`
/// is Medium, anything else High.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskThresholds {
    pub medium: f64,
    pub high: f64,
}

impl Default for RiskThresholds {
    fn default() -> Self {
        RiskThresholds {
            medium: 0.33,
            high: 0.66,
        }
    }
}

impl RiskThresholds {
    pub fn new(medium: f64, high: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&medium) || !(0.0..=1.0).contains(&high) || medium > high {
            return Err(ModelError::Thresholds { medium, high });
        }
        Ok(RiskThresholds { medium, high })
    }

    pub fn level(&self, total: f64) -> RiskLevel {
        if total < self.medium {
            RiskLevel::Low
        } else if total < self.high {
            RiskLevel::Medium
        } else {
            RiskLevel::High
        }
    }
}

/// Where a report's inputs came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub fetched_at: Option<DateTime<Utc>>,
    pub calibration_id: String,
    pub semantic_backend: String,
    pub tool_version: String,
    pub schema_version: u32,
}

/// Scored result for one repository.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsbrReport {
    pub repo_id: String,
    pub dimension_scores: BTreeMap<Dimension, f64>,
    pub total: f64,
    pub risk_level: RiskLevel,
    pub explanations: Vec<String>,
    pub vector: RiskVector,
    pub provenance: Provenance,
    /// Warnings and degradations recorded while evaluating the repository.
    pub notes: Vec<String>,
}
