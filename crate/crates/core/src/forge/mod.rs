//! Repository metadata: the snapshot model, a GitHub-compatible REST
//! collector, and the offline fixture store.

mod client;
mod fixture;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::FixtureError;

pub use client::{ClientConfig, FetchLimits, ForgeClient};
pub use fixture::{load_fixture, save_fixture, FIXTURE_SCHEMA_VERSION, MANIFEST_FILE};

pub type UserId = String;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoStats {
    pub stargazers: u64,
    pub watchers: u64,
    pub forks: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewState {
    Approved,
    ChangesRequested,
    Commented,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub reviewer: UserId,
    pub state: ReviewState,
    #[serde(with = "timestamp")]
    pub submitted_at: DateTime<Utc>,
}

/// Per-file change summary of a pull request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub path: String,
    pub additions: u64,
    pub deletions: u64,
    pub is_binary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PullRequestRecord {
    pub number: u64,
    pub author: UserId,
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(with = "timestamp")]
    pub created_at: DateTime<Utc>,
    #[serde(default, with = "timestamp::option")]
    pub merged_at: Option<DateTime<Utc>>,
    #[serde(default)]
    pub merged_by: Option<UserId>,
    #[serde(default)]
    pub reviews: Vec<ReviewRecord>,
    #[serde(default)]
    pub comment_count: u64,
    #[serde(default)]
    pub participant_ids: BTreeSet<UserId>,
    #[serde(default)]
    pub diff_summary: Vec<DiffEntry>,
}

impl PullRequestRecord {
    pub fn is_merged(&self) -> bool {
        self.merged_at.is_some()
    }

    pub fn approvals(&self) -> usize {
        self.reviews
            .iter()
            .filter(|r| r.state == ReviewState::Approved)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub sha: String,
    pub author: UserId,
    #[serde(with = "timestamp")]
    pub committed_at: DateTime<Utc>,
    #[serde(default)]
    pub linked_pr: Option<u64>,
}

impl CommitRecord {
    /// A default-branch commit not associated with any pull request.
    pub fn is_direct(&self) -> bool {
        self.linked_pr.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueRecord {
    pub number: u64,
    #[serde(default)]
    pub participant_ids: BTreeSet<UserId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowFile {
    pub path: String,
    pub content: String,
}

/// Everything collected about one repository.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepositorySnapshot {
    pub repo_id: String,
    pub stats: RepoStats,
    pub pull_requests: Vec<PullRequestRecord>,
    pub commits_default_branch: Vec<CommitRecord>,
    pub issues: Vec<IssueRecord>,
    pub workflow_files: Vec<WorkflowFile>,
    pub dependabot_config_present: bool,
    /// Local checkout of the repository; relative paths are resolved against
    /// the fixture directory.
    pub file_tree_ref: Option<PathBuf>,
    #[serde(with = "timestamp")]
    pub fetched_at: DateTime<Utc>,
}

impl RepositorySnapshot {
    pub fn empty(repo_id: impl Into<String>, fetched_at: DateTime<Utc>) -> Self {
        RepositorySnapshot {
            repo_id: repo_id.into(),
            stats: RepoStats::default(),
            pull_requests: Vec::new(),
            commits_default_branch: Vec::new(),
            issues: Vec::new(),
            workflow_files: Vec::new(),
            dependabot_config_present: false,
            file_tree_ref: None,
            fetched_at,
        }
    }

    pub fn pull_request(&self, number: u64) -> Option<&PullRequestRecord> {
        self.pull_requests.iter().find(|p| p.number == number)
    }

    /// Resolves `file_tree_ref` relative to `base`.
    pub fn tree_path(&self, base: &Path) -> Option<PathBuf> {
        self.file_tree_ref.as_ref().map(|p| {
            if p.is_absolute() {
                p.clone()
            } else {
                base.join(p)
            }
        })
    }

    /// Checks the cross-record invariants.
    pub fn validate(&self) -> Result<(), FixtureError> {
        let bad = |msg: String| Err(FixtureError::Inconsistent(msg));
        if self.repo_id.trim().is_empty() {
            return bad("empty repo_id".into());
        }
        let mut numbers = BTreeMap::new();
        for pr in &self.pull_requests {
            if numbers.insert(pr.number, ()).is_some() {
                return bad(format!("duplicate PR #{}", pr.number));
            }
            if pr.merged_at.is_some() != pr.merged_by.is_some() {
                return bad(format!("PR #{}: merged_at and merged_by disagree", pr.number));
            }
            if pr
                .reviews
                .windows(2)
                .any(|w| w[0].submitted_at > w[1].submitted_at)
            {
                return bad(format!("PR #{}: reviews not sorted by time", pr.number));
            }
        }
        for c in &self.commits_default_branch {
            if c.sha.is_empty() {
                return bad("commit with empty sha".into());
            }
            if let Some(n) = c.linked_pr {
                if !numbers.contains_key(&n) {
                    return bad(format!("commit {} links unknown PR #{n}", c.sha));
                }
            }
        }
        Ok(())
    }
}

/// RFC 3339 timestamps with a `Z` suffix, so serialized fixtures are stable.
pub(crate) mod timestamp {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn format(t: &DateTime<Utc>) -> String {
        t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
    }

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(t: &Option<DateTime<Utc>>, s: S) -> Result<S::Ok, S::Error> {
            match t {
                Some(t) => s.serialize_some(&format(t)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Option<DateTime<Utc>>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| {
                    DateTime::parse_from_rfc3339(&s)
                        .map(|t| t.with_timezone(&Utc))
                        .map_err(serde::de::Error::custom)
                })
                .transpose()
        }
    }
}
