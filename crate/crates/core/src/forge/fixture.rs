//! Offline fixture store: one manifest plus one JSON file per collection.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    timestamp, CommitRecord, IssueRecord, PullRequestRecord, RepoStats, RepositorySnapshot,
    WorkflowFile,
};
use crate::error::FixtureError;

pub const FIXTURE_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

const PULLS_FILE: &str = "pull_requests.json";
const COMMITS_FILE: &str = "commits.json";
const ISSUES_FILE: &str = "issues.json";
const WORKFLOWS_FILE: &str = "workflows.json";

#[derive(Debug, Serialize, Deserialize)]
struct Collections {
    pull_requests: String,
    commits: String,
    issues: String,
    workflows: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    repo_id: String,
    #[serde(with = "timestamp")]
    fetched_at: DateTime<Utc>,
    stats: RepoStats,
    dependabot_config_present: bool,
    file_tree_ref: Option<PathBuf>,
    collections: Collections,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> FixtureError {
    FixtureError::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), FixtureError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FixtureError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

/// Writes `snapshot` into `dir`, creating it if needed. Output is canonical:
/// saving the same snapshot twice yields byte-identical files.
pub fn save_fixture(snapshot: &RepositorySnapshot, dir: &Path) -> Result<(), FixtureError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let manifest = Manifest {
        schema_version: FIXTURE_SCHEMA_VERSION,
        repo_id: snapshot.repo_id.clone(),
        fetched_at: snapshot.fetched_at,
        stats: snapshot.stats,
        dependabot_config_present: snapshot.dependabot_config_present,
        file_tree_ref: snapshot.file_tree_ref.clone(),
        collections: Collections {
            pull_requests: PULLS_FILE.into(),
            commits: COMMITS_FILE.into(),
            issues: ISSUES_FILE.into(),
            workflows: WORKFLOWS_FILE.into(),
        },
    };
    write_json(&dir.join(PULLS_FILE), &snapshot.pull_requests)?;
    write_json(&dir.join(COMMITS_FILE), &snapshot.commits_default_branch)?;
    write_json(&dir.join(ISSUES_FILE), &snapshot.issues)?;
    write_json(&dir.join(WORKFLOWS_FILE), &snapshot.workflow_files)?;
    // Manifest last: a directory with a manifest is a complete fixture.
    write_json(&dir.join(MANIFEST_FILE), &manifest)
}

pub fn load_fixture(dir: &Path) -> Result<RepositorySnapshot, FixtureError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let version: serde_json::Value = read_json(&manifest_path)?;
    let found = version
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| io_err(&manifest_path, "missing schema_version"))?;
    if found != u64::from(FIXTURE_SCHEMA_VERSION) {
        return Err(FixtureError::Version {
            found: u32::try_from(found).unwrap_or(u32::MAX),
            expected: FIXTURE_SCHEMA_VERSION,
        });
    }
    let manifest: Manifest =
        serde_json::from_value(version).map_err(|e| io_err(&manifest_path, e))?;

    let pull_requests: Vec<PullRequestRecord> =
        read_json(&dir.join(&manifest.collections.pull_requests))?;
    let commits_default_branch: Vec<CommitRecord> =
        read_json(&dir.join(&manifest.collections.commits))?;
    let issues: Vec<IssueRecord> = read_json(&dir.join(&manifest.collections.issues))?;
    let workflow_files: Vec<WorkflowFile> =
        read_json(&dir.join(&manifest.collections.workflows))?;

    let snapshot = RepositorySnapshot {
        repo_id: manifest.repo_id,
        stats: manifest.stats,
        pull_requests,
        commits_default_branch,
        issues,
        workflow_files,
        dependabot_config_present: manifest.dependabot_config_present,
        file_tree_ref: manifest.file_tree_ref,
        fetched_at: manifest.fetched_at,
    };
    snapshot.validate()?;
    Ok(snapshot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::{DiffEntry, ReviewRecord, ReviewState};
    use chrono::TimeZone;
    use std::collections::BTreeSet;

    fn t(s: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(1_700_000_000 + s, 0).unwrap()
    }

    fn sample() -> RepositorySnapshot {
        let mut s = RepositorySnapshot::empty("org/demo", t(0));
        s.stats = RepoStats {
            stargazers: 10,
            watchers: 3,
            forks: 2,
        };
        for n in 1..=3u64 {
            s.pull_requests.push(PullRequestRecord {
                number: n,
                author: format!("user{n}"),
                title: format!("change {n}"),
                body: "body".into(),
                created_at: t(n as i64 * 100),
                merged_at: (n != 2).then(|| t(n as i64 * 100 + 50)),
                merged_by: (n != 2).then(|| "maint".to_string()),
                reviews: vec![ReviewRecord {
                    reviewer: "maint".into(),
                    state: ReviewState::Approved,
                    submitted_at: t(n as i64 * 100 + 10),
                }],
                comment_count: n,
                participant_ids: BTreeSet::from([format!("user{n}"), "maint".to_string()]),
                diff_summary: vec![DiffEntry {
                    path: "src/a.c".into(),
                    additions: 3,
                    deletions: 1,
                    is_binary: false,
                }],
            });
        }
        for i in 0..5u64 {
            s.commits_default_branch.push(CommitRecord {
                sha: format!("{:040x}", i + 1),
                author: "maint".into(),
                committed_at: t(1000 + i as i64),
                linked_pr: (i < 2).then_some(i * 2 + 1),
            });
        }
        s.issues.push(IssueRecord {
            number: 7,
            participant_ids: BTreeSet::from(["x".to_string()]),
        });
        s.workflow_files.push(WorkflowFile {
            path: ".github/workflows/ci.yml".into(),
            content: "on: push\n".into(),
        });
        s.file_tree_ref = Some(PathBuf::from("tree"));
        s
    }

    fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
        let mut out: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap())
            .map(|e| {
                (
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        out.sort();
        out
    }

    #[test]
    fn empty_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = RepositorySnapshot::empty("a/b", t(0));
        save_fixture(&s, dir.path()).unwrap();
        assert_eq!(load_fixture(dir.path()).unwrap(), s);
    }

    #[test]
    fn populated_round_trip_is_byte_stable() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let s = sample();
        save_fixture(&s, a.path()).unwrap();
        let loaded = load_fixture(a.path()).unwrap();
        assert_eq!(loaded, s);
        save_fixture(&loaded, b.path()).unwrap();
        assert_eq!(read_all(a.path()), read_all(b.path()));
    }

    #[test]
    fn missing_manifest_is_error() {
        let dir = tempfile::tempdir().unwrap();
        match load_fixture(dir.path()) {
            Err(FixtureError::File { path, .. }) => assert!(path.ends_with(MANIFEST_FILE)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn version_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        save_fixture(&sample(), dir.path()).unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"schema_version\": 1", "\"schema_version\": 99");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            load_fixture(dir.path()),
            Err(FixtureError::Version { found: 99, .. })
        ));
    }

    #[test]
    fn corrupt_collection_names_file() {
        let dir = tempfile::tempdir().unwrap();
        save_fixture(&sample(), dir.path()).unwrap();
        std::fs::write(dir.path().join(COMMITS_FILE), "{not json").unwrap();
        let err = load_fixture(dir.path()).unwrap_err();
        assert!(err.to_string().contains(COMMITS_FILE));
    }
}
