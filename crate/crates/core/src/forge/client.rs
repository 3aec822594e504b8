//! Blocking client for a GitHub-compatible REST API.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use base64::Engine;
use chrono::{DateTime, Utc};
use serde_json::Value;
use tracing::{debug, warn};
use ureq::Agent;

use super::{
    CommitRecord, DiffEntry, IssueRecord, PullRequestRecord, RepoStats, RepositorySnapshot,
    ReviewRecord, ReviewState, WorkflowFile,
};
use crate::error::ForgeError;

/// Collection caps (most recent first).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FetchLimits {
    pub max_prs: usize,
    pub max_commits: usize,
    pub max_issues: usize,
    pub per_page: usize,
}

impl Default for FetchLimits {
    fn default() -> Self {
        FetchLimits {
            max_prs: 500,
            max_commits: 1000,
            max_issues: 300,
            per_page: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    /// API root, e.g. `https://api.github.com`.
    pub api_base: String,
    pub token: Option<String>,
    pub limits: FetchLimits,
    pub max_attempts: u32,
    /// First retry delay; doubled on every further attempt.
    pub backoff: Duration,
    pub timeout: Duration,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            api_base: "https://api.github.com".to_string(),
            token: None,
            limits: FetchLimits::default(),
            max_attempts: 5,
            backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(30),
        }
    }
}

pub struct ForgeClient {
    agent: Agent,
    config: ClientConfig,
}

struct Page {
    items: Vec<Value>,
    next: Option<String>,
}

/// Extracts the `rel="next"` target from a `Link` header.
fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let (url, params) = part.split_once(';')?;
        params
            .split(';')
            .any(|p| p.trim() == "rel=\"next\"")
            .then(|| url.trim().trim_start_matches('<').trim_end_matches('>').to_string())
    })
}

fn parse_time(v: &Value) -> Option<DateTime<Utc>> {
    v.as_str()
        .and_then(|s| DateTime::parse_from_rfc3339(s).ok())
        .map(|t| t.with_timezone(&Utc))
}

fn login(v: &Value) -> Option<String> {
    v.get("login").and_then(Value::as_str).map(String::from)
}

fn with_query(url: &str, query: &str) -> String {
    if url.contains('?') {
        format!("{url}&{query}")
    } else {
        format!("{url}?{query}")
    }
}

/// Number referenced by a merge or squash commit message, if any.
fn pr_number_from_message(message: &str) -> Option<u64> {
    let first = message.lines().next().unwrap_or_default();
    if let Some(rest) = first.strip_prefix("Merge pull request #") {
        return rest.split_whitespace().next()?.parse().ok();
    }
    let inner = first.trim_end().strip_suffix(')')?;
    let idx = inner.rfind("(#")?;
    inner[idx + 2..].parse().ok()
}

impl ForgeClient {
    pub fn new(config: ClientConfig) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .user_agent(concat!("hsbr/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        ForgeClient { agent, config }
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.api_base.trim_end_matches('/'), path)
    }

    /// GET with bounded exponential backoff on transport failures and 5xx.
    /// Returns `Ok(None)` on 404.
    fn get(&self, url: &str) -> Result<Option<(Value, Option<String>)>, ForgeError> {
        let mut delay = self.config.backoff;
        let mut last_error = String::new();
        for attempt in 1..=self.config.max_attempts {
            let mut req = self
                .agent
                .get(url)
                .header("Accept", "application/vnd.github+json");
            if let Some(token) = &self.config.token {
                req = req.header("Authorization", &format!("Bearer {token}"));
            }
            debug!(url, attempt, "GET");
            match req.call() {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let header = |name: &str| {
                        resp.headers()
                            .get(name)
                            .and_then(|v| v.to_str().ok())
                            .map(String::from)
                    };
                    match status {
                        200..=299 => {
                            let link = header("link");
                            let body = resp.body_mut().read_to_string().map_err(|e| {
                                ForgeError::Decode {
                                    url: url.to_string(),
                                    message: e.to_string(),
                                }
                            })?;
                            let value = serde_json::from_str(&body).map_err(|e| {
                                ForgeError::Decode {
                                    url: url.to_string(),
                                    message: e.to_string(),
                                }
                            })?;
                            return Ok(Some((value, link.as_deref().and_then(next_link))));
                        }
                        404 => return Ok(None),
                        401 | 403 | 429 => {
                            let remaining = header("x-ratelimit-remaining");
                            let retry_after = header("retry-after");
                            if status == 429 || remaining.as_deref() == Some("0") || retry_after.is_some() {
                                let reset = header("x-ratelimit-reset").and_then(|r| r.parse().ok());
                                return Err(ForgeError::RateLimited { reset });
                            }
                            return Err(ForgeError::Unauthorized { status });
                        }
                        500..=599 => last_error = format!("HTTP {status} from {url}"),
                        _ => {
                            return Err(ForgeError::Http {
                                status,
                                url: url.to_string(),
                            })
                        }
                    }
                }
                Err(e) => last_error = e.to_string(),
            }
            if attempt < self.config.max_attempts {
                warn!(url, attempt, error = %last_error, "retrying");
                std::thread::sleep(delay);
                delay *= 2;
            }
        }
        Err(ForgeError::Network {
            attempts: self.config.max_attempts,
            message: last_error,
        })
    }

    fn get_page(&self, url: &str) -> Result<Option<Page>, ForgeError> {
        Ok(self.get(url)?.map(|(value, next)| Page {
            items: value.as_array().cloned().unwrap_or_default(),
            next,
        }))
    }

    /// Follows pagination until `cap` items or exhaustion. A 404 on the
    /// first page yields an empty list.
    fn get_paged(&self, url: &str, cap: usize) -> Result<Vec<Value>, ForgeError> {
        let per_page = self.config.limits.per_page.clamp(1, 100).min(cap.max(1));
        let mut next = Some(with_query(url, &format!("per_page={per_page}")));
        let mut out = Vec::new();
        while let Some(url) = next.take() {
            if out.len() >= cap {
                break;
            }
            let Some(page) = self.get_page(&url)? else {
                break;
            };
            let empty = page.items.is_empty();
            out.extend(page.items);
            if !empty {
                next = page.next;
            }
        }
        out.truncate(cap);
        Ok(out)
    }

    /// Collects a snapshot of `repo_ref` (`owner/name`).
    pub fn fetch_snapshot(&self, repo_ref: &str) -> Result<RepositorySnapshot, ForgeError> {
        self.fetch_snapshot_at(repo_ref, Utc::now())
    }

    pub fn fetch_snapshot_at(
        &self,
        repo_ref: &str,
        fetched_at: DateTime<Utc>,
    ) -> Result<RepositorySnapshot, ForgeError> {
        let (owner, name) = repo_ref
            .split_once('/')
            .filter(|(o, n)| !o.is_empty() && !n.is_empty() && !n.contains('/'))
            .ok_or_else(|| ForgeError::BadRef(repo_ref.to_string()))?;
        let base = format!("/repos/{owner}/{name}");
        let limits = self.config.limits;

        let (meta, _) = self
            .get(&self.url(&base))?
            .ok_or_else(|| ForgeError::NotFound(repo_ref.to_string()))?;
        let count = |k: &str| meta.get(k).and_then(Value::as_u64).unwrap_or(0);
        let stats = RepoStats {
            stargazers: count("stargazers_count"),
            watchers: count("subscribers_count"),
            forks: count("forks_count"),
        };
        let default_branch = meta
            .get("default_branch")
            .and_then(Value::as_str)
            .unwrap_or("main")
            .to_string();

        let mut snapshot = RepositorySnapshot::empty(repo_ref, fetched_at);
        snapshot.stats = stats;

        // Pull requests, newest first.
        let pulls = self.get_paged(
            &self.url(&format!("{base}/pulls?state=all&sort=created&direction=desc")),
            limits.max_prs)?;
        let mut shas: BTreeMap<String, u64> = BTreeMap::new();
        for raw in &pulls {
            let pr = self.pull_request(&base, raw)?;
            if pr.is_merged() {
                if let Some(sha) = raw.get("merge_commit_sha").and_then(Value::as_str) {
                    shas.insert(sha.to_string(), pr.number);
                }
                if let Some(sha) = raw.pointer("/head/sha").and_then(Value::as_str) {
                    shas.insert(sha.to_string(), pr.number);
                }
            }
            snapshot.pull_requests.push(pr);
        }
        snapshot
            .pull_requests
            .sort_by(|a, b| b.created_at.cmp(&a.created_at).then(b.number.cmp(&a.number)));
        let merged: BTreeSet<u64> = snapshot
            .pull_requests
            .iter()
            .filter(|p| p.is_merged())
            .map(|p| p.number)
            .collect();

        // Default-branch commits.
        let commits = self.get_paged(
            &self.url(&format!("{base}/commits?sha={default_branch}")),
            limits.max_commits)?;
        for c in commits {
            let Some(sha) = c.get("sha").and_then(Value::as_str) else {
                continue;
            };
            let author = c
                .get("author")
                .and_then(login)
                .or_else(|| {
                    c.pointer("/commit/author/name")
                        .and_then(Value::as_str)
                        .map(String::from)
                })
                .unwrap_or_else(|| "unknown".to_string());
            let committed_at = c
                .pointer("/commit/committer/date")
                .and_then(parse_time)
                .unwrap_or(fetched_at);
            let message = c
                .pointer("/commit/message")
                .and_then(Value::as_str)
                .unwrap_or_default();
            let linked_pr = shas
                .get(sha)
                .copied()
                .or_else(|| pr_number_from_message(message).filter(|n| merged.contains(n)));
            snapshot.commits_default_branch.push(CommitRecord {
                sha: sha.to_string(),
                author,
                committed_at,
                linked_pr,
            });
        }

        // Issues (the issues endpoint also lists pull requests).
        let issues = self.get_paged(
            &self.url(&format!("{base}/issues?state=all&sort=created&direction=desc")),
            limits.max_issues)?;
        for issue in issues.iter().filter(|i| i.get("pull_request").is_none()) {
            let Some(number) = issue.get("number").and_then(Value::as_u64) else {
                continue;
            };
            let mut participants = BTreeSet::new();
            if let Some(user) = issue.get("user").and_then(login) {
                participants.insert(user);
            }
            if issue.get("comments").and_then(Value::as_u64).unwrap_or(0) > 0 {
                participants.extend(self.commenters(&base, number)?);
            }
            snapshot.issues.push(IssueRecord {
                number,
                participant_ids: participants,
            });
        }

        // Workflows and dependabot configuration.
        let listing = self.get(&self.url(&format!("{base}/contents/.github/workflows")))?;
        if let Some((Value::Array(entries), _)) = listing {
            let mut paths: Vec<String> = entries
                .iter()
                .filter(|e| e.get("type").and_then(Value::as_str) == Some("file"))
                .filter_map(|e| e.get("path").and_then(Value::as_str))
                .filter(|p| p.ends_with(".yml") || p.ends_with(".yaml"))
                .map(String::from)
                .collect();
            paths.sort();
            for path in paths {
                if let Some(content) = self.file_content(&base, &path)? {
                    snapshot.workflow_files.push(WorkflowFile { path, content });
                }
            }
        }
        snapshot.dependabot_config_present = [".github/dependabot.yml", ".github/dependabot.yaml"]
            .iter()
            .map(|p| self.get(&self.url(&format!("{base}/contents/{p}"))))
            .find_map(|r| match r {
                Ok(Some(_)) => Some(Ok(true)),
                Ok(None) => None,
                Err(e) => Some(Err(e)),
            })
            .transpose()?
            .unwrap_or(false);

        Ok(snapshot)
    }

    fn commenters(&self, base: &str, number: u64) -> Result<Vec<String>, ForgeError> {
        let comments = self.get_paged(
            &self.url(&format!("{base}/issues/{number}/comments")),
            300)?;
        Ok(comments
            .iter()
            .filter_map(|c| c.get("user").and_then(login))
            .collect())
    }

    fn file_content(&self, base: &str, path: &str) -> Result<Option<String>, ForgeError> {
        let url = self.url(&format!("{base}/contents/{path}"));
        let Some((value, _)) = self.get(&url)? else {
            return Ok(None);
        };
        let encoded: String = value
            .get("content")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .split_whitespace()
            .collect();
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(encoded)
            .map_err(|e| ForgeError::Decode {
                url: url.clone(),
                message: e.to_string(),
            })?;
        Ok(Some(String::from_utf8_lossy(&bytes).into_owned()))
    }

    fn pull_request(&self, base: &str, raw: &Value) -> Result<PullRequestRecord, ForgeError> {
        let decode = |msg: &str| ForgeError::Decode {
            url: self.url(&format!("{base}/pulls")),
            message: msg.to_string(),
        };
        let number = raw
            .get("number")
            .and_then(Value::as_u64)
            .ok_or_else(|| decode("pull request without number"))?;
        let author = raw
            .get("user")
            .and_then(login)
            .unwrap_or_else(|| "ghost".to_string());
        let created_at = raw
            .get("created_at")
            .and_then(parse_time)
            .ok_or_else(|| decode("pull request without created_at"))?;
        let merged_at = raw.get("merged_at").and_then(parse_time);

        let merged_by = if merged_at.is_some() {
            let detail = self.get(&self.url(&format!("{base}/pulls/{number}")))?;
            Some(
                detail
                    .and_then(|(v, _)| v.get("merged_by").and_then(login))
                    .unwrap_or_else(|| "ghost".to_string()),
            )
        } else {
            None
        };

        let mut reviews: Vec<ReviewRecord> = self
            .get_paged(&self.url(&format!("{base}/pulls/{number}/reviews")), 300)?
            .iter()
            .filter_map(|r| {
                let state = match r.get("state").and_then(Value::as_str)? {
                    "APPROVED" => ReviewState::Approved,
                    "CHANGES_REQUESTED" => ReviewState::ChangesRequested,
                    "COMMENTED" => ReviewState::Commented,
                    _ => return None,
                };
                Some(ReviewRecord {
                    reviewer: r.get("user").and_then(login)?,
                    state,
                    submitted_at: r.get("submitted_at").and_then(parse_time)?,
                })
            })
            .collect();
        reviews.sort_by(|a, b| a.submitted_at.cmp(&b.submitted_at));

        let diff_summary = self
            .get_paged(&self.url(&format!("{base}/pulls/{number}/files")), 300)?
            .iter()
            .filter_map(|f| {
                let additions = f.get("additions").and_then(Value::as_u64).unwrap_or(0);
                let deletions = f.get("deletions").and_then(Value::as_u64).unwrap_or(0);
                Some(DiffEntry {
                    path: f.get("filename").and_then(Value::as_str)?.to_string(),
                    additions,
                    deletions,
                    // the API omits `patch` for binary files
                    is_binary: f.get("patch").is_none() && additions == 0 && deletions == 0,
                })
            })
            .collect();

        let commenters = if raw.get("comments").and_then(Value::as_u64) == Some(0) {
            Vec::new()
        } else {
            self.commenters(base, number)?
        };

        let mut participant_ids: BTreeSet<String> = BTreeSet::from([author.clone()]);
        participant_ids.extend(reviews.iter().map(|r| r.reviewer.clone()));
        participant_ids.extend(commenters.iter().cloned());

        Ok(PullRequestRecord {
            number,
            author,
            title: raw.get("title").and_then(Value::as_str).unwrap_or_default().to_string(),
            body: raw.get("body").and_then(Value::as_str).unwrap_or_default().to_string(),
            created_at,
            merged_at,
            merged_by,
            reviews,
            comment_count: commenters.len() as u64,
            participant_ids,
            diff_summary,
        })
    }
}
