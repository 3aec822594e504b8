//! Community quality sub-metrics: popularity, review strength and the
//! privilege barrier, including role inference from observed events.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::error::ScoringError;
use crate::forge::{RepositorySnapshot, UserId};
use crate::model::{Histogram, MetricId, RawValue};
use crate::semantic::{assess, SemanticBackend, SemanticTask, VerdictLabel};

pub const NOTE_SEMANTIC_UNAVAILABLE: &str = "semantic-unavailable";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Maintainer,
    Approver,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromotionEvent {
    pub role: Role,
    pub at: DateTime<Utc>,
    /// The pull request the first privileged action happened on, if any.
    pub pr: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleAssignment {
    pub maintainers: BTreeSet<UserId>,
    pub approvers: BTreeSet<UserId>,
    /// First privileged action per user and role.
    pub promotion_events: BTreeMap<UserId, Vec<PromotionEvent>>,
}

impl RoleAssignment {
    pub fn promoted_at(&self, user: &str, role: Role) -> Option<DateTime<Utc>> {
        self.promotion_events
            .get(user)?
            .iter()
            .find(|e| e.role == role)
            .map(|e| e.at)
    }

    pub fn holders(&self, role: Role) -> &BTreeSet<UserId> {
        match role {
            Role::Maintainer => &self.maintainers,
            Role::Approver => &self.approvers,
        }
    }
}

// (timestamp, pr number or MAX for direct commits) orders events with the
// lowest PR number first among equal timestamps.
type EventKey = (DateTime<Utc>, u64);

fn record(first: &mut BTreeMap<UserId, EventKey>, user: &str, key: EventKey) {
    if user.is_empty() {
        return;
    }
    first
        .entry(user.to_string())
        .and_modify(|k| {
            if key < *k {
                *k = key;
            }
        })
        .or_insert(key);
}

/// Maintainers merged a PR or pushed a direct commit; approvers submitted an
/// approving review. Promotion time is the earliest such action.
pub fn infer_roles(snapshot: &RepositorySnapshot) -> RoleAssignment {
    let mut maint: BTreeMap<UserId, EventKey> = BTreeMap::new();
    let mut appr: BTreeMap<UserId, EventKey> = BTreeMap::new();

    for pr in &snapshot.pull_requests {
        if let (Some(by), Some(at)) = (&pr.merged_by, pr.merged_at) {
            record(&mut maint, by, (at, pr.number));
        }
        for review in pr.reviews.iter().filter(|r| r.state == crate::forge::ReviewState::Approved) {
            record(&mut appr, &review.reviewer, (review.submitted_at, pr.number));
        }
    }
    for commit in snapshot.commits_default_branch.iter().filter(|c| c.is_direct()) {
        record(&mut maint, &commit.author, (commit.committed_at, u64::MAX));
    }

    let mut roles = RoleAssignment::default();
    for (role, first) in [(Role::Maintainer, maint), (Role::Approver, appr)] {
        for (user, (at, pr)) in first {
            match role {
                Role::Maintainer => roles.maintainers.insert(user.clone()),
                Role::Approver => roles.approvers.insert(user.clone()),
            };
            roles.promotion_events.entry(user).or_default().push(PromotionEvent {
                role,
                at,
                pr: (pr != u64::MAX).then_some(pr),
            });
        }
    }
    roles
}

/// For each user holding `role`, the number of PRs they authored strictly
/// before their promotion, tallied into a histogram.
pub fn prs_before_promotion(
    snapshot: &RepositorySnapshot,
    roles: &RoleAssignment,
    role: Role,
) -> Histogram {
    let mut hist = Histogram::new();
    for user in roles.holders(role) {
        let Some(at) = roles.promoted_at(user, role) else {
            continue;
        };
        let before = snapshot
            .pull_requests
            .iter()
            .filter(|pr| &pr.author == user && pr.created_at < at)
            .count();
        hist.record(before as u64);
    }
    hist
}

/// Weighted mean of the histogram keys.
pub fn histogram_expectation(d: &Histogram) -> Result<f64, ScoringError> {
    let total = d.total();
    if total == 0 {
        return Err(ScoringError::UndefinedExpectation);
    }
    let weighted: f64 = d.bins().iter().map(|(k, v)| *k as f64 * *v as f64).sum();
    Ok(weighted / total as f64)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CqRawValues {
    pub stargazers: u64,
    pub watchers: u64,
    pub forks: u64,
    pub active_users: usize,
    pub avg_issue_participants: f64,
    pub avg_pr_participants: f64,
    pub direct_commit_ratio: f64,
    pub direct_commit_users: usize,
    pub required_approves: Histogram,
    pub undiscussed_merge_ratio: f64,
    pub inconsistent_pr_ratio: f64,
    pub maintainer_count: usize,
    pub approver_count: usize,
    pub prs_to_maintainer: Histogram,
    pub prs_to_approver: Histogram,
    pub notes: Vec<String>,
}

impl CqRawValues {
    pub fn raw_values(&self) -> Vec<(MetricId, RawValue)> {
        use MetricId::*;
        vec![
            (Stargazers, RawValue::Number(self.stargazers as f64)),
            (Watchers, RawValue::Number(self.watchers as f64)),
            (Forks, RawValue::Number(self.forks as f64)),
            (ActiveUsers, RawValue::count(self.active_users)),
            (AvgIssueParticipants, RawValue::Number(self.avg_issue_participants)),
            (AvgPrParticipants, RawValue::Number(self.avg_pr_participants)),
            (DirectCommitRatio, RawValue::Number(self.direct_commit_ratio)),
            (DirectCommitUsers, RawValue::count(self.direct_commit_users)),
            (RequiredApprovesDist, RawValue::Histogram(self.required_approves.clone())),
            (UndiscussedMergeRatio, RawValue::Number(self.undiscussed_merge_ratio)),
            (InconsistentPrRatio, RawValue::Number(self.inconsistent_pr_ratio)),
            (MaintainerCount, RawValue::count(self.maintainer_count)),
            (ApproverCount, RawValue::count(self.approver_count)),
            (PrsToMaintainer, RawValue::Histogram(self.prs_to_maintainer.clone())),
            (PrsToApprover, RawValue::Histogram(self.prs_to_approver.clone())),
        ]
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean(values: impl ExactSizeIterator<Item = usize>) -> f64 {
    let n = values.len();
    ratio(values.sum(), n)
}

pub fn community_raw_metrics(
    snapshot: &RepositorySnapshot,
    roles: &RoleAssignment,
    semantic: Option<&dyn SemanticBackend>,
) -> CqRawValues {
    let mut notes = Vec::new();
    let merged: Vec<_> = snapshot.pull_requests.iter().filter(|p| p.is_merged()).collect();
    let commits = &snapshot.commits_default_branch;

    let mut active: BTreeSet<&str> = BTreeSet::new();
    active.extend(snapshot.pull_requests.iter().map(|p| p.author.as_str()));
    active.extend(commits.iter().map(|c| c.author.as_str()));
    for issue in &snapshot.issues {
        active.extend(issue.participant_ids.iter().map(String::as_str));
    }
    active.remove("");

    let direct: Vec<_> = commits.iter().filter(|c| c.is_direct()).collect();
    let direct_users: BTreeSet<&str> = direct
        .iter()
        .map(|c| c.author.as_str())
        .filter(|a| !a.is_empty())
        .collect();

    let required_approves: Histogram = {
        let mut h = Histogram::new();
        for pr in &merged {
            h.record(pr.approvals() as u64);
        }
        h
    };
    let undiscussed = merged
        .iter()
        .filter(|p| p.reviews.is_empty() && p.comment_count == 0)
        .count();

    let inconsistent_pr_ratio = match semantic {
        None => {
            notes.push(NOTE_SEMANTIC_UNAVAILABLE.to_string());
            0.0
        }
        Some(backend) => {
            let mut flagged = 0;
            let mut failure = None;
            for pr in &merged {
                let task = SemanticTask::PrConsistency {
                    title: pr.title.clone(),
                    body: pr.body.clone(),
                    diff: pr.diff_summary.clone(),
                };
                match assess(&task, backend) {
                    Ok(v) if v.label == VerdictLabel::Inconsistent => flagged += 1,
                    Ok(_) => {}
                    Err(e) => {
                        failure = Some(e);
                        break;
                    }
                }
            }
            match failure {
                Some(e) => {
                    warn!(repo = %snapshot.repo_id, error = %e, "semantic PR check failed");
                    notes.push(format!("{NOTE_SEMANTIC_UNAVAILABLE}: {e}"));
                    0.0
                }
                None => ratio(flagged, merged.len()),
            }
        }
    };

    CqRawValues {
        stargazers: snapshot.stats.stargazers,
        watchers: snapshot.stats.watchers,
        forks: snapshot.stats.forks,
        active_users: active.len(),
        avg_issue_participants: mean(snapshot.issues.iter().map(|i| i.participant_ids.len())),
        avg_pr_participants: mean(snapshot.pull_requests.iter().map(|p| p.participant_ids.len())),
        direct_commit_ratio: ratio(direct.len(), commits.len()),
        direct_commit_users: direct_users.len(),
        required_approves,
        undiscussed_merge_ratio: ratio(undiscussed, merged.len()),
        inconsistent_pr_ratio,
        maintainer_count: roles.maintainers.len(),
        approver_count: roles.approvers.len(),
        prs_to_maintainer: prs_before_promotion(snapshot, roles, Role::Maintainer),
        prs_to_approver: prs_before_promotion(snapshot, roles, Role::Approver),
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::{CommitRecord, PullRequestRecord, ReviewRecord, ReviewState};
    use crate::semantic::MockBackend;
    use chrono::TimeZone;

    fn t(day: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 1, day, 12, 0, 0).unwrap()
    }

    fn pr(number: u64, author: &str, created: u32) -> PullRequestRecord {
        PullRequestRecord {
            number,
            author: author.into(),
            title: format!("change {number}"),
            body: String::new(),
            created_at: t(created),
            merged_at: None,
            merged_by: None,
            reviews: vec![],
            comment_count: 0,
            participant_ids: [author.to_string()].into_iter().collect(),
            diff_summary: vec![],
        }
    }

    fn merged(mut p: PullRequestRecord, by: &str, day: u32) -> PullRequestRecord {
        p.merged_at = Some(t(day));
        p.merged_by = Some(by.into());
        p
    }

    fn approve(mut p: PullRequestRecord, who: &str, day: u32) -> PullRequestRecord {
        p.reviews.push(ReviewRecord {
            reviewer: who.into(),
            state: ReviewState::Approved,
            submitted_at: t(day),
        });
        p
    }

    fn commit(sha: &str, author: &str, day: u32, pr: Option<u64>) -> CommitRecord {
        CommitRecord {
            sha: sha.into(),
            author: author.into(),
            committed_at: t(day),
            linked_pr: pr,
        }
    }

    fn snap() -> RepositorySnapshot {
        RepositorySnapshot::empty("o/r", t(28))
    }

    #[test]
    fn single_merge_makes_maintainer() {
        let mut s = snap();
        s.pull_requests.push(merged(pr(5, "a", 1), "u", 2));
        let roles = infer_roles(&s);
        assert_eq!(roles.maintainers, ["u".to_string()].into_iter().collect());
        assert!(roles.approvers.is_empty());
    }

    #[test]
    fn approver_then_maintainer() {
        let mut s = snap();
        s.pull_requests.push(approve(pr(2, "a", 1), "v", 3));
        s.pull_requests.push(merged(pr(7, "b", 4), "v", 6));
        let roles = infer_roles(&s);
        assert!(roles.maintainers.contains("v") && roles.approvers.contains("v"));
        assert_eq!(roles.promoted_at("v", Role::Maintainer), Some(t(6)));
        assert_eq!(roles.promoted_at("v", Role::Approver), Some(t(3)));
    }

    #[test]
    fn empty_snapshot() {
        let s = snap();
        let roles = infer_roles(&s);
        assert!(roles.maintainers.is_empty() && roles.approvers.is_empty());
        let cq = community_raw_metrics(&s, &roles, None);
        assert_eq!(cq.active_users, 0);
        assert_eq!(cq.direct_commit_ratio, 0.0);
        assert!(cq.prs_to_maintainer.is_empty() && cq.required_approves.is_empty());
        assert_eq!(cq.notes, vec![NOTE_SEMANTIC_UNAVAILABLE.to_string()]);
    }

    #[test]
    fn direct_commit_promotes() {
        let mut s = snap();
        s.commits_default_branch.push(commit("c1", "m", 5, None));
        let roles = infer_roles(&s);
        assert_eq!(roles.promotion_events["m"][0].pr, None);
    }

    #[test]
    fn prs_before_first_merge() {
        let mut s = snap();
        s.pull_requests.push(merged(pr(1, "m", 1), "x", 2));
        s.pull_requests.push(merged(pr(2, "m", 3), "x", 4));
        s.pull_requests.push(merged(pr(3, "z", 5), "m", 6));
        s.pull_requests.push(pr(4, "m", 7));
        let roles = infer_roles(&s);
        let h = prs_before_promotion(&s, &roles, Role::Maintainer);
        // x promoted at day 2 with no PRs; m promoted at day 6 after 2 PRs
        assert_eq!(h, [(0, 1), (2, 1)].into_iter().collect());
    }

    #[test]
    fn zero_and_three_prior_prs() {
        let mut s = snap();
        for (n, d) in [(1, 1), (2, 2), (3, 3)] {
            s.pull_requests.push(pr(n, "late", d));
        }
        s.commits_default_branch.push(commit("a", "early", 1, None));
        s.commits_default_branch.push(commit("b", "late", 10, None));
        let roles = infer_roles(&s);
        let h = prs_before_promotion(&s, &roles, Role::Maintainer);
        assert_eq!(h, [(0, 1), (3, 1)].into_iter().collect());
    }

    #[test]
    fn expectation_examples() {
        let h = |v: &[(u64, u64)]| v.iter().copied().collect::<Histogram>();
        assert_eq!(histogram_expectation(&h(&[(1, 1)])).unwrap(), 1.0);
        assert_eq!(histogram_expectation(&h(&[(2, 3), (4, 1)])).unwrap(), 2.5);
        assert_eq!(histogram_expectation(&h(&[(0, 5)])).unwrap(), 0.0);
        assert_eq!(
            histogram_expectation(&Histogram::new()),
            Err(ScoringError::UndefinedExpectation)
        );
    }

    #[test]
    fn direct_commit_ratio_four_of_ten() {
        let mut s = snap();
        for i in 0..10 {
            let linked = if i < 4 { None } else { Some(i as u64) };
            s.commits_default_branch.push(commit(&format!("c{i}"), &format!("u{}", i % 3), 1, linked));
        }
        let cq = community_raw_metrics(&s, &infer_roles(&s), None);
        assert_eq!(cq.direct_commit_ratio, 0.4);
        assert_eq!(cq.direct_commit_users, 3);
    }

    #[test]
    fn approval_histogram() {
        let mut s = snap();
        s.pull_requests.push(merged(pr(1, "a", 1), "m", 2));
        s.pull_requests.push(merged(approve(pr(2, "a", 1), "r", 2), "m", 3));
        s.pull_requests.push(merged(approve(pr(3, "a", 1), "r", 2), "m", 3));
        s.pull_requests.push(pr(4, "a", 1));
        let cq = community_raw_metrics(&s, &infer_roles(&s), None);
        assert_eq!(cq.required_approves, [(0, 1), (1, 2)].into_iter().collect());
        assert!((cq.undiscussed_merge_ratio - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(cq.avg_pr_participants, 1.0);
    }

    #[test]
    fn semantic_flags_inconsistent_prs() {
        let mut s = snap();
        let mut bad = merged(pr(1, "a", 1), "m", 2);
        bad.title = "fix typo".into();
        bad.diff_summary.push(crate::forge::DiffEntry {
            path: "tests/files/blob.xz".into(),
            additions: 0,
            deletions: 0,
            is_binary: true,
        });
        s.pull_requests.push(bad);
        s.pull_requests.push(merged(pr(2, "a", 1), "m", 2));
        let cq = community_raw_metrics(&s, &infer_roles(&s), Some(&MockBackend));
        assert_eq!(cq.inconsistent_pr_ratio, 0.5);
        assert!(cq.notes.is_empty());
    }

    #[test]
    fn raw_values_cover_all_sub_metrics() {
        let cq = CqRawValues::default();
        let ids: Vec<MetricId> = cq.raw_values().into_iter().map(|(m, _)| m).collect();
        assert_eq!(ids, MetricId::COMMUNITY.to_vec());
    }
}
