//! Assembles a repository's raw risk vector from its snapshot, source tree
//! and Debian dependency data.

use std::path::Path;

use crate::ci::{ci_raw_metrics, CiConfig, CiRaw};
use crate::community::{community_raw_metrics, infer_roles, CqRawValues, Role, RoleAssignment};
use crate::debian::{dependency_impact_metrics, DependencyGraph, RepoPackageMapping};
use crate::error::ScanError;
use crate::forge::RepositorySnapshot;
use crate::model::{MetricId, RawValue, RiskVector};
use crate::scan::{payload_metrics, FileContext, ScanResult, ScanRules};
use crate::semantic::SemanticBackend;

pub struct EvaluationInputs<'a> {
    pub snapshot: &'a RepositorySnapshot,
    /// Directory `file_tree_ref` is resolved against.
    pub fixture_dir: Option<&'a Path>,
    pub graph: Option<&'a DependencyGraph>,
    pub mapping: Option<&'a RepoPackageMapping>,
    pub scan_rules: &'a ScanRules,
    pub ci_config: &'a CiConfig,
    pub semantic: Option<&'a dyn SemanticBackend>,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub vector: RiskVector,
    pub notes: Vec<String>,
    pub roles: RoleAssignment,
    pub community: CqRawValues,
    pub scan: ScanResult,
    pub ci: CiRaw,
}

pub fn evaluate_repository(inputs: &EvaluationInputs<'_>) -> Result<Evaluation, ScanError> {
    use MetricId::*;
    let snap = inputs.snapshot;
    let mut v = RiskVector::default();
    let mut notes = Vec::new();

    match (inputs.graph, inputs.mapping) {
        (Some(graph), Some(mapping)) => {
            let di = dependency_impact_metrics(graph, mapping);
            v.set_raw(D1, RawValue::count(di.self_priority));
            v.set_raw(D2, RawValue::count(di.self_essential));
            v.set_raw(D3, RawValue::count(di.dependent_priority));
            v.set_raw(D4, RawValue::count(di.dependent_essential));
            notes.extend(di.warnings);
        }
        _ => {
            for m in [D1, D2, D3, D4] {
                v.set_raw(m, RawValue::count(0));
            }
            notes.push("no Debian package mapping; dependency impact counts are zero".into());
        }
    }

    let tree = match inputs.fixture_dir {
        Some(base) => snap.tree_path(base),
        None => snap.file_tree_ref.clone(),
    };
    let scan = match tree {
        Some(root) => {
            let (payload, scan) = payload_metrics(&root, inputs.scan_rules, inputs.semantic)?;
            v.set_raw(P1, RawValue::flag(payload.in_test));
            v.set_raw(P2, RawValue::flag(payload.in_docs));
            v.set_raw(P3, RawValue::flag(payload.in_code));
            v.set_raw(P4, RawValue::flag(payload.in_assets));
            v.set_raw(P5, RawValue::flag(payload.in_other));
            v.set_raw(P6, RawValue::count(payload.total_binaries));
            for c in FileContext::ALL {
                v.facts
                    .insert(format!("binaries_{}", c.as_str()), scan.count_in(c) as f64);
            }
            notes.extend(scan.warnings.iter().cloned());
            scan
        }
        None => {
            for m in [P1, P2, P3, P4, P5] {
                v.set_raw(m, RawValue::flag(false));
            }
            v.set_raw(P6, RawValue::count(0));
            notes.push("no source tree; payload concealment flags are zero".into());
            ScanResult::default()
        }
    };

    let roles = infer_roles(snap);
    let community = community_raw_metrics(snap, &roles, inputs.semantic);
    for (m, raw) in community.raw_values() {
        v.set_raw(m, raw);
    }
    notes.extend(community.notes.iter().cloned());
    for (role, key) in [(Role::Maintainer, "latest_maintainer_prs"), (Role::Approver, "latest_approver_prs")] {
        if let Some(k) = latest_promotion_prs(snap, &roles, role) {
            v.facts.insert(key.into(), k as f64);
        }
    }

    let ci = ci_raw_metrics(snap, inputs.ci_config);
    v.set_raw(C1, RawValue::flag(ci.dependabot_disabled));
    v.set_raw(C2, RawValue::Number(ci.dangerous_provider_ratio));
    v.set_raw(C3, RawValue::Number(ci.dangerous_pin_ratio));
    let remote: Vec<_> = ci.action_uses.iter().filter(|u| !u.is_local).collect();
    v.facts.insert("action_references".into(), remote.len() as f64);
    v.facts.insert("unpinned_actions".into(), ci.unpinned_count() as f64);
    v.facts.insert(
        "untrusted_actions".into(),
        remote
            .iter()
            .filter(|u| !u.is_trusted(&inputs.ci_config.trusted_providers))
            .count() as f64,
    );
    notes.extend(ci.warnings.iter().cloned());

    Ok(Evaluation {
        vector: v,
        notes,
        roles,
        community,
        scan,
        ci,
    })
}

/// PRs authored before promotion by the most recently promoted holder of `role`.
fn latest_promotion_prs(snap: &RepositorySnapshot, roles: &RoleAssignment, role: Role) -> Option<usize> {
    let (user, at) = roles
        .holders(role)
        .iter()
        .filter_map(|u| roles.promoted_at(u, role).map(|t| (u, t)))
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0)))?;
    Some(
        snap.pull_requests
            .iter()
            .filter(|pr| &pr.author == user && pr.created_at < at)
            .count(),
    )
}
