//! CI workflow parsing and the continuous integration metrics C.1–C.3.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_yaml::Value;

use crate::forge::{RepositorySnapshot, WorkflowFile};

/// One `uses:` reference in a workflow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionUse {
    pub workflow_path: String,
    pub step_ref: String,
    /// Owner segment; empty for local and docker references.
    pub provider: String,
    pub name: String,
    /// Text after `@`; may be empty.
    pub reference: String,
    pub is_local: bool,
    pub is_docker: bool,
}

impl ActionUse {
    pub fn parse(workflow_path: &str, step_ref: &str) -> ActionUse {
        let raw = step_ref.trim();
        let base = ActionUse {
            workflow_path: workflow_path.to_string(),
            step_ref: raw.to_string(),
            provider: String::new(),
            name: String::new(),
            reference: String::new(),
            is_local: false,
            is_docker: false,
        };
        if raw.starts_with("./") {
            return ActionUse {
                name: raw.to_string(),
                is_local: true,
                ..base
            };
        }
        if let Some(image) = raw.strip_prefix("docker://") {
            let (name, reference) = image.split_once('@').unwrap_or((image, ""));
            return ActionUse {
                name: name.to_string(),
                reference: reference.to_string(),
                is_docker: true,
                ..base
            };
        }
        let (path, reference) = raw.split_once('@').unwrap_or((raw, ""));
        let (provider, name) = path.split_once('/').unwrap_or((path, ""));
        ActionUse {
            provider: provider.to_string(),
            name: name.to_string(),
            reference: reference.to_string(),
            ..base
        }
    }

    /// Pinned means a full 40-character lowercase hex commit SHA, or a
    /// `sha256:` digest for docker images.
    pub fn is_pinned(&self) -> bool {
        if self.is_docker {
            return self.reference.starts_with("sha256:");
        }
        self.reference.len() == 40
            && self
                .reference
                .bytes()
                .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
    }

    pub fn is_trusted(&self, trusted: &BTreeSet<String>) -> bool {
        !self.is_docker && trusted.contains(&self.provider.to_ascii_lowercase())
    }
}

/// Collects every job-level and step-level `uses:` from a set of workflow
/// files. Files that fail to parse contribute nothing and a warning.
pub fn parse_workflows(files: &[WorkflowFile]) -> (Vec<ActionUse>, Vec<String>) {
    let mut sorted: Vec<&WorkflowFile> = files.iter().collect();
    sorted.sort_by(|a, b| a.path.cmp(&b.path));

    let mut uses = Vec::new();
    let mut warnings = Vec::new();
    for file in sorted {
        let doc: Value = match serde_yaml::from_str(&file.content) {
            Ok(v) => v,
            Err(e) => {
                warnings.push(format!("malformed workflow {}: {e}", file.path));
                continue;
            }
        };
        let Some(jobs) = doc.get("jobs").and_then(Value::as_mapping) else {
            if !doc.is_null() {
                warnings.push(format!("workflow {} has no jobs mapping", file.path));
            }
            continue;
        };
        for (_, job) in jobs {
            if let Some(r) = job.get("uses").and_then(Value::as_str) {
                uses.push(ActionUse::parse(&file.path, r));
            }
            if let Some(steps) = job.get("steps").and_then(Value::as_sequence) {
                for step in steps {
                    if let Some(r) = step.get("uses").and_then(Value::as_str) {
                        uses.push(ActionUse::parse(&file.path, r));
                    }
                }
            }
        }
    }
    (uses, warnings)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CiConfig {
    pub trusted_providers: BTreeSet<String>,
}

impl Default for CiConfig {
    fn default() -> Self {
        CiConfig {
            trusted_providers: ["actions", "github"].iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl CiConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        let mut cfg: CiConfig = toml::from_str(text)?;
        cfg.trusted_providers = cfg
            .trusted_providers
            .into_iter()
            .map(|p| p.to_ascii_lowercase())
            .collect();
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiRaw {
    pub dependabot_disabled: bool,
    pub dangerous_provider_ratio: f64,
    pub dangerous_pin_ratio: f64,
    pub action_uses: Vec<ActionUse>,
    pub warnings: Vec<String>,
}

impl CiRaw {
    pub fn unpinned_count(&self) -> usize {
        self.action_uses
            .iter()
            .filter(|u| !u.is_local && !u.is_pinned())
            .count()
    }
}

/// Provider and pin ratios over non-local uses (0 when there are none).
pub fn action_ratios(uses: &[ActionUse], trusted: &BTreeSet<String>) -> (f64, f64) {
    let remote: Vec<&ActionUse> = uses.iter().filter(|u| !u.is_local).collect();
    if remote.is_empty() {
        return (0.0, 0.0);
    }
    let n = remote.len() as f64;
    let untrusted = remote.iter().filter(|u| !u.is_trusted(trusted)).count() as f64;
    let unpinned = remote.iter().filter(|u| !u.is_pinned()).count() as f64;
    (untrusted / n, unpinned / n)
}

pub fn ci_raw_metrics(snapshot: &RepositorySnapshot, config: &CiConfig) -> CiRaw {
    let (action_uses, warnings) = parse_workflows(&snapshot.workflow_files);
    let (dangerous_provider_ratio, dangerous_pin_ratio) =
        action_ratios(&action_uses, &config.trusted_providers);
    CiRaw {
        dependabot_disabled: !snapshot.dependabot_config_present,
        dangerous_provider_ratio,
        dangerous_pin_ratio,
        action_uses,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Utc;

    const SHA: &str = "b4ffde65f46336ab88eb53be808477a3936bae11";

    fn wf(path: &str, content: &str) -> WorkflowFile {
        WorkflowFile {
            path: path.into(),
            content: content.into(),
        }
    }

    #[test]
    fn parse_reference_forms() {
        let u = ActionUse::parse("ci.yml", "actions/checkout@v4");
        assert_eq!((u.provider.as_str(), u.name.as_str(), u.reference.as_str()), ("actions", "checkout", "v4"));
        assert!(!u.is_local && !u.is_docker);

        let u = ActionUse::parse("ci.yml", "./local/action");
        assert!(u.is_local);
        assert_eq!(u.provider, "");

        let u = ActionUse::parse("ci.yml", "docker://alpine:3.19");
        assert!(u.is_docker);
        assert_eq!(u.provider, "");
        assert!(!u.is_pinned());
        assert!(ActionUse::parse("ci.yml", "docker://alpine@sha256:abcd").is_pinned());

        let u = ActionUse::parse("ci.yml", "github/codeql-action/init@v3");
        assert_eq!(u.name, "codeql-action/init");
    }

    #[test]
    fn pin_requires_lowercase_40_hex() {
        assert!(ActionUse::parse("x", &format!("a/b@{SHA}")).is_pinned());
        assert!(!ActionUse::parse("x", &format!("a/b@{}", SHA.to_uppercase())).is_pinned());
        assert!(!ActionUse::parse("x", &format!("a/b@{}", &SHA[..39])).is_pinned());
        assert!(!ActionUse::parse("x", "a/b").is_pinned());
    }

    #[test]
    fn collects_step_and_job_uses() {
        let text = format!(
            "on: push\njobs:\n  build:\n    runs-on: ubuntu-latest\n    steps:\n      - uses: actions/checkout@v4\n      - run: make\n      - uses: randomorg/tool@{SHA}\n  reuse:\n    uses: octo/flows/.github/workflows/ci.yml@main\n"
        );
        let (uses, warnings) = parse_workflows(&[wf(".github/workflows/ci.yml", &text)]);
        assert!(warnings.is_empty());
        let refs: Vec<&str> = uses.iter().map(|u| u.step_ref.as_str()).collect();
        assert_eq!(refs.len(), 3);
        assert!(refs.contains(&"octo/flows/.github/workflows/ci.yml@main"));
    }

    #[test]
    fn malformed_workflow_warns() {
        let (uses, warnings) = parse_workflows(&[
            wf("bad.yml", "jobs: [unclosed"),
            wf("good.yml", "jobs:\n  a:\n    steps:\n      - uses: actions/setup-go@v5\n"),
        ]);
        assert_eq!(uses.len(), 1);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("bad.yml"));
    }

    #[test]
    fn empty_file_list() {
        assert!(parse_workflows(&[]).0.is_empty());
    }

    #[test]
    fn mixed_ratios() {
        let text = format!(
            "jobs:\n  a:\n    steps:\n      - uses: actions/checkout@v4\n      - uses: randomorg/tool@{SHA}\n      - uses: ./local\n"
        );
        let mut snap = RepositorySnapshot::empty("o/r", Utc::now());
        snap.workflow_files.push(wf("ci.yml", &text));
        let raw = ci_raw_metrics(&snap, &CiConfig::default());
        assert_eq!(raw.dangerous_provider_ratio, 0.5);
        assert_eq!(raw.dangerous_pin_ratio, 0.5);
        assert!(raw.dependabot_disabled);
    }

    #[test]
    fn empty_ci() {
        let snap = RepositorySnapshot::empty("o/r", Utc::now());
        let raw = ci_raw_metrics(&snap, &CiConfig::default());
        assert!(raw.dependabot_disabled);
        assert_eq!((raw.dangerous_provider_ratio, raw.dangerous_pin_ratio), (0.0, 0.0));
    }

    #[test]
    fn fully_pinned_trusted() {
        let text = format!(
            "jobs:\n  a:\n    steps:\n      - uses: actions/checkout@{SHA}\n      - uses: github/codeql-action/init@{SHA}\n"
        );
        let mut snap = RepositorySnapshot::empty("o/r", Utc::now());
        snap.workflow_files.push(wf("ci.yml", &text));
        snap.dependabot_config_present = true;
        let raw = ci_raw_metrics(&snap, &CiConfig::default());
        assert_eq!((raw.dangerous_provider_ratio, raw.dangerous_pin_ratio), (0.0, 0.0));
        assert!(!raw.dependabot_disabled);
    }

    #[test]
    fn allowlist_config() {
        let cfg = CiConfig::from_toml_str("trusted_providers = [\"Actions\", \"docker\"]").unwrap();
        assert!(cfg.trusted_providers.contains("actions"));
        assert!(!cfg.trusted_providers.contains("github"));
    }
}
