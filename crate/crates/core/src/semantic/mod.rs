//! LLM-backed semantic judgments behind a uniform backend trait.
//!
//! Three task kinds are supported: pull request description/diff
//! consistency, binary file context, and CI workflow commentary. The
//! [`MockBackend`] is a pure function of the task and is what the test
//! suites use; [`HttpBackend`] talks to an OpenAI-compatible
//! chat-completions endpoint.

mod http;
mod mock;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::SemanticError;
use crate::forge::DiffEntry;
use crate::scan::{self, FileContext};

pub use http::{HttpBackend, HttpBackendConfig};
pub use mock::MockBackend;

/// Prompt templates, one per task kind. Slots are written `{{name}}`.
pub const PR_CONSISTENCY_TEMPLATE: &str = include_str!("templates/pr_consistency.txt");
pub const BINARY_CONTEXT_TEMPLATE: &str = include_str!("templates/binary_context.txt");
pub const CI_COMMENTARY_TEMPLATE: &str = include_str!("templates/ci_commentary.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    PrConsistency,
    BinaryContext,
    CiCommentary,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::PrConsistency => "pr_consistency",
            TaskKind::BinaryContext => "binary_context",
            TaskKind::CiCommentary => "ci_commentary",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SemanticTask {
    PrConsistency {
        title: String,
        body: String,
        diff: Vec<DiffEntry>,
    },
    BinaryContext {
        path: String,
        /// Neighbouring files, for context.
        listing: Vec<String>,
    },
    CiCommentary {
        path: String,
        workflow: String,
    },
}

impl SemanticTask {
    pub fn kind(&self) -> TaskKind {
        match self {
            SemanticTask::PrConsistency { .. } => TaskKind::PrConsistency,
            SemanticTask::BinaryContext { .. } => TaskKind::BinaryContext,
            SemanticTask::CiCommentary { .. } => TaskKind::CiCommentary,
        }
    }

    pub fn validate(&self) -> Result<(), SemanticError> {
        let empty = |field: &str| {
            Err(SemanticError::InvalidTask(format!(
                "{}: `{field}` is empty",
                self.kind()
            )))
        };
        match self {
            SemanticTask::PrConsistency { title, .. } if title.trim().is_empty() => empty("title"),
            SemanticTask::BinaryContext { path, .. } if path.trim().is_empty() => empty("path"),
            SemanticTask::CiCommentary { path, .. } if path.trim().is_empty() => empty("path"),
            SemanticTask::CiCommentary { workflow, .. } if workflow.trim().is_empty() => {
                empty("workflow")
            }
            _ => Ok(()),
        }
    }

    /// Named slot values for this task's template.
    fn slots(&self) -> BTreeMap<&'static str, String> {
        let mut slots = BTreeMap::new();
        match self {
            SemanticTask::PrConsistency { title, body, diff } => {
                slots.insert("title", title.clone());
                slots.insert(
                    "body",
                    if body.trim().is_empty() {
                        "(no description)".to_string()
                    } else {
                        body.clone()
                    },
                );
                let lines: Vec<String> = diff
                    .iter()
                    .map(|d| {
                        format!(
                            "- {} +{} -{}{}",
                            d.path,
                            d.additions,
                            d.deletions,
                            if d.is_binary { " binary" } else { "" }
                        )
                    })
                    .collect();
                slots.insert(
                    "diff",
                    if lines.is_empty() {
                        "(no files changed)".to_string()
                    } else {
                        lines.join("\n")
                    },
                );
            }
            SemanticTask::BinaryContext { path, listing } => {
                slots.insert("path", path.clone());
                slots.insert(
                    "listing",
                    if listing.is_empty() {
                        "(none)".to_string()
                    } else {
                        listing.iter().map(|l| format!("- {l}")).collect::<Vec<_>>().join("\n")
                    },
                );
            }
            SemanticTask::CiCommentary { path, workflow } => {
                slots.insert("path", path.clone());
                slots.insert("workflow", workflow.clone());
            }
        }
        slots
    }

    pub fn template(&self) -> &'static str {
        match self.kind() {
            TaskKind::PrConsistency => PR_CONSISTENCY_TEMPLATE,
            TaskKind::BinaryContext => BINARY_CONTEXT_TEMPLATE,
            TaskKind::CiCommentary => CI_COMMENTARY_TEMPLATE,
        }
    }

    /// Renders the prompt for this task.
    pub fn render_prompt(&self) -> Result<String, SemanticError> {
        render_template(self.template(), &self.slots())
    }
}

/// Substitutes `{{slot}}` placeholders. Every placeholder must have a value.
pub fn render_template(
    template: &str,
    slots: &BTreeMap<&str, String>,
) -> Result<String, SemanticError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find("}}")
            .ok_or_else(|| SemanticError::InvalidTask("unterminated template slot".into()))?;
        let name = after[..end].trim();
        let value = slots
            .get(name)
            .ok_or_else(|| SemanticError::InvalidTask(format!("no value for slot `{name}`")))?;
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictLabel {
    Consistent,
    Inconsistent,
    Context(FileContext),
    Note(String),
}

impl VerdictLabel {
    pub fn fits(&self, kind: TaskKind) -> bool {
        matches!(
            (self, kind),
            (VerdictLabel::Consistent | VerdictLabel::Inconsistent, TaskKind::PrConsistency)
                | (VerdictLabel::Context(_), TaskKind::BinaryContext)
                | (VerdictLabel::Note(_), TaskKind::CiCommentary)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticVerdict {
    pub label: VerdictLabel,
    /// In [0, 1].
    pub confidence: f64,
    pub rationale: String,
    /// Set when the backend's reply could not be used and a low-confidence
    /// default was substituted.
    pub degraded: bool,
}

impl SemanticVerdict {
    /// The low-confidence fallback used when a reply cannot be parsed.
    pub fn fallback(task: &SemanticTask, reason: impl Into<String>) -> Self {
        let label = match task {
            SemanticTask::PrConsistency { .. } => VerdictLabel::Consistent,
            SemanticTask::BinaryContext { path, .. } => {
                VerdictLabel::Context(scan::classify_path(path))
            }
            SemanticTask::CiCommentary { .. } => VerdictLabel::Note(String::new()),
        };
        SemanticVerdict {
            label,
            confidence: 0.0,
            rationale: reason.into(),
            degraded: true,
        }
    }
}

/// Parses the constrained single-line reply
/// `label=<..>; confidence=<..>; rationale=<..>` for a task kind.
pub fn parse_reply(reply: &str, kind: TaskKind) -> Option<SemanticVerdict> {
    let line = reply
        .lines()
        .map(str::trim)
        .find(|l| l.to_ascii_lowercase().starts_with("label="))?;
    let mut label = None;
    let mut confidence = None;
    let mut rationale = String::new();
    // rationale may itself contain `;`, so it swallows the remainder
    let mut rest = line;
    while !rest.is_empty() {
        let (field, tail) = match rest.split_once(';') {
            Some((f, t)) => (f, t),
            None => (rest, ""),
        };
        let (key, value) = field.split_once('=')?;
        match key.trim().to_ascii_lowercase().as_str() {
            "label" => label = Some(value.trim().to_ascii_lowercase()),
            "confidence" => confidence = value.trim().parse::<f64>().ok(),
            "rationale" => {
                rationale = rest.split_once('=').map(|(_, v)| v.trim().to_string())?;
                break;
            }
            _ => {}
        }
        rest = tail.trim_start();
    }
    let label = label?;
    let confidence = confidence.filter(|c| (0.0..=1.0).contains(c))?;
    let label = match kind {
        TaskKind::PrConsistency => match label.as_str() {
            "consistent" => VerdictLabel::Consistent,
            "inconsistent" => VerdictLabel::Inconsistent,
            _ => return None,
        },
        TaskKind::BinaryContext => VerdictLabel::Context(FileContext::parse(&label)?),
        TaskKind::CiCommentary => VerdictLabel::Note(rationale.clone()),
    };
    Some(SemanticVerdict {
        label,
        confidence,
        rationale,
        degraded: false,
    })
}

/// A provider of semantic verdicts. Implementations must tolerate
/// concurrent calls.
pub trait SemanticBackend: Send + Sync {
    /// Short identifier recorded in report provenance.
    fn name(&self) -> &str;

    fn judge(&self, task: &SemanticTask) -> Result<SemanticVerdict, SemanticError>;
}

/// Validates `task`, asks `backend`, and checks the verdict fits the task.
pub fn assess(
    task: &SemanticTask,
    backend: &dyn SemanticBackend,
) -> Result<SemanticVerdict, SemanticError> {
    task.validate()?;
    let verdict = backend.judge(task)?;
    if !verdict.label.fits(task.kind()) || !(0.0..=1.0).contains(&verdict.confidence) {
        return Ok(SemanticVerdict::fallback(
            task,
            format!("backend returned a verdict unfit for {}", task.kind()),
        ));
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_constrained_reply() {
        let v = parse_reply(
            "Sure.\nlabel=inconsistent; confidence=0.8; rationale=title says typo; adds a blob",
            TaskKind::PrConsistency,
        )
        .unwrap();
        assert_eq!(v.label, VerdictLabel::Inconsistent);
        assert_eq!(v.confidence, 0.8);
        assert_eq!(v.rationale, "title says typo; adds a blob");
        assert!(!v.degraded);
    }

    #[test]
    fn parse_rejects_bad_replies() {
        assert!(parse_reply("consistent", TaskKind::PrConsistency).is_none());
        assert!(parse_reply("label=maybe; confidence=0.5; rationale=x", TaskKind::PrConsistency).is_none());
        assert!(parse_reply("label=test; confidence=1.5; rationale=x", TaskKind::BinaryContext).is_none());
        assert!(parse_reply("label=test; rationale=x", TaskKind::BinaryContext).is_none());
    }

    #[test]
    fn parse_context_and_note() {
        let v = parse_reply("label=Asset; confidence=1; rationale=icons", TaskKind::BinaryContext).unwrap();
        assert_eq!(v.label, VerdictLabel::Context(FileContext::Asset));
        let v = parse_reply("label=note; confidence=0.4; rationale=uses curl | sh", TaskKind::CiCommentary)
            .unwrap();
        assert_eq!(v.label, VerdictLabel::Note("uses curl | sh".into()));
    }

    #[test]
    fn template_rendering() {
        let slots = BTreeMap::from([("a", "1".to_string())]);
        assert_eq!(render_template("x {{a}} y {{ a }}", &slots).unwrap(), "x 1 y 1");
        assert!(render_template("{{b}}", &slots).is_err());
        assert!(render_template("{{a", &slots).is_err());
    }

    #[test]
    fn every_template_renders() {
        let tasks = [
            SemanticTask::PrConsistency {
                title: "t".into(),
                body: String::new(),
                diff: vec![],
            },
            SemanticTask::BinaryContext {
                path: "a.bin".into(),
                listing: vec![],
            },
            SemanticTask::CiCommentary {
                path: "ci.yml".into(),
                workflow: "on: push".into(),
            },
        ];
        for t in tasks {
            let p = t.render_prompt().unwrap();
            assert!(!p.contains("{{"), "{p}");
        }
    }

    #[test]
    fn invalid_tasks_rejected() {
        let t = SemanticTask::PrConsistency {
            title: " ".into(),
            body: String::new(),
            diff: vec![],
        };
        assert!(matches!(
            assess(&t, &MockBackend),
            Err(SemanticError::InvalidTask(_))
        ));
        let t = SemanticTask::CiCommentary {
            path: "a".into(),
            workflow: String::new(),
        };
        assert!(assess(&t, &MockBackend).is_err());
    }

    struct Wrong;
    impl SemanticBackend for Wrong {
        fn name(&self) -> &str {
            "wrong"
        }
        fn judge(&self, _: &SemanticTask) -> Result<SemanticVerdict, SemanticError> {
            Ok(SemanticVerdict {
                label: VerdictLabel::Note("?".into()),
                confidence: 1.0,
                rationale: String::new(),
                degraded: false,
            })
        }
    }

    #[test]
    fn mismatched_label_degrades() {
        let t = SemanticTask::BinaryContext {
            path: "tests/x.bin".into(),
            listing: vec![],
        };
        let v = assess(&t, &Wrong).unwrap();
        assert!(v.degraded);
        assert_eq!(v.label, VerdictLabel::Context(FileContext::Test));
    }
}
