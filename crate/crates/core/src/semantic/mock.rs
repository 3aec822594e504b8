use super::{SemanticBackend, SemanticTask, SemanticVerdict, VerdictLabel};
use crate::error::SemanticError;
use crate::scan::{self, FileContext};

/// Deterministic rule-based backend. Identical tasks always produce
/// identical verdicts.
///
/// Rules:
/// - a PR whose title only claims documentation or typo work but whose diff
///   adds a binary file is inconsistent; everything else is consistent.
/// - binary context follows the path rules, except that a file in an
///   otherwise unclassified directory next to test scripts is a test file.
/// - CI commentary counts `uses:` references not pinned to a commit SHA.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockBackend;

const COSMETIC_WORDS: &[&str] = &[
    "typo", "typos", "doc", "docs", "documentation", "readme", "spelling", "wording", "comment",
    "comments",
];

fn cosmetic_title(title: &str) -> bool {
    title
        .to_ascii_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .any(|w| COSMETIC_WORDS.contains(&w))
}

fn looks_like_test_script(path: &str) -> bool {
    let name = path.rsplit('/').next().unwrap_or(path).to_ascii_lowercase();
    name.starts_with("test_") || name.starts_with("test-") || name.ends_with("_test.c") || name.ends_with(".test")
}

impl SemanticBackend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn judge(&self, task: &SemanticTask) -> Result<SemanticVerdict, SemanticError> {
        let verdict = match task {
            SemanticTask::PrConsistency { title, diff, .. } => {
                let binary_added = diff.iter().any(|d| d.is_binary);
                if binary_added && cosmetic_title(title) {
                    SemanticVerdict {
                        label: VerdictLabel::Inconsistent,
                        confidence: 0.9,
                        rationale: "title describes a cosmetic change but the diff adds binary content"
                            .into(),
                        degraded: false,
                    }
                } else {
                    SemanticVerdict {
                        label: VerdictLabel::Consistent,
                        confidence: if diff.is_empty() { 1.0 } else { 0.7 },
                        rationale: "description does not contradict the changed files".into(),
                        degraded: false,
                    }
                }
            }
            SemanticTask::BinaryContext { path, listing } => {
                let mut context = scan::classify_path(path);
                if context == FileContext::Other && listing.iter().any(|p| looks_like_test_script(p)) {
                    context = FileContext::Test;
                }
                SemanticVerdict {
                    label: VerdictLabel::Context(context),
                    confidence: 0.8,
                    rationale: format!("{path} sits among {} neighbouring files", listing.len()),
                    degraded: false,
                }
            }
            SemanticTask::CiCommentary { workflow, .. } => {
                let refs: Vec<&str> = workflow
                    .lines()
                    .filter_map(|l| l.trim().trim_start_matches("- ").strip_prefix("uses:"))
                    .map(|r| r.trim().trim_matches(|c| c == '"' || c == '\''))
                    .filter(|r| !r.starts_with("./"))
                    .collect();
                let unpinned = refs
                    .iter()
                    .filter(|r| {
                        r.rsplit_once('@').map_or(true, |(_, v)| {
                            !(v.len() == 40 && v.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)))
                        })
                    })
                    .count();
                let note = format!(
                    "{} action references, {unpinned} not pinned to a commit SHA",
                    refs.len()
                );
                SemanticVerdict {
                    label: VerdictLabel::Note(note.clone()),
                    confidence: 0.6,
                    rationale: note,
                    degraded: false,
                }
            }
        };
        Ok(verdict)
    }
}
