//! Repository file-tree scanning: binary detection, functional context
//! classification, and the payload concealment metrics P.1–P.6.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tracing::warn;
use walkdir::WalkDir;

use crate::error::ScanError;
use crate::semantic::{self, SemanticBackend, SemanticTask, VerdictLabel};

/// Number of leading bytes inspected by the content sniffer.
pub const SNIFF_LEN: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FileContext {
    Test,
    Documentation,
    Code,
    Asset,
    Other,
}

impl FileContext {
    pub const ALL: [FileContext; 5] = [
        FileContext::Test,
        FileContext::Documentation,
        FileContext::Code,
        FileContext::Asset,
        FileContext::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FileContext::Test => "test",
            FileContext::Documentation => "documentation",
            FileContext::Code => "code",
            FileContext::Asset => "asset",
            FileContext::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<FileContext> {
        let s = s.trim().to_ascii_lowercase();
        FileContext::ALL.into_iter().find(|c| {
            c.as_str() == s || (s == "docs" && *c == FileContext::Documentation)
        })
    }
}

impl fmt::Display for FileContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Extension and directory-name rules driving binary detection and context
/// classification. Extensions include the leading dot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanRules {
    pub binary_extensions: BTreeSet<String>,
    pub test_segments: BTreeSet<String>,
    pub doc_segments: BTreeSet<String>,
    pub doc_extensions: BTreeSet<String>,
    pub asset_segments: BTreeSet<String>,
    pub code_extensions: BTreeSet<String>,
    pub code_segments: BTreeSet<String>,
}

impl Default for ScanRules {
    fn default() -> Self {
        ScanRules {
            binary_extensions: set(&[
                ".bin", ".so", ".o", ".a", ".dll", ".exe", ".png", ".jpg", ".jpeg", ".gif",
                ".ico", ".pdf", ".zip", ".gz", ".xz", ".bz2", ".tar", ".jar", ".class", ".wasm",
                ".woff", ".woff2", ".ttf", ".db", ".sqlite",
            ]),
            test_segments: set(&["test", "tests", "testdata", "testing", "spec", "specs", "fixtures", "t"]),
            doc_segments: set(&["doc", "docs", "documentation", "man", "manual"]),
            doc_extensions: set(&[".md", ".rst", ".txt", ".adoc"]),
            asset_segments: set(&[
                "asset", "assets", "images", "img", "icons", "media", "static", "resources",
            ]),
            code_extensions: set(&[
                ".c", ".h", ".cpp", ".hpp", ".cc", ".rs", ".go", ".py", ".js", ".ts", ".java",
                ".sh", ".m4", ".ac", ".am", ".cmake", ".mk",
            ]),
            code_segments: set(&["src", "lib", "include"]),
        }
    }
}

impl ScanRules {
    /// Loads rules from a TOML file; omitted keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, ScanError> {
        toml::from_str(text).map_err(|e| ScanError::Rules(e.to_string()))
    }

    pub fn is_binary(&self, prefix: &[u8], path: &str) -> bool {
        if extension(path).is_some_and(|ext| self.binary_extensions.contains(&ext)) {
            return true;
        }
        looks_binary(prefix)
    }

    pub fn classify_path(&self, path: &str) -> FileContext {
        let segments: Vec<String> = path
            .split('/')
            .filter(|s| !s.is_empty())
            .map(str::to_ascii_lowercase)
            .collect();
        let has_segment = |names: &BTreeSet<String>| segments.iter().any(|s| names.contains(s));
        let ext = extension(path);
        let has_ext = |exts: &BTreeSet<String>| ext.as_ref().is_some_and(|e| exts.contains(e));

        if has_segment(&self.test_segments) {
            FileContext::Test
        } else if has_segment(&self.doc_segments) || has_ext(&self.doc_extensions) {
            FileContext::Documentation
        } else if has_segment(&self.asset_segments) {
            FileContext::Asset
        } else if has_ext(&self.code_extensions) || has_segment(&self.code_segments) {
            FileContext::Code
        } else {
            FileContext::Other
        }
    }
}

/// Lowercased extension of the final path component, with the leading dot.
fn extension(path: &str) -> Option<String> {
    let file = path.rsplit('/').next()?;
    let idx = file.rfind('.')?;
    if idx == 0 && file.len() > 1 && !file[1..].contains('.') {
        // dotfile such as `.gitignore` with no further extension
        return None;
    }
    Some(file[idx..].to_ascii_lowercase())
}

/// Content sniff: a NUL byte, or more than 30% of bytes that are neither
/// printable ASCII, tab/newline/CR, nor part of a valid UTF-8 sequence.
fn looks_binary(prefix: &[u8]) -> bool {
    if prefix.is_empty() {
        return false;
    }
    if prefix.contains(&0) {
        return true;
    }
    let mut non_text = 0usize;
    for chunk in prefix.utf8_chunks() {
        for ch in chunk.valid().chars() {
            let text = matches!(ch, '\t' | '\n' | '\r') || (' '..='~').contains(&ch) || !ch.is_ascii();
            if !text {
                non_text += ch.len_utf8();
            }
        }
        non_text += chunk.invalid().len();
    }
    non_text * 10 > prefix.len() * 3
}

/// Binary detection with the default rules.
pub fn is_binary(prefix: &[u8], path: &str) -> bool {
    ScanRules::default().is_binary(prefix, path)
}

/// Context classification with the default rules.
pub fn classify_path(path: &str) -> FileContext {
    ScanRules::default().classify_path(path)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryFile {
    pub path: String,
    /// Final context (semantic verdict when one overrode the path rules).
    pub context: FileContext,
    /// Context assigned by the path rules alone.
    pub static_context: FileContext,
    pub size: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanResult {
    /// Sorted by path.
    pub binary_files: Vec<BinaryFile>,
    pub total_binary_count: usize,
    pub per_context_flags: BTreeMap<FileContext, bool>,
    pub warnings: Vec<String>,
}

impl ScanResult {
    fn from_files(mut binary_files: Vec<BinaryFile>, warnings: Vec<String>) -> Self {
        binary_files.sort_by(|a, b| a.path.cmp(&b.path));
        let mut per_context_flags: BTreeMap<FileContext, bool> =
            FileContext::ALL.into_iter().map(|c| (c, false)).collect();
        for f in &binary_files {
            per_context_flags.insert(f.context, true);
        }
        ScanResult {
            total_binary_count: binary_files.len(),
            binary_files,
            per_context_flags,
            warnings,
        }
    }

    pub fn count_in(&self, context: FileContext) -> usize {
        self.binary_files.iter().filter(|f| f.context == context).count()
    }

    pub fn has(&self, context: FileContext) -> bool {
        self.per_context_flags.get(&context).copied().unwrap_or(false)
    }
}

/// Raw payload concealment values: P.1–P.5 flags and the P.6 count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadRaw {
    pub in_test: bool,
    pub in_docs: bool,
    pub in_code: bool,
    pub in_assets: bool,
    pub in_other: bool,
    pub total_binaries: usize,
}

impl From<&ScanResult> for PayloadRaw {
    fn from(scan: &ScanResult) -> Self {
        PayloadRaw {
            in_test: scan.has(FileContext::Test),
            in_docs: scan.has(FileContext::Documentation),
            in_code: scan.has(FileContext::Code),
            in_assets: scan.has(FileContext::Asset),
            in_other: scan.has(FileContext::Other),
            total_binaries: scan.total_binary_count,
        }
    }
}

fn read_prefix(path: &Path) -> std::io::Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(SNIFF_LEN);
    File::open(path)?
        .take(SNIFF_LEN as u64)
        .read_to_end(&mut buf)?;
    Ok(buf)
}

/// Walks `root` (skipping `.git` and never following symlinks) and collects
/// every binary file with its context.
pub fn scan_tree(
    root: &Path,
    rules: &ScanRules,
    semantic: Option<&dyn SemanticBackend>,
) -> Result<ScanResult, ScanError> {
    std::fs::read_dir(root).map_err(|source| ScanError::Root {
        path: root.to_path_buf(),
        source,
    })?;

    let mut all_files: Vec<String> = Vec::new();
    let mut binaries: Vec<(String, u64)> = Vec::new();
    let mut warnings = Vec::new();

    let walker = WalkDir::new(root)
        .follow_links(false)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || e.file_name() != ".git");
    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                warn!("scan: {e}");
                warnings.push(format!("unreadable entry skipped: {e}"));
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .expect("walk stays under root")
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        let prefix = match read_prefix(entry.path()) {
            Ok(p) => p,
            Err(e) => {
                warn!("scan: cannot read {rel}: {e}");
                warnings.push(format!("unreadable file skipped: {rel}: {e}"));
                continue;
            }
        };
        all_files.push(rel.clone());
        if rules.is_binary(&prefix, &rel) {
            let size = entry.metadata().map(|m| m.len()).unwrap_or(prefix.len() as u64);
            binaries.push((rel, size));
        }
    }

    let mut files = Vec::with_capacity(binaries.len());
    for (path, size) in binaries {
        let static_context = rules.classify_path(&path);
        let mut context = static_context;
        if let Some(backend) = semantic {
            let task = SemanticTask::BinaryContext {
                path: path.clone(),
                listing: sibling_listing(&all_files, &path),
            };
            match semantic::assess(&task, backend) {
                Ok(v) => {
                    if v.degraded {
                        warnings.push(format!("semantic-degraded: {path}: {}", v.rationale));
                    }
                    if let VerdictLabel::Context(c) = v.label {
                        if c != static_context && !v.degraded {
                            warnings.push(format!(
                                "context override: {path}: static={static_context} semantic={c}"
                            ));
                            context = c;
                        }
                    }
                }
                Err(e) => warnings.push(format!("semantic-unavailable: {path}: {e}")),
            }
        }
        files.push(BinaryFile {
            path,
            context,
            static_context,
            size,
        });
    }
    Ok(ScanResult::from_files(files, warnings))
}

/// Up to 20 other files sharing the binary's directory.
fn sibling_listing(all: &[String], path: &str) -> Vec<String> {
    let dir = path.rsplit_once('/').map(|(d, _)| d).unwrap_or("");
    all.iter()
        .filter(|p| p.as_str() != path)
        .filter(|p| p.rsplit_once('/').map(|(d, _)| d).unwrap_or("") == dir)
        .take(20)
        .cloned()
        .collect()
}

/// Scans a tree and reduces it to P.1–P.6.
pub fn payload_metrics(
    root: &Path,
    rules: &ScanRules,
    semantic: Option<&dyn SemanticBackend>,
) -> Result<(PayloadRaw, ScanResult), ScanError> {
    let scan = scan_tree(root, rules, semantic)?;
    Ok((PayloadRaw::from(&scan), scan))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nul_byte_is_binary() {
        assert!(is_binary(b"hello\x00world", "data.dat"));
    }

    #[test]
    fn plain_text_is_not_binary() {
        assert!(!is_binary(b"plain ascii text", "README"));
        assert!(!is_binary("grüße, 你好\n".as_bytes(), "notes"));
    }

    #[test]
    fn extension_precedes_sniff() {
        assert!(is_binary(b"", "tests/blob.xz"));
        assert!(is_binary(b"text", "a/B.PNG"));
        assert!(!is_binary(b"", "empty.dat"));
    }

    #[test]
    fn non_printable_ratio_threshold() {
        // 3 of 10 bytes non-text: exactly 30%, not above.
        let mut v = b"abcdefg".to_vec();
        v.extend([0x01, 0x02, 0x03]);
        assert!(!is_binary(&v, "x"));
        v.push(0x04);
        assert!(is_binary(&v, "x"));
        // invalid UTF-8 counts as non-text
        assert!(is_binary(&[0xff, 0xfe, 0xfd, b'a'], "x"));
    }

    #[test]
    fn classification_rules() {
        assert_eq!(classify_path("tests/files/good-1.xz"), FileContext::Test);
        assert_eq!(classify_path("docs/logo.png"), FileContext::Documentation);
        assert_eq!(classify_path("vendor/blob.dat"), FileContext::Other);
        assert_eq!(classify_path("assets/icon.png"), FileContext::Asset);
        assert_eq!(classify_path("src/blob.dat"), FileContext::Code);
        assert_eq!(classify_path("build/config.m4"), FileContext::Code);
        assert_eq!(classify_path("NEWS.md"), FileContext::Documentation);
        // test beats documentation
        assert_eq!(classify_path("docs/tests/x.bin"), FileContext::Test);
        // documentation beats asset
        assert_eq!(classify_path("static/manual.txt"), FileContext::Documentation);
    }

    #[test]
    fn extension_helper() {
        assert_eq!(extension("a/b.tar.GZ").as_deref(), Some(".gz"));
        assert_eq!(extension("a/.gitignore"), None);
        assert_eq!(extension("Makefile"), None);
        assert_eq!(extension("a.b/c"), None);
    }

    #[test]
    fn rules_from_toml_overlay() {
        let rules = ScanRules::from_toml_str("code_segments = [\"src\", \"vendor\"]\n").unwrap();
        assert_eq!(rules.classify_path("vendor/blob.dat"), FileContext::Code);
        assert!(rules.binary_extensions.contains(".xz"));
        assert!(ScanRules::from_toml_str("code_segments = 3").is_err());
    }

    #[test]
    fn context_parse() {
        assert_eq!(FileContext::parse("Test"), Some(FileContext::Test));
        assert_eq!(FileContext::parse("docs"), Some(FileContext::Documentation));
        assert_eq!(FileContext::parse("nope"), None);
    }
}
