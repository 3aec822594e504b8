//! Debian package index ingestion, the dependency graph, and the dependency
//! impact metrics D.1–D.4.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::DebianError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Priority {
    Required,
    Important,
    Standard,
    Optional,
    Extra,
    Unknown,
}

impl Priority {
    /// Required, important and standard packages form the high-priority set.
    pub fn is_high(self) -> bool {
        matches!(self, Priority::Required | Priority::Important | Priority::Standard)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Priority::Required => "required",
            Priority::Important => "important",
            Priority::Standard => "standard",
            Priority::Optional => "optional",
            Priority::Extra => "extra",
            Priority::Unknown => "unknown",
        }
    }
}

impl FromStr for Priority {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "required" => Priority::Required,
            "important" => Priority::Important,
            "standard" => Priority::Standard,
            "optional" => Priority::Optional,
            "extra" => Priority::Extra,
            _ => Priority::Unknown,
        })
    }
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One alternative-list in a dependency field, e.g. `c | d`.
pub type Clause = Vec<String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageRecord {
    pub name: String,
    pub priority: Priority,
    pub essential: bool,
    pub depends: Vec<Clause>,
    pub pre_depends: Vec<Clause>,
    pub source: Option<String>,
}

impl PackageRecord {
    pub fn new(name: impl Into<String>) -> Self {
        PackageRecord {
            name: name.into(),
            priority: Priority::Unknown,
            essential: false,
            depends: Vec::new(),
            pre_depends: Vec::new(),
            source: None,
        }
    }

    /// Renders the record as an index stanza (without the trailing blank line).
    pub fn to_stanza(&self) -> String {
        let mut out = format!("Package: {}\n", self.name);
        if let Some(src) = &self.source {
            out.push_str(&format!("Source: {src}\n"));
        }
        if self.priority != Priority::Unknown {
            out.push_str(&format!("Priority: {}\n", self.priority));
        }
        if self.essential {
            out.push_str("Essential: yes\n");
        }
        let render = |clauses: &[Clause]| {
            clauses
                .iter()
                .map(|c| c.join(" | "))
                .collect::<Vec<_>>()
                .join(", ")
        };
        if !self.pre_depends.is_empty() {
            out.push_str(&format!("Pre-Depends: {}\n", render(&self.pre_depends)));
        }
        if !self.depends.is_empty() {
            out.push_str(&format!("Depends: {}\n", render(&self.depends)));
        }
        out
    }

    fn dependency_names(&self) -> impl Iterator<Item = &String> {
        self.pre_depends
            .iter()
            .chain(self.depends.iter())
            .flat_map(|c| c.iter())
    }
}

/// Parses one alternative, stripping version constraints, architecture
/// qualifiers and restriction lists.
fn parse_alternative(alt: &str) -> Result<String, String> {
    let alt = alt.trim();
    let end = alt
        .find(|c: char| c.is_whitespace() || c == '(' || c == '[' || c == '<')
        .unwrap_or(alt.len());
    let (name, rest) = alt.split_at(end);
    let name = name.split(':').next().unwrap_or_default();
    if name.is_empty() {
        return Err(format!("empty package name in `{alt}`"));
    }

    // Whatever follows the name must be balanced bracketed groups.
    let mut rest = rest.trim_start();
    while let Some(open) = rest.chars().next() {
        let close = match open {
            '(' => ')',
            '[' => ']',
            '<' => '>',
            _ => return Err(format!("unexpected `{rest}` after `{name}`")),
        };
        let Some(idx) = rest.find(close) else {
            return Err(format!("unterminated `{open}` in `{alt}`"));
        };
        rest = rest[idx + 1..].trim_start();
    }
    Ok(name.to_string())
}

fn parse_relation(value: &str) -> Result<Vec<Clause>, String> {
    let value = value.trim();
    if value.is_empty() {
        return Ok(Vec::new());
    }
    let mut clauses = Vec::new();
    let parts: Vec<&str> = value.split(',').collect();
    for (i, part) in parts.iter().enumerate() {
        // A single trailing comma is tolerated.
        if part.trim().is_empty() && i == parts.len() - 1 && i > 0 {
            continue;
        }
        if part.trim().is_empty() {
            return Err("empty dependency clause".to_string());
        }
        let clause = part
            .split('|')
            .map(parse_alternative)
            .collect::<Result<Vec<_>, _>>()?;
        clauses.push(clause);
    }
    Ok(clauses)
}

/// Parses a Debian `Packages` index. Stanzas without a `Package` field are
/// ignored.
pub fn parse_packages_index(text: &str) -> Result<Vec<PackageRecord>, DebianError> {
    let mut records = Vec::new();
    // (field name, value, line number of the field)
    let mut fields: Vec<(String, String, usize)> = Vec::new();

    let flush = |fields: &mut Vec<(String, String, usize)>,
                 records: &mut Vec<PackageRecord>|
     -> Result<(), DebianError> {
        if fields.is_empty() {
            return Ok(());
        }
        let name = fields
            .iter()
            .find(|(k, _, _)| k.eq_ignore_ascii_case("package"))
            .map(|(_, v, _)| v.trim().to_string());
        if let Some(name) = name.filter(|n| !n.is_empty()) {
            let mut rec = PackageRecord::new(name.clone());
            for (key, value, line) in fields.iter() {
                match key.to_ascii_lowercase().as_str() {
                    "priority" => rec.priority = value.parse().unwrap_or(Priority::Unknown),
                    "essential" => rec.essential = value.trim().eq_ignore_ascii_case("yes"),
                    "source" => {
                        let src = value.split_whitespace().next().unwrap_or_default();
                        if !src.is_empty() {
                            rec.source = Some(src.to_string());
                        }
                    }
                    "depends" | "pre-depends" => {
                        let clauses =
                            parse_relation(value).map_err(|reason| DebianError::Depends {
                                stanza: name.clone(),
                                line: *line,
                                reason,
                            })?;
                        if key.eq_ignore_ascii_case("depends") {
                            rec.depends = clauses;
                        } else {
                            rec.pre_depends = clauses;
                        }
                    }
                    _ => {}
                }
            }
            records.push(rec);
        }
        fields.clear();
        Ok(())
    };

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            flush(&mut fields, &mut records)?;
            continue;
        }
        if line.starts_with(' ') || line.starts_with('\t') {
            match fields.last_mut() {
                Some((_, value, _)) => {
                    value.push(' ');
                    value.push_str(line.trim());
                }
                None => return Err(DebianError::FieldLine { line: lineno }),
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(DebianError::FieldLine { line: lineno });
        };
        fields.push((key.trim().to_string(), value.trim().to_string(), lineno));
    }
    flush(&mut fields, &mut records)?;
    Ok(records)
}

/// Reads a `Packages` file, transparently decompressing gzip input.
pub fn read_packages_file(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut text = String::new();
        GzDecoder::new(bytes.as_slice()).read_to_string(&mut text)?;
        Ok(text)
    } else {
        String::from_utf8(bytes)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

/// Package dependency graph. An edge `a -> b` means `a` depends on `b`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DependencyGraph {
    nodes: BTreeMap<String, PackageRecord>,
    stubs: BTreeSet<String>,
    forward: BTreeMap<String, BTreeSet<String>>,
    reverse: BTreeMap<String, BTreeSet<String>>,
}

/// Builds the graph from parsed records. Later duplicates replace earlier
/// ones; dependency targets with no record become stub nodes.
pub fn build_graph(records: impl IntoIterator<Item = PackageRecord>) -> DependencyGraph {
    let mut nodes: BTreeMap<String, PackageRecord> = BTreeMap::new();
    for rec in records {
        nodes.insert(rec.name.clone(), rec);
    }

    let mut forward: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut reverse: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut stubs = BTreeSet::new();
    for name in nodes.keys() {
        forward.entry(name.clone()).or_default();
        reverse.entry(name.clone()).or_default();
    }
    let mut stub_records = Vec::new();
    for rec in nodes.values() {
        for dep in rec.dependency_names() {
            if !nodes.contains_key(dep) && stubs.insert(dep.clone()) {
                stub_records.push(PackageRecord::new(dep.clone()));
                forward.entry(dep.clone()).or_default();
                reverse.entry(dep.clone()).or_default();
            }
            forward.get_mut(&rec.name).unwrap().insert(dep.clone());
            reverse.get_mut(dep).unwrap().insert(rec.name.clone());
        }
    }
    for stub in stub_records {
        nodes.insert(stub.name.clone(), stub);
    }

    DependencyGraph {
        nodes,
        stubs,
        forward,
        reverse,
    }
}

impl DependencyGraph {
    pub fn get(&self, name: &str) -> Option<&PackageRecord> {
        self.nodes.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.nodes.contains_key(name)
    }

    pub fn is_stub(&self, name: &str) -> bool {
        self.stubs.contains(name)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn packages(&self) -> impl Iterator<Item = &PackageRecord> {
        self.nodes.values()
    }

    /// Direct dependencies of `name`.
    pub fn dependencies(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.forward.get(name)
    }

    /// Direct dependents of `name`.
    pub fn dependents(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.reverse.get(name)
    }

    /// Every package that reaches `pkg` through one or more dependency
    /// edges, excluding `pkg` itself.
    pub fn reverse_closure(&self, pkg: &str) -> Result<BTreeSet<String>, DebianError> {
        if !self.contains(pkg) {
            return Err(DebianError::UnknownPackage(pkg.to_string()));
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([pkg]);
        while let Some(cur) = queue.pop_front() {
            for dependent in &self.reverse[cur] {
                if dependent != pkg && seen.insert(dependent.clone()) {
                    queue.push_back(dependent);
                }
            }
        }
        Ok(seen)
    }
}

/// Binary packages produced by one repository.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoPackageMapping {
    pub repo_id: String,
    pub built_packages: Vec<String>,
}

/// Parses a mapping file: one `repo_id<TAB>pkg1,pkg2,...` line per
/// repository. Blank lines and `#` comments are skipped.
pub fn parse_mapping(text: &str) -> Result<Vec<RepoPackageMapping>, DebianError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (repo, pkgs) = line.split_once('\t').unwrap_or((line, ""));
        let repo = repo.trim();
        if repo.is_empty() {
            return Err(DebianError::Mapping {
                line: idx + 1,
                reason: "empty repository id".to_string(),
            });
        }
        let built_packages = pkgs
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(String::from)
            .collect();
        out.push(RepoPackageMapping {
            repo_id: repo.to_string(),
            built_packages,
        });
    }
    Ok(out)
}

/// Raw dependency impact counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyImpact {
    /// Built packages with high priority.
    pub self_priority: usize,
    /// Built packages marked essential.
    pub self_essential: usize,
    /// Distinct high-priority packages that transitively depend on a built package.
    pub dependent_priority: usize,
    /// Distinct essential packages that transitively depend on a built package.
    pub dependent_essential: usize,
    pub warnings: Vec<String>,
}

pub fn dependency_impact_metrics(
    graph: &DependencyGraph,
    mapping: &RepoPackageMapping,
) -> DependencyImpact {
    let mut impact = DependencyImpact::default();
    let built: BTreeSet<&str> = mapping.built_packages.iter().map(String::as_str).collect();
    let mut dependents: BTreeSet<String> = BTreeSet::new();

    for pkg in &built {
        let Some(rec) = graph.get(pkg) else {
            impact.warnings.push(format!(
                "{}: built package `{pkg}` not in dependency graph; skipped",
                mapping.repo_id
            ));
            continue;
        };
        if rec.priority.is_high() {
            impact.self_priority += 1;
        }
        if rec.essential {
            impact.self_essential += 1;
        }
        dependents.extend(graph.reverse_closure(pkg).expect("node exists"));
    }

    for name in dependents.iter().filter(|n| !built.contains(n.as_str())) {
        let rec = &graph.nodes[name];
        if rec.priority.is_high() {
            impact.dependent_priority += 1;
        }
        if rec.essential {
            impact.dependent_essential += 1;
        }
    }
    impact
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_full_stanza() {
        let recs = parse_packages_index(
            "Package: a\nPriority: required\nEssential: yes\nDepends: b (>= 1.0), c | d\n",
        )
        .unwrap();
        assert_eq!(recs.len(), 1);
        let a = &recs[0];
        assert_eq!(a.name, "a");
        assert_eq!(a.priority, Priority::Required);
        assert!(a.essential);
        assert_eq!(
            a.depends,
            vec![vec!["b".to_string()], vec!["c".to_string(), "d".to_string()]]
        );
    }

    #[test]
    fn defaults_for_bare_stanza() {
        let recs = parse_packages_index("Package: z\n").unwrap();
        assert_eq!(recs, vec![PackageRecord::new("z")]);
    }

    #[test]
    fn empty_input_is_empty() {
        assert!(parse_packages_index("").unwrap().is_empty());
        assert!(parse_packages_index("\n\n").unwrap().is_empty());
    }

    #[test]
    fn strips_arch_qualifiers_and_restrictions() {
        let recs = parse_packages_index(
            "Package: x\nPre-Depends: libc6:any (>= 2.34) [amd64], python3:native <!nocheck>\nEssential: no\n",
        )
        .unwrap();
        assert_eq!(
            recs[0].pre_depends,
            vec![vec!["libc6".to_string()], vec!["python3".to_string()]]
        );
        assert!(!recs[0].essential);
    }

    #[test]
    fn continuation_lines_join() {
        let recs =
            parse_packages_index("Package: x\nDepends: a,\n b (<< 3),\n c\nDescription: y\n")
                .unwrap();
        assert_eq!(recs[0].depends.len(), 3);
    }

    #[test]
    fn malformed_depends_reports_stanza_and_line() {
        let err = parse_packages_index("Package: ok\n\nPackage: bad\nDepends: a, , b\n").unwrap_err();
        match err {
            DebianError::Depends { stanza, line, .. } => {
                assert_eq!(stanza, "bad");
                assert_eq!(line, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_packages_index("Package: bad\nDepends: a (>= 1\n").is_err());
        assert!(parse_packages_index("Package: bad\nDepends: a | | b\n").is_err());
    }

    #[test]
    fn stanza_without_package_is_skipped() {
        let recs = parse_packages_index("Version: 1\n\nPackage: y\n").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].name, "y");
    }

    #[test]
    fn stub_nodes_materialize() {
        let mut a = PackageRecord::new("a");
        a.depends = vec![vec!["b".into()]];
        let g = build_graph([a]);
        assert!(g.is_stub("b"));
        assert_eq!(g.get("b").unwrap().priority, Priority::Unknown);
        assert_eq!(g.dependents("b").unwrap(), &names(&["a"]));
        assert_eq!(g.dependencies("a").unwrap(), &names(&["b"]));
    }

    #[test]
    fn chain_transpose() {
        let recs = parse_packages_index("Package: a\nDepends: b\n\nPackage: b\nDepends: c\n\nPackage: c\n")
            .unwrap();
        let g = build_graph(recs);
        assert_eq!(g.dependents("c").unwrap(), &names(&["b"]));
        assert_eq!(g.dependents("b").unwrap(), &names(&["a"]));
        assert!(g.dependents("a").unwrap().is_empty());
        assert_eq!(g.reverse_closure("c").unwrap(), names(&["a", "b"]));
    }

    #[test]
    fn closure_on_cycle_and_isolated() {
        let recs =
            parse_packages_index("Package: a\nDepends: b\n\nPackage: b\nDepends: a\n\nPackage: z\n")
                .unwrap();
        let g = build_graph(recs);
        assert_eq!(g.reverse_closure("a").unwrap(), names(&["b"]));
        assert!(g.reverse_closure("z").unwrap().is_empty());
        assert_eq!(
            g.reverse_closure("nope").unwrap_err(),
            DebianError::UnknownPackage("nope".into())
        );
    }

    #[test]
    fn duplicate_last_wins() {
        let recs =
            parse_packages_index("Package: a\nPriority: optional\n\nPackage: a\nPriority: required\n")
                .unwrap();
        let g = build_graph(recs);
        assert_eq!(g.get("a").unwrap().priority, Priority::Required);
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn impact_counts() {
        let text = "Package: liblz\nPriority: required\n\n\
                    Package: sshd\nPriority: optional\nEssential: yes\nDepends: liblz\n\n\
                    Package: tool\nPriority: optional\nDepends: liblz\n";
        let g = build_graph(parse_packages_index(text).unwrap());
        let m = RepoPackageMapping {
            repo_id: "xz".into(),
            built_packages: vec!["liblz".into()],
        };
        let d = dependency_impact_metrics(&g, &m);
        assert_eq!(
            (d.self_priority, d.self_essential, d.dependent_priority, d.dependent_essential),
            (1, 0, 0, 1)
        );
    }

    #[test]
    fn empty_mapping_is_zero() {
        let g = build_graph(Vec::new());
        let m = RepoPackageMapping {
            repo_id: "r".into(),
            built_packages: vec![],
        };
        assert_eq!(dependency_impact_metrics(&g, &m), DependencyImpact::default());
    }

    #[test]
    fn self_only_exposure() {
        let g = build_graph(parse_packages_index("Package: p\nPriority: required\nEssential: yes\n").unwrap());
        let m = RepoPackageMapping {
            repo_id: "r".into(),
            built_packages: vec!["p".into()],
        };
        let d = dependency_impact_metrics(&g, &m);
        assert_eq!(
            (d.self_priority, d.self_essential, d.dependent_priority, d.dependent_essential),
            (1, 1, 0, 0)
        );
    }

    #[test]
    fn unknown_built_package_warns() {
        let g = build_graph(Vec::new());
        let m = RepoPackageMapping {
            repo_id: "r".into(),
            built_packages: vec!["ghost".into()],
        };
        let d = dependency_impact_metrics(&g, &m);
        assert_eq!(d.self_priority, 0);
        assert_eq!(d.warnings.len(), 1);
        assert!(d.warnings[0].contains("ghost"));
    }

    #[test]
    fn built_packages_excluded_from_dependents() {
        // b depends on a; both built by the same repo.
        let text = "Package: a\nPriority: required\n\nPackage: b\nPriority: required\nDepends: a\n";
        let g = build_graph(parse_packages_index(text).unwrap());
        let m = RepoPackageMapping {
            repo_id: "r".into(),
            built_packages: vec!["a".into(), "b".into()],
        };
        let d = dependency_impact_metrics(&g, &m);
        assert_eq!(d.self_priority, 2);
        assert_eq!(d.dependent_priority, 0);
    }

    #[test]
    fn mapping_file() {
        let maps = parse_mapping("# repos\nxz\tliblzma5, xz-utils\nempty\t\nbare\n").unwrap();
        assert_eq!(maps.len(), 3);
        assert_eq!(maps[0].built_packages, vec!["liblzma5", "xz-utils"]);
        assert!(maps[1].built_packages.is_empty());
        assert!(maps[2].built_packages.is_empty());
        assert!(parse_mapping("\tpkg\n").is_err());
    }
}
