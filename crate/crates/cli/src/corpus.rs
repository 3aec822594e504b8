use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hsbr_core::ci::CiConfig;
use hsbr_core::debian::{
    build_graph, parse_mapping, parse_packages_index, read_packages_file, DependencyGraph,
    RepoPackageMapping,
};
use hsbr_core::forge::{load_fixture, RepositorySnapshot, MANIFEST_FILE};
use hsbr_core::pipeline::{evaluate_repository, Evaluation, EvaluationInputs};
use hsbr_core::scan::ScanRules;
use hsbr_core::semantic::SemanticBackend;

use crate::error::{CliError, CliResult};

pub const REPOS_DIR: &str = "repos";
pub const MAPPING_FILE: &str = "mapping.tsv";
pub const PACKAGES_FILES: [&str; 2] = ["Packages", "Packages.gz"];

/// A fixture corpus directory: optional Debian data plus one snapshot
/// directory per repository under `repos/`.
pub struct Corpus {
    pub graph: Option<DependencyGraph>,
    pub mappings: BTreeMap<String, RepoPackageMapping>,
    /// Sorted by directory name.
    pub repos: Vec<(PathBuf, RepositorySnapshot)>,
}

pub fn load_graph(path: &Path) -> CliResult<DependencyGraph> {
    let text = read_packages_file(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(build_graph(parse_packages_index(&text)?))
}

pub fn load_mappings(path: &Path) -> CliResult<BTreeMap<String, RepoPackageMapping>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_mapping(&text)?
        .into_iter()
        .map(|m| (m.repo_id.clone(), m))
        .collect())
}

pub fn load_corpus(root: &Path) -> CliResult<Corpus> {
    if !root.is_dir() {
        return Err(CliError::missing_path("corpus directory", root));
    }
    let graph = PACKAGES_FILES
        .iter()
        .map(|f| root.join(f))
        .find(|p| p.is_file())
        .map(|p| load_graph(&p))
        .transpose()?;
    let mapping_path = root.join(MAPPING_FILE);
    let mappings = if mapping_path.is_file() {
        load_mappings(&mapping_path)?
    } else {
        BTreeMap::new()
    };

    let repos_dir = root.join(REPOS_DIR);
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&repos_dir)
        .map_err(|e| CliError::validation(format!("cannot list {}: {e}", repos_dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST_FILE).is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::validation(format!(
            "no repository fixtures under {}",
            repos_dir.display()
        )));
    }
    let mut repos = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let snap = load_fixture(&dir)?;
        repos.push((dir, snap));
    }
    Ok(Corpus {
        graph,
        mappings,
        repos,
    })
}

pub struct EvalSettings<'a> {
    pub scan_rules: &'a ScanRules,
    pub ci_config: &'a CiConfig,
    pub semantic: Option<&'a dyn SemanticBackend>,
    pub workers: usize,
}

/// Evaluates every repository with a bounded worker pool; results keep the
/// corpus order.
pub fn evaluate_corpus(corpus: &Corpus, settings: &EvalSettings<'_>) -> CliResult<Vec<Evaluation>> {
    let n = corpus.repos.len();
    let workers = settings.workers.clamp(1, n.max(1));
    let mut slots: Vec<Option<CliResult<Evaluation>>> = (0..n).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let (dir, snap) = &corpus.repos[i];
                let inputs = EvaluationInputs {
                    snapshot: snap,
                    fixture_dir: Some(dir),
                    graph: corpus.graph.as_ref(),
                    mapping: corpus.mappings.get(&snap.repo_id),
                    scan_rules: settings.scan_rules,
                    ci_config: settings.ci_config,
                    semantic: settings.semantic,
                };
                let r = evaluate_repository(&inputs).map_err(CliError::from);
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every repository evaluated"))
        .collect()
}
