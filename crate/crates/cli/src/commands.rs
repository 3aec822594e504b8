use std::path::{Path, PathBuf};

use hsbr_core::ci::CiConfig;
use hsbr_core::debian::dependency_impact_metrics;
use hsbr_core::forge::{save_fixture, ClientConfig, FetchLimits, ForgeClient};
use hsbr_core::report::{csv_header_line, csv_row, emit_report, ReportFormat, REPORT_SCHEMA_VERSION};
use hsbr_core::scan::{payload_metrics, ScanRules};
use hsbr_core::scoring::{compute_corpus_stats, score_report, CorpusStats, ScoringContext};
use hsbr_core::semantic::{HttpBackend, HttpBackendConfig, MockBackend, SemanticBackend};
use hsbr_core::sensitivity::{metric_correlations, sensitivity_report};
use hsbr_core::{HsbrReport, Provenance, RawWeights, RiskThresholds, WeightTable, TOOL_VERSION};
use serde_json::json;
use tracing::info;

use crate::corpus::{evaluate_corpus, load_corpus, load_graph, load_mappings, EvalSettings};
use crate::error::{CliError, CliResult, ExitKind};
use crate::output::{slug, write_atomic};
use crate::{
    CalibrateArgs, Command, CorrelateArgs, FetchArgs, FormatChoice, IngestArgs, ReportArgs,
    RuleArgs, ScanArgs, ScoreArgs, SemanticArgs, SemanticChoice, SensitivityArgs,
};

pub const SUMMARY_FILE: &str = "summary.csv";

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::IngestDebian(a) => ingest_debian(a),
        Command::Fetch(a) => fetch(a),
        Command::Scan(a) => scan(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Score(a) => score(a),
        Command::Report(a) => report(a),
        Command::Sensitivity(a) => sensitivity(a),
        Command::Correlate(a) => correlate(a),
    }
}

fn require_file(what: &str, path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::missing_path(what, path))
    }
}

fn read_text(what: &str, path: &Path) -> CliResult<String> {
    require_file(what, path)?;
    std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))
}

fn pretty(value: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("json value");
    s.push('\n');
    s.into_bytes()
}

fn load_weights(path: Option<&Path>) -> CliResult<WeightTable> {
    match path {
        None => Ok(WeightTable::default()),
        Some(p) => {
            require_file("weight table", p)?;
            Ok(hsbr_core::validate_weights(&RawWeights::from_config_file(p)?)?)
        }
    }
}

struct Rules {
    scan: ScanRules,
    ci: CiConfig,
}

fn load_rules(args: &RuleArgs) -> CliResult<Rules> {
    let scan = match &args.scan_rules {
        Some(p) => ScanRules::from_toml_str(&read_text("scan rules", p)?)
            .map_err(|e| CliError::validation(e.to_string()))?,
        None => ScanRules::default(),
    };
    let ci = match &args.ci_config {
        Some(p) => CiConfig::from_toml_str(&read_text("CI config", p)?)
            .map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?,
        None => CiConfig::default(),
    };
    Ok(Rules { scan, ci })
}

fn semantic_backend(args: &SemanticArgs) -> CliResult<Option<Box<dyn SemanticBackend>>> {
    match args.semantic {
        SemanticChoice::Off if args.require_semantic => Err(CliError::validation(
            "--require-semantic needs --semantic mock or http",
        )),
        SemanticChoice::Off => Ok(None),
        SemanticChoice::Mock => Ok(Some(Box::new(MockBackend))),
        SemanticChoice::Http => Ok(Some(Box::new(HttpBackend::new(HttpBackendConfig::from_env(
            args.llm_model.clone(),
        ))))),
    }
}

fn backend_name(backend: Option<&dyn SemanticBackend>) -> String {
    backend.map_or_else(|| "off".to_string(), |b| b.name().to_string())
}

/// Fails with the semantic exit status when a required backend degraded.
fn check_semantic(required: bool, notes: &[String], repo: &str) -> CliResult<()> {
    if !required {
        return Ok(());
    }
    if let Some(n) = notes.iter().find(|n| n.starts_with("semantic-unavailable:")) {
        return Err(CliError::new(
            ExitKind::SemanticUnavailable,
            format!("{repo}: {n}"),
        ));
    }
    Ok(())
}

fn ingest_debian(args: IngestArgs) -> CliResult<()> {
    require_file("Packages index", &args.packages)?;
    let graph = load_graph(&args.packages)?;
    let mut repos = serde_json::Map::new();
    if let Some(path) = &args.mapping {
        require_file("mapping file", path)?;
        for (id, mapping) in load_mappings(path)? {
            repos.insert(id, serde_json::to_value(dependency_impact_metrics(&graph, &mapping)).expect("impact"));
        }
    }
    let stubs = graph.packages().filter(|p| graph.is_stub(&p.name)).count();
    let doc = json!({
        "packages": graph.len() - stubs,
        "unresolved_dependencies": stubs,
        "repositories": repos,
    });
    write_atomic(&args.out, &pretty(&doc))
}

fn fetch(args: FetchArgs) -> CliResult<()> {
    let client = ForgeClient::new(ClientConfig {
        api_base: args.api_base,
        token: args.token.or_else(|| std::env::var("GITHUB_TOKEN").ok()),
        limits: FetchLimits {
            max_prs: args.max_prs,
            max_commits: args.max_commits,
            max_issues: args.max_issues,
            ..FetchLimits::default()
        },
        ..ClientConfig::default()
    });
    let snapshot = client.fetch_snapshot(&args.repo)?;
    save_fixture(&snapshot, &args.out)?;
    info!(repo = %args.repo, out = %args.out.display(), "snapshot saved");
    Ok(())
}

fn scan(args: ScanArgs) -> CliResult<()> {
    if !args.tree.is_dir() {
        return Err(CliError::missing_path("source tree", &args.tree));
    }
    let rules = load_rules(&args.rules)?;
    let backend = semantic_backend(&args.semantic)?;
    let (payload, result) = payload_metrics(&args.tree, &rules.scan, backend.as_deref())?;
    check_semantic(args.semantic.require_semantic, &result.warnings, &args.tree.display().to_string())?;
    let doc = json!({ "payload": payload, "scan": result });
    let bytes = pretty(&doc);
    match &args.out {
        Some(p) => write_atomic(p, &bytes),
        None => {
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(())
        }
    }
}

fn calibrate(args: CalibrateArgs) -> CliResult<()> {
    let corpus = load_corpus(&args.corpus)?;
    let rules = load_rules(&args.rules)?;
    let backend = semantic_backend(&args.semantic)?;
    let evals = evaluate_corpus(
        &corpus,
        &EvalSettings {
            scan_rules: &rules.scan,
            ci_config: &rules.ci,
            semantic: backend.as_deref(),
            workers: args.rules.workers,
        },
    )?;
    for (e, (_, snap)) in evals.iter().zip(&corpus.repos) {
        check_semantic(args.semantic.require_semantic, &e.notes, &snap.repo_id)?;
    }
    let vectors: Vec<_> = evals.into_iter().map(|e| e.vector).collect();
    let stats = compute_corpus_stats(&vectors)?;
    write_atomic(&args.out, stats.to_json().as_bytes())
}

fn score(args: ScoreArgs) -> CliResult<()> {
    require_file("calibration file", &args.calibration)?;
    let stats = CorpusStats::load(&args.calibration)
        .map_err(|e| CliError::scoring(format!("{}: {e}", args.calibration.display())))?;
    let weights = load_weights(args.weights.as_deref())?;
    let thresholds = RiskThresholds::new(args.medium, args.high)
        .map_err(|e| CliError::validation(e.to_string()))?;
    let corpus = load_corpus(&args.corpus)?;
    let rules = load_rules(&args.rules)?;
    let backend = semantic_backend(&args.semantic)?;
    let evals = evaluate_corpus(
        &corpus,
        &EvalSettings {
            scan_rules: &rules.scan,
            ci_config: &rules.ci,
            semantic: backend.as_deref(),
            workers: args.rules.workers,
        },
    )?;
    let ctx = ScoringContext {
        stats: &stats,
        weights: &weights,
        thresholds,
        explain_threshold: args.explain_threshold,
    };
    let semantic_name = backend_name(backend.as_deref());

    let mut summary = csv_header_line();
    for (eval, (_, snap)) in evals.into_iter().zip(&corpus.repos) {
        check_semantic(args.semantic.require_semantic, &eval.notes, &snap.repo_id)?;
        let provenance = Provenance {
            fetched_at: Some(snap.fetched_at),
            calibration_id: stats.id.clone(),
            semantic_backend: semantic_name.clone(),
            tool_version: TOOL_VERSION.to_string(),
            schema_version: REPORT_SCHEMA_VERSION,
        };
        let report = score_report(&snap.repo_id, eval.vector, &ctx, provenance, eval.notes)?;
        let name = slug(&snap.repo_id);
        write_atomic(
            &args.out.join(format!("{name}.json")),
            &emit_report(&report, ReportFormat::Json),
        )?;
        if args.markdown {
            write_atomic(
                &args.out.join(format!("{name}.md")),
                &emit_report(&report, ReportFormat::Markdown),
            )?;
        }
        summary.push_str(&csv_row(&report));
    }
    write_atomic(&args.out.join(SUMMARY_FILE), summary.as_bytes())
}

fn read_report(path: &Path) -> CliResult<HsbrReport> {
    let text = read_text("report", path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::scoring(format!("{}: not a report: {e}", path.display())))
}

/// Reports in `dir`, sorted by file name.
fn read_reports(dir: &Path) -> CliResult<Vec<HsbrReport>> {
    if !dir.is_dir() {
        return Err(CliError::missing_path("reports directory", dir));
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::validation(format!("cannot list {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_report(p)).collect()
}

fn report(args: ReportArgs) -> CliResult<()> {
    let report = read_report(&args.input)?;
    let format = match args.format {
        FormatChoice::Json => ReportFormat::Json,
        FormatChoice::Markdown => ReportFormat::Markdown,
        FormatChoice::CsvRow => ReportFormat::CsvRow,
    };
    let mut bytes = Vec::new();
    if args.header && format == ReportFormat::CsvRow {
        bytes.extend(csv_header_line().into_bytes());
    }
    bytes.extend(emit_report(&report, format));
    match &args.out {
        Some(p) => write_atomic(p, &bytes),
        None => {
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(())
        }
    }
}

fn sensitivity(args: SensitivityArgs) -> CliResult<()> {
    if !(0.0..=1.0).contains(&args.noise) {
        return Err(CliError::validation("--noise must be within [0, 1]"));
    }
    if args.runs == 0 {
        return Err(CliError::validation("--runs must be at least 1"));
    }
    let weights = load_weights(args.weights.as_deref())?;
    let corpus: Vec<_> = read_reports(&args.reports)?
        .into_iter()
        .map(|r| (r.repo_id, r.vector))
        .collect();
    let report = sensitivity_report(&corpus, &weights, args.runs, args.seed, args.noise)?;
    write_atomic(&args.out, report.to_json().as_bytes())
}

fn correlate(args: CorrelateArgs) -> CliResult<()> {
    let vectors: Vec<_> = read_reports(&args.reports)?
        .into_iter()
        .map(|r| r.vector)
        .collect();
    let matrix = metric_correlations(&vectors)?;
    write_atomic(&args.out, matrix.to_csv().as_bytes())
}
