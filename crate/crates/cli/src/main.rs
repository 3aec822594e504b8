mod commands;
mod corpus;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Estimate high-stealth backdoor risk for open-source repositories.
#[derive(Debug, Parser)]
#[command(name = "hsbr", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a Debian Packages index and summarize dependency impact.
    IngestDebian(IngestArgs),
    /// Collect a repository snapshot from the forge API into a fixture directory.
    Fetch(FetchArgs),
    /// Scan a source tree for binary files.
    Scan(ScanArgs),
    /// Compute corpus percentiles and write a frozen calibration file.
    Calibrate(CalibrateArgs),
    /// Score every repository of a corpus against a calibration file.
    Score(ScoreArgs),
    /// Re-emit a stored JSON report in another format.
    Report(ReportArgs),
    /// Weight-perturbation rank stability over scored reports.
    Sensitivity(SensitivityArgs),
    /// Cross-metric correlation matrix over scored reports.
    Correlate(CorrelateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SemanticChoice {
    Off,
    Mock,
    Http,
}

#[derive(Debug, Args)]
pub struct SemanticArgs {
    #[arg(long, value_enum, default_value = "off")]
    pub semantic: SemanticChoice,
    /// Model name for the HTTP backend.
    #[arg(long, default_value = "gpt-4o-mini")]
    pub llm_model: String,
    /// Fail with exit status 4 when the semantic backend cannot answer.
    #[arg(long)]
    pub require_semantic: bool,
}

#[derive(Debug, Args)]
pub struct RuleArgs {
    /// TOML file overriding binary-detection and path-context rules.
    #[arg(long)]
    pub scan_rules: Option<PathBuf>,
    /// TOML file with `trusted_providers = [...]`.
    #[arg(long)]
    pub ci_config: Option<PathBuf>,
    /// Repositories evaluated concurrently.
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub packages: PathBuf,
    /// TAB-separated `repo_id<TAB>pkg,pkg` lines.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Repository as `owner/name`.
    #[arg(long)]
    pub repo: String,
    /// Fixture directory to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "HSBR_FORGE_API", default_value = "https://api.github.com")]
    pub api_base: String,
    #[arg(long, env = "HSBR_FORGE_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
    #[arg(long, default_value_t = 500)]
    pub max_prs: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_commits: usize,
    #[arg(long, default_value_t = 300)]
    pub max_issues: usize,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub semantic: SemanticArgs,
    #[command(flatten)]
    pub rules: RuleArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub semantic: SemanticArgs,
    #[command(flatten)]
    pub rules: RuleArgs,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub calibration: PathBuf,
    /// Output directory for `<repo>.json` reports and `summary.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// TOML weight table overriding the defaults.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Also write `<repo>.md` summaries.
    #[arg(long)]
    pub markdown: bool,
    #[arg(long, default_value_t = 0.33)]
    pub medium: f64,
    #[arg(long, default_value_t = 0.66)]
    pub high: f64,
    /// Minimum normalized score for a metric to be explained.
    #[arg(long, default_value_t = 0.66)]
    pub explain_threshold: f64,
    #[command(flatten)]
    pub semantic: SemanticArgs,
    #[command(flatten)]
    pub rules: RuleArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatChoice {
    Json,
    Markdown,
    CsvRow,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: FormatChoice,
    /// Prepend the CSV header when emitting `csv-row`.
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// Directory of JSON reports written by `score`.
    #[arg(long)]
    pub reports: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long)]
    pub seed: u64,
    /// Half-width of the uniform log-noise interval.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub reports: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("HSBR_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let err = error::CliError::validation(e.kind().to_string());
            eprintln!("{}", err.to_json_line());
            return ExitCode::from(err.kind as u8);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.kind as u8)
        }
    }
}
