//! Corpus calibration, normalization, aggregation and explanations.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::community::histogram_expectation;
use crate::error::ScoringError;
use crate::model::{
    Dimension, Direction, Group, HsbrReport, MetricId, MetricKind, Provenance, RawValue,
    RiskLevel, RiskThresholds, RiskVector,
};
use crate::weights::WeightTable;

pub const CALIBRATION_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_EXPLAIN_THRESHOLD: f64 = 0.66;

/// Domain a metric's percentiles live on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Log10Plus1,
    Raw,
    Expectation,
}

impl Domain {
    pub fn of(kind: MetricKind) -> Option<Domain> {
        match kind {
            MetricKind::Boolean => None,
            MetricKind::CountLog => Some(Domain::Log10Plus1),
            MetricKind::Ratio | MetricKind::NormalizedDirect => Some(Domain::Raw),
            MetricKind::HistogramExpectation => Some(Domain::Expectation),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub p5: f64,
    pub p95: f64,
    pub domain: Domain,
    pub sample_count: usize,
}

/// Frozen calibration: per-metric percentiles over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub format_version: u32,
    pub id: String,
    pub repositories: usize,
    pub metrics: BTreeMap<MetricId, MetricStats>,
    /// Repositories lacking a usable sample, per metric.
    #[serde(default)]
    pub missing: BTreeMap<MetricId, usize>,
}

impl CorpusStats {
    pub fn get(&self, m: MetricId) -> Option<&MetricStats> {
        self.metrics.get(&m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("stats serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ScoringError> {
        let stats: CorpusStats =
            serde_json::from_str(text).map_err(|e| ScoringError::CalibrationFile(e.to_string()))?;
        if stats.format_version != CALIBRATION_FORMAT_VERSION {
            return Err(ScoringError::CalibrationFile(format!(
                "format version {} unsupported (expected {CALIBRATION_FORMAT_VERSION})",
                stats.format_version
            )));
        }
        for (m, s) in &stats.metrics {
            if !(s.p5 <= s.p95) || s.sample_count == 0 {
                return Err(ScoringError::CalibrationFile(format!("invalid stats for `{m}`")));
            }
        }
        Ok(stats)
    }

    pub fn load(path: &Path) -> Result<Self, ScoringError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScoringError::CalibrationFile(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Linear interpolation between closest ranks; `q` in [0, 1], `sorted`
/// ascending and nonempty.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

fn invalid(m: MetricId, reason: impl Into<String>) -> ScoringError {
    ScoringError::InvalidRaw {
        metric: m.key().to_string(),
        reason: reason.into(),
    }
}

fn number(m: MetricId, raw: &RawValue) -> Result<f64, ScoringError> {
    let x = raw.as_number().ok_or_else(|| invalid(m, "expected a number"))?;
    if !x.is_finite() {
        return Err(invalid(m, "not finite"));
    }
    if x < 0.0 {
        return Err(invalid(m, format!("negative value {x}")));
    }
    Ok(x)
}

/// The value a metric is calibrated on, or `None` when the repository
/// offers no sample (an empty histogram).
fn calibration_sample(m: MetricId, raw: &RawValue) -> Result<Option<f64>, ScoringError> {
    match m.kind() {
        MetricKind::Boolean => Ok(None),
        MetricKind::CountLog => Ok(Some((1.0 + number(m, raw)?).log10())),
        MetricKind::Ratio | MetricKind::NormalizedDirect => Ok(Some(number(m, raw)?)),
        MetricKind::HistogramExpectation => {
            let h = raw.as_histogram().ok_or_else(|| invalid(m, "expected a histogram"))?;
            match histogram_expectation(h) {
                Ok(e) => Ok(Some(e)),
                Err(ScoringError::UndefinedExpectation) => Ok(None),
                Err(e) => Err(e),
            }
        }
    }
}

pub fn compute_corpus_stats(vectors: &[RiskVector]) -> Result<CorpusStats, ScoringError> {
    if vectors.is_empty() {
        return Err(ScoringError::EmptyCorpus);
    }
    let mut metrics = BTreeMap::new();
    let mut missing = BTreeMap::new();
    for m in MetricId::leaves() {
        let Some(domain) = Domain::of(m.kind()) else {
            continue;
        };
        let mut samples = Vec::with_capacity(vectors.len());
        let mut absent = 0;
        for v in vectors {
            match v.raw.get(&m) {
                None => absent += 1,
                Some(raw) => match calibration_sample(m, raw)? {
                    Some(x) => samples.push(x),
                    None => absent += 1,
                },
            }
        }
        if absent > 0 {
            missing.insert(m, absent);
        }
        if samples.is_empty() {
            continue;
        }
        samples.sort_by(f64::total_cmp);
        metrics.insert(
            m,
            MetricStats {
                p5: percentile(&samples, 0.05),
                p95: percentile(&samples, 0.95),
                domain,
                sample_count: samples.len(),
            },
        );
    }
    let mut stats = CorpusStats {
        format_version: CALIBRATION_FORMAT_VERSION,
        id: String::new(),
        repositories: vectors.len(),
        metrics,
        missing,
    };
    let digest = Sha256::digest(stats.to_json().as_bytes());
    stats.id = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    Ok(stats)
}

/// `clamp((x - p5) / (p95 - p5), 0, 1)`; a degenerate range maps to 0 at or
/// below `p5` and 1 above.
pub fn percentile_scale(x: f64, p5: f64, p95: f64) -> f64 {
    if p95 <= p5 {
        return if x <= p5 { 0.0 } else { 1.0 };
    }
    ((x - p5) / (p95 - p5)).clamp(0.0, 1.0)
}

/// `1 - min(1, e_d / p95)`; `p95 == 0` yields maximal risk.
pub fn reverse_normalize_expectation(e_d: f64, p95: f64) -> Result<f64, ScoringError> {
    if !(e_d >= 0.0) {
        return Err(ScoringError::InvalidRaw {
            metric: "expectation".into(),
            reason: format!("negative or undefined expectation {e_d}"),
        });
    }
    if p95 <= 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - (e_d / p95).min(1.0))
}

/// Normalized risk score of one raw value against corpus stats.
pub fn normalize(m: MetricId, raw: &RawValue, stats: &CorpusStats) -> Result<f64, ScoringError> {
    let lookup = || {
        stats
            .get(m)
            .ok_or_else(|| ScoringError::MissingStats(m.key().to_string()))
    };
    let s = match m.kind() {
        MetricKind::Boolean => {
            let x = number(m, raw)?;
            if x != 0.0 && x != 1.0 {
                return Err(invalid(m, format!("flag must be 0 or 1, got {x}")));
            }
            return Ok(x);
        }
        MetricKind::HistogramExpectation => {
            let h = raw.as_histogram().ok_or_else(|| invalid(m, "expected a histogram"))?;
            // Unobserved governance is treated as maximal risk.
            if h.total() == 0 {
                return Ok(1.0);
            }
            return reverse_normalize_expectation(histogram_expectation(h)?, lookup()?.p95);
        }
        MetricKind::CountLog => {
            let st = lookup()?;
            percentile_scale((1.0 + number(m, raw)?).log10(), st.p5, st.p95)
        }
        MetricKind::Ratio | MetricKind::NormalizedDirect => {
            let st = lookup()?;
            percentile_scale(number(m, raw)?, st.p5, st.p95)
        }
    };
    Ok(match m.direction() {
        Direction::Increasing => s,
        Direction::Decreasing => 1.0 - s,
    })
}

/// Weighted sum of a group's member scores. Aggregate members missing from
/// the vector are computed from their sub-group.
pub fn group_score(
    vector: &RiskVector,
    weights: &WeightTable,
    group: Group,
) -> Result<f64, ScoringError> {
    let mut total = 0.0;
    for &m in group.members() {
        let s = match (vector.score(m), m.subgroup()) {
            (Some(s), _) => s,
            (None, Some(sub)) => group_score(vector, weights, sub)?,
            (None, None) => return Err(ScoringError::MissingScore(m.key().to_string())),
        };
        total += weights.metric(m) * s;
    }
    Ok(total.clamp(0.0, 1.0))
}

pub fn dimension_score(
    vector: &RiskVector,
    weights: &WeightTable,
    dimension: Dimension,
) -> Result<f64, ScoringError> {
    group_score(vector, weights, dimension.group())
}

/// Weighted dimension total and its risk level.
pub fn hsbr_total(
    dimension_scores: &BTreeMap<Dimension, f64>,
    weights: &WeightTable,
    thresholds: &RiskThresholds,
) -> Result<(f64, RiskLevel), ScoringError> {
    let mut total = 0.0;
    for d in Dimension::ALL {
        let s = dimension_scores
            .get(&d)
            .ok_or_else(|| ScoringError::MissingDimension(d.code().to_string()))?;
        total += weights.dimension(d) * s;
    }
    let total = total.clamp(0.0, 1.0);
    Ok((total, thresholds.level(total)))
}

/// Fills `vector.normalized` for every leaf metric and the community group
/// scores. Returns notes about degenerate calibration.
pub fn score_vector(
    vector: &mut RiskVector,
    stats: &CorpusStats,
    weights: &WeightTable,
) -> Result<Vec<String>, ScoringError> {
    let mut notes = Vec::new();
    vector.normalized.clear();
    for m in MetricId::leaves() {
        let raw = vector
            .raw
            .get(&m)
            .ok_or_else(|| ScoringError::MissingRaw(m.key().to_string()))?;
        if m.kind() == MetricKind::HistogramExpectation {
            let observed = raw.as_histogram().is_some_and(|h| h.total() > 0);
            if !observed {
                notes.push(format!("{m}: no observations; scored as maximal risk"));
            } else if stats.get(m).is_some_and(|s| s.p95 <= 0.0) {
                notes.push(format!("{m}: corpus P95 is 0; scored as maximal risk"));
            }
        }
        let s = normalize(m, raw, stats)?;
        vector.normalized.insert(m, s);
    }
    for q in [MetricId::Q1, MetricId::Q2, MetricId::Q3] {
        let sub = q.subgroup().expect("aggregate");
        let s = group_score(vector, weights, sub)?;
        vector.normalized.insert(q, s);
    }
    Ok(notes)
}

/// Formats a score with at most two decimals and at least one.
pub fn fmt_score(s: f64) -> String {
    let t = format!("{:.2}", s);
    let t = t.trim_end_matches('0');
    if t.ends_with('.') {
        format!("{t}0")
    } else {
        t.to_string()
    }
}

fn plural(n: f64, one: &str, many: &str) -> String {
    let n = n.round() as i64;
    format!("{n} {}", if n == 1 { one } else { many })
}

fn pct(x: f64) -> String {
    format!("{:.0}%", x * 100.0)
}

fn detail(m: MetricId, v: &RiskVector) -> Option<String> {
    use MetricId::*;
    let num = |id: MetricId| v.raw_number(id).unwrap_or(0.0);
    let fact = |k: &str| v.facts.get(k).copied();
    let hist_min = |id: MetricId| v.raw.get(&id).and_then(RawValue::as_histogram).and_then(|h| h.min_key());
    let hist_mean = |id: MetricId| {
        v.raw
            .get(&id)
            .and_then(RawValue::as_histogram)
            .and_then(|h| histogram_expectation(h).ok())
    };
    Some(match m {
        D1 => format!("builds {}", plural(num(m), "high-priority Debian package", "high-priority Debian packages")),
        D2 => format!("builds {}", plural(num(m), "essential Debian package", "essential Debian packages")),
        D3 => format!("{} transitively on it", plural(num(m), "high-priority package depends", "high-priority packages depend")),
        D4 => format!("{} transitively on it", plural(num(m), "essential package depends", "essential packages depend")),
        P1 => "binary files sit among test files".into(),
        P2 => "binary files sit among documentation".into(),
        P3 => "binary files sit among source code".into(),
        P4 => "binary files sit among assets".into(),
        P5 => "binary files in unclassified locations".into(),
        P6 => format!("{} in the source tree", plural(num(m), "binary file", "binary files")),
        Q1 | Q2 | Q3 => return None,
        C1 => "no Dependabot configuration found".into(),
        C2 => match fact("untrusted_actions") {
            Some(n) => format!("CI uses {} from untrusted providers", plural(n, "action", "actions")),
            None => format!("{} of action references come from untrusted providers", pct(num(m))),
        },
        C3 => match fact("unpinned_actions") {
            Some(n) => format!("CI runs {} not pinned to a commit SHA", plural(n, "third-party action", "third-party actions")),
            None => format!("{} of action references are not pinned", pct(num(m))),
        },
        Stargazers => format!("only {}", plural(num(m), "stargazer", "stargazers")),
        Watchers => format!("only {}", plural(num(m), "watcher", "watchers")),
        Forks => format!("only {}", plural(num(m), "fork", "forks")),
        ActiveUsers => format!("only {}", plural(num(m), "active user", "active users")),
        AvgIssueParticipants => format!("issues average {:.1} participants", num(m)),
        AvgPrParticipants => format!("pull requests average {:.1} participants", num(m)),
        DirectCommitRatio => format!("{} of default-branch commits bypassed pull requests", pct(num(m))),
        DirectCommitUsers => format!("{} pushed directly to the default branch", plural(num(m), "user", "users")),
        RequiredApprovesDist => match hist_mean(m) {
            Some(e) => format!("merged pull requests average {e:.1} approvals"),
            None => "no merged pull requests with review data".into(),
        },
        UndiscussedMergeRatio => format!("{} of merged pull requests had no review or discussion", pct(num(m))),
        InconsistentPrRatio => format!("{} of merged pull requests do not match their description", pct(num(m))),
        MaintainerCount => format!("only {} observed", plural(num(m), "maintainer", "maintainers")),
        ApproverCount => format!("only {} observed", plural(num(m), "approver", "approvers")),
        PrsToMaintainer => match fact("latest_maintainer_prs").map(|k| k as u64).or_else(|| hist_min(m)) {
            Some(k) => format!("User gained maintainer role with only {}", plural(k as f64, "PR", "PRs")),
            None => "no maintainer promotions observed".into(),
        },
        PrsToApprover => match fact("latest_approver_prs").map(|k| k as u64).or_else(|| hist_min(m)) {
            Some(k) => format!("User gained approver role with only {}", plural(k as f64, "PR", "PRs")),
            None => "no approver promotions observed".into(),
        },
    })
}

/// One snippet per metric scoring at or above `threshold`, highest first.
pub fn explain_vector(vector: &RiskVector, threshold: f64) -> Vec<String> {
    let mut hits: Vec<(MetricId, f64)> = vector
        .normalized
        .iter()
        .filter(|(_, s)| **s >= threshold)
        .map(|(m, s)| (*m, *s))
        .collect();
    hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    hits.into_iter()
        .map(|(m, s)| match detail(m, vector) {
            Some(d) => format!("{} ({}): {d}", m.title(), fmt_score(s)),
            None => format!("{} ({})", m.title(), fmt_score(s)),
        })
        .collect()
}

pub fn explain(report: &HsbrReport) -> Vec<String> {
    explain_vector(&report.vector, DEFAULT_EXPLAIN_THRESHOLD)
}

#[derive(Debug, Clone)]
pub struct ScoringContext<'a> {
    pub stats: &'a CorpusStats,
    pub weights: &'a WeightTable,
    pub thresholds: RiskThresholds,
    pub explain_threshold: f64,
}

/// Scores a raw vector into a complete report.
pub fn score_report(
    repo_id: &str,
    mut vector: RiskVector,
    ctx: &ScoringContext<'_>,
    provenance: Provenance,
    mut notes: Vec<String>,
) -> Result<HsbrReport, ScoringError> {
    notes.extend(score_vector(&mut vector, ctx.stats, ctx.weights)?);
    let mut dimension_scores = BTreeMap::new();
    for d in Dimension::ALL {
        dimension_scores.insert(d, dimension_score(&vector, ctx.weights, d)?);
    }
    let (total, risk_level) = hsbr_total(&dimension_scores, ctx.weights, &ctx.thresholds)?;
    let explanations = explain_vector(&vector, ctx.explain_threshold);
    Ok(HsbrReport {
        repo_id: repo_id.to_string(),
        dimension_scores,
        total,
        risk_level,
        explanations,
        vector,
        provenance,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Histogram;

    fn vec_with(m: MetricId, raw: RawValue) -> RiskVector {
        let mut v = RiskVector::default();
        v.set_raw(m, raw);
        v
    }

    #[test]
    fn percentile_interpolates() {
        let s: Vec<f64> = (0..=10).map(|i| i as f64 * 10.0).collect();
        assert!((percentile(&s, 0.95) - 95.0).abs() < 1e-12);
        assert!((percentile(&s, 0.05) - 5.0).abs() < 1e-12);
        assert_eq!(percentile(&[3.0], 0.95), 3.0);
    }

    #[test]
    fn single_repo_degenerate() {
        let v = vec_with(MetricId::P6, RawValue::count(9));
        let st = compute_corpus_stats(&[v]).unwrap();
        let p = st.get(MetricId::P6).unwrap();
        assert_eq!(p.p5, p.p95);
        assert_eq!(p.p5, 1.0);
        assert_eq!(p.domain, Domain::Log10Plus1);
    }

    #[test]
    fn empty_corpus_is_error() {
        assert_eq!(compute_corpus_stats(&[]), Err(ScoringError::EmptyCorpus));
    }

    #[test]
    fn calibration_round_trip() {
        let vs: Vec<RiskVector> = (0..5).map(|i| vec_with(MetricId::C2, RawValue::Number(i as f64 / 4.0))).collect();
        let st = compute_corpus_stats(&vs).unwrap();
        assert_eq!(CorpusStats::from_json(&st.to_json()).unwrap(), st);
        assert_eq!(st.id.len(), 16);
    }

    #[test]
    fn normalize_examples() {
        let vs: Vec<RiskVector> = [0.0, 1.0]
            .iter()
            .map(|x| vec_with(MetricId::C2, RawValue::Number(*x)))
            .collect();
        let st = compute_corpus_stats(&vs).unwrap();
        let p = *st.get(MetricId::C2).unwrap();
        let mid = (p.p5 + p.p95) / 2.0;
        assert!((normalize(MetricId::C2, &RawValue::Number(mid), &st).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(normalize(MetricId::C2, &RawValue::Number(1.0), &st).unwrap(), 1.0);
        assert_eq!(normalize(MetricId::P1, &RawValue::flag(true), &st).unwrap(), 1.0);
        assert!(normalize(MetricId::P1, &RawValue::Number(0.5), &st).is_err());
    }

    #[test]
    fn negative_count_rejected() {
        let st = compute_corpus_stats(&[vec_with(MetricId::P6, RawValue::count(1))]).unwrap();
        assert!(matches!(
            normalize(MetricId::P6, &RawValue::Number(-1.0), &st),
            Err(ScoringError::InvalidRaw { .. })
        ));
        assert!(matches!(
            normalize(MetricId::D1, &RawValue::Number(1.0), &st),
            Err(ScoringError::MissingStats(_))
        ));
    }

    #[test]
    fn reverse_expectation_endpoints() {
        assert_eq!(reverse_normalize_expectation(0.0, 4.0).unwrap(), 1.0);
        assert_eq!(reverse_normalize_expectation(4.0, 4.0).unwrap(), 0.0);
        assert_eq!(reverse_normalize_expectation(9.0, 4.0).unwrap(), 0.0);
        assert_eq!(reverse_normalize_expectation(2.0, 4.0).unwrap(), 0.5);
        assert_eq!(reverse_normalize_expectation(2.0, 0.0).unwrap(), 1.0);
        assert!(reverse_normalize_expectation(-1.0, 4.0).is_err());
    }

    #[test]
    fn empty_histogram_is_max_risk() {
        let st = compute_corpus_stats(&[vec_with(MetricId::PrsToMaintainer, RawValue::Histogram(Histogram::new()))]).unwrap();
        assert!(st.get(MetricId::PrsToMaintainer).is_none());
        assert_eq!(st.missing[&MetricId::PrsToMaintainer], 1);
        assert_eq!(
            normalize(MetricId::PrsToMaintainer, &RawValue::Histogram(Histogram::new()), &st).unwrap(),
            1.0
        );
    }

    #[test]
    fn popularity_is_reversed() {
        let vs: Vec<RiskVector> = [0usize, 99]
            .iter()
            .map(|n| vec_with(MetricId::Stargazers, RawValue::count(*n)))
            .collect();
        let st = compute_corpus_stats(&vs).unwrap();
        assert_eq!(normalize(MetricId::Stargazers, &RawValue::count(0), &st).unwrap(), 1.0);
        assert_eq!(normalize(MetricId::Stargazers, &RawValue::count(99), &st).unwrap(), 0.0);
    }

    fn scored(values: &[(MetricId, f64)]) -> RiskVector {
        let mut v = RiskVector::default();
        for (m, s) in values {
            v.normalized.insert(*m, *s);
        }
        v
    }

    #[test]
    fn di_dimension_example() {
        use MetricId::*;
        let v = scored(&[(D1, 1.0), (D2, 0.0), (D3, 0.0), (D4, 0.0)]);
        let s = dimension_score(&v, &WeightTable::default(), Dimension::DependencyImpact).unwrap();
        assert!((s - 0.36).abs() < 1e-12);
    }

    #[test]
    fn community_is_two_level() {
        let w = WeightTable::default();
        let mut v = RiskVector::default();
        for m in MetricId::COMMUNITY {
            v.normalized.insert(m, 1.0);
        }
        let s = dimension_score(&v, &w, Dimension::CommunityQuality).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        v.normalized.remove(&MetricId::Forks);
        assert_eq!(
            dimension_score(&v, &w, Dimension::CommunityQuality),
            Err(ScoringError::MissingScore("forks".into()))
        );
    }

    #[test]
    fn total_examples() {
        let w = WeightTable::default();
        let th = RiskThresholds::default();
        let dims = |a: [f64; 4]| Dimension::ALL.into_iter().zip(a).collect::<BTreeMap<_, _>>();
        assert_eq!(hsbr_total(&dims([0.0; 4]), &w, &th).unwrap(), (0.0, RiskLevel::Low));
        assert_eq!(hsbr_total(&dims([1.0, 0.0, 0.0, 0.0]), &w, &th).unwrap().0, 0.3);
        let (t, l) = hsbr_total(&dims([1.0; 4]), &w, &th).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert_eq!(l, RiskLevel::High);
        let mut partial = dims([1.0; 4]);
        partial.remove(&Dimension::ContinuousIntegration);
        assert_eq!(
            hsbr_total(&partial, &w, &th),
            Err(ScoringError::MissingDimension("CI".into()))
        );
    }

    #[test]
    fn explanation_wording_and_order() {
        use MetricId::*;
        let mut v = scored(&[(PrsToMaintainer, 0.9), (C3, 1.0), (D1, 0.1), (P1, 1.0)]);
        v.set_raw(PrsToMaintainer, RawValue::Histogram([(2, 1)].into_iter().collect()));
        v.set_raw(C3, RawValue::Number(1.0));
        v.facts.insert("unpinned_actions".into(), 3.0);
        let e = explain_vector(&v, 0.66);
        assert_eq!(e.len(), 3);
        assert_eq!(e[0], "Binary in Test Files (1.0): binary files sit among test files");
        assert!(e[1].contains("3 third-party actions"));
        assert!(e[2].contains("maintainer role") && e[2].contains("2 PRs"));
        assert!(explain_vector(&scored(&[(D1, 0.5)]), 0.66).is_empty());
    }

    #[test]
    fn score_formatting() {
        assert_eq!(fmt_score(1.0), "1.0");
        assert_eq!(fmt_score(0.64), "0.64");
        assert_eq!(fmt_score(0.5), "0.5");
        assert_eq!(fmt_score(0.0), "0.0");
    }
}
