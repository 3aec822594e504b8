//! Weight-perturbation robustness and cross-metric correlation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::model::{Dimension, MetricId, RiskVector};
use crate::scoring::group_score;
use crate::weights::{validate_weights, RawWeights, WeightTable};

/// Half-width of the uniform log-noise interval.
pub const DEFAULT_NOISE: f64 = 0.1;

/// Multiplies every metric weight (community group weights included) by
/// `exp(u)`, `u ~ U(-noise, noise)`, then renormalizes each group.
/// Dimension weights are left as they are.
pub fn perturb_weights<R: Rng + ?Sized>(weights: &WeightTable, rng: &mut R, noise: f64) -> WeightTable {
    let mut raw = weights.to_raw();
    for m in MetricId::ALL {
        let u = if noise > 0.0 {
            rng.gen_range(-noise..noise)
        } else {
            0.0
        };
        *raw.metrics.get_mut(&m).expect("complete table") *= u.exp();
    }
    validate_weights(&raw).expect("perturbation keeps weights positive")
}

/// 1-based ranks, ties receiving the mean of the positions they span.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation, `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho over two score maps with the same keys.
pub fn spearman(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> Result<f64, AnalysisError> {
    if !a.keys().eq(b.keys()) {
        return Err(AnalysisError::KeyMismatch);
    }
    if a.len() < 2 {
        return Err(AnalysisError::TooSmall {
            needed: 2,
            got: a.len(),
        });
    }
    let ra = fractional_ranks(&a.values().copied().collect::<Vec<_>>());
    let rb = fractional_ranks(&b.values().copied().collect::<Vec<_>>());
    pearson(&ra, &rb).ok_or(AnalysisError::ZeroVariance)
}

fn rank_map(scores: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let ranks = fractional_ranks(&scores.values().copied().collect::<Vec<_>>());
    scores.keys().cloned().zip(ranks).collect()
}

/// HSBR total of an already-normalized vector under `weights`. Community
/// group scores are recomputed from the sub-metrics.
pub fn total_under(vector: &RiskVector, weights: &WeightTable) -> Result<f64, AnalysisError> {
    let mut v = vector.clone();
    for q in [MetricId::Q1, MetricId::Q2, MetricId::Q3] {
        v.normalized.remove(&q);
    }
    let mut total = 0.0;
    for d in Dimension::ALL {
        total += weights.dimension(d) * group_score(&v, weights, d.group())?;
    }
    Ok(total.clamp(0.0, 1.0))
}

fn totals(corpus: &[(String, RiskVector)], weights: &WeightTable) -> Result<BTreeMap<String, f64>, AnalysisError> {
    corpus
        .iter()
        .map(|(id, v)| Ok((id.clone(), total_under(v, weights)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRun {
    pub run: usize,
    pub seed: u64,
    pub perturbed_weights: RawWeights,
    pub scores: BTreeMap<String, f64>,
    pub ranks: BTreeMap<String, f64>,
    pub spearman_vs_baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySummary {
    pub mean_rho: f64,
    pub min_rho: f64,
    /// Largest absolute rank change per repository across runs.
    pub max_rank_shift: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub seed: u64,
    pub noise: f64,
    pub baseline_scores: BTreeMap<String, f64>,
    pub baseline_ranks: BTreeMap<String, f64>,
    pub runs: Vec<PerturbationRun>,
    pub summary: SensitivitySummary,
}

impl SensitivityReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Re-scores the corpus under `runs` perturbed weight tables. Run `i` draws
/// from a ChaCha stream seeded with `seed + i`.
pub fn sensitivity_report(
    corpus: &[(String, RiskVector)],
    baseline: &WeightTable,
    runs: usize,
    seed: u64,
    noise: f64,
) -> Result<SensitivityReport, AnalysisError> {
    if runs == 0 {
        return Err(AnalysisError::TooSmall { needed: 1, got: 0 });
    }
    let baseline_scores = totals(corpus, baseline)?;
    let baseline_ranks = rank_map(&baseline_scores);
    let mut out = Vec::with_capacity(runs);
    for run in 0..runs {
        let run_seed = seed.wrapping_add(run as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        let w = perturb_weights(baseline, &mut rng, noise);
        let scores = totals(corpus, &w)?;
        let rho = spearman(&baseline_scores, &scores)?;
        out.push(PerturbationRun {
            run,
            seed: run_seed,
            perturbed_weights: w.to_raw(),
            ranks: rank_map(&scores),
            scores,
            spearman_vs_baseline: rho,
        });
    }
    let rhos: Vec<f64> = out.iter().map(|r| r.spearman_vs_baseline).collect();
    let max_rank_shift = baseline_ranks
        .iter()
        .map(|(id, r0)| {
            let shift = out.iter().map(|r| (r.ranks[id] - r0).abs()).fold(0.0, f64::max);
            (id.clone(), shift)
        })
        .collect();
    Ok(SensitivityReport {
        seed,
        noise,
        baseline_scores,
        baseline_ranks,
        summary: SensitivitySummary {
            mean_rho: rhos.iter().sum::<f64>() / rhos.len() as f64,
            min_rho: rhos.iter().copied().fold(f64::INFINITY, f64::min),
            max_rank_shift,
        },
        runs: out,
    })
}

/// Pairwise Pearson correlations of normalized scores. Entries involving a
/// zero-variance metric are `None`; the diagonal is always 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub metrics: Vec<MetricId>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: MetricId, b: MetricId) -> Option<f64> {
        let i = self.metrics.iter().position(|m| *m == a)?;
        let j = self.metrics.iter().position(|m| *m == b)?;
        self.values[i][j]
    }

    /// Header row and column of metric keys; undefined entries as `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric");
        for m in &self.metrics {
            out.push(',');
            out.push_str(m.key());
        }
        out.push('\n');
        for (m, row) in self.metrics.iter().zip(&self.values) {
            out.push_str(m.key());
            for v in row {
                out.push(',');
                match v {
                    Some(x) => out.push_str(&format!("{x:.6}")),
                    None => out.push_str("NA"),
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn metric_correlations(vectors: &[RiskVector]) -> Result<CorrelationMatrix, AnalysisError> {
    if vectors.len() < 3 {
        return Err(AnalysisError::TooSmall {
            needed: 3,
            got: vectors.len(),
        });
    }
    let metrics: Vec<MetricId> = MetricId::ALL.to_vec();
    let mut columns = Vec::with_capacity(metrics.len());
    for m in &metrics {
        let col: Vec<f64> = vectors
            .iter()
            .map(|v| {
                v.score(*m)
                    .ok_or_else(|| crate::error::ScoringError::MissingScore(m.key().to_string()))
            })
            .collect::<Result<_, _>>()?;
        columns.push(col);
    }
    let n = metrics.len();
    let mut values = vec![vec![None; n]; n];
    for i in 0..n {
        values[i][i] = Some(1.0);
        for j in i + 1..n {
            let r = pearson(&columns[i], &columns[j]);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix { metrics, values })
}
