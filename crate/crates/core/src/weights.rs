//! Weight tables and their validation.
//!
//! A [`RawWeights`] is whatever the user supplied (or the reference table);
//! a [`WeightTable`] is the validated form in which the dimension weights and
//! every [`Group`] sum to one.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::WeightError;
use crate::model::{Dimension, Group, MetricId};

/// Unvalidated weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawWeights {
    pub dimensions: BTreeMap<Dimension, f64>,
    pub metrics: BTreeMap<MetricId, f64>,
}

impl RawWeights {
    /// The reference weights, exactly as published (before renormalization).
    pub fn reference() -> Self {
        use MetricId::*;
        let dimensions = [
            (Dimension::DependencyImpact, 0.3),
            (Dimension::PayloadConcealment, 0.2),
            (Dimension::CommunityQuality, 0.3),
            (Dimension::ContinuousIntegration, 0.2),
        ];
        let metrics = [
            (D1, 0.36),
            (D2, 0.24),
            (D3, 0.24),
            (D4, 0.16),
            (P1, 0.2609),
            (P2, 0.087),
            (P3, 0.2609),
            (P4, 0.087),
            (P5, 0.0435),
            (P6, 0.2609),
            (Q1, 0.2),
            (Q2, 0.4),
            (Q3, 0.4),
            (C1, 0.4),
            (C2, 0.3),
            (C3, 0.3),
            (Stargazers, 0.22),
            (Watchers, 0.22),
            (Forks, 0.22),
            (ActiveUsers, 0.11),
            (AvgIssueParticipants, 0.11),
            (AvgPrParticipants, 0.11),
            (DirectCommitRatio, 0.25),
            (DirectCommitUsers, 0.20),
            (RequiredApprovesDist, 0.25),
            (UndiscussedMergeRatio, 0.15),
            (InconsistentPrRatio, 0.15),
            (MaintainerCount, 0.20),
            (ApproverCount, 0.20),
            (PrsToMaintainer, 0.30),
            (PrsToApprover, 0.30),
        ];
        RawWeights {
            dimensions: dimensions.into_iter().collect(),
            metrics: metrics.into_iter().collect(),
        }
    }

    /// Parses a flat `key = value` file (TOML syntax, one weight per line)
    /// and overlays it on the reference weights. Keys are dimension codes
    /// (`DI`, `PC`, `CQ`, `CI`) or metric keys (`D1`, `stargazers`, ...).
    pub fn from_config_str(text: &str) -> Result<Self, WeightError> {
        let table: BTreeMap<String, toml::Value> =
            toml::from_str(text).map_err(|e| WeightError::Syntax(e.message().to_string()))?;
        let mut raw = RawWeights::reference();
        for (key, value) in table {
            let weight = match value {
                toml::Value::Float(f) => f,
                toml::Value::Integer(i) => i as f64,
                _ => return Err(WeightError::Syntax(format!("`{key}` is not a number"))),
            };
            if let Ok(dim) = key.parse::<Dimension>() {
                raw.dimensions.insert(dim, weight);
            } else if let Ok(metric) = key.parse::<MetricId>() {
                raw.metrics.insert(metric, weight);
            } else {
                return Err(WeightError::UnknownKey(key));
            }
        }
        Ok(raw)
    }

    pub fn from_config_file(path: &Path) -> Result<Self, WeightError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| WeightError::Syntax(format!("{}: {e}", path.display())))?;
        Self::from_config_str(&text)
    }

    /// Renders the weights in the format accepted by [`RawWeights::from_config_str`].
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for (d, w) in &self.dimensions {
            out.push_str(&format!("{} = {w}\n", d.code()));
        }
        for (m, w) in &self.metrics {
            out.push_str(&format!("\"{}\" = {w}\n", m.key()));
        }
        out
    }
}

/// Validated weights: all nonnegative, every group summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightTable {
    dimensions: BTreeMap<Dimension, f64>,
    metrics: BTreeMap<MetricId, f64>,
}

impl Default for WeightTable {
    fn default() -> Self {
        validate_weights(&RawWeights::reference()).expect("reference weights are valid")
    }
}

impl WeightTable {
    pub fn dimension(&self, d: Dimension) -> f64 {
        self.dimensions[&d]
    }

    pub fn metric(&self, m: MetricId) -> f64 {
        self.metrics[&m]
    }

    pub fn dimensions(&self) -> &BTreeMap<Dimension, f64> {
        &self.dimensions
    }

    pub fn metrics(&self) -> &BTreeMap<MetricId, f64> {
        &self.metrics
    }

    pub fn group_weights(&self, group: Group) -> Vec<f64> {
        group.members().iter().map(|m| self.metrics[m]).collect()
    }

    pub fn to_raw(&self) -> RawWeights {
        RawWeights {
            dimensions: self.dimensions.clone(),
            metrics: self.metrics.clone(),
        }
    }
}

const SUM_TOLERANCE: f64 = 1e-12;

fn check(key: &str, value: f64) -> Result<(), WeightError> {
    if !value.is_finite() {
        return Err(WeightError::NonFinite {
            key: key.to_string(),
        });
    }
    if value < 0.0 {
        return Err(WeightError::Negative {
            key: key.to_string(),
            value,
        });
    }
    Ok(())
}

/// Scales `values` to unit sum. Values already summing to one within
/// rounding are returned untouched, which makes the operation idempotent.
pub fn renormalize(values: &mut [f64]) -> bool {
    let sum: f64 = values.iter().sum();
    if sum <= 0.0 {
        return false;
    }
    if (sum - 1.0).abs() <= SUM_TOLERANCE {
        return true;
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
    true
}

/// Validates raw weights and renormalizes the dimension weights and every
/// group to unit sum.
pub fn validate_weights(raw: &RawWeights) -> Result<WeightTable, WeightError> {
    let mut dims = Vec::with_capacity(4);
    for d in Dimension::ALL {
        let w = *raw.dimensions.get(&d).ok_or_else(|| WeightError::Missing {
            key: d.code().to_string(),
        })?;
        check(d.code(), w)?;
        dims.push(w);
    }
    if !renormalize(&mut dims) {
        return Err(WeightError::ZeroGroup {
            group: "dimensions".to_string(),
        });
    }

    let mut metrics = BTreeMap::new();
    for group in Group::ALL {
        let mut values = Vec::with_capacity(group.members().len());
        for m in group.members() {
            let w = *raw.metrics.get(m).ok_or_else(|| WeightError::Missing {
                key: m.key().to_string(),
            })?;
            check(m.key(), w)?;
            values.push(w);
        }
        if !renormalize(&mut values) {
            return Err(WeightError::ZeroGroup {
                group: group.name().to_string(),
            });
        }
        metrics.extend(group.members().iter().copied().zip(values));
    }

    Ok(WeightTable {
        dimensions: Dimension::ALL.into_iter().zip(dims).collect(),
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn payload_group_rescaled_from_1_0002() {
        let raw = RawWeights::reference();
        let sum: f64 = Group::Payload.members().iter().map(|m| raw.metrics[m]).sum();
        assert!((sum - 1.0002).abs() < 1e-12);
        let table = validate_weights(&raw).unwrap();
        let got = table.group_weights(Group::Payload);
        assert_eq!(got.iter().sum::<f64>(), 1.0);
        for (m, w) in Group::Payload.members().iter().zip(&got) {
            assert!((w - raw.metrics[m] / 1.0002).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_group_unchanged() {
        let mut v = vec![0.5, 0.5];
        assert!(renormalize(&mut v));
        assert_eq!(v, vec![0.5, 0.5]);
    }

    #[test]
    fn negative_weight_is_named() {
        let mut raw = RawWeights::reference();
        raw.metrics.insert(MetricId::C1, -0.1);
        raw.metrics.insert(MetricId::C2, 1.1);
        let err = validate_weights(&raw).unwrap_err();
        assert_eq!(
            err,
            WeightError::Negative {
                key: "C1".into(),
                value: -0.1
            }
        );
        assert!(err.to_string().contains("C1"));
    }

    #[test]
    fn zero_group_rejected() {
        let mut raw = RawWeights::reference();
        for m in Group::Ci.members() {
            raw.metrics.insert(*m, 0.0);
        }
        assert_eq!(
            validate_weights(&raw).unwrap_err(),
            WeightError::ZeroGroup { group: "CI".into() }
        );
    }

    #[test]
    fn config_overlay() {
        let raw = RawWeights::from_config_str("# tweak\nDI = 1\nD1 = 0.5\n\"prs-to-maintainer\" = 0.9\n")
            .unwrap();
        assert_eq!(raw.dimensions[&Dimension::DependencyImpact], 1.0);
        assert_eq!(raw.metrics[&MetricId::D1], 0.5);
        assert_eq!(raw.metrics[&MetricId::PrsToMaintainer], 0.9);
        assert_eq!(raw.metrics[&MetricId::D2], 0.24);
        assert!(matches!(
            RawWeights::from_config_str("Z9 = 1"),
            Err(WeightError::UnknownKey(_))
        ));
        assert!(RawWeights::from_config_str("D1 = \"x\"").is_err());
    }

    #[test]
    fn config_string_round_trips() {
        let raw = RawWeights::reference();
        assert_eq!(RawWeights::from_config_str(&raw.to_config_string()).unwrap(), raw);
    }

    proptest! {
        #[test]
        fn validation_is_idempotent(ws in proptest::collection::vec(0.001f64..10.0, 35)) {
            let mut raw = RawWeights::reference();
            let mut it = ws.into_iter();
            for d in Dimension::ALL {
                raw.dimensions.insert(d, it.next().unwrap());
            }
            for m in MetricId::ALL {
                raw.metrics.insert(m, it.next().unwrap());
            }
            let once = validate_weights(&raw).unwrap();
            let twice = validate_weights(&once.to_raw()).unwrap();
            prop_assert_eq!(&once, &twice);
            for g in Group::ALL {
                let s: f64 = once.group_weights(g).iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }
}
