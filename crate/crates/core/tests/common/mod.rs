#![allow(dead_code)]

use std::collections::BTreeMap;

use hsbr_core::model::{Histogram, MetricId, MetricKind, RawValue, RiskVector};
use proptest::prelude::*;

fn raw_for(kind: MetricKind) -> BoxedStrategy<RawValue> {
    match kind {
        MetricKind::Boolean => any::<bool>().prop_map(RawValue::flag).boxed(),
        MetricKind::CountLog => (0usize..100_000).prop_map(RawValue::count).boxed(),
        MetricKind::Ratio => (0.0f64..=1.0).prop_map(RawValue::Number).boxed(),
        MetricKind::NormalizedDirect => (0.0f64..20.0).prop_map(RawValue::Number).boxed(),
        MetricKind::HistogramExpectation => prop::collection::btree_map(0u64..60, 1u64..5, 0..6)
            .prop_map(|bins| {
                let mut h = Histogram::new();
                for (k, v) in bins {
                    h.add(k, v);
                }
                RawValue::Histogram(h)
            })
            .boxed(),
    }
}

/// A vector with every leaf metric set to a plausible raw value.
pub fn raw_vector() -> impl Strategy<Value = RiskVector> {
    let leaves: Vec<MetricId> = MetricId::leaves().collect();
    let strategies: Vec<BoxedStrategy<RawValue>> = leaves.iter().map(|m| raw_for(m.kind())).collect();
    strategies.prop_map(move |raws| {
        let mut v = RiskVector::default();
        for (m, r) in leaves.iter().zip(raws) {
            v.set_raw(*m, r);
        }
        v
    })
}

pub fn corpus(min: usize, max: usize) -> impl Strategy<Value = Vec<RiskVector>> {
    prop::collection::vec(raw_vector(), min..=max)
}

/// Reference weights copied independently of the library tables.
pub fn reference_groups() -> Vec<(&'static str, Vec<(&'static str, f64)>)> {
    vec![
        ("dims", vec![("DI", 0.3), ("PC", 0.2), ("CQ", 0.3), ("CI", 0.2)]),
        ("DI", vec![("D1", 0.36), ("D2", 0.24), ("D3", 0.24), ("D4", 0.16)]),
        (
            "PC",
            vec![("P1", 0.2609), ("P2", 0.087), ("P3", 0.2609), ("P4", 0.087), ("P5", 0.0435), ("P6", 0.2609)],
        ),
        ("CQ", vec![("Q1", 0.2), ("Q2", 0.4), ("Q3", 0.4)]),
        ("CI", vec![("C1", 0.4), ("C2", 0.3), ("C3", 0.3)]),
        ("Q1", vec![("S", 0.22), ("W", 0.22), ("F", 0.22), ("AU", 0.11), ("AIP", 0.11), ("APP", 0.11)]),
        ("Q2", vec![("DCR", 0.25), ("DCU", 0.20), ("RAD", 0.25), ("UMR", 0.15), ("IPR", 0.15)]),
        ("Q3", vec![("MC", 0.20), ("AC", 0.20), ("PTM", 0.30), ("PTA", 0.30)]),
    ]
}

fn short(m: MetricId) -> &'static str {
    use MetricId::*;
    match m {
        D1 => "D1", D2 => "D2", D3 => "D3", D4 => "D4",
        P1 => "P1", P2 => "P2", P3 => "P3", P4 => "P4", P5 => "P5", P6 => "P6",
        Q1 => "Q1", Q2 => "Q2", Q3 => "Q3",
        C1 => "C1", C2 => "C2", C3 => "C3",
        Stargazers => "S", Watchers => "W", Forks => "F", ActiveUsers => "AU",
        AvgIssueParticipants => "AIP", AvgPrParticipants => "APP",
        DirectCommitRatio => "DCR", DirectCommitUsers => "DCU", RequiredApprovesDist => "RAD",
        UndiscussedMergeRatio => "UMR", InconsistentPrRatio => "IPR",
        MaintainerCount => "MC", ApproverCount => "AC", PrsToMaintainer => "PTM", PrsToApprover => "PTA",
    }
}

/// Total recomputed from leaf scores by explicit nested weighted sums.
pub fn oracle_total(leaf_scores: &BTreeMap<MetricId, f64>) -> f64 {
    let mut value: BTreeMap<&str, f64> = leaf_scores.iter().map(|(m, s)| (short(*m), *s)).collect();
    let groups = reference_groups();
    for name in ["Q1", "Q2", "Q3", "DI", "PC", "CQ", "CI"] {
        let (_, members) = groups.iter().find(|(g, _)| *g == name).unwrap();
        let sum: f64 = members.iter().map(|(_, w)| w).sum();
        let s: f64 = members.iter().map(|(k, w)| w / sum * value[k]).sum();
        value.insert(name, s);
    }
    let (_, dims) = &groups[0];
    dims.iter().map(|(k, w)| w * value[k]).sum()
}
