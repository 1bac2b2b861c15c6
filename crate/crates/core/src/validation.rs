//! Ward-level validation against an externally supplied historical ranking.
//!
//! Rank 1 is the most excluded ward (lowest median score). Ties share the
//! average rank. A positive delta means the ward now ranks as less
//! excluded than it did historically.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::composite::IndexResult;
use crate::error::{Error, Result};
use crate::indicators::pearson;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WardLookup {
    area_to_ward: BTreeMap<String, String>,
    names: BTreeMap<String, String>,
}

impl WardLookup {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        area_id: impl Into<String>,
        ward_id: impl Into<String>,
        name: Option<String>,
    ) {
        let ward_id = ward_id.into();
        if let Some(name) = name {
            self.names.insert(ward_id.clone(), name);
        }
        self.area_to_ward.insert(area_id.into(), ward_id);
    }

    pub fn ward_of(&self, area_id: &str) -> Option<&str> {
        self.area_to_ward.get(area_id).map(String::as_str)
    }

    pub fn name_of(&self, ward_id: &str) -> Option<&str> {
        self.names.get(ward_id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.area_to_ward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.area_to_ward.is_empty()
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Median area score per ward. Every scored area must be in the lookup.
pub fn ward_medians(results: &[IndexResult], lookup: &WardLookup) -> Result<BTreeMap<String, f64>> {
    let mut by_ward: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in results {
        let ward = lookup
            .ward_of(&r.area_id)
            .ok_or_else(|| Error::MissingLookup(r.area_id.clone()))?;
        by_ward.entry(ward.to_owned()).or_default().push(r.score);
    }
    Ok(by_ward
        .into_iter()
        .filter_map(|(w, mut scores)| median(&mut scores).map(|m| (w, m)))
        .collect())
}

/// Ascending ranks starting at 1; tied values share the mean of their
/// positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of the average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    rank_correlation(&average_ranks(a), &average_ranks(b))
}

// Without ties the d-squared form equals Pearson on ranks and is exact in
// integer arithmetic.
fn rank_correlation(ra: &[f64], rb: &[f64]) -> Option<f64> {
    let n = ra.len();
    let permutation = |r: &[f64]| {
        let mut seen = vec![false; r.len()];
        r.iter().all(|&x| {
            let i = x as usize;
            x.fract() == 0.0
                && (1..=r.len()).contains(&i)
                && !std::mem::replace(&mut seen[i - 1], true)
        })
    };
    if n >= 2 && ra.len() == rb.len() && permutation(ra) && permutation(rb) {
        let d2: f64 = ra.iter().zip(rb).map(|(x, y)| (x - y) * (x - y)).sum();
        let n = n as f64;
        return Some(1.0 - 6.0 * d2 / (n * (n * n - 1.0)));
    }
    pearson(ra, rb)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WardRank {
    pub ward_id: String,
    pub median_score: f64,
    pub rank_now: f64,
    pub rank_then: f64,
    /// `rank_now - rank_then`: positive when the ward moved toward the
    /// less-excluded end.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankComparison {
    pub wards: Vec<WardRank>,
    /// Spearman correlation of the two rankings (`None` if either is
    /// constant).
    pub spearman: Option<f64>,
    /// Pearson correlation of median scores against historical ranks.
    pub pearson_medians: Option<f64>,
}

/// Ranks wards by median score and compares with a historical ranking.
/// Historical values may be on any scale (e.g. national ranks); they are
/// re-ranked within the supplied wards.
pub fn rank_and_compare(
    medians: &BTreeMap<String, f64>,
    historical: &BTreeMap<String, f64>,
) -> Result<RankComparison> {
    let now: BTreeSet<&String> = medians.keys().collect();
    let then: BTreeSet<&String> = historical.keys().collect();
    if now != then {
        return Err(Error::WardSetMismatch {
            only_scores: now.difference(&then).map(|s| s.to_string()).collect(),
            only_historical: then.difference(&now).map(|s| s.to_string()).collect(),
        });
    }
    let ids: Vec<&String> = medians.keys().collect();
    let med: Vec<f64> = ids.iter().map(|w| medians[*w]).collect();
    let hist: Vec<f64> = ids.iter().map(|w| historical[*w]).collect();
    let rank_now = average_ranks(&med);
    let rank_then = average_ranks(&hist);
    let wards = ids
        .iter()
        .enumerate()
        .map(|(i, w)| WardRank {
            ward_id: (*w).clone(),
            median_score: med[i],
            rank_now: rank_now[i],
            rank_then: rank_then[i],
            delta: rank_now[i] - rank_then[i],
        })
        .collect();
    Ok(RankComparison {
        wards,
        spearman: rank_correlation(&rank_now, &rank_then),
        pearson_medians: pearson(&med, &hist),
    })
}
