//! Exact natural-breaks classification (Fisher's optimal partition).
//!
//! Values are collapsed to distinct levels with multiplicities so equal
//! scores can never land in different classes. A suffix dynamic program
//! then finds the partition into `k` contiguous classes with the least
//! total within-class sum of squared deviations. Among equally good
//! partitions the one with the lowest break values wins: each class end is
//! chosen as the earliest position that still attains the optimum.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JenksClasses {
    /// `k + 1` boundaries: the minimum, then each class's upper bound.
    pub breaks: Vec<f64>,
    /// 1-based class per input value, in input order.
    pub labels: Vec<u8>,
    /// Total within-class sum of squared deviations.
    pub ssd: f64,
}

impl JenksClasses {
    pub fn classes(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Class for an arbitrary value under these breaks (clamped to the
    /// first and last class).
    pub fn class_of(&self, value: f64) -> u8 {
        let uppers = &self.breaks[1..];
        let idx = uppers.partition_point(|&u| u < value).min(uppers.len() - 1);
        (idx + 1) as u8
    }
}

pub fn jenks_breaks(values: &[f64], k: usize) -> Result<JenksClasses> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "number of classes must be at least 1".into(),
        ));
    }
    if k > u8::MAX as usize {
        return Err(Error::InvalidParameter(format!("too many classes: {k}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "cannot classify non-finite values".into(),
        ));
    }

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut levels: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for v in sorted {
        match levels.last() {
            Some(&last) if last == v => *weights.last_mut().unwrap() += 1.0,
            _ => {
                levels.push(v);
                weights.push(1.0);
            }
        }
    }
    let m = levels.len();
    if k > m {
        return Err(Error::InfeasibleClassing {
            classes: k,
            distinct: m,
        });
    }

    let cost = ClassCosts::new(&levels, &weights);

    // best[c][i]: least cost of splitting levels[i..] into c + 1 classes.
    // end[c][i]: last level of the first of those classes.
    let mut best = vec![vec![f64::INFINITY; m]; k];
    let mut end = vec![vec![usize::MAX; m]; k];
    for i in 0..m {
        best[0][i] = cost.get(i, m - 1);
        end[0][i] = m - 1;
    }
    for c in 1..k {
        for i in 0..m {
            if m - i < c + 1 {
                break;
            }
            for e in i..=(m - c - 1) {
                let candidate = cost.get(i, e) + best[c - 1][e + 1];
                if candidate < best[c][i] {
                    best[c][i] = candidate;
                    end[c][i] = e;
                }
            }
        }
    }

    let mut breaks = vec![levels[0]];
    let mut ssd = 0.0;
    let mut start = 0;
    for c in (0..k).rev() {
        let e = end[c][start];
        ssd += cost.get(start, e);
        breaks.push(levels[e]);
        start = e + 1;
    }

    let classes = JenksClasses {
        breaks,
        labels: Vec::new(),
        ssd,
    };
    let labels = values.iter().map(|&v| classes.class_of(v)).collect();
    Ok(JenksClasses { labels, ..classes })
}

/// Within-class SSD for every contiguous run of levels, computed two-pass
/// (mean first, then squared deviations).
struct ClassCosts {
    m: usize,
    table: Vec<f64>,
}

impl ClassCosts {
    fn new(levels: &[f64], weights: &[f64]) -> Self {
        let m = levels.len();
        let mut table = vec![0.0; m * m];
        for i in 0..m {
            let mut sum = 0.0;
            let mut count = 0.0;
            for j in i..m {
                sum += weights[j] * levels[j];
                count += weights[j];
                let mean = sum / count;
                let mut ssd = 0.0;
                for t in i..=j {
                    let d = levels[t] - mean;
                    ssd += weights[t] * d * d;
                }
                table[i * m + j] = ssd;
            }
        }
        ClassCosts { m, table }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.m + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn groups(values: &[f64], labels: &[u8]) -> Vec<Vec<f64>> {
        let k = *labels.iter().max().unwrap() as usize;
        let mut out = vec![Vec::new(); k];
        for (v, &l) in values.iter().zip(labels) {
            out[l as usize - 1].push(*v);
        }
        out
    }

    #[test]
    fn dominant_gap() {
        let v = [1.0, 2.0, 3.0, 10.0, 11.0, 12.0];
        let j = jenks_breaks(&v, 2).unwrap();
        assert_eq!(
            groups(&v, &j.labels),
            vec![vec![1.0, 2.0, 3.0], vec![10.0, 11.0, 12.0]]
        );
        assert_eq!(j.breaks, vec![1.0, 3.0, 12.0]);
        assert_eq!(j.ssd, 4.0);
    }

    #[test]
    fn four_values_two_classes() {
        let v = [9.0, 4.0, 10.0, 5.0];
        let j = jenks_breaks(&v, 2).unwrap();
        assert_eq!(j.labels, vec![2, 1, 2, 1]);
    }

    #[test]
    fn ties_prefer_lower_breaks() {
        // {0,1,2} into two classes: {0}|{1,2} and {0,1}|{2} both cost 0.5.
        let j = jenks_breaks(&[0.0, 1.0, 2.0], 2).unwrap();
        assert_eq!(j.breaks, vec![0.0, 0.0, 2.0]);
        assert_eq!(j.labels, vec![1, 2, 2]);
    }

    #[test]
    fn equal_values_share_a_class() {
        let j = jenks_breaks(&[1.0, 1.0, 1.0, 5.0, 9.0], 3).unwrap();
        assert_eq!(j.labels, vec![1, 1, 1, 2, 3]);
    }

    #[test]
    fn infeasible_and_invalid() {
        assert!(matches!(
            jenks_breaks(&[1.0, 1.0, 2.0], 3),
            Err(Error::InfeasibleClassing {
                classes: 3,
                distinct: 2
            })
        ));
        assert!(jenks_breaks(&[1.0], 0).is_err());
        assert!(jenks_breaks(&[], 1).is_err());
        assert!(jenks_breaks(&[f64::NAN, 1.0], 1).is_err());
    }

    #[test]
    fn singleton_classes_when_k_equals_n() {
        let v = [3.0, 1.0, 2.0, 7.0];
        let j = jenks_breaks(&v, 4).unwrap();
        assert_eq!(j.ssd, 0.0);
        assert_eq!(j.labels, vec![3, 1, 2, 4]);
    }

    proptest! {
        #[test]
        fn labels_monotone_and_contiguous(
            v in prop::collection::vec(0.0f64..100.0, 5..200), k in 1usize..6
        ) {
            let j = jenks_breaks(&v, k).unwrap();
            for (a, la) in v.iter().zip(&j.labels) {
                for (b, lb) in v.iter().zip(&j.labels) {
                    if a <= b {
                        prop_assert!(la <= lb);
                    }
                }
            }
            let mut used: Vec<u8> = j.labels.clone();
            used.sort_unstable();
            used.dedup();
            prop_assert_eq!(used, (1..=k as u8).collect::<Vec<_>>());
        }
    }
}
