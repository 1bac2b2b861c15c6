//! Per-area indicators: polarity alignment, min-max normalization and the
//! multicollinearity screen.
//!
//! After [`align_polarity`] every component reads "higher = more
//! financially included", so normalization and aggregation never need to
//! know which raw variables were risk measures.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Correlation magnitude above which a pair of indicators is flagged.
pub const CORRELATION_FLAG_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Avcash,
    Loneliness,
    Claimant,
    Income,
    Housing,
    LoneParents,
    Iuc,
    Car,
}

impl Component {
    pub const ALL: [Component; 8] = [
        Component::Avcash,
        Component::Loneliness,
        Component::Claimant,
        Component::Income,
        Component::Housing,
        Component::LoneParents,
        Component::Iuc,
        Component::Car,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Avcash => "avcash",
            Component::Loneliness => "loneliness",
            Component::Claimant => "claimant",
            Component::Income => "income",
            Component::Housing => "housing",
            Component::LoneParents => "lone_parents",
            Component::Iuc => "iuc",
            Component::Car => "car",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Raw indicators for one area, with the supply measures joined in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorVector {
    pub area_id: String,
    pub claimant_pct: f64,
    pub median_income: f64,
    pub rented_or_shared_pct: f64,
    pub lone_parent_pct: f64,
    /// Internet User Classification, 1..=10 (10 = e-withdrawn).
    pub iuc_score: u8,
    pub car_access_pct: f64,
    pub avcash_raw: f64,
    pub lonely_count: u32,
}

impl IndicatorVector {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Error::InvalidParameter(format!(
                "area `{}`: {what} out of range ({v})",
                self.area_id
            ))
        };
        for (name, v) in [
            ("claimant_pct", self.claimant_pct),
            ("rented_or_shared_pct", self.rented_or_shared_pct),
            ("lone_parent_pct", self.lone_parent_pct),
            ("car_access_pct", self.car_access_pct),
        ] {
            if !(0.0..=100.0).contains(&v) {
                return Err(bad(name, v));
            }
        }
        if !(self.median_income.is_finite() && self.median_income >= 0.0) {
            return Err(bad("median_income", self.median_income));
        }
        if !(1..=10).contains(&self.iuc_score) {
            return Err(bad("iuc_score", f64::from(self.iuc_score)));
        }
        if !self.avcash_raw.is_finite() {
            return Err(bad("avcash_raw", self.avcash_raw));
        }
        Ok(())
    }
}

/// Indicator values oriented so higher always means more included, still
/// in raw units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrientedVector {
    pub area_id: String,
    pub values: [f64; 8],
}

impl OrientedVector {
    pub fn get(&self, c: Component) -> f64 {
        self.values[c.index()]
    }
}

/// Reverses a percentage risk measure onto the inclusion scale.
pub fn reverse_percent(p: f64) -> f64 {
    100.0 - p
}

/// Reverses an IUC level: 1 becomes 10 and 10 becomes 1.
pub fn reverse_iuc(level: u8) -> f64 {
    11.0 - f64::from(level)
}

pub fn align_polarity(v: &IndicatorVector) -> OrientedVector {
    let mut values = [0.0; 8];
    values[Component::Avcash.index()] = v.avcash_raw;
    values[Component::Loneliness.index()] = -f64::from(v.lonely_count);
    values[Component::Claimant.index()] = reverse_percent(v.claimant_pct);
    values[Component::Income.index()] = v.median_income;
    values[Component::Housing.index()] = reverse_percent(v.rented_or_shared_pct);
    values[Component::LoneParents.index()] = reverse_percent(v.lone_parent_pct);
    values[Component::Iuc.index()] = reverse_iuc(v.iuc_score);
    values[Component::Car.index()] = v.car_access_pct;
    OrientedVector {
        area_id: v.area_id.clone(),
        values,
    }
}

/// Per-component min and max of a baseline dataset, in oriented raw units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    pub min: [f64; 8],
    pub max: [f64; 8],
}

impl NormalizationBounds {
    pub fn from_dataset(vectors: &[OrientedVector]) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidParameter(
                "cannot derive normalization bounds from an empty dataset".into(),
            ));
        }
        let mut min = [f64::INFINITY; 8];
        let mut max = [f64::NEG_INFINITY; 8];
        for v in vectors {
            for (i, &x) in v.values.iter().enumerate() {
                min[i] = min[i].min(x);
                max[i] = max[i].max(x);
            }
        }
        Ok(NormalizationBounds { min, max })
    }

    pub fn range(&self, c: Component) -> (f64, f64) {
        (self.min[c.index()], self.max[c.index()])
    }

    pub fn validate(&self) -> Result<()> {
        for c in Component::ALL {
            let (lo, hi) = self.range(c);
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!(
                    "normalization bounds for {c} are invalid ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMax {
    pub values: Vec<f64>,
    /// Set when min == max; every output is then 0.
    pub degenerate: bool,
}

/// `(x - min) / (max - min)`; a zero-width range maps everything to 0.
pub fn minmax(values: &[f64], min: f64, max: f64) -> MinMax {
    if max == min {
        return MinMax {
            values: vec![0.0; values.len()],
            degenerate: true,
        };
    }
    let span = max - min;
    MinMax {
        values: values.iter().map(|x| (x - min) / span).collect(),
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedVector {
    pub area_id: String,
    pub components: [f64; 8],
}

impl NormalizedVector {
    pub fn get(&self, c: Component) -> f64 {
        self.components[c.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub vectors: Vec<NormalizedVector>,
    pub degenerate: Vec<Component>,
    /// Number of values pulled back into [0, 1] by clamping.
    pub clamped: usize,
}

/// Normalizes every component against `bounds`. With `clamp` set, results
/// outside [0, 1] (possible only under another dataset's bounds) are
/// clamped.
pub fn normalize(
    vectors: &[OrientedVector],
    bounds: &NormalizationBounds,
    clamp: bool,
) -> Normalized {
    let mut out: Vec<NormalizedVector> = vectors
        .iter()
        .map(|v| NormalizedVector {
            area_id: v.area_id.clone(),
            components: [0.0; 8],
        })
        .collect();
    let mut degenerate = Vec::new();
    let mut clamped = 0;
    for c in Component::ALL {
        let column: Vec<f64> = vectors.iter().map(|v| v.get(c)).collect();
        let (lo, hi) = bounds.range(c);
        let scaled = minmax(&column, lo, hi);
        if scaled.degenerate {
            degenerate.push(c);
        }
        for (nv, mut x) in out.iter_mut().zip(scaled.values) {
            if clamp && !(0.0..=1.0).contains(&x) {
                x = x.clamp(0.0, 1.0);
                clamped += 1;
            }
            nv.components[c.index()] = x;
        }
    }
    Normalized {
        vectors: out,
        degenerate,
        clamped,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlaggedPair {
    pub a: Component,
    pub b: Component,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub components: Vec<Component>,
    /// Pearson matrix; `None` where a zero-variance column makes r undefined.
    pub matrix: Vec<Vec<Option<f64>>>,
    /// Pairs with |r| above the threshold. Reported only, never dropped.
    pub flagged: Vec<FlaggedPair>,
    pub undefined: Vec<Component>,
}

/// Pearson correlation of two equal-length columns; `None` when either has
/// zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

pub fn correlation_screen(vectors: &[OrientedVector]) -> Result<CorrelationReport> {
    if vectors.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: vectors.len(),
        });
    }
    let columns: Vec<Vec<f64>> = Component::ALL
        .iter()
        .map(|&c| vectors.iter().map(|v| v.get(c)).collect())
        .collect();
    let k = columns.len();
    let mut matrix = vec![vec![None; k]; k];
    let mut flagged = Vec::new();
    let undefined: Vec<Component> = Component::ALL
        .into_iter()
        .filter(|c| pearson(&columns[c.index()], &columns[c.index()]).is_none())
        .collect();
    for i in 0..k {
        for j in i..k {
            let r = if i == j {
                (!undefined.contains(&Component::ALL[i])).then_some(1.0)
            } else {
                pearson(&columns[i], &columns[j])
            };
            matrix[i][j] = r;
            matrix[j][i] = r;
            if let Some(r) = r {
                if i != j && r.abs() > CORRELATION_FLAG_THRESHOLD {
                    flagged.push(FlaggedPair {
                        a: Component::ALL[i],
                        b: Component::ALL[j],
                        r,
                    });
                }
            }
        }
    }
    Ok(CorrelationReport {
        components: Component::ALL.to_vec(),
        matrix,
        flagged,
        undefined,
    })
}
