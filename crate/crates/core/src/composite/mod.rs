//! Weighted additive aggregation into a 0–100 inclusion score and
//! natural-breaks classification of the scores.

mod jenks;

pub use jenks::{jenks_breaks, JenksClasses};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{Component, NormalizedVector};

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Components in the order their weighted terms are summed: alphabetical
/// by name, so a score never depends on how components are stored.
const SUMMATION_ORDER: [Component; 8] = [
    Component::Avcash,
    Component::Car,
    Component::Claimant,
    Component::Housing,
    Component::Income,
    Component::Iuc,
    Component::LoneParents,
    Component::Loneliness,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainWeights {
    pub supply: f64,
    pub demand: f64,
    pub alternatives: f64,
}

/// Hierarchical weights: three domains, eight sub-variables expressed as
/// fractions of the total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightScheme {
    pub avcash: f64,
    pub loneliness: f64,
    pub claimant: f64,
    pub income: f64,
    pub housing: f64,
    pub lone_parents: f64,
    pub iuc: f64,
    pub car: f64,
    /// When absent, domain weights are the sums of their sub-weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domains: Option<DomainWeights>,
}

impl Default for WeightScheme {
    /// Equal thirds across supply, demand and alternatives, stored as the
    /// exact fractions behind the published two-decimal percentages.
    fn default() -> Self {
        WeightScheme {
            avcash: 4.0 / 15.0,
            loneliness: 1.0 / 15.0,
            claimant: 2.0 / 21.0,
            income: 2.0 / 21.0,
            housing: 2.0 / 21.0,
            lone_parents: 1.0 / 21.0,
            iuc: 1.0 / 6.0,
            car: 1.0 / 6.0,
            domains: Some(DomainWeights {
                supply: 1.0 / 3.0,
                demand: 1.0 / 3.0,
                alternatives: 1.0 / 3.0,
            }),
        }
    }
}

impl WeightScheme {
    pub fn get(&self, c: Component) -> f64 {
        match c {
            Component::Avcash => self.avcash,
            Component::Loneliness => self.loneliness,
            Component::Claimant => self.claimant,
            Component::Income => self.income,
            Component::Housing => self.housing,
            Component::LoneParents => self.lone_parents,
            Component::Iuc => self.iuc,
            Component::Car => self.car,
        }
    }

    pub fn by_component(&self) -> [f64; 8] {
        Component::ALL.map(|c| self.get(c))
    }

    pub fn total(&self) -> f64 {
        SUMMATION_ORDER.iter().map(|&c| self.get(c)).sum()
    }

    pub fn domain_sums(&self) -> DomainWeights {
        DomainWeights {
            supply: self.avcash + self.loneliness,
            demand: self.claimant + self.income + self.housing + self.lone_parents,
            alternatives: self.iuc + self.car,
        }
    }

    pub fn effective_domains(&self) -> DomainWeights {
        self.domains.unwrap_or_else(|| self.domain_sums())
    }

    pub fn validate(&self) -> Result<()> {
        for c in Component::ALL {
            let w = self.get(c);
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "weight for {c} must be finite and non-negative, got {w}"
                )));
            }
        }
        let total = self.total();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidConfig(format!(
                "sub-weights sum to {total}, expected 1"
            )));
        }
        if let Some(d) = self.domains {
            let sums = self.domain_sums();
            for (name, declared, actual) in [
                ("supply", d.supply, sums.supply),
                ("demand", d.demand, sums.demand),
                ("alternatives", d.alternatives, sums.alternatives),
            ] {
                if !(declared.is_finite() && declared >= 0.0)
                    || (declared - actual).abs() > WEIGHT_TOLERANCE
                {
                    return Err(Error::InvalidConfig(format!(
                        "{name} domain weight {declared} does not match its sub-weights ({actual})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Scales every weight so the eight sub-weights sum to one.
    pub fn renormalized(&self) -> Result<Self> {
        let total = self.total();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidConfig("weights sum to zero".into()));
        }
        let mut w = *self;
        w.avcash /= total;
        w.loneliness /= total;
        w.claimant /= total;
        w.income /= total;
        w.housing /= total;
        w.lone_parents /= total;
        w.iuc /= total;
        w.car /= total;
        w.domains = None;
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexResult {
    pub area_id: String,
    pub components: [f64; 8],
    /// 0–100, higher = more financially included.
    pub score: f64,
    /// 1 = lowest-score class; `None` until [`classify`] runs.
    pub jenks_class: Option<u8>,
    pub config_fingerprint: String,
}

/// `100 · Σ wᵢ · componentᵢ`, summed in a fixed order.
pub fn aggregate(nv: &NormalizedVector, w: &WeightScheme) -> f64 {
    100.0
        * SUMMATION_ORDER
            .iter()
            .map(|&c| w.get(c) * nv.get(c))
            .sum::<f64>()
}

/// Scores every area. Weights are validated before any area is touched.
pub fn score_areas(
    vectors: &[NormalizedVector],
    weights: &WeightScheme,
    fingerprint: &str,
) -> Result<Vec<IndexResult>> {
    weights.validate()?;
    Ok(vectors
        .iter()
        .map(|nv| IndexResult {
            area_id: nv.area_id.clone(),
            components: nv.components,
            score: aggregate(nv, weights),
            jenks_class: None,
            config_fingerprint: fingerprint.to_owned(),
        })
        .collect())
}

/// Labels every result with its natural-breaks class over all scores.
pub fn classify(results: &mut [IndexResult], k: usize) -> Result<JenksClasses> {
    let scores: Vec<f64> = results.iter().map(|r| r.score).collect();
    let classes = jenks_breaks(&scores, k)?;
    for (r, &label) in results.iter_mut().zip(&classes.labels) {
        r.jenks_class = Some(label);
    }
    Ok(classes)
}
