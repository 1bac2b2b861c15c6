//! The in-memory dataset and the end-to-end evaluation from infrastructure
//! points and area indicators to per-area scores.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::composite::{score_areas, IndexResult, WeightScheme};
use crate::error::Result;
use crate::geometry::ProjPoint;
use crate::indicators::{
    align_polarity, normalize, IndicatorVector, NormalizationBounds, Normalized, OrientedVector,
};
use crate::infrastructure::{
    build_profile, lonely_atms, AlternativeSet, CatchmentProfile, InfrastructurePoint,
    LonelyReport, ScoreTable,
};

/// Demographic and behavioural indicators for one area, as ingested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub claimant_pct: f64,
    pub median_income: f64,
    pub rented_or_shared_pct: f64,
    pub lone_parent_pct: f64,
    pub iuc_score: u8,
    pub car_access_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaRecord {
    pub area_id: String,
    /// Population-weighted centroid; the catchment centre.
    pub centroid: ProjPoint,
    /// Exterior ring, when a boundary file was supplied.
    pub polygon: Option<Vec<ProjPoint>>,
    pub demographics: Demographics,
    /// Externally supplied classification (e.g. an area typology group),
    /// carried through to outputs only.
    pub external_class: Option<String>,
}

/// Areas and points are kept sorted by id so every result is independent
/// of input row order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub areas: Vec<AreaRecord>,
    pub points: Vec<InfrastructurePoint>,
    pub score_table: ScoreTable,
}

impl Dataset {
    pub fn new(
        mut areas: Vec<AreaRecord>,
        mut points: Vec<InfrastructurePoint>,
        score_table: ScoreTable,
    ) -> Self {
        areas.sort_by(|a, b| a.area_id.cmp(&b.area_id));
        points.sort_by(|a, b| a.id.cmp(&b.id));
        Dataset {
            areas,
            points,
            score_table,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    pub catchment_radius_m: f64,
    pub lonely_threshold_m: f64,
    pub alternatives: AlternativeSet,
    pub weights: WeightScheme,
    pub jenks_k: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            catchment_radius_m: 500.0,
            lonely_threshold_m: 250.0,
            alternatives: AlternativeSet::AnyAtm,
            weights: WeightScheme::default(),
            jenks_k: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundsMode {
    /// Derive bounds from the dataset being evaluated.
    Own,
    /// Reuse bounds from a baseline run; out-of-range values are clamped.
    Frozen(NormalizationBounds),
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub profiles: Vec<CatchmentProfile>,
    pub lonely: LonelyReport,
    pub vectors: Vec<IndicatorVector>,
    pub oriented: Vec<OrientedVector>,
    pub bounds: NormalizationBounds,
    pub normalized: Normalized,
    pub results: Vec<IndexResult>,
    pub fingerprint: String,
}

pub fn evaluate(
    dataset: &Dataset,
    params: &ModelParams,
    bounds: &BoundsMode,
) -> Result<Evaluation> {
    params.weights.validate()?;
    let lonely = lonely_atms(
        &dataset.points,
        params.lonely_threshold_m,
        params.alternatives,
    )?;
    let flags = lonely.flags(dataset.points.len());

    let profiles = dataset
        .areas
        .iter()
        .map(|a| {
            build_profile(
                &a.area_id,
                a.centroid,
                params.catchment_radius_m,
                &dataset.points,
                &flags,
                &dataset.score_table,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let vectors = dataset
        .areas
        .iter()
        .zip(&profiles)
        .map(|(a, p)| {
            let d = &a.demographics;
            let v = IndicatorVector {
                area_id: a.area_id.clone(),
                claimant_pct: d.claimant_pct,
                median_income: d.median_income,
                rented_or_shared_pct: d.rented_or_shared_pct,
                lone_parent_pct: d.lone_parent_pct,
                iuc_score: d.iuc_score,
                car_access_pct: d.car_access_pct,
                avcash_raw: p.avcash_raw,
                lonely_count: p.lonely_free_atms,
            };
            v.validate().map(|_| v)
        })
        .collect::<Result<Vec<_>>>()?;

    let oriented: Vec<OrientedVector> = vectors.iter().map(align_polarity).collect();
    let (bounds, clamp) = match bounds {
        BoundsMode::Own => (NormalizationBounds::from_dataset(&oriented)?, false),
        BoundsMode::Frozen(b) => {
            b.validate()?;
            (b.clone(), true)
        }
    };
    let normalized = normalize(&oriented, &bounds, clamp);
    let fingerprint = fingerprint(params, &dataset.score_table, &bounds);
    let results = score_areas(&normalized.vectors, &params.weights, &fingerprint)?;

    Ok(Evaluation {
        profiles,
        lonely,
        vectors,
        oriented,
        bounds,
        normalized,
        results,
        fingerprint,
    })
}

/// Short hash of everything that shapes a score: radii, alternative set,
/// score table, weights, normalization bounds and class count.
pub fn fingerprint(
    params: &ModelParams,
    table: &ScoreTable,
    bounds: &NormalizationBounds,
) -> String {
    let mut h = Sha256::new();
    let mut put = |label: &str, x: f64| {
        h.update(label.as_bytes());
        h.update(x.to_bits().to_le_bytes());
    };
    put("radius", params.catchment_radius_m);
    put("lonely", params.lonely_threshold_m);
    put(
        "alternatives",
        match params.alternatives {
            AlternativeSet::AnyAtm => 0.0,
            AlternativeSet::FreeOnly => 1.0,
        },
    );
    for (kind, score) in table.iter() {
        put(kind.as_str(), score);
    }
    for (i, w) in params.weights.by_component().into_iter().enumerate() {
        put(&format!("w{i}"), w);
    }
    for i in 0..8 {
        put(&format!("min{i}"), bounds.min[i]);
        put(&format!("max{i}"), bounds.max[i]);
    }
    put("k", params.jenks_k as f64);
    h.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
