//! What-if interventions applied as dataset-to-dataset transforms, then
//! re-scored (by default under the baseline's normalization bounds) to give
//! per-area score changes.
//!
//! The three interventions touch disjoint state (the PayPoint score, lonely
//! free ATMs, IUC levels), so any application order yields the same data.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::composite::IndexResult;
use crate::error::{Error, Result};
use crate::indicators::NormalizationBounds;
use crate::infrastructure::{lonely_atms, AlternativeSet, InfraKind};
use crate::model::{evaluate, BoundsMode, Dataset, Evaluation, ModelParams};

/// Deltas smaller than this count as "unaffected".
pub const AFFECTED_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intervention {
    /// Post Office style banking at PayPoint outlets.
    PaypointBanking,
    /// Lonely free ATMs converted to deposit-taking recyclers.
    CashRecyclers,
    /// E-withdrawn areas lifted to a more engaged IUC level.
    DigitalInclusion,
}

impl Intervention {
    pub const ALL: [Intervention; 3] = [
        Intervention::PaypointBanking,
        Intervention::CashRecyclers,
        Intervention::DigitalInclusion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Intervention::PaypointBanking => "paypoint_banking",
            Intervention::CashRecyclers => "cash_recyclers",
            Intervention::DigitalInclusion => "digital_inclusion",
        }
    }
}

impl fmt::Display for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Intervention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Intervention::ALL
            .into_iter()
            .find(|i| i.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown intervention `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsPolicy {
    #[default]
    FrozenBaseline,
    Recompute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub interventions: Vec<Intervention>,
    pub recycler_lonely_threshold_m: f64,
    /// IUC level to upgrade from (10 = e-withdrawn).
    pub digital_from: u8,
    pub digital_to: u8,
    #[serde(rename = "bounds")]
    pub bounds_policy: BoundsPolicy,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            interventions: Vec::new(),
            recycler_lonely_threshold_m: 250.0,
            digital_from: 10,
            digital_to: 7,
            bounds_policy: BoundsPolicy::FrozenBaseline,
        }
    }
}

impl ScenarioSpec {
    pub fn with(interventions: &[Intervention]) -> Self {
        ScenarioSpec {
            interventions: interventions.to_vec(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unique: BTreeSet<_> = self.interventions.iter().collect();
        if unique.len() != self.interventions.len() {
            return Err(Error::InvalidConfig(
                "scenario lists an intervention more than once".into(),
            ));
        }
        if !(self.recycler_lonely_threshold_m.is_finite() && self.recycler_lonely_threshold_m > 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "recycler lonely threshold must be positive, got {}",
                self.recycler_lonely_threshold_m
            )));
        }
        for level in [self.digital_from, self.digital_to] {
            if !(1..=10).contains(&level) {
                return Err(Error::InvalidConfig(format!(
                    "IUC level {level} is outside 1..=10"
                )));
            }
        }
        // Higher IUC levels are less engaged; an upgrade must go down.
        if self.digital_to >= self.digital_from {
            return Err(Error::InvalidConfig(format!(
                "digital upgrade must lower the IUC level ({} -> {})",
                self.digital_from, self.digital_to
            )));
        }
        Ok(())
    }
}

/// PayPoint outlets score like post offices. Points keep their kind; only
/// the score table changes.
pub fn apply_paypoint(dataset: &Dataset) -> Dataset {
    let mut out = dataset.clone();
    out.score_table
        .set(
            InfraKind::PayPoint,
            dataset.score_table.get(InfraKind::PostOffice),
        )
        .expect("post office score is finite");
    out
}

/// Converts every free ATM with no free alternative within `threshold`
/// into a recycler. Returns the new dataset and the converted ids.
pub fn apply_recyclers(dataset: &Dataset, threshold: f64) -> Result<(Dataset, Vec<String>)> {
    let report = lonely_atms(&dataset.points, threshold, AlternativeSet::FreeOnly)?;
    let mut out = dataset.clone();
    let mut converted = Vec::new();
    for atm in report
        .atms
        .iter()
        .filter(|a| a.lonely && a.kind == InfraKind::FreeAtm)
    {
        out.points[atm.index].kind = InfraKind::Recycler;
        converted.push(atm.id.clone());
    }
    Ok((out, converted))
}

/// Moves every area at IUC `from` to `to`. Returns the new dataset and the
/// changed area ids.
pub fn apply_digital(dataset: &Dataset, from: u8, to: u8) -> (Dataset, Vec<String>) {
    let mut out = dataset.clone();
    let mut changed = Vec::new();
    for area in out
        .areas
        .iter_mut()
        .filter(|a| a.demographics.iuc_score == from)
    {
        area.demographics.iuc_score = to;
        changed.push(area.area_id.clone());
    }
    (out, changed)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AppliedChanges {
    pub converted_atms: Vec<String>,
    pub upgraded_areas: Vec<String>,
    pub paypoint_score: Option<f64>,
}

/// Applies the spec's interventions in order.
pub fn apply_interventions(
    spec: &ScenarioSpec,
    dataset: &Dataset,
) -> Result<(Dataset, AppliedChanges)> {
    spec.validate()?;
    let mut current = dataset.clone();
    let mut changes = AppliedChanges::default();
    for intervention in &spec.interventions {
        match intervention {
            Intervention::PaypointBanking => {
                current = apply_paypoint(&current);
                changes.paypoint_score = Some(current.score_table.get(InfraKind::PayPoint));
            }
            Intervention::CashRecyclers => {
                let (next, converted) =
                    apply_recyclers(&current, spec.recycler_lonely_threshold_m)?;
                current = next;
                changes.converted_atms.extend(converted);
            }
            Intervention::DigitalInclusion => {
                let (next, upgraded) = apply_digital(&current, spec.digital_from, spec.digital_to);
                current = next;
                changes.upgraded_areas.extend(upgraded);
            }
        }
    }
    changes.converted_atms.sort();
    changes.upgraded_areas.sort();
    Ok((current, changes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaDelta {
    pub area_id: String,
    pub baseline_score: f64,
    pub scenario_score: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub max_delta: f64,
    pub mean_delta: f64,
    pub areas_affected: usize,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub spec: ScenarioSpec,
    pub areas: Vec<AreaDelta>,
    pub summary: ScenarioSummary,
    pub changes: AppliedChanges,
    pub evaluation: Evaluation,
}

/// Applies `spec` to the baseline dataset, re-scores it and reports the
/// per-area change against `baseline_results`.
pub fn run_scenario(
    spec: &ScenarioSpec,
    baseline: &Dataset,
    params: &ModelParams,
    baseline_results: &[IndexResult],
    baseline_bounds: Option<&NormalizationBounds>,
) -> Result<ScenarioReport> {
    spec.validate()?;
    let mode = match spec.bounds_policy {
        BoundsPolicy::FrozenBaseline => {
            BoundsMode::Frozen(baseline_bounds.ok_or(Error::MissingBaseline)?.clone())
        }
        BoundsPolicy::Recompute => BoundsMode::Own,
    };
    let (dataset, changes) = apply_interventions(spec, baseline)?;
    let evaluation = evaluate(&dataset, params, &mode)?;

    let mut areas = Vec::with_capacity(evaluation.results.len());
    for (after, before) in evaluation.results.iter().zip(baseline_results) {
        if after.area_id != before.area_id {
            return Err(Error::InvalidParameter(format!(
                "baseline results do not line up with the dataset (`{}` vs `{}`)",
                before.area_id, after.area_id
            )));
        }
        areas.push(AreaDelta {
            area_id: after.area_id.clone(),
            baseline_score: before.score,
            scenario_score: after.score,
            delta: after.score - before.score,
        });
    }
    if areas.len() != baseline_results.len() {
        return Err(Error::InvalidParameter(
            "baseline results cover a different number of areas".into(),
        ));
    }
    let summary = summarize(&areas);
    Ok(ScenarioReport {
        spec: spec.clone(),
        areas,
        summary,
        changes,
        evaluation,
    })
}

fn summarize(areas: &[AreaDelta]) -> ScenarioSummary {
    let n = areas.len().max(1) as f64;
    ScenarioSummary {
        max_delta: areas.iter().map(|a| a.delta).fold(0.0, f64::max),
        mean_delta: areas.iter().map(|a| a.delta).sum::<f64>() / n,
        areas_affected: areas
            .iter()
            .filter(|a| a.delta.abs() > AFFECTED_EPSILON)
            .count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ProjPoint;
    use crate::infrastructure::{avcash, build_catchment, InfrastructurePoint, ScoreTable};
    use crate::model::{AreaRecord, Demographics};

    fn point(id: &str, kind: InfraKind, x: f64, y: f64) -> InfrastructurePoint {
        InfrastructurePoint {
            id: id.into(),
            kind,
            location: ProjPoint::new(x, y),
            postcode: None,
            operator_class: None,
        }
    }

    fn area(id: &str, x: f64, y: f64, iuc: u8) -> AreaRecord {
        AreaRecord {
            area_id: id.into(),
            centroid: ProjPoint::new(x, y),
            polygon: None,
            demographics: Demographics {
                claimant_pct: 5.0 + x / 1000.0,
                median_income: 12000.0 + y,
                rented_or_shared_pct: 40.0 + x / 100.0,
                lone_parent_pct: 10.0 - y / 1000.0,
                iuc_score: iuc,
                car_access_pct: 60.0 + y / 100.0,
            },
            external_class: None,
        }
    }

    #[test]
    fn paypoint_lifts_avcash_by_two() {
        let pts = vec![
            point("a", InfraKind::FreeAtm, 0.0, 0.0),
            point("p", InfraKind::PayPoint, 100.0, 0.0),
        ];
        let d = Dataset::new(vec![], pts, ScoreTable::default());
        let c = build_catchment(ProjPoint::new(0.0, 0.0), 500.0, &d.points).unwrap();
        assert_eq!(avcash(&c, &d.score_table), 3.0);
        let after = apply_paypoint(&d);
        assert_eq!(avcash(&c, &after.score_table), 5.0);
        assert_eq!(after.points, d.points);
    }

    #[test]
    fn isolated_free_atm_becomes_recycler() {
        let pts = vec![
            point("lone", InfraKind::FreeAtm, 0.0, 0.0),
            point("x", InfraKind::FreeAtm, 5000.0, 0.0),
            point("y", InfraKind::FreeAtm, 5000.0, 0.0),
            point("c", InfraKind::ChargingAtm, 50.0, 0.0),
        ];
        let d = Dataset::new(vec![], pts, ScoreTable::default());
        let (after, converted) = apply_recyclers(&d, 250.0).unwrap();
        assert_eq!(converted, vec!["lone"]);
        let centre = ProjPoint::new(0.0, 0.0);
        let before_c = build_catchment(centre, 500.0, &d.points).unwrap();
        let after_c = build_catchment(centre, 500.0, &after.points).unwrap();
        assert_eq!(
            avcash(&after_c, &after.score_table) - avcash(&before_c, &d.score_table),
            1.0
        );
    }

    #[test]
    fn digital_is_selective() {
        let areas = vec![area("a", 0.0, 0.0, 10), area("b", 1.0, 0.0, 9)];
        let d = Dataset::new(areas, vec![], ScoreTable::default());
        let (after, changed) = apply_digital(&d, 10, 7);
        assert_eq!(changed, vec!["a"]);
        assert_eq!(after.areas[0].demographics.iuc_score, 7);
        assert_eq!(after.areas[1].demographics.iuc_score, 9);
        assert_eq!(crate::indicators::reverse_iuc(7), 4.0);
    }

    #[test]
    fn spec_validation() {
        assert!(ScenarioSpec::default().validate().is_ok());
        let mut s = ScenarioSpec::default();
        s.digital_to = 10;
        assert!(s.validate().is_err());
        let mut s = ScenarioSpec::default();
        s.interventions = vec![Intervention::CashRecyclers, Intervention::CashRecyclers];
        assert!(s.validate().is_err());
        let mut s = ScenarioSpec::default();
        s.recycler_lonely_threshold_m = 0.0;
        assert!(s.validate().is_err());
    }

    fn small_dataset() -> Dataset {
        let areas = vec![
            area("A", 0.0, 0.0, 10),
            area("B", 1000.0, 0.0, 3),
            area("C", 0.0, 1000.0, 10),
            area("D", 1000.0, 1000.0, 5),
            area("E", 2000.0, 2000.0, 1),
        ];
        let pts = vec![
            point("f1", InfraKind::FreeAtm, 10.0, 0.0),
            point("f2", InfraKind::FreeAtm, 1000.0, 100.0),
            point("f3", InfraKind::FreeAtm, 1100.0, 100.0),
            point("c1", InfraKind::ChargingAtm, 0.0, 1100.0),
            point("pp", InfraKind::PayPoint, 1000.0, 900.0),
            point("po", InfraKind::PostOffice, 2000.0, 2100.0),
        ];
        Dataset::new(areas, pts, ScoreTable::default())
    }

    #[test]
    fn frozen_scenario_needs_baseline_bounds() {
        let d = small_dataset();
        let params = ModelParams::default();
        let base = evaluate(&d, &params, &BoundsMode::Own).unwrap();
        let spec = ScenarioSpec::with(&[Intervention::DigitalInclusion]);
        assert!(matches!(
            run_scenario(&spec, &d, &params, &base.results, None),
            Err(Error::MissingBaseline)
        ));
    }

    #[test]
    fn digital_delta_closed_form() {
        let d = small_dataset();
        let params = ModelParams::default();
        let base = evaluate(&d, &params, &BoundsMode::Own).unwrap();
        let spec = ScenarioSpec::with(&[Intervention::DigitalInclusion]);
        let report = run_scenario(&spec, &d, &params, &base.results, Some(&base.bounds)).unwrap();
        let (lo, hi) = base.bounds.range(crate::indicators::Component::Iuc);
        let expected =
            100.0 * params.weights.iuc * ((4.0 - lo) / (hi - lo) - (1.0 - lo) / (hi - lo));
        for a in &report.areas {
            if a.area_id == "A" || a.area_id == "C" {
                assert!((a.delta - expected).abs() < 1e-9, "{a:?}");
            } else {
                assert_eq!(a.delta, 0.0);
            }
        }
        assert_eq!(report.summary.areas_affected, 2);
        assert_eq!(report.changes.upgraded_areas, vec!["A", "C"]);
    }

    #[test]
    fn empty_scenario_is_identity() {
        let d = small_dataset();
        let params = ModelParams::default();
        let base = evaluate(&d, &params, &BoundsMode::Own).unwrap();
        let report = run_scenario(
            &ScenarioSpec::default(),
            &d,
            &params,
            &base.results,
            Some(&base.bounds),
        )
        .unwrap();
        assert!(report.areas.iter().all(|a| a.delta == 0.0));
        assert_eq!(report.summary.areas_affected, 0);
    }

    #[test]
    fn recompute_policy_runs_without_baseline_bounds() {
        let d = small_dataset();
        let params = ModelParams::default();
        let base = evaluate(&d, &params, &BoundsMode::Own).unwrap();
        let mut spec = ScenarioSpec::with(&[Intervention::PaypointBanking]);
        spec.bounds_policy = BoundsPolicy::Recompute;
        let report = run_scenario(&spec, &d, &params, &base.results, None).unwrap();
        assert_eq!(report.areas.len(), 5);
    }
}
