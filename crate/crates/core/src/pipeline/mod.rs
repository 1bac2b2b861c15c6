//! Ingest, evaluate and emit: the end-to-end run behind the CLI.

pub mod config;
pub mod ingest;
pub mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;

use log::{info, warn};
use serde::Serialize;

use crate::composite::{classify, IndexResult, JenksClasses};
use crate::error::{Error, Result};
use crate::geometry::StudyArea;
use crate::indicators::{correlation_screen, Component, CorrelationReport};
use crate::infrastructure::{nn_stats, DistanceBin, InfraKind, NnStats};
use crate::model::{evaluate, BoundsMode, Evaluation, ModelParams};
use crate::scenario::{run_scenario, ScenarioReport};
use crate::validation::{rank_and_compare, ward_medians, RankComparison};

pub use config::{NniArea, Overrides, RunConfig};
pub use ingest::{ingest, IngestReport, Ingested};
pub use output::{write_artifacts, Artifact, NumberFormat};

/// Which artifacts a run produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Catchment,
    Nni,
    Index,
    Validate,
    Scenario,
    All,
}

impl Target {
    fn wants(self, other: Target) -> bool {
        self == Target::All || self == other
    }
}

/// Results of every stage that ran.
#[derive(Debug, Clone)]
pub struct RunResults {
    pub ingested: Ingested,
    pub params: ModelParams,
    pub baseline: Evaluation,
    pub classes: Option<JenksClasses>,
    pub nnstats: Vec<(InfraKind, NnStats)>,
    pub nni_area: Option<NniArea>,
    pub correlation: Option<CorrelationReport>,
    pub validation: Option<RankComparison>,
    pub scenario: Option<ScenarioReport>,
    pub warnings: Vec<String>,
}

impl RunResults {
    pub fn results(&self) -> &[IndexResult] {
        &self.baseline.results
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Ingest only.
pub fn ingest_check(config: &RunConfig) -> Result<Ingested> {
    stage("ingest", ingest(config))
}

/// Runs every stage `target` needs.
pub fn run(config: &RunConfig, target: Target) -> Result<RunResults> {
    stage("config", config.validate())?;
    let ingested = ingest_check(config)?;
    let params = config.model_params();
    let mut warnings = Vec::new();
    for imp in &ingested.report.imputed {
        warnings.push(format!(
            "imputed {} = {} (median) for {}",
            imp.column,
            imp.value,
            imp.areas.join(", ")
        ));
    }

    let mut baseline = stage(
        "catchment",
        evaluate(&ingested.dataset, &params, &BoundsMode::Own),
    )?;
    for c in &baseline.normalized.degenerate {
        warnings.push(format!(
            "{c} has no variation across areas; normalized to 0 everywhere"
        ));
    }

    let mut nnstats = Vec::new();
    let mut nni_area = None;
    if target.wants(Target::Nni) {
        let (stats, area, notes) = stage("nni", nn_table(config, &ingested))?;
        nnstats = stats;
        nni_area = Some(area);
        warnings.extend(notes);
    }

    let mut classes = None;
    let mut correlation = None;
    if target.wants(Target::Index)
        || target.wants(Target::Validate)
        || target.wants(Target::Scenario)
    {
        classes = Some(stage(
            "index",
            classify(&mut baseline.results, params.jenks_k),
        )?);
        if baseline.oriented.len() >= 3 {
            let report = stage("index", correlation_screen(&baseline.oriented))?;
            for p in &report.flagged {
                warnings.push(format!(
                    "{} and {} correlate at r = {:.4} (above 0.95)",
                    p.a, p.b, p.r
                ));
            }
            for c in &report.undefined {
                warnings.push(format!("correlation of {c} is undefined (zero variance)"));
            }
            correlation = Some(report);
        } else {
            warnings.push("fewer than 3 areas; correlation screen skipped".into());
        }
    }

    let mut validation = None;
    if target.wants(Target::Validate) {
        match (&ingested.wards, &ingested.historical) {
            (Some(lookup), Some(hist)) => {
                let medians = stage("validate", ward_medians(&baseline.results, lookup))?;
                validation = Some(stage("validate", rank_and_compare(&medians, hist))?);
            }
            (None, None) => {}
            _ => warnings
                .push("validation needs both a ward lookup and historical ranks; skipped".into()),
        }
        if target == Target::Validate && validation.is_none() {
            return Err(Error::InvalidConfig(
                "validation requested but ward lookup or historical ranks are missing".into(),
            )
            .in_stage("validate"));
        }
    }

    let mut scenario = None;
    if target.wants(Target::Scenario) {
        if let Some(spec) = &config.scenario {
            let report = stage(
                "scenario",
                run_scenario(
                    spec,
                    &ingested.dataset,
                    &params,
                    &baseline.results,
                    Some(&baseline.bounds),
                ),
            )?;
            if report.evaluation.normalized.clamped > 0 {
                warnings.push(format!(
                    "scenario: {} normalized values clamped to the baseline range",
                    report.evaluation.normalized.clamped
                ));
            }
            scenario = Some(report);
        } else if target == Target::Scenario {
            return Err(
                Error::InvalidConfig("no [scenario] section in the config".into())
                    .in_stage("scenario"),
            );
        }
    }

    for w in &warnings {
        warn!("{w}");
    }
    Ok(RunResults {
        ingested,
        params,
        baseline,
        classes,
        nnstats,
        nni_area,
        correlation,
        validation,
        scenario,
        warnings,
    })
}

type NnTable = (Vec<(InfraKind, NnStats)>, NniArea, Vec<String>);

fn nn_table(config: &RunConfig, ingested: &Ingested) -> Result<NnTable> {
    let area_mode = match (config.nni.area, &ingested.study_area) {
        (Some(NniArea::Polygon), None) => {
            return Err(Error::InvalidConfig(
                "nni.area = \"polygon\" needs inputs.study_area".into(),
            ))
        }
        (Some(mode), _) => mode,
        (None, Some(_)) => NniArea::Polygon,
        (None, None) => NniArea::BoundingBox,
    };
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    for kind in InfraKind::ALL {
        let pts: Vec<_> = ingested
            .dataset
            .points
            .iter()
            .filter(|p| p.kind == kind)
            .map(|p| p.location)
            .collect();
        if pts.is_empty() {
            continue;
        }
        if pts.len() < 2 {
            notes.push(format!(
                "nearest-neighbour statistics skipped for {kind}: only one point"
            ));
            continue;
        }
        let area = match area_mode {
            NniArea::Polygon => ingested.study_area.clone().expect("checked above"),
            NniArea::BoundingBox => match StudyArea::bounding_box(&pts) {
                Ok(a) => a,
                Err(_) => {
                    notes.push(format!(
                        "nearest-neighbour statistics skipped for {kind}: points are collinear"
                    ));
                    continue;
                }
            },
        };
        rows.push((kind, nn_stats(&pts, &area)?));
    }
    Ok((rows, area_mode, notes))
}

/// Renders the artifacts `target` calls for.
pub fn render(config: &RunConfig, results: &RunResults, target: Target) -> Result<Vec<Artifact>> {
    let nf = NumberFormat {
        full_precision: config.output.full_precision,
    };
    let areas = &results.ingested.dataset.areas;
    let crs = results.ingested.report.crs.as_deref();
    let mut out = Vec::new();
    let r = |e: Result<Vec<u8>>| stage("output", e);
    if target.wants(Target::Catchment) {
        out.push(Artifact {
            name: "catchments.csv",
            bytes: r(output::catchments_csv(&results.baseline.profiles, nf))?,
        });
    }
    if target.wants(Target::Nni) {
        out.push(Artifact {
            name: "nnstats.csv",
            bytes: r(output::nnstats_csv(&results.nnstats, nf))?,
        });
    }
    if target.wants(Target::Index) {
        out.push(Artifact {
            name: "index.csv",
            bytes: r(output::index_csv(results.results(), areas, nf))?,
        });
        out.push(Artifact {
            name: "index.geojson",
            bytes: r(output::index_geojson(results.results(), areas, crs))?,
        });
    }
    if let (true, Some(cmp), Some(lookup)) = (
        target.wants(Target::Validate),
        &results.validation,
        &results.ingested.wards,
    ) {
        out.push(Artifact {
            name: "validation.csv",
            bytes: r(output::validation_csv(cmp, lookup, nf))?,
        });
    }
    if let (true, Some(s)) = (target.wants(Target::Scenario), &results.scenario) {
        out.push(Artifact {
            name: "scenario_delta.csv",
            bytes: r(output::scenario_csv(&s.areas, nf))?,
        });
        out.push(Artifact {
            name: "scenario_delta.geojson",
            bytes: r(output::scenario_geojson(&s.areas, areas, crs))?,
        });
    }
    if target == Target::All {
        let report = run_report(config, results);
        let mut bytes = serde_json::to_vec_pretty(&report).map_err(|e| {
            Error::InvalidParameter(format!("json encoding failed: {e}")).in_stage("output")
        })?;
        bytes.push(b'\n');
        out.push(Artifact {
            name: "run_report.json",
            bytes,
        });
    }
    Ok(out)
}

/// Runs, renders and writes. Returns the paths written.
pub fn run_to_disk(config: &RunConfig, target: Target) -> Result<(RunResults, Vec<PathBuf>)> {
    let results = run(config, target)?;
    let artifacts = render(config, &results, target)?;
    let written = stage("output", write_artifacts(&config.output_dir(), &artifacts))?;
    info!(
        "wrote {} artifact(s) to {}",
        written.len(),
        config.output_dir().display()
    );
    Ok((results, written))
}

pub fn run_all(config: &RunConfig) -> Result<(RunResults, Vec<PathBuf>)> {
    run_to_disk(config, Target::All)
}

#[derive(Debug, Serialize)]
struct WeightEcho {
    fraction: f64,
    percent: String,
}

#[derive(Debug, Serialize)]
struct LonelySummary {
    threshold_m: f64,
    alternatives: crate::infrastructure::AlternativeSet,
    atms_tested: usize,
    lonely: usize,
    lonely_by_kind: BTreeMap<InfraKind, usize>,
    bins: BTreeMap<&'static str, BTreeMap<&'static str, usize>>,
}

#[derive(Debug, Serialize)]
struct RunReport<'a> {
    tool: BTreeMap<&'static str, &'static str>,
    config: &'a RunConfig,
    catchment_radius_m: f64,
    catchment_boundary: &'static str,
    score_table: BTreeMap<InfraKind, f64>,
    weights: BTreeMap<&'static str, WeightEcho>,
    weights_total: f64,
    domain_weights: crate::composite::DomainWeights,
    config_fingerprint: &'a str,
    ingest: &'a IngestReport,
    loneliness: LonelySummary,
    normalization_bounds: BTreeMap<&'static str, [f64; 2]>,
    degenerate_variables: Vec<Component>,
    correlation: Option<&'a CorrelationReport>,
    classification: Option<&'a JenksClasses>,
    nni_area: Option<NniArea>,
    validation: Option<ValidationSummary>,
    scenario: Option<ScenarioSummaryEcho<'a>>,
    warnings: &'a [String],
}

#[derive(Debug, Serialize)]
struct ValidationSummary {
    wards: usize,
    spearman: Option<f64>,
    pearson_medians: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ScenarioSummaryEcho<'a> {
    spec: &'a crate::scenario::ScenarioSpec,
    summary: &'a crate::scenario::ScenarioSummary,
    changes: &'a crate::scenario::AppliedChanges,
    clamped_values: usize,
}

fn run_report<'a>(config: &'a RunConfig, r: &'a RunResults) -> RunReport<'a> {
    let w = &r.params.weights;
    let weights = Component::ALL
        .into_iter()
        .map(|c| {
            (
                c.name(),
                WeightEcho {
                    fraction: w.get(c),
                    percent: format!("{:.2}", w.get(c) * 100.0),
                },
            )
        })
        .collect();
    let lonely = &r.baseline.lonely;
    let mut bins = BTreeMap::new();
    for (label, kind) in [
        ("all", None),
        ("free_atm", Some(InfraKind::FreeAtm)),
        ("charging_atm", Some(InfraKind::ChargingAtm)),
    ] {
        let counts = lonely.bin_counts(kind);
        bins.insert(
            label,
            DistanceBin::ALL
                .into_iter()
                .map(|b| (b.label(), counts[b as usize]))
                .collect(),
        );
    }
    let lonely_by_kind = [InfraKind::FreeAtm, InfraKind::ChargingAtm]
        .into_iter()
        .map(|k| (k, lonely.lonely_count_of(k)))
        .collect();
    RunReport {
        tool: BTreeMap::from([("name", "finex"), ("version", env!("CARGO_PKG_VERSION"))]),
        config,
        catchment_radius_m: r.params.catchment_radius_m,
        catchment_boundary: "inclusive: a unit at exactly the radius is inside",
        score_table: r.ingested.dataset.score_table.iter().collect(),
        weights,
        weights_total: w.total(),
        domain_weights: w.effective_domains(),
        config_fingerprint: &r.baseline.fingerprint,
        ingest: &r.ingested.report,
        loneliness: LonelySummary {
            threshold_m: lonely.threshold_m,
            alternatives: lonely.alternatives,
            atms_tested: lonely.atms.len(),
            lonely: lonely.lonely_count(),
            lonely_by_kind,
            bins,
        },
        normalization_bounds: Component::ALL
            .into_iter()
            .map(|c| {
                let (lo, hi) = r.baseline.bounds.range(c);
                (c.name(), [lo, hi])
            })
            .collect(),
        degenerate_variables: r.baseline.normalized.degenerate.clone(),
        correlation: r.correlation.as_ref(),
        classification: r.classes.as_ref(),
        nni_area: r.nni_area,
        validation: r.validation.as_ref().map(|v| ValidationSummary {
            wards: v.wards.len(),
            spearman: v.spearman,
            pearson_medians: v.pearson_medians,
        }),
        scenario: r.scenario.as_ref().map(|s| ScenarioSummaryEcho {
            spec: &s.spec,
            summary: &s.summary,
            changes: &s.changes,
            clamped_values: s.evaluation.normalized.clamped,
        }),
        warnings: &r.warnings,
    }
}
