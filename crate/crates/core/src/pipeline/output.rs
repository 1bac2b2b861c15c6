//! Serialization of run artifacts. Everything is rendered to bytes in
//! memory first so a failed run never leaves a partial set on disk.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::composite::IndexResult;
use crate::error::{Error, Result};
use crate::geometry::ProjPoint;
use crate::indicators::Component;
use crate::infrastructure::{CatchmentProfile, InfraKind, NnStats};
use crate::model::AreaRecord;
use crate::scenario::AreaDelta;
use crate::validation::{RankComparison, WardLookup};

pub const GEOJSON_NAMESPACE: &str = "finex";

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: &'static str,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Copy)]
pub struct NumberFormat {
    pub full_precision: bool,
}

impl NumberFormat {
    pub fn fmt(&self, x: f64) -> String {
        // Avoid "-0.0000" in golden files.
        let x = if x == 0.0 { 0.0 } else { x };
        if self.full_precision {
            format!("{x}")
        } else {
            let s = format!("{x:.4}");
            if s.trim_start_matches('-')
                .chars()
                .all(|c| c == '0' || c == '.')
            {
                s.trim_start_matches('-').to_owned()
            } else {
                s
            }
        }
    }
}

fn csv_bytes(header: &[String], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let map_err = |e: csv::Error| Error::InvalidParameter(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(map_err)?;
    for row in rows {
        w.write_record(&row).map_err(map_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidParameter(format!("csv encoding failed: {e}")))
}

pub fn catchments_csv(profiles: &[CatchmentProfile], nf: NumberFormat) -> Result<Vec<u8>> {
    let mut header = vec!["area_id".to_owned()];
    header.extend(InfraKind::ALL.iter().map(|k| k.as_str().to_owned()));
    header.push("avcash_raw".into());
    header.push("lonely_free_atms".into());
    let rows = profiles
        .iter()
        .map(|p| {
            let mut row = vec![p.area_id.clone()];
            row.extend(p.counts.iter().map(|(_, n)| n.to_string()));
            row.push(nf.fmt(p.avcash_raw));
            row.push(p.lonely_free_atms.to_string());
            row
        })
        .collect();
    csv_bytes(&header, rows)
}

pub fn nnstats_csv(stats: &[(InfraKind, NnStats)], nf: NumberFormat) -> Result<Vec<u8>> {
    let header: Vec<String> = [
        "kind",
        "n_points",
        "area_m2",
        "expected_mean_m",
        "observed_mean_m",
        "nni",
        "z_score",
        "pattern",
    ]
    .map(String::from)
    .to_vec();
    let rows = stats
        .iter()
        .map(|(kind, s)| {
            vec![
                kind.as_str().to_owned(),
                s.n_points.to_string(),
                nf.fmt(s.area_m2),
                nf.fmt(s.expected_mean_m),
                nf.fmt(s.observed_mean_m),
                nf.fmt(s.nni),
                nf.fmt(s.z_score),
                pattern(s.nni).to_owned(),
            ]
        })
        .collect();
    csv_bytes(&header, rows)
}

fn pattern(nni: f64) -> &'static str {
    if nni < 1.0 {
        "clustered"
    } else if nni > 1.0 {
        "dispersed"
    } else {
        "random"
    }
}

pub fn index_csv(
    results: &[IndexResult],
    areas: &[AreaRecord],
    nf: NumberFormat,
) -> Result<Vec<u8>> {
    let mut header = vec!["area_id".to_owned()];
    header.extend(Component::ALL.iter().map(|c| c.name().to_owned()));
    header.extend(["score", "class", "external_class"].map(String::from));
    let rows = results
        .iter()
        .zip(areas)
        .map(|(r, a)| {
            debug_assert_eq!(r.area_id, a.area_id);
            let mut row = vec![r.area_id.clone()];
            row.extend(r.components.iter().map(|&x| nf.fmt(x)));
            row.push(nf.fmt(r.score));
            row.push(r.jenks_class.map(|c| c.to_string()).unwrap_or_default());
            row.push(a.external_class.clone().unwrap_or_default());
            row
        })
        .collect();
    csv_bytes(&header, rows)
}

pub fn validation_csv(
    cmp: &RankComparison,
    lookup: &WardLookup,
    nf: NumberFormat,
) -> Result<Vec<u8>> {
    let header: Vec<String> = [
        "ward_id",
        "ward_name",
        "median_score",
        "rank_now",
        "rank_then",
        "delta",
    ]
    .map(String::from)
    .to_vec();
    let rank = |r: f64| {
        if r.fract() == 0.0 {
            format!("{}", r as i64)
        } else {
            format!("{r}")
        }
    };
    let rows = cmp
        .wards
        .iter()
        .map(|w| {
            vec![
                w.ward_id.clone(),
                lookup.name_of(&w.ward_id).unwrap_or_default().to_owned(),
                nf.fmt(w.median_score),
                rank(w.rank_now),
                rank(w.rank_then),
                rank(w.delta),
            ]
        })
        .collect();
    csv_bytes(&header, rows)
}

pub fn scenario_csv(deltas: &[AreaDelta], nf: NumberFormat) -> Result<Vec<u8>> {
    let header: Vec<String> = ["area_id", "baseline_score", "scenario_score", "delta"]
        .map(String::from)
        .to_vec();
    let rows = deltas
        .iter()
        .map(|d| {
            vec![
                d.area_id.clone(),
                nf.fmt(d.baseline_score),
                nf.fmt(d.scenario_score),
                nf.fmt(d.delta),
            ]
        })
        .collect();
    csv_bytes(&header, rows)
}

fn ns(key: &str) -> String {
    format!("{GEOJSON_NAMESPACE}:{key}")
}

fn position(p: ProjPoint) -> Value {
    json!([p.x, p.y])
}

fn geometry(area: &AreaRecord) -> Value {
    match &area.polygon {
        Some(ring) => json!({
            "type": "Polygon",
            "coordinates": [ring.iter().copied().map(position).collect::<Vec<_>>()],
        }),
        None => json!({ "type": "Point", "coordinates": position(area.centroid) }),
    }
}

fn feature_collection(crs: Option<&str>, features: Vec<Value>) -> Result<Vec<u8>> {
    let mut doc = Map::new();
    doc.insert("type".into(), json!("FeatureCollection"));
    if let Some(name) = crs {
        doc.insert(
            "crs".into(),
            json!({ "type": "name", "properties": { "name": name } }),
        );
    }
    doc.insert("features".into(), Value::Array(features));
    let mut bytes = serde_json::to_vec_pretty(&Value::Object(doc))
        .map_err(|e| Error::InvalidParameter(format!("json encoding failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn feature(area: &AreaRecord, properties: Map<String, Value>) -> Value {
    json!({
        "type": "Feature",
        "geometry": geometry(area),
        "properties": Value::Object(properties),
    })
}

pub fn index_geojson(
    results: &[IndexResult],
    areas: &[AreaRecord],
    crs: Option<&str>,
) -> Result<Vec<u8>> {
    let features = results
        .iter()
        .zip(areas)
        .map(|(r, a)| {
            let mut props = Map::new();
            props.insert(ns("area_id"), json!(r.area_id));
            props.insert(ns("score"), json!(r.score));
            props.insert(ns("class"), json!(r.jenks_class));
            for c in Component::ALL {
                props.insert(ns(c.name()), json!(r.components[c.index()]));
            }
            if let Some(ext) = &a.external_class {
                props.insert(ns("external_class"), json!(ext));
            }
            props.insert(ns("config_fingerprint"), json!(r.config_fingerprint));
            feature(a, props)
        })
        .collect();
    feature_collection(crs, features)
}

pub fn scenario_geojson(
    deltas: &[AreaDelta],
    areas: &[AreaRecord],
    crs: Option<&str>,
) -> Result<Vec<u8>> {
    let features = deltas
        .iter()
        .zip(areas)
        .map(|(d, a)| {
            let mut props = Map::new();
            props.insert(ns("area_id"), json!(d.area_id));
            props.insert(ns("baseline_score"), json!(d.baseline_score));
            props.insert(ns("scenario_score"), json!(d.scenario_score));
            props.insert(ns("delta"), json!(d.delta));
            feature(a, props)
        })
        .collect();
    feature_collection(crs, features)
}

/// Writes every artifact into `dir`. If any write fails, files already
/// written by this call are removed before the error is returned.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(a.name);
        if let Err(e) = std::fs::write(&path, &a.bytes) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(Error::io(path, e));
        }
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        let nf = NumberFormat {
            full_precision: false,
        };
        assert_eq!(nf.fmt(53.333333333), "53.3333");
        assert_eq!(nf.fmt(-0.0), "0.0000");
        assert_eq!(nf.fmt(-0.00001), "0.0000");
        assert_eq!(nf.fmt(-0.5), "-0.5000");
        let full = NumberFormat {
            full_precision: true,
        };
        assert_eq!(full.fmt(0.1), "0.1");
        assert_eq!(full.fmt(-0.0), "0");
    }

    #[test]
    fn failed_write_cleans_up() {
        let dir = tempfile::tempdir().unwrap();
        let artifacts = vec![
            Artifact {
                name: "a.csv",
                bytes: b"x".to_vec(),
            },
            Artifact {
                name: "missing/b.csv",
                bytes: b"y".to_vec(),
            },
        ];
        assert!(write_artifacts(dir.path(), &artifacts).is_err());
        assert!(!dir.path().join("a.csv").exists());
    }
}
