//! Reading and validating input files.
//!
//! Areas, infrastructure, ward lookups and historical ranks are CSV with a
//! header row; columns are matched by name. Boundaries are GeoJSON and must
//! declare a projected CRS in a top-level `crs` member. Row numbers in
//! errors are file line numbers (the header is line 1).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use serde_json::Value;

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::{ProjPoint, StudyArea};
use crate::infrastructure::{InfraKind, InfrastructurePoint, OperatorClass};
use crate::model::{AreaRecord, Dataset, Demographics};
use crate::validation::{median, WardLookup};

const GEOGRAPHIC_CRS: [&str; 5] = ["EPSG:4326", "CRS84", "EPSG:4258", "EPSG:4269", "EPSG:4979"];

const INDICATOR_COLUMNS: [&str; 6] = [
    "claimant_pct",
    "median_income",
    "rented_or_shared_pct",
    "lone_parent_pct",
    "iuc_score",
    "car_access_pct",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedPoint {
    pub id: String,
    pub postcode: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Imputation {
    pub column: String,
    pub value: f64,
    pub areas: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub areas: usize,
    pub points: usize,
    pub points_by_kind: BTreeMap<InfraKind, usize>,
    pub dropped: Vec<DroppedPoint>,
    pub imputed: Vec<Imputation>,
    pub crs: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    pub study_area: Option<StudyArea>,
    pub wards: Option<WardLookup>,
    pub historical: Option<BTreeMap<String, f64>>,
    pub report: IngestReport,
}

pub fn ingest(config: &RunConfig) -> Result<Ingested> {
    let inputs = &config.inputs;
    let mut crs = match &inputs.crs {
        Some(name) => Some(check_projected(Path::new("[inputs] crs"), name)?),
        None => None,
    };

    let areas_path = config.resolve(&inputs.areas);
    let (mut areas, imputed) = read_areas(&areas_path, config.ingest.impute_missing)?;

    if let Some(p) = &inputs.area_polygons {
        let path = config.resolve(p);
        let doc = read_geojson(&path)?;
        merge_crs(&mut crs, declared_crs(&path, &doc)?, &path)?;
        attach_polygons(&path, &doc, &mut areas)?;
    }

    let study_area = match &inputs.study_area {
        Some(p) => {
            let path = config.resolve(p);
            let doc = read_geojson(&path)?;
            merge_crs(&mut crs, declared_crs(&path, &doc)?, &path)?;
            Some(study_area_from(&path, &doc)?)
        }
        None => None,
    };

    let points_path = config.resolve(&inputs.infrastructure);
    let mut points = read_points(&points_path)?;
    let dropped = if config.ingest.dedup_cashback {
        dedup_cashback(&mut points)
    } else {
        Vec::new()
    };
    for d in &dropped {
        info!("dropped {} ({}): {}", d.id, d.postcode, d.reason);
    }

    let wards = match &inputs.ward_lookup {
        Some(p) => Some(read_ward_lookup(&config.resolve(p))?),
        None => None,
    };
    let historical = match &inputs.historical_ranks {
        Some(p) => Some(read_historical(&config.resolve(p))?),
        None => None,
    };

    let mut points_by_kind = BTreeMap::new();
    for p in &points {
        *points_by_kind.entry(p.kind).or_insert(0) += 1;
    }
    let report = IngestReport {
        areas: areas.len(),
        points: points.len(),
        points_by_kind,
        dropped,
        imputed,
        crs,
    };
    info!(
        "ingested {} areas and {} infrastructure points ({} dropped)",
        report.areas,
        report.points,
        report.dropped.len()
    );
    let dataset = Dataset::new(areas, points, config.score_table()?);
    Ok(Ingested {
        dataset,
        study_area,
        wards,
        historical,
        report,
    })
}

struct Table {
    path: PathBuf,
    columns: HashMap<String, usize>,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path, required: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        let mut columns = HashMap::new();
        for (i, h) in headers.iter().enumerate() {
            if columns.insert(h.to_owned(), i).is_some() {
                return Err(Error::schema(path, Some(1), Some(h), "duplicate column"));
            }
        }
        for col in required {
            if !columns.contains_key(*col) {
                return Err(Error::schema(
                    path,
                    Some(1),
                    Some(col),
                    "required column is missing",
                ));
            }
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.iter().all(str::is_empty) {
                continue;
            }
            rows.push((line, record));
        }
        Ok(Table {
            path: path.to_path_buf(),
            columns,
            rows,
        })
    }

    fn cell<'r>(&self, record: &'r csv::StringRecord, column: &str) -> Option<&'r str> {
        self.columns
            .get(column)
            .and_then(|&i| record.get(i))
            .filter(|s| !s.is_empty())
    }

    fn text(&self, line: usize, record: &csv::StringRecord, column: &str) -> Result<String> {
        self.cell(record, column)
            .map(str::to_owned)
            .ok_or_else(|| Error::schema(&self.path, Some(line), Some(column), "value is required"))
    }

    fn number(&self, line: usize, record: &csv::StringRecord, column: &str) -> Result<Option<f64>> {
        match self.cell(record, column) {
            None => Ok(None),
            Some(s) => match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(Error::schema(
                    &self.path,
                    Some(line),
                    Some(column),
                    format!("`{s}` is not a finite number"),
                )),
            },
        }
    }

    fn required_number(
        &self,
        line: usize,
        record: &csv::StringRecord,
        column: &str,
    ) -> Result<f64> {
        self.number(line, record, column)?
            .ok_or_else(|| Error::schema(&self.path, Some(line), Some(column), "value is required"))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::schema(path, row, None, format!("{other:?}")),
    }
}

// id, centroid, indicators (possibly missing), external class, line
type PartialArea = (String, ProjPoint, [Option<f64>; 6], Option<String>, usize);

fn read_areas(path: &Path, impute: bool) -> Result<(Vec<AreaRecord>, Vec<Imputation>)> {
    let mut required = vec!["area_id", "x", "y"];
    required.extend(INDICATOR_COLUMNS);
    let table = Table::read(path, &required)?;

    let mut seen = HashMap::new();
    let mut partial: Vec<PartialArea> = Vec::new();
    for (line, rec) in &table.rows {
        let id = table.text(*line, rec, "area_id")?;
        if let Some(first) = seen.insert(id.clone(), *line) {
            return Err(Error::schema(
                path,
                Some(*line),
                Some("area_id"),
                format!("duplicate area id `{id}` (first seen on row {first})"),
            ));
        }
        let centroid = ProjPoint::new(
            table.required_number(*line, rec, "x")?,
            table.required_number(*line, rec, "y")?,
        );
        let mut values = [None; 6];
        for (slot, col) in values.iter_mut().zip(INDICATOR_COLUMNS) {
            *slot = table.number(*line, rec, col)?;
        }
        check_indicator_ranges(path, *line, &values)?;
        let class = table.cell(rec, "external_class").map(str::to_owned);
        partial.push((id, centroid, values, class, *line));
    }

    let mut imputed = Vec::new();
    for (c, col) in INDICATOR_COLUMNS.iter().enumerate() {
        let missing: Vec<usize> = (0..partial.len())
            .filter(|&i| partial[i].2[c].is_none())
            .collect();
        if missing.is_empty() {
            continue;
        }
        if !impute {
            let (id, ..) = &partial[missing[0]];
            return Err(Error::MissingValue {
                area_id: id.clone(),
                column: (*col).to_owned(),
            });
        }
        let mut present: Vec<f64> = partial.iter().filter_map(|p| p.2[c]).collect();
        let mut fill = median(&mut present).ok_or_else(|| {
            Error::schema(path, None, Some(col), "column has no values to impute from")
        })?;
        if *col == "iuc_score" {
            fill = fill.round();
        }
        let areas: Vec<String> = missing.iter().map(|&i| partial[i].0.clone()).collect();
        warn!("imputed {col} = {fill} for {} area(s)", areas.len());
        for &i in &missing {
            partial[i].2[c] = Some(fill);
        }
        imputed.push(Imputation {
            column: (*col).to_owned(),
            value: fill,
            areas,
        });
    }

    let areas = partial
        .into_iter()
        .map(|(area_id, centroid, v, external_class, _)| {
            let v = v.map(|x| x.expect("filled above"));
            AreaRecord {
                area_id,
                centroid,
                polygon: None,
                demographics: Demographics {
                    claimant_pct: v[0],
                    median_income: v[1],
                    rented_or_shared_pct: v[2],
                    lone_parent_pct: v[3],
                    iuc_score: v[4] as u8,
                    car_access_pct: v[5],
                },
                external_class,
            }
        })
        .collect();
    Ok((areas, imputed))
}

fn check_indicator_ranges(path: &Path, line: usize, values: &[Option<f64>; 6]) -> Result<()> {
    for (v, col) in values.iter().zip(INDICATOR_COLUMNS) {
        let Some(v) = *v else { continue };
        let ok = match col {
            "median_income" => v >= 0.0,
            "iuc_score" => v.fract() == 0.0 && (1.0..=10.0).contains(&v),
            _ => (0.0..=100.0).contains(&v),
        };
        if !ok {
            let expect = match col {
                "median_income" => "a non-negative amount",
                "iuc_score" => "an integer from 1 to 10",
                _ => "a percentage in [0, 100]",
            };
            return Err(Error::schema(
                path,
                Some(line),
                Some(col),
                format!("{v} is not {expect}"),
            ));
        }
    }
    Ok(())
}

fn read_points(path: &Path) -> Result<Vec<InfrastructurePoint>> {
    let table = Table::read(path, &["id", "kind", "x", "y"])?;
    let mut seen = HashMap::new();
    let mut points = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let id = table.text(*line, rec, "id")?;
        if let Some(first) = seen.insert(id.clone(), *line) {
            return Err(Error::schema(
                path,
                Some(*line),
                Some("id"),
                format!("duplicate point id `{id}` (first seen on row {first})"),
            ));
        }
        let kind_text = table.text(*line, rec, "kind")?;
        let kind: InfraKind = kind_text.parse().map_err(|_| {
            Error::schema(
                path,
                Some(*line),
                Some("kind"),
                format!("unknown kind `{kind_text}`"),
            )
        })?;
        if kind == InfraKind::Recycler {
            return Err(Error::schema(
                path,
                Some(*line),
                Some("kind"),
                "recyclers are produced by scenarios and cannot be ingested",
            ));
        }
        let operator_class = match table.cell(rec, "operator_class") {
            None => None,
            Some(s) => Some(s.parse::<OperatorClass>().map_err(|_| {
                Error::schema(
                    path,
                    Some(*line),
                    Some("operator_class"),
                    format!("unknown operator class `{s}`"),
                )
            })?),
        };
        points.push(InfrastructurePoint {
            id,
            kind,
            location: ProjPoint::new(
                table.required_number(*line, rec, "x")?,
                table.required_number(*line, rec, "y")?,
            ),
            postcode: table.cell(rec, "postcode").map(str::to_owned),
            operator_class,
        });
    }
    Ok(points)
}

fn normalize_postcode(p: &str) -> String {
    p.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_uppercase)
        .collect()
}

/// Removes cashback units that share a postcode with a free ATM: retailers
/// with a free ATM on site do not also offer cashback.
pub fn dedup_cashback(points: &mut Vec<InfrastructurePoint>) -> Vec<DroppedPoint> {
    let free_postcodes: BTreeSet<String> = points
        .iter()
        .filter(|p| p.kind == InfraKind::FreeAtm)
        .filter_map(|p| p.postcode.as_deref().map(normalize_postcode))
        .collect();
    let mut dropped = Vec::new();
    points.retain(|p| {
        let shared = p.kind == InfraKind::Cashback
            && p.postcode
                .as_deref()
                .is_some_and(|pc| free_postcodes.contains(&normalize_postcode(pc)));
        if shared {
            dropped.push(DroppedPoint {
                id: p.id.clone(),
                postcode: p.postcode.clone().unwrap_or_default(),
                reason: "cashback shares a postcode with a free ATM".into(),
            });
        }
        !shared
    });
    dropped.sort_by(|a, b| a.id.cmp(&b.id));
    dropped
}

fn read_ward_lookup(path: &Path) -> Result<WardLookup> {
    let table = Table::read(path, &["area_id", "ward_id"])?;
    let mut lookup = WardLookup::new();
    let mut seen = HashMap::new();
    for (line, rec) in &table.rows {
        let area = table.text(*line, rec, "area_id")?;
        if seen.insert(area.clone(), *line).is_some() {
            return Err(Error::schema(
                path,
                Some(*line),
                Some("area_id"),
                format!("area `{area}` is mapped more than once"),
            ));
        }
        let ward = table.text(*line, rec, "ward_id")?;
        let name = table.cell(rec, "ward_name").map(str::to_owned);
        lookup.insert(area, ward, name);
    }
    Ok(lookup)
}

fn read_historical(path: &Path) -> Result<BTreeMap<String, f64>> {
    let table = Table::read(path, &["ward_id", "rank"])?;
    let mut ranks = BTreeMap::new();
    for (line, rec) in &table.rows {
        let ward = table.text(*line, rec, "ward_id")?;
        let rank = table.required_number(*line, rec, "rank")?;
        if ranks.insert(ward.clone(), rank).is_some() {
            return Err(Error::schema(
                path,
                Some(*line),
                Some("ward_id"),
                format!("ward `{ward}` ranked more than once"),
            ));
        }
    }
    Ok(ranks)
}

fn read_geojson(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::schema(path, Some(e.line()), None, format!("invalid JSON: {e}")))
}

fn check_projected(path: &Path, name: &str) -> Result<String> {
    let upper = name.trim().to_ascii_uppercase();
    if GEOGRAPHIC_CRS
        .iter()
        .any(|g| upper.ends_with(g) || upper.contains(&g.replace(':', "::")))
    {
        return Err(Error::schema(
            path,
            None,
            Some("crs"),
            format!("`{name}` is a geographic (lon/lat) CRS; supply coordinates in a projected CRS in metres"),
        ));
    }
    Ok(name.trim().to_owned())
}

fn declared_crs(path: &Path, doc: &Value) -> Result<String> {
    let name = doc
        .get("crs")
        .and_then(|c| c.get("properties"))
        .and_then(|p| p.get("name"))
        .and_then(Value::as_str)
        .ok_or_else(|| {
            Error::schema(
                path,
                None,
                Some("crs"),
                "a top-level `crs` member naming a projected CRS is required",
            )
        })?;
    check_projected(path, name)
}

fn merge_crs(current: &mut Option<String>, found: String, path: &Path) -> Result<()> {
    match current {
        Some(existing) if !existing.eq_ignore_ascii_case(&found) => Err(Error::schema(
            path,
            None,
            Some("crs"),
            format!("declares `{found}` but other inputs use `{existing}`"),
        )),
        Some(_) => Ok(()),
        None => {
            *current = Some(found);
            Ok(())
        }
    }
}

fn features(doc: &Value) -> Vec<&Value> {
    match doc.get("type").and_then(Value::as_str) {
        Some("FeatureCollection") => doc
            .get("features")
            .and_then(Value::as_array)
            .map(|a| a.iter().collect())
            .unwrap_or_default(),
        _ => vec![doc],
    }
}

fn exterior_ring(path: &Path, feature_no: usize, geometry: &Value) -> Result<Vec<ProjPoint>> {
    let bad = |msg: &str| {
        Error::schema(
            path,
            None,
            Some(&format!("features[{feature_no}].geometry")),
            msg.to_owned(),
        )
    };
    let kind = geometry
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("missing geometry type"))?;
    let coords = geometry
        .get("coordinates")
        .ok_or_else(|| bad("missing coordinates"))?;
    let ring = match kind {
        "Polygon" => coords.get(0),
        "MultiPolygon" => coords.get(0).and_then(|p| p.get(0)),
        other => return Err(bad(&format!("expected a Polygon, found {other}"))),
    }
    .and_then(Value::as_array)
    .ok_or_else(|| bad("polygon has no exterior ring"))?;
    ring.iter()
        .map(|pos| {
            let x = pos.get(0).and_then(Value::as_f64);
            let y = pos.get(1).and_then(Value::as_f64);
            match (x, y) {
                (Some(x), Some(y)) => {
                    ProjPoint::checked(x, y).map_err(|_| bad("non-finite coordinate"))
                }
                _ => Err(bad("malformed position")),
            }
        })
        .collect()
}

fn geometry_of(feature: &Value) -> &Value {
    feature.get("geometry").unwrap_or(feature)
}

fn study_area_from(path: &Path, doc: &Value) -> Result<StudyArea> {
    let feature = *features(doc)
        .first()
        .ok_or_else(|| Error::schema(path, None, None, "no study area feature"))?;
    let ring = exterior_ring(path, 0, geometry_of(feature))?;
    StudyArea::from_ring(ring).map_err(|e| Error::schema(path, None, None, e.to_string()))
}

fn attach_polygons(path: &Path, doc: &Value, areas: &mut [AreaRecord]) -> Result<()> {
    let index: HashMap<String, usize> = areas
        .iter()
        .enumerate()
        .map(|(i, a)| (a.area_id.clone(), i))
        .collect();
    for (n, feature) in features(doc).into_iter().enumerate() {
        let id = feature
            .get("properties")
            .and_then(|p| p.get("area_id"))
            .and_then(Value::as_str)
            .ok_or_else(|| {
                Error::schema(
                    path,
                    None,
                    Some(&format!("features[{n}].properties.area_id")),
                    "missing area id",
                )
            })?;
        let &i = index.get(id).ok_or_else(|| {
            Error::schema(
                path,
                None,
                Some(&format!("features[{n}].properties.area_id")),
                format!("unknown area `{id}`"),
            )
        })?;
        if areas[i].polygon.is_some() {
            return Err(Error::schema(
                path,
                None,
                None,
                format!("area `{id}` has more than one polygon"),
            ));
        }
        areas[i].polygon = Some(exterior_ring(path, n, geometry_of(feature))?);
    }
    Ok(())
}
