use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::composite::WeightScheme;
use crate::error::{Error, Result};
use crate::infrastructure::{AlternativeSet, InfraKind, ScoreTable};
use crate::model::ModelParams;
use crate::scenario::ScenarioSpec;

/// A full run configuration, read from TOML. Relative input and output
/// paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: InputPaths,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub catchment: CatchmentConfig,
    #[serde(default)]
    pub loneliness: LonelinessConfig,
    /// Per-kind score overrides on top of the default table.
    #[serde(default)]
    pub scores: BTreeMap<InfraKind, f64>,
    #[serde(default)]
    pub weights: WeightScheme,
    #[serde(default)]
    pub classification: ClassificationConfig,
    #[serde(default)]
    pub nni: NniConfig,
    #[serde(default)]
    pub ingest: IngestConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub areas: PathBuf,
    pub infrastructure: PathBuf,
    /// Projected CRS of all coordinates, e.g. "EPSG:27700". Must agree
    /// with any CRS declared in the GeoJSON inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crs: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study_area: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_polygons: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ward_lookup: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub historical_ranks: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Emit CSV numbers at full precision instead of 4 decimals.
    pub full_precision: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            full_precision: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatchmentConfig {
    pub radius_m: f64,
}

impl Default for CatchmentConfig {
    fn default() -> Self {
        CatchmentConfig { radius_m: 500.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LonelinessConfig {
    pub threshold_m: f64,
    pub alternatives: AlternativeSet,
}

impl Default for LonelinessConfig {
    fn default() -> Self {
        LonelinessConfig {
            threshold_m: 250.0,
            alternatives: AlternativeSet::AnyAtm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassificationConfig {
    pub jenks_k: usize,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        ClassificationConfig { jenks_k: 5 }
    }
}

/// Which area the nearest-neighbour expectation is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NniArea {
    /// The supplied study-area polygon.
    Polygon,
    /// Each kind's own point bounding box.
    BoundingBox,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NniConfig {
    /// Defaults to the polygon when a study area is supplied, otherwise the
    /// bounding box.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area: Option<NniArea>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Drop cashback rows that share a postcode with a free ATM.
    pub dedup_cashback: bool,
    /// Fill missing indicator values with the column median instead of
    /// aborting.
    pub impute_missing: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            dedup_cashback: true,
            impute_missing: false,
        }
    }
}

/// Command-line overrides applied after loading.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub radius_m: Option<f64>,
    pub lonely_threshold_m: Option<f64>,
    pub jenks_k: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub full_precision: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config =
            Self::from_toml(&text).map_err(|e| Error::schema(path, None, None, e.to_string()))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(r) = o.radius_m {
            self.catchment.radius_m = r;
        }
        if let Some(t) = o.lonely_threshold_m {
            self.loneliness.threshold_m = t;
        }
        if let Some(k) = o.jenks_k {
            self.classification.jenks_k = k;
        }
        if let Some(dir) = &o.output_dir {
            self.output.dir = dir.clone();
        }
        if o.full_precision {
            self.output.full_precision = true;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("catchment.radius_m", self.catchment.radius_m)?;
        positive("loneliness.threshold_m", self.loneliness.threshold_m)?;
        if self.classification.jenks_k == 0 {
            return Err(Error::InvalidConfig(
                "classification.jenks_k must be at least 1".into(),
            ));
        }
        self.weights.validate()?;
        self.score_table()?;
        if let Some(s) = &self.scenario {
            s.validate()?;
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output.dir)
    }

    pub fn score_table(&self) -> Result<ScoreTable> {
        let mut table = ScoreTable::default();
        for (&kind, &score) in &self.scores {
            table.set(kind, score)?;
        }
        Ok(table)
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            catchment_radius_m: self.catchment.radius_m,
            lonely_threshold_m: self.loneliness.threshold_m,
            alternatives: self.loneliness.alternatives,
            weights: self.weights,
            jenks_k: self.classification.jenks_k,
        }
    }
}
