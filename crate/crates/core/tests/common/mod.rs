#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use finex_core::pipeline::{self, Artifact, RunConfig, Target};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde_json::Value;

pub const CSV_INPUTS: [&str; 4] = [
    "areas.csv",
    "infrastructure.csv",
    "wards.csv",
    "historical_ranks.csv",
];

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden")
}

pub fn expected() -> Value {
    let text = fs::read_to_string(fixture_dir().join("expected.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Copies the fixture into a fresh directory. With a seed, the data rows of
/// every CSV input are shuffled.
pub fn copy_fixture(shuffle_seed: Option<u64>) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for name in ["config.toml", "study_area.geojson"] {
        fs::copy(fixture_dir().join(name), dir.path().join(name)).unwrap();
    }
    for name in CSV_INPUTS {
        let text = fs::read_to_string(fixture_dir().join(name)).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        if let Some(seed) = shuffle_seed {
            let mut rng = StdRng::seed_from_u64(seed);
            lines[1..].shuffle(&mut rng);
        }
        fs::write(dir.path().join(name), lines.join("\n") + "\n").unwrap();
    }
    dir
}

pub fn load(dir: &Path) -> RunConfig {
    RunConfig::load(&dir.join("config.toml")).unwrap()
}

pub fn artifacts(config: &RunConfig) -> Vec<Artifact> {
    let results = pipeline::run(config, Target::All).unwrap();
    pipeline::render(config, &results, Target::All).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
