use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{nearest_neighbor, ProjPoint, StudyArea};

/// Standard error constant of the Clark–Evans test under complete spatial
/// randomness.
pub const CLARK_EVANS_SE_CONSTANT: f64 = 0.26136;

/// Clark–Evans nearest-neighbour summary for one point pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NnStats {
    pub n_points: usize,
    pub area_m2: f64,
    pub observed_mean_m: f64,
    pub expected_mean_m: f64,
    /// Observed over expected: below 1 clustered, above 1 dispersed.
    pub nni: f64,
    pub z_score: f64,
}

impl NnStats {
    /// Derives the statistics from an already measured mean distance.
    pub fn from_observed(n_points: usize, area_m2: f64, observed_mean_m: f64) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InsufficientPoints {
                needed: 2,
                got: n_points,
            });
        }
        if !(area_m2.is_finite() && area_m2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "study area must be positive, got {area_m2}"
            )));
        }
        let n = n_points as f64;
        let density = n / area_m2;
        let expected_mean_m = 0.5 / density.sqrt();
        let standard_error = CLARK_EVANS_SE_CONSTANT / (n * n / area_m2).sqrt();
        Ok(NnStats {
            n_points,
            area_m2,
            observed_mean_m,
            expected_mean_m,
            nni: observed_mean_m / expected_mean_m,
            z_score: (observed_mean_m - expected_mean_m) / standard_error,
        })
    }
}

pub fn nn_stats(points: &[ProjPoint], area: &StudyArea) -> Result<NnStats> {
    if points.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: points.len(),
        });
    }
    let total: f64 = (0..points.len())
        .map(|i| nearest_neighbor(i, points).map(|(_, d)| d))
        .sum::<Result<f64>>()?;
    NnStats::from_observed(points.len(), area.area_m2(), total / points.len() as f64)
}
