//! Small-area financial-exclusion index.
//!
//! Scores each area by the cash infrastructure reachable from its
//! centroid, flags ATMs with no nearby alternative, combines supply,
//! demand and digital/transport alternatives into a weighted 0–100
//! inclusion score (higher = more included), classes the scores by
//! natural breaks, validates against a historical ward ranking and
//! simulates interventions.
//!
//! Modules follow the flow of a run:
//! [`geometry`] → [`infrastructure`] → [`indicators`] → [`composite`] →
//! [`validation`] / [`scenario`], with [`model`] tying a dataset to its
//! scores and [`pipeline`] handling files.

pub mod composite;
pub mod error;
pub mod geometry;
pub mod indicators;
pub mod infrastructure;
pub mod model;
pub mod pipeline;
pub mod scenario;
pub mod validation;

pub use error::{Error, Result};
