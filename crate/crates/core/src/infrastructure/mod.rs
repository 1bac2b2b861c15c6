//! Cash-access infrastructure: kinds, per-unit availability scores,
//! catchment counts, lonely ATMs and nearest-neighbour statistics.

mod lonely;
mod nnstats;

pub use lonely::{lonely_atms, AlternativeSet, DistanceBin, LonelyAtm, LonelyReport};
pub use nnstats::{nn_stats, NnStats, CLARK_EVANS_SE_CONSTANT};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_radius, distance, ProjPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfraKind {
    FreeAtm,
    PostOffice,
    Branch,
    Cashback,
    ChargingAtm,
    /// Not scored in the baseline index; upgraded by the PayPoint banking
    /// intervention.
    PayPoint,
    /// Produced only by the cash-recycler intervention.
    Recycler,
}

impl InfraKind {
    pub const ALL: [InfraKind; 7] = [
        InfraKind::FreeAtm,
        InfraKind::PostOffice,
        InfraKind::Branch,
        InfraKind::Cashback,
        InfraKind::ChargingAtm,
        InfraKind::PayPoint,
        InfraKind::Recycler,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InfraKind::FreeAtm => "free_atm",
            InfraKind::PostOffice => "post_office",
            InfraKind::Branch => "branch",
            InfraKind::Cashback => "cashback",
            InfraKind::ChargingAtm => "charging_atm",
            InfraKind::PayPoint => "paypoint",
            InfraKind::Recycler => "recycler",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }

    pub fn is_atm(self) -> bool {
        matches!(
            self,
            InfraKind::FreeAtm | InfraKind::ChargingAtm | InfraKind::Recycler
        )
    }
}

impl fmt::Display for InfraKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InfraKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InfraKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown infrastructure kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorClass {
    Bank,
    /// Independent ATM deployer.
    Iad,
    Other,
}

impl FromStr for OperatorClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bank" => Ok(OperatorClass::Bank),
            "iad" => Ok(OperatorClass::Iad),
            "other" => Ok(OperatorClass::Other),
            _ => Err(Error::InvalidParameter(format!(
                "unknown operator class `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfrastructurePoint {
    pub id: String,
    pub kind: InfraKind,
    pub location: ProjPoint,
    pub postcode: Option<String>,
    pub operator_class: Option<OperatorClass>,
}

/// Availability-of-cash score per unit of each kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreTable([f64; 7]);

impl Default for ScoreTable {
    fn default() -> Self {
        let mut table = [0.0; 7];
        table[InfraKind::FreeAtm.slot()] = 3.0;
        table[InfraKind::PostOffice.slot()] = 2.0;
        table[InfraKind::Branch.slot()] = 1.0;
        table[InfraKind::Cashback.slot()] = 0.5;
        table[InfraKind::ChargingAtm.slot()] = -0.5;
        table[InfraKind::PayPoint.slot()] = 0.0;
        // Same as two post offices.
        table[InfraKind::Recycler.slot()] = 4.0;
        ScoreTable(table)
    }
}

impl ScoreTable {
    pub fn get(&self, kind: InfraKind) -> f64 {
        self.0[kind.slot()]
    }

    pub fn set(&mut self, kind: InfraKind, score: f64) -> Result<()> {
        if !score.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "score for {kind} must be finite, got {score}"
            )));
        }
        self.0[kind.slot()] = score;
        Ok(())
    }

    pub fn with(mut self, kind: InfraKind, score: f64) -> Result<Self> {
        self.set(kind, score)?;
        Ok(self)
    }

    pub fn iter(&self) -> impl Iterator<Item = (InfraKind, f64)> + '_ {
        InfraKind::ALL.into_iter().map(|k| (k, self.get(k)))
    }
}

/// Units of each kind inside one catchment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts([u32; 7]);

impl KindCounts {
    pub fn get(&self, kind: InfraKind) -> u32 {
        self.0[kind.slot()]
    }

    pub fn set(&mut self, kind: InfraKind, count: u32) {
        self.0[kind.slot()] = count;
    }

    pub fn increment(&mut self, kind: InfraKind) {
        self.0[kind.slot()] += 1;
    }

    pub fn from_pairs(pairs: &[(InfraKind, u32)]) -> Self {
        let mut counts = KindCounts::default();
        for &(kind, n) in pairs {
            counts.0[kind.slot()] += n;
        }
        counts
    }

    pub fn iter(&self) -> impl Iterator<Item = (InfraKind, u32)> + '_ {
        InfraKind::ALL.into_iter().map(|k| (k, self.get(k)))
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl std::ops::Add for KindCounts {
    type Output = KindCounts;

    fn add(mut self, rhs: KindCounts) -> KindCounts {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatchmentProfile {
    pub area_id: String,
    pub counts: KindCounts,
    pub avcash_raw: f64,
    /// Lonely free ATMs inside the catchment.
    pub lonely_free_atms: u32,
}

/// Counts every unit within `radius` of `centroid` by kind. Co-located
/// units are counted separately.
pub fn build_catchment(
    centroid: ProjPoint,
    radius: f64,
    points: &[InfrastructurePoint],
) -> Result<KindCounts> {
    check_radius(radius)?;
    let mut counts = KindCounts::default();
    for p in points {
        if distance(centroid, p.location) <= radius {
            counts.increment(p.kind);
        }
    }
    Ok(counts)
}

/// AvCash score: counts weighted by the per-unit score table.
pub fn avcash(counts: &KindCounts, table: &ScoreTable) -> f64 {
    counts
        .iter()
        .map(|(kind, n)| f64::from(n) * table.get(kind))
        .sum()
}

/// Builds a full profile for one area. `lonely` holds, for each entry of
/// `points`, whether it is a lonely ATM.
pub fn build_profile(
    area_id: &str,
    centroid: ProjPoint,
    radius: f64,
    points: &[InfrastructurePoint],
    lonely: &[bool],
    table: &ScoreTable,
) -> Result<CatchmentProfile> {
    debug_assert_eq!(points.len(), lonely.len());
    let counts = build_catchment(centroid, radius, points)?;
    let lonely_free_atms = points
        .iter()
        .zip(lonely)
        .filter(|(p, &l)| {
            l && p.kind == InfraKind::FreeAtm && distance(centroid, p.location) <= radius
        })
        .count() as u32;
    Ok(CatchmentProfile {
        area_id: area_id.to_owned(),
        counts,
        avcash_raw: avcash(&counts, table),
        lonely_free_atms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    pub(crate) fn point(id: &str, kind: InfraKind, x: f64, y: f64) -> InfrastructurePoint {
        InfrastructurePoint {
            id: id.into(),
            kind,
            location: ProjPoint::new(x, y),
            postcode: None,
            operator_class: None,
        }
    }

    #[test]
    fn default_scores() {
        let t = ScoreTable::default();
        let expected = [
            (InfraKind::FreeAtm, 3.0),
            (InfraKind::PostOffice, 2.0),
            (InfraKind::Branch, 1.0),
            (InfraKind::Cashback, 0.5),
            (InfraKind::ChargingAtm, -0.5),
            (InfraKind::PayPoint, 0.0),
            (InfraKind::Recycler, 4.0),
        ];
        for (k, v) in expected {
            assert_eq!(t.get(k), v, "{k}");
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("free_atm".parse::<InfraKind>().unwrap(), InfraKind::FreeAtm);
        assert_eq!(
            "PayPoint".parse::<InfraKind>().unwrap(),
            InfraKind::PayPoint
        );
        assert!("kiosk".parse::<InfraKind>().is_err());
    }

    #[test]
    fn catchment_membership_forced_by_distance() {
        let pts = vec![
            point("a", InfraKind::FreeAtm, 100.0, 0.0),
            point("b", InfraKind::Cashback, 0.0, 499.0),
            point("c", InfraKind::ChargingAtm, -200.0, 0.0),
            point("d", InfraKind::Branch, 0.0, -600.0),
        ];
        let c = build_catchment(ProjPoint::new(0.0, 0.0), 500.0, &pts).unwrap();
        assert_eq!(c.get(InfraKind::FreeAtm), 1);
        assert_eq!(c.get(InfraKind::Cashback), 1);
        assert_eq!(c.get(InfraKind::ChargingAtm), 1);
        assert_eq!(c.get(InfraKind::Branch), 0);
        assert_eq!(avcash(&c, &ScoreTable::default()), 3.0);
    }

    #[test]
    fn empty_catchment() {
        let c = build_catchment(ProjPoint::new(0.0, 0.0), 500.0, &[]).unwrap();
        assert_eq!(c, KindCounts::default());
        assert_eq!(avcash(&c, &ScoreTable::default()), 0.0);
    }

    #[test]
    fn co_located_units_both_count() {
        let pts = vec![
            point("a", InfraKind::FreeAtm, 10.0, 10.0),
            point("b", InfraKind::FreeAtm, 10.0, 10.0),
        ];
        let c = build_catchment(ProjPoint::new(0.0, 0.0), 500.0, &pts).unwrap();
        assert_eq!(c.get(InfraKind::FreeAtm), 2);
    }

    #[test]
    fn catchment_rejects_bad_radius() {
        assert!(build_catchment(ProjPoint::new(0.0, 0.0), 0.0, &[]).is_err());
    }

    #[test]
    fn catchment_matches_brute_force_per_kind() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let pts: Vec<_> = (0..50)
                .map(|i| {
                    let kind = InfraKind::ALL[rng.gen_range(0..6)];
                    point(
                        &i.to_string(),
                        kind,
                        rng.gen_range(-900.0..900.0),
                        rng.gen_range(-900.0..900.0),
                    )
                })
                .collect();
            let c = build_catchment(ProjPoint::new(0.0, 0.0), 500.0, &pts).unwrap();
            for kind in InfraKind::ALL {
                let expected = pts
                    .iter()
                    .filter(|p| p.kind == kind && p.location.x.hypot(p.location.y) <= 500.0)
                    .count() as u32;
                assert_eq!(c.get(kind), expected);
            }
        }
    }

    #[test]
    fn avcash_reference_rows() {
        let t = ScoreTable::default();
        use InfraKind::*;
        let rows = [
            (vec![(FreeAtm, 1), (Cashback, 1), (ChargingAtm, 1)], 3.0),
            (
                vec![
                    (FreeAtm, 1),
                    (PostOffice, 1),
                    (Cashback, 2),
                    (ChargingAtm, 1),
                ],
                5.5,
            ),
            (vec![(FreeAtm, 3), (Branch, 1), (Cashback, 1)], 10.5),
        ];
        for (pairs, expected) in rows {
            assert_eq!(avcash(&KindCounts::from_pairs(&pairs), &t), expected);
        }
    }

    #[test]
    fn profile_counts_only_lonely_free_atms() {
        let pts = vec![
            point("f", InfraKind::FreeAtm, 0.0, 0.0),
            point("c", InfraKind::ChargingAtm, 50.0, 0.0),
            point("far", InfraKind::FreeAtm, 900.0, 0.0),
        ];
        let lonely = [true, true, true];
        let p = build_profile(
            "A",
            ProjPoint::new(0.0, 0.0),
            500.0,
            &pts,
            &lonely,
            &ScoreTable::default(),
        )
        .unwrap();
        assert_eq!(p.lonely_free_atms, 1);
        assert!(p.lonely_free_atms <= p.counts.get(InfraKind::FreeAtm));
        assert_eq!(p.avcash_raw, 2.5);
    }

    fn counts_strategy() -> impl Strategy<Value = KindCounts> {
        prop::array::uniform7(0u32..20).prop_map(KindCounts)
    }

    proptest! {
        #[test]
        fn avcash_is_linear(a in counts_strategy(), b in counts_strategy()) {
            let t = ScoreTable::default();
            let sum = avcash(&(a + b), &t);
            prop_assert!((sum - (avcash(&a, &t) + avcash(&b, &t))).abs() < 1e-9);
        }

        #[test]
        fn avcash_monotone_in_each_kind(c in counts_strategy(), k in 0usize..7) {
            let t = ScoreTable::default();
            let kind = InfraKind::ALL[k];
            let mut bumped = c;
            bumped.increment(kind);
            let delta = avcash(&bumped, &t) - avcash(&c, &t);
            match kind {
                InfraKind::ChargingAtm => prop_assert_eq!(delta, -0.5),
                InfraKind::PayPoint => prop_assert_eq!(delta, 0.0),
                _ => prop_assert!(delta > 0.0),
            }
        }
    }
}
