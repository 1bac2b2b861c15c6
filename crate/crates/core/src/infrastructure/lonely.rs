use serde::{Deserialize, Serialize};

use super::{InfraKind, InfrastructurePoint};
use crate::error::{Error, Result};
use crate::geometry::{nearest_where, ProjPoint};

/// Which machines count as an alternative when testing an ATM for
/// loneliness. Recyclers are free machines and count in both modes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlternativeSet {
    #[default]
    AnyAtm,
    FreeOnly,
}

impl AlternativeSet {
    fn accepts(self, kind: InfraKind) -> bool {
        match self {
            AlternativeSet::AnyAtm => kind.is_atm(),
            AlternativeSet::FreeOnly => matches!(kind, InfraKind::FreeAtm | InfraKind::Recycler),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DistanceBin {
    Within100,
    Within250,
    Within500,
    /// Beyond 500 m, or no alternative at all.
    Over500,
}

impl DistanceBin {
    pub const ALL: [DistanceBin; 4] = [
        DistanceBin::Within100,
        DistanceBin::Within250,
        DistanceBin::Within500,
        DistanceBin::Over500,
    ];

    pub fn of(distance: Option<f64>) -> Self {
        match distance {
            Some(d) if d <= 100.0 => DistanceBin::Within100,
            Some(d) if d <= 250.0 => DistanceBin::Within250,
            Some(d) if d <= 500.0 => DistanceBin::Within500,
            _ => DistanceBin::Over500,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DistanceBin::Within100 => "<=100m",
            DistanceBin::Within250 => "<=250m",
            DistanceBin::Within500 => "<=500m",
            DistanceBin::Over500 => ">500m",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LonelyAtm {
    /// Index into the input slice.
    pub index: usize,
    pub id: String,
    pub kind: InfraKind,
    /// Nearest eligible alternative (input index, metres).
    pub nearest: Option<(usize, f64)>,
    pub lonely: bool,
    pub bin: DistanceBin,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LonelyReport {
    pub threshold_m: f64,
    pub alternatives: AlternativeSet,
    pub atms: Vec<LonelyAtm>,
}

impl LonelyReport {
    /// Per-input-point flag, `false` for anything that was not tested.
    pub fn flags(&self, len: usize) -> Vec<bool> {
        let mut flags = vec![false; len];
        for atm in &self.atms {
            flags[atm.index] = atm.lonely;
        }
        flags
    }

    pub fn lonely_count(&self) -> usize {
        self.atms.iter().filter(|a| a.lonely).count()
    }

    pub fn lonely_count_of(&self, kind: InfraKind) -> usize {
        self.atms
            .iter()
            .filter(|a| a.lonely && a.kind == kind)
            .count()
    }

    pub fn bin_counts(&self, kind: Option<InfraKind>) -> [usize; 4] {
        let mut bins = [0; 4];
        for atm in self
            .atms
            .iter()
            .filter(|a| kind.is_none_or(|k| a.kind == k))
        {
            bins[atm.bin as usize] += 1;
        }
        bins
    }
}

/// Tests every free and charging ATM in `points` for an alternative within
/// `threshold` metres. Other kinds are ignored as subjects; recyclers may
/// still serve as alternatives. An ATM with no eligible alternative at all
/// is lonely.
pub fn lonely_atms(
    points: &[InfrastructurePoint],
    threshold: f64,
    alternatives: AlternativeSet,
) -> Result<LonelyReport> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lonely threshold must be positive, got {threshold}"
        )));
    }
    let locations: Vec<ProjPoint> = points.iter().map(|p| p.location).collect();
    let atms = points
        .iter()
        .enumerate()
        .filter(|(_, p)| matches!(p.kind, InfraKind::FreeAtm | InfraKind::ChargingAtm))
        .map(|(index, p)| {
            let nearest =
                nearest_where(index, &locations, |j| alternatives.accepts(points[j].kind));
            let distance = nearest.map(|(_, d)| d);
            LonelyAtm {
                index,
                id: p.id.clone(),
                kind: p.kind,
                nearest,
                lonely: distance.is_none_or(|d| d > threshold),
                bin: DistanceBin::of(distance),
            }
        })
        .collect();
    Ok(LonelyReport {
        threshold_m: threshold,
        alternatives,
        atms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infrastructure::tests::point;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn flags(report: &LonelyReport) -> Vec<bool> {
        report.atms.iter().map(|a| a.lonely).collect()
    }

    #[test]
    fn line_of_free_atms() {
        let pts = vec![
            point("a", InfraKind::FreeAtm, 0.0, 0.0),
            point("b", InfraKind::FreeAtm, 200.0, 0.0),
            point("c", InfraKind::FreeAtm, 600.0, 0.0),
        ];
        let r = lonely_atms(&pts, 250.0, AlternativeSet::AnyAtm).unwrap();
        assert_eq!(flags(&r), vec![false, false, true]);
        assert_eq!(r.lonely_count(), 1);
        assert_eq!(r.bin_counts(None), [0, 2, 1, 0]);
    }

    #[test]
    fn co_located_not_lonely() {
        let pts = vec![
            point("a", InfraKind::FreeAtm, 5.0, 5.0),
            point("b", InfraKind::FreeAtm, 5.0, 5.0),
        ];
        let r = lonely_atms(&pts, 250.0, AlternativeSet::AnyAtm).unwrap();
        assert_eq!(flags(&r), vec![false, false]);
        assert_eq!(r.atms[0].nearest, Some((1, 0.0)));
    }

    #[test]
    fn sole_atm_is_lonely() {
        let pts = vec![
            point("a", InfraKind::FreeAtm, 0.0, 0.0),
            point("po", InfraKind::PostOffice, 1.0, 0.0),
        ];
        let r = lonely_atms(&pts, 250.0, AlternativeSet::AnyAtm).unwrap();
        assert_eq!(r.atms.len(), 1);
        assert!(r.atms[0].lonely);
        assert_eq!(r.atms[0].bin, DistanceBin::Over500);
    }

    #[test]
    fn empty_input_is_empty_output() {
        let r = lonely_atms(&[], 250.0, AlternativeSet::FreeOnly).unwrap();
        assert!(r.atms.is_empty());
    }

    #[test]
    fn threshold_is_exclusive_of_equal_distance() {
        let pts = vec![
            point("a", InfraKind::FreeAtm, 0.0, 0.0),
            point("b", InfraKind::FreeAtm, 150.0, 200.0),
        ];
        let r = lonely_atms(&pts, 250.0, AlternativeSet::AnyAtm).unwrap();
        assert_eq!(flags(&r), vec![false, false]);
    }

    #[test]
    fn recyclers_are_free_alternatives() {
        let pts = vec![
            point("a", InfraKind::FreeAtm, 0.0, 0.0),
            point("r", InfraKind::Recycler, 100.0, 0.0),
        ];
        let r = lonely_atms(&pts, 250.0, AlternativeSet::FreeOnly).unwrap();
        assert_eq!(r.atms.len(), 1);
        assert!(!r.atms[0].lonely);
    }

    #[test]
    fn rejects_bad_threshold() {
        assert!(lonely_atms(&[], 0.0, AlternativeSet::AnyAtm).is_err());
    }

    #[test]
    fn free_only_matches_brute_force() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(19);
        for _ in 0..25 {
            let pts: Vec<_> = (0..20)
                .map(|i| {
                    let kind = if rng.gen_bool(0.5) {
                        InfraKind::FreeAtm
                    } else {
                        InfraKind::ChargingAtm
                    };
                    point(
                        &format!("p{i}"),
                        kind,
                        rng.gen_range(0.0..1500.0),
                        rng.gen_range(0.0..1500.0),
                    )
                })
                .collect();
            let r = lonely_atms(&pts, 250.0, AlternativeSet::FreeOnly).unwrap();
            let expected: Vec<bool> = pts
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    !pts.iter().enumerate().any(|(j, q)| {
                        j != i
                            && q.kind == InfraKind::FreeAtm
                            && (p.location.x - q.location.x).hypot(p.location.y - q.location.y)
                                <= 250.0
                    })
                })
                .collect();
            assert_eq!(flags(&r), expected);
        }
    }

    fn atm_set() -> impl Strategy<Value = Vec<InfrastructurePoint>> {
        prop::collection::vec((any::<bool>(), 0.0f64..2000.0, 0.0f64..2000.0), 0..40).prop_map(
            |v| {
                v.into_iter()
                    .enumerate()
                    .map(|(i, (free, x, y))| {
                        let kind = if free {
                            InfraKind::FreeAtm
                        } else {
                            InfraKind::ChargingAtm
                        };
                        point(&i.to_string(), kind, x, y)
                    })
                    .collect()
            },
        )
    }

    proptest! {
        #[test]
        fn lonely_count_non_increasing_in_threshold(pts in atm_set(), t in 1.0f64..800.0, dt in 0.0f64..500.0) {
            let lo = lonely_atms(&pts, t, AlternativeSet::AnyAtm).unwrap().lonely_count();
            let hi = lonely_atms(&pts, t + dt, AlternativeSet::AnyAtm).unwrap().lonely_count();
            prop_assert!(hi <= lo);
        }

        #[test]
        fn free_only_at_least_any_atm(pts in atm_set(), t in 1.0f64..800.0) {
            let any = lonely_atms(&pts, t, AlternativeSet::AnyAtm).unwrap().lonely_count();
            let free = lonely_atms(&pts, t, AlternativeSet::FreeOnly).unwrap().lonely_count();
            prop_assert!(free >= any);
        }
    }
}
