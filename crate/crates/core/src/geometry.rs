//! Planar geometry on a projected grid (metres).
//!
//! Every dataset shares one projected CRS; nothing here reprojects. Radius
//! and nearest-neighbour queries are brute-force scans: at the scale of a
//! city (hundreds of points, a few hundred areas) the O(n²) cost is
//! negligible and the scan is the correctness contract.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjPoint {
    /// Metres east.
    pub x: f64,
    /// Metres north.
    pub y: f64,
}

impl ProjPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        ProjPoint { x, y }
    }

    pub fn checked(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(ProjPoint { x, y })
        } else {
            Err(Error::InvalidParameter(format!(
                "non-finite coordinate ({x}, {y})"
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Euclidean distance in metres.
pub fn distance(a: ProjPoint, b: ProjPoint) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

/// Indices of `points` within `radius` of `center`, ascending.
///
/// The boundary is inclusive: a point at exactly `radius` is inside.
pub fn points_within(center: ProjPoint, radius: f64, points: &[ProjPoint]) -> Result<Vec<usize>> {
    check_radius(radius)?;
    Ok(points
        .iter()
        .enumerate()
        .filter(|(_, p)| distance(center, **p) <= radius)
        .map(|(i, _)| i)
        .collect())
}

pub(crate) fn check_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "radius must be positive and finite, got {radius}"
        )))
    }
}

/// Closest other point to `points[query]`, ties to the lowest index.
///
/// The query itself is never returned, even when another point shares its
/// coordinates (that point is returned at distance zero).
pub fn nearest_neighbor(query: usize, points: &[ProjPoint]) -> Result<(usize, f64)> {
    if points.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: points.len(),
        });
    }
    if query >= points.len() {
        return Err(Error::InvalidParameter(format!(
            "query index {query} out of range for {} points",
            points.len()
        )));
    }
    nearest_where(query, points, |_| true).ok_or(Error::InsufficientPoints { needed: 2, got: 1 })
}

/// Nearest other point among those accepted by `eligible`.
pub(crate) fn nearest_where(
    query: usize,
    points: &[ProjPoint],
    eligible: impl Fn(usize) -> bool,
) -> Option<(usize, f64)> {
    let origin = points[query];
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        if i == query || !eligible(i) {
            continue;
        }
        let d = distance(origin, *p);
        match best {
            Some((_, bd)) if d >= bd => {}
            _ => best = Some((i, d)),
        }
    }
    best
}

/// A study area polygon with its cached planar area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyArea {
    boundary: Vec<ProjPoint>,
    area_m2: f64,
}

impl StudyArea {
    /// Builds a study area from an exterior ring. An open ring is closed;
    /// self-intersecting or zero-area rings are rejected.
    pub fn from_ring(mut ring: Vec<ProjPoint>) -> Result<Self> {
        if ring.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "study area ring has non-finite coordinates".into(),
            ));
        }
        if ring.len() >= 2 && ring.first() != ring.last() {
            let first = ring[0];
            ring.push(first);
        }
        if ring.len() < 4 {
            return Err(Error::InvalidParameter(
                "study area ring needs at least three distinct vertices".into(),
            ));
        }
        if ring_self_intersects(&ring) {
            return Err(Error::InvalidParameter(
                "study area ring is self-intersecting".into(),
            ));
        }
        let area_m2 = shoelace_area(&ring);
        if area_m2.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidParameter("study area has zero area".into()));
        }
        Ok(StudyArea {
            boundary: ring,
            area_m2,
        })
    }

    /// Axis-aligned bounding rectangle of `points`.
    pub fn bounding_box(points: &[ProjPoint]) -> Result<Self> {
        let first = points
            .first()
            .ok_or(Error::InsufficientPoints { needed: 1, got: 0 })?;
        let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
        for p in points {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        Self::from_ring(vec![
            ProjPoint::new(x0, y0),
            ProjPoint::new(x1, y0),
            ProjPoint::new(x1, y1),
            ProjPoint::new(x0, y1),
        ])
    }

    pub fn boundary(&self) -> &[ProjPoint] {
        &self.boundary
    }

    pub fn area_m2(&self) -> f64 {
        self.area_m2
    }
}

/// Absolute shoelace area of a closed ring.
pub fn shoelace_area(ring: &[ProjPoint]) -> f64 {
    let twice: f64 = ring
        .windows(2)
        .map(|w| w[0].x * w[1].y - w[1].x * w[0].y)
        .sum();
    twice.abs() / 2.0
}

fn ring_self_intersects(ring: &[ProjPoint]) -> bool {
    let segs = ring.len() - 1;
    for i in 0..segs {
        for j in (i + 1)..segs {
            let adjacent = j == i + 1 || (i == 0 && j == segs - 1);
            let (a, b) = (ring[i], ring[i + 1]);
            let (c, d) = (ring[j], ring[j + 1]);
            if adjacent {
                // Adjacent edges share one vertex; they only conflict when
                // the second folds back along the first.
                let (shared, u, v) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                let dot = (u.x - shared.x) * (v.x - shared.x) + (u.y - shared.y) * (v.y - shared.y);
                if orient(shared, u, v) == 0.0 && dot > 0.0 {
                    return true;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

fn orient(a: ProjPoint, b: ProjPoint, c: ProjPoint) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect(a: ProjPoint, b: ProjPoint, c: ProjPoint, d: ProjPoint) -> bool {
    let within = |p: ProjPoint, q: ProjPoint, r: ProjPoint| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && within(c, d, a))
        || (d2 == 0.0 && within(c, d, b))
        || (d3 == 0.0 && within(a, b, c))
        || (d4 == 0.0 && within(a, b, d))
}
