//! Ring closing, multipolygon assembly and radius filtering.

use tracing::debug;

use super::{classify_feature, DatasetSource, RawFeature, RawGeometry, Zone, ZoneCategory, ZoneDataset};
use crate::geo::{polygon_centroid_area, GeoPoint, LocalPlane};

#[derive(Debug, Clone, PartialEq)]
pub struct DroppedFeature {
    pub osm_id: i64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildReport {
    pub excluded: usize,
    pub dropped: Vec<DroppedFeature>,
}

/// Assemble raw features into a dataset. Degenerate rings are dropped and
/// logged; nothing here is fatal.
pub fn build_dataset(
    features: &[RawFeature],
    center: GeoPoint,
    radius_m: f64,
    fetched_at: &str,
    source: DatasetSource,
) -> ZoneDataset {
    build_dataset_with_report(features, center, radius_m, fetched_at, source).0
}

pub fn build_dataset_with_report(
    features: &[RawFeature],
    center: GeoPoint,
    radius_m: f64,
    fetched_at: &str,
    source: DatasetSource,
) -> (ZoneDataset, BuildReport) {
    let plane = LocalPlane::new(center);
    let mut report = BuildReport::default();
    let mut zones: Vec<Zone> = Vec::new();

    for feature in features {
        let Some(category) = classify_feature(feature) else {
            report.excluded += 1;
            continue;
        };
        let polygons = match &feature.geometry {
            RawGeometry::Way(pts) => vec![vec![pts.clone()]],
            RawGeometry::Relation(members) => assemble_multipolygon(feature.osm_id, members, &mut report),
            RawGeometry::Point(_) => unreachable!("points are excluded by classification"),
        };
        let multi = polygons.len() > 1;
        for (k, rings) in polygons.into_iter().enumerate() {
            let zone_id = if multi {
                format!("{}/{}/{}", feature.kind(), feature.osm_id, k + 1)
            } else {
                format!("{}/{}", feature.kind(), feature.osm_id)
            };
            match make_zone(zone_id, feature, category, rings, &plane) {
                Ok(zone) => {
                    if ring_intersects_disc(&zone.outer_ring, &plane, radius_m) {
                        zones.push(zone);
                    } else {
                        report.excluded += 1;
                    }
                }
                Err(reason) => {
                    debug!(osm_id = feature.osm_id, %reason, "dropping degenerate geometry");
                    report.dropped.push(DroppedFeature {
                        osm_id: feature.osm_id,
                        reason,
                    });
                }
            }
        }
    }

    zones.sort_by(|a, b| a.zone_id.cmp(&b.zone_id));
    zones.dedup_by(|a, b| a.zone_id == b.zone_id);

    let dataset = ZoneDataset {
        center,
        radius_m,
        fetched_at: fetched_at.to_string(),
        source,
        zones,
        place_query: None,
    };
    (dataset, report)
}

/// Outer ring followed by its holes.
type Polygon = Vec<Vec<GeoPoint>>;

fn make_zone(
    zone_id: String,
    feature: &RawFeature,
    category: ZoneCategory,
    rings: Vec<Vec<GeoPoint>>,
    plane: &LocalPlane,
) -> Result<Zone, String> {
    let mut rings = rings.into_iter();
    let outer = clean_ring(rings.next().unwrap_or_default())
        .ok_or_else(|| "outer ring has fewer than 3 distinct vertices".to_string())?;
    if !ring_is_simple(&outer, plane) {
        return Err("outer ring self-intersects".into());
    }
    let holes: Vec<Vec<GeoPoint>> = rings.filter_map(clean_ring).collect();
    let mut all = Vec::with_capacity(holes.len() + 1);
    all.push(outer);
    all.extend(holes);
    let (centroid, area_m2) = polygon_centroid_area(&all).map_err(|e| e.to_string())?;

    let mut tags = feature.tags.clone();
    if feature.kind() == super::FeatureKind::Relation {
        tags.remove("type");
    }
    let name = tags
        .get("name")
        .map(|n| n.trim().to_string())
        .filter(|n| !n.is_empty())
        .unwrap_or_else(|| format!("unnamed {}", category.label()));
    let mut all = all.into_iter();
    Ok(Zone {
        zone_id,
        name,
        category,
        outer_ring: all.next().unwrap_or_default(),
        holes: all.collect(),
        centroid,
        area_m2,
        tags,
    })
}

/// Drop consecutive duplicates and close the ring. `None` when fewer than
/// three distinct vertices remain.
fn clean_ring(mut ring: Vec<GeoPoint>) -> Option<Vec<GeoPoint>> {
    ring.dedup();
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    let mut distinct: Vec<GeoPoint> = Vec::with_capacity(ring.len());
    for p in &ring {
        if !distinct.contains(p) {
            distinct.push(*p);
            if distinct.len() >= 3 {
                break;
            }
        }
    }
    if distinct.len() < 3 {
        return None;
    }
    let first = ring[0];
    ring.push(first);
    Some(ring)
}

/// Stitch member ways into closed rings and pair each inner ring with the
/// outer ring that contains it.
fn assemble_multipolygon(
    osm_id: i64,
    members: &[super::RelationMember],
    report: &mut BuildReport,
) -> Vec<Polygon> {
    let (outer_parts, inner_parts): (Vec<_>, Vec<_>) = members
        .iter()
        .filter(|m| m.points.len() >= 2)
        .filter(|m| matches!(m.role.as_str(), "outer" | "inner" | ""))
        .partition(|m| m.role != "inner");

    let outers = stitch_rings(outer_parts.iter().map(|m| m.points.clone()).collect());
    let inners = stitch_rings(inner_parts.iter().map(|m| m.points.clone()).collect());
    if outers.leftover > 0 || inners.leftover > 0 {
        report.dropped.push(DroppedFeature {
            osm_id,
            reason: format!(
                "{} member ways could not be closed into rings",
                outers.leftover + inners.leftover
            ),
        });
    }

    let mut polygons: Vec<Polygon> = outers.rings.into_iter().map(|r| vec![r]).collect();
    for hole in inners.rings {
        let probe = hole[0];
        let plane = LocalPlane::new(probe);
        let owner = polygons.iter_mut().find(|rings| {
            let local: Vec<(f64, f64)> = rings[0].iter().map(|p| plane.to_local(*p)).collect();
            point_in_local_ring((0.0, 0.0), &local)
        });
        match owner {
            Some(rings) => rings.push(hole),
            None => report.dropped.push(DroppedFeature {
                osm_id,
                reason: "inner ring outside every outer ring".into(),
            }),
        }
    }
    polygons
}

struct Stitched {
    rings: Vec<Vec<GeoPoint>>,
    leftover: usize,
}

fn stitch_rings(mut parts: Vec<Vec<GeoPoint>>) -> Stitched {
    let mut rings = Vec::new();
    let mut leftover = 0;
    while let Some(mut current) = parts.pop() {
        loop {
            if current.len() >= 4 && current.first() == current.last() {
                rings.push(current);
                break;
            }
            let end = *current.last().expect("parts have >= 2 vertices");
            let next = parts
                .iter()
                .position(|p| p.first() == Some(&end) || p.last() == Some(&end));
            match next {
                Some(i) => {
                    let mut part = parts.swap_remove(i);
                    if part.first() != Some(&end) {
                        part.reverse();
                    }
                    current.extend(part.into_iter().skip(1));
                }
                None => {
                    leftover += 1;
                    break;
                }
            }
        }
    }
    // Deterministic ring order regardless of member order.
    rings.sort_by(|a, b| {
        let ka = (a[0].lat, a[0].lon);
        let kb = (b[0].lat, b[0].lon);
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    Stitched { rings, leftover }
}

pub(crate) fn point_in_local_ring(p: (f64, f64), ring: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = ring[i];
        let (xj, yj) = ring[j];
        if (yi > p.1) != (yj > p.1) && p.0 < (xj - xi) * (p.1 - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn segments_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    fn orient(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> f64 {
        (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)
    }
    fn on_segment(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> bool {
        r.0 >= p.0.min(q.0) && r.0 <= p.0.max(q.0) && r.1 >= p.1.min(q.1) && r.1 <= p.1.max(q.1)
    }
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Closed ring with no two non-adjacent edges touching.
fn ring_is_simple(ring: &[GeoPoint], plane: &LocalPlane) -> bool {
    let pts: Vec<(f64, f64)> = ring.iter().map(|p| plane.to_local(*p)).collect();
    let n = pts.len() - 1; // closed: last == first
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1]) {
                return false;
            }
        }
    }
    true
}

/// Whether any part of the ring (boundary or interior) lies within
/// `radius_m` of the plane origin.
pub(crate) fn ring_intersects_disc(ring: &[GeoPoint], plane: &LocalPlane, radius_m: f64) -> bool {
    let pts: Vec<(f64, f64)> = ring.iter().map(|p| plane.to_local(*p)).collect();
    if point_in_local_ring((0.0, 0.0), &pts) {
        return true;
    }
    pts.windows(2)
        .any(|w| segment_distance_to_origin(w[0], w[1]) <= radius_m)
        || pts.iter().any(|p| p.0.hypot(p.1) <= radius_m)
}

pub(crate) fn segment_distance_to_origin(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (-(a.0 * dx + a.1 * dy) / len2).clamp(0.0, 1.0)
    };
    (a.0 + t * dx).hypot(a.1 + t * dy)
}
