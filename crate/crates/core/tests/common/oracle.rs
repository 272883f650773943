//! Brute-force reference implementations, written independently of the
//! library code they check.
#![allow(dead_code)]

use hapticmap_core::{CanvasPoint, GeoPoint, MapWorld, Sector};

const R: f64 = 6_371_000.0;

pub fn haversine(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * R * h.sqrt().asin()
}

/// Compass sector of `to` seen from `from`, nearest multiple of 45°.
pub fn sector(from: GeoPoint, to: GeoPoint) -> Sector {
    let mean = ((from.lat + to.lat) / 2.0).to_radians();
    let east = (to.lon - from.lon) * mean.cos();
    let north = to.lat - from.lat;
    let deg = east.atan2(north).to_degrees().rem_euclid(360.0);
    let idx = ((deg / 45.0).round() as usize) % 8;
    [Sector::N, Sector::NE, Sector::E, Sector::SE, Sector::S, Sector::SW, Sector::W, Sector::NW][idx]
}

fn on_segment(p: CanvasPoint, a: CanvasPoint, b: CanvasPoint) -> bool {
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    let len = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt().max(1e-12);
    cross.abs() / len < 1e-9
        && p.x >= a.x.min(b.x) - 1e-9
        && p.x <= a.x.max(b.x) + 1e-9
        && p.y >= a.y.min(b.y) - 1e-9
        && p.y <= a.y.max(b.y) + 1e-9
}

/// Parity of ray crossings to +x; boundary points count as inside.
pub fn point_in_rings(p: CanvasPoint, rings: &[Vec<CanvasPoint>]) -> bool {
    let mut crossings = 0usize;
    for ring in rings {
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            if on_segment(p, a, b) {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if x > p.x {
                    crossings += 1;
                }
            }
        }
    }
    crossings % 2 == 1
}

fn canvas_rings(world: &MapWorld, i: usize) -> Vec<Vec<CanvasPoint>> {
    let proj = world.projection();
    world.zones()[i]
        .geo_rings()
        .map(|r| r.iter().map(|g| proj.project(*g)).collect())
        .collect()
}

/// Smallest containing zone by scanning every polygon.
pub fn hit_test(world: &MapWorld, p: CanvasPoint) -> Option<String> {
    let proj = world.projection();
    let (w, h) = (proj.width_px as f64, proj.height_px as f64);
    if !(0.0..=w).contains(&p.x) || !(0.0..=h).contains(&p.y) {
        return None;
    }
    let zones = world.zones();
    (0..zones.len())
        .filter(|&i| point_in_rings(p, &canvas_rings(world, i)))
        .min_by(|&a, &b| {
            zones[a]
                .area_m2
                .partial_cmp(&zones[b].area_m2)
                .unwrap()
                .then_with(|| zones[a].zone_id.cmp(&zones[b].zone_id))
        })
        .map(|i| zones[i].zone_id.clone())
}

/// Every zone except the one under the cursor, sorted by centroid distance
/// with zone id breaking ties; first `k`.
pub fn nearest(world: &MapWorld, p: CanvasPoint, k: usize) -> Vec<(String, f64)> {
    let here = hit_test(world, p);
    let from = world.projection().unproject(p);
    let mut all: Vec<(String, f64)> = world
        .zones()
        .iter()
        .filter(|z| Some(&z.zone_id) != here.as_ref())
        .map(|z| (z.zone_id.clone(), haversine(from, z.centroid)))
        .collect();
    all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}
