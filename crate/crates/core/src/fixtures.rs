//! Bundled offline data: a Seattle Center Overpass response, the demo
//! exploration trace across it, and a small place table used when the
//! geocoder is unreachable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geo::{polygon_centroid_area, GeoPoint, LocalPlane};
use crate::ingest::{
    build_dataset, DatasetSource, FixtureSource, RawFeatureSource, Tags, Zone, ZoneCategory, ZoneDataset,
    DEFAULT_RADIUS_M,
};

/// Overpass `out geom` response around the Space Needle.
pub const SEATTLE_CENTER_OVERPASS: &str = include_str!("../fixtures/seattle_center_overpass.json");

/// Cursor trace from the Museum of Pop Culture via Hyatt House to the
/// Space Needle, with a question asked at each stop.
pub const SEATTLE_CENTER_TRACE: &str = include_str!("../fixtures/walkthrough_trace.jsonl");

pub const SEATTLE_CENTER: GeoPoint = GeoPoint::new(47.6205, -122.3493);

const KNOWN_PLACES: &[(&str, GeoPoint)] = &[
    ("space needle", SEATTLE_CENTER),
    ("seattle center", SEATTLE_CENTER),
    ("museum of pop culture", GeoPoint::new(47.6194189, -122.3476981)),
    ("mopop", GeoPoint::new(47.6194189, -122.3476981)),
    ("sather tower", GeoPoint::new(37.8721, -122.2578)),
];

/// Names of the bundled raw fixtures accepted by `fixture_source`.
pub const FIXTURE_NAMES: &[&str] = &["seattle_center"];

fn normalize(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Look a place up in the bundled table (case and whitespace insensitive).
pub fn known_place(text: &str) -> Option<GeoPoint> {
    let q = normalize(text);
    KNOWN_PLACES
        .iter()
        .find(|(name, _)| q == *name || q.contains(name))
        .map(|(_, p)| *p)
}

/// Default centre for a bundled fixture.
pub fn fixture_center(name: &str) -> Option<GeoPoint> {
    match name {
        "seattle_center" => Some(SEATTLE_CENTER),
        _ => None,
    }
}

pub fn fixture_source(name: &str) -> Option<FixtureSource> {
    match name {
        "seattle_center" => Some(
            FixtureSource::from_json(SEATTLE_CENTER_OVERPASS).expect("bundled fixture parses"),
        ),
        _ => None,
    }
}

/// The Seattle Center fixture built at the default 400 m radius.
pub fn seattle_center_dataset() -> ZoneDataset {
    let source = fixture_source("seattle_center").expect("bundled fixture");
    let raw = source
        .fetch_raw(SEATTLE_CENTER, DEFAULT_RADIUS_M)
        .expect("fixture fetch is infallible for a positive radius");
    let mut ds = build_dataset(
        &raw.features,
        SEATTLE_CENTER,
        DEFAULT_RADIUS_M,
        raw.timestamp.as_deref().unwrap_or_default(),
        source.source_kind(),
    );
    ds.place_query = Some("Space Needle".into());
    ds
}

/// An axis-aligned `width_m` × `height_m` rectangle centred `east_m`/`north_m`
/// from `origin`, with centroid and area computed like ingested zones.
pub fn rect_zone(
    zone_id: &str,
    name: &str,
    category: ZoneCategory,
    origin: GeoPoint,
    (east_m, north_m): (f64, f64),
    (width_m, height_m): (f64, f64),
) -> Zone {
    let plane = LocalPlane::new(origin);
    let (hw, hh) = (width_m / 2.0, height_m / 2.0);
    let ring: Vec<GeoPoint> = [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh), (-hw, -hh)]
        .into_iter()
        .map(|(e, n)| plane.to_geo(east_m + e, north_m + n))
        .collect();
    polygon_zone(zone_id, name, category, ring, Vec::new())
}

/// A zone from explicit closed rings.
pub fn polygon_zone(
    zone_id: &str,
    name: &str,
    category: ZoneCategory,
    outer_ring: Vec<GeoPoint>,
    holes: Vec<Vec<GeoPoint>>,
) -> Zone {
    let mut rings = vec![outer_ring.clone()];
    rings.extend(holes.iter().cloned());
    let (centroid, area_m2) = polygon_centroid_area(&rings).expect("non-degenerate polygon");
    Zone {
        zone_id: zone_id.to_string(),
        name: name.to_string(),
        category,
        outer_ring,
        holes,
        centroid,
        area_m2,
        tags: Tags::new(),
    }
}

pub fn dataset_of(center: GeoPoint, radius_m: f64, mut zones: Vec<Zone>) -> ZoneDataset {
    zones.sort_by(|a, b| a.zone_id.cmp(&b.zone_id));
    ZoneDataset {
        center,
        radius_m,
        fetched_at: "1970-01-01T00:00:00Z".into(),
        source: DatasetSource::Fixture,
        zones,
        place_query: None,
    }
}

/// `n` random convex polygons (3 to 8 sides, 4 to 40 m across) scattered
/// over the disc, overlapping freely. Deterministic for a given seed.
pub fn synthetic_dataset(center: GeoPoint, radius_m: f64, n: usize, seed: u64) -> ZoneDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plane = LocalPlane::new(center);
    let zones = (0..n)
        .map(|i| {
            let r = radius_m * rng.gen::<f64>().sqrt();
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let (ce, cn) = (r * theta.cos(), r * theta.sin());
            let sides = rng.gen_range(3..=8);
            let size = rng.gen_range(2.0..20.0);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let mut ring: Vec<GeoPoint> = (0..sides)
                .map(|k| {
                    let a = phase + std::f64::consts::TAU * k as f64 / sides as f64;
                    let s = size * rng.gen_range(0.7..1.0);
                    plane.to_geo(ce + s * a.cos(), cn + s * a.sin())
                })
                .collect();
            ring.push(ring[0]);
            let category = ZoneCategory::ALL[rng.gen_range(0..4)];
            polygon_zone(&format!("way/{}", 100_000 + i), &format!("Zone {i}"), category, ring, Vec::new())
        })
        .collect();
    dataset_of(center, radius_m, zones)
}
