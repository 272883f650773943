//! OSM feature ingest: place resolution, Overpass retrieval and the
//! assembly of raw ways/relations into categorized polygonal zones.

mod assemble;
pub mod geocode;
pub mod overpass;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::GeoPoint;

pub use assemble::{build_dataset, build_dataset_with_report, BuildReport, DroppedFeature};
pub use geocode::{resolve_place, Geocoder};
pub use overpass::{
    overpass_query, FixtureSource, OverpassClient, RawFeatureSource, RawResponse,
    DEFAULT_OVERPASS_URL,
};

pub const DEFAULT_RADIUS_M: f64 = 400.0;

pub type Tags = BTreeMap<String, String>;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid place query: {0}")]
    InvalidQuery(String),
    #[error("no geocoder hit for {0:?}")]
    GeocodeFailure(String),
    #[error("network failure: {0}")]
    NetworkFailure(String),
    #[error("overpass rate limited after {attempts} attempts")]
    OverpassRateLimited { attempts: u32 },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("cache i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// A requested location: free text, explicit coordinates, or both
/// (coordinates win).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceQuery {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<GeoPoint>,
    #[serde(default = "default_radius")]
    pub radius_m: f64,
}

fn default_radius() -> f64 {
    DEFAULT_RADIUS_M
}

impl PlaceQuery {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            query_text: Some(text.into()),
            center: None,
            radius_m: DEFAULT_RADIUS_M,
        }
    }

    pub fn at(center: GeoPoint) -> Self {
        Self {
            query_text: None,
            center: Some(center),
            radius_m: DEFAULT_RADIUS_M,
        }
    }

    pub fn with_radius(mut self, radius_m: f64) -> Self {
        self.radius_m = radius_m;
        self
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.radius_m > 0.0) || !self.radius_m.is_finite() {
            return Err(IngestError::InvalidQuery(format!(
                "radius must be positive, got {}",
                self.radius_m
            )));
        }
        if let Some(c) = self.center {
            if !c.is_valid() {
                return Err(IngestError::InvalidQuery(format!("coordinates out of range: {c}")));
            }
        }
        Ok(())
    }

    /// One-line description for dataset metadata and logs.
    pub fn label(&self) -> String {
        match (&self.query_text, self.center) {
            (Some(t), _) if !t.trim().is_empty() => t.trim().to_string(),
            (_, Some(c)) => c.to_string(),
            _ => String::new(),
        }
    }
}

/// Fetch raw features around `center` and assemble them into a dataset.
/// The dataset is stamped with the source's data timestamp, or the current
/// time when the source reports none.
pub fn fetch_dataset(
    source: &dyn RawFeatureSource,
    center: GeoPoint,
    radius_m: f64,
    place_query: Option<String>,
) -> Result<ZoneDataset, IngestError> {
    PlaceQuery::at(center).with_radius(radius_m).validate()?;
    let raw = source.fetch_raw(center, radius_m)?;
    let fetched_at = raw
        .timestamp
        .clone()
        .unwrap_or_else(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    let mut ds = build_dataset(&raw.features, center, radius_m, &fetched_at, source.source_kind());
    ds.place_query = place_query.filter(|q| !q.trim().is_empty());
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Node,
    Way,
    Relation,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Node => "node",
            FeatureKind::Way => "way",
            FeatureKind::Relation => "relation",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationMember {
    pub role: String,
    pub points: Vec<GeoPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawGeometry {
    Point(GeoPoint),
    /// Way vertices; closed when the first vertex is repeated last.
    Way(Vec<GeoPoint>),
    /// Way members of a relation with their roles (`outer`, `inner`, ...).
    Relation(Vec<RelationMember>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawFeature {
    pub osm_id: i64,
    pub tags: Tags,
    pub geometry: RawGeometry,
}

impl RawFeature {
    pub fn kind(&self) -> FeatureKind {
        match self.geometry {
            RawGeometry::Point(_) => FeatureKind::Node,
            RawGeometry::Way(_) => FeatureKind::Way,
            RawGeometry::Relation(_) => FeatureKind::Relation,
        }
    }

    /// Every vertex the feature carries, for radius filtering.
    pub fn vertices(&self) -> Box<dyn Iterator<Item = &GeoPoint> + '_> {
        match &self.geometry {
            RawGeometry::Point(p) => Box::new(std::iter::once(p)),
            RawGeometry::Way(pts) => Box::new(pts.iter()),
            RawGeometry::Relation(members) => Box::new(members.iter().flat_map(|m| m.points.iter())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneCategory {
    Building,
    Park,
    Water,
    OtherArea,
}

impl ZoneCategory {
    pub const ALL: [ZoneCategory; 4] = [
        ZoneCategory::Building,
        ZoneCategory::Park,
        ZoneCategory::Water,
        ZoneCategory::OtherArea,
    ];

    /// Word used in spoken and prompt text: "(building)", "unnamed park".
    pub fn label(self) -> &'static str {
        match self {
            ZoneCategory::Building => "building",
            ZoneCategory::Park => "park",
            ZoneCategory::Water => "water",
            ZoneCategory::OtherArea => "area",
        }
    }
}

impl fmt::Display for ZoneCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Keys whose presence marks a closed way as an area.
const AREA_KEYS: &[&str] = &[
    "building",
    "building:part",
    "leisure",
    "natural",
    "landuse",
    "amenity",
    "water",
    "tourism",
    "man_made",
    "shop",
    "place",
    "historic",
];

/// Keys that describe linear features unless explicitly tagged `area=yes`.
const LINEAR_KEYS: &[&str] = &[
    "highway", "railway", "barrier", "waterway", "power", "route", "aerialway",
];

const LINEAR_NATURAL: &[&str] = &["coastline", "tree_row", "cliff", "ridge", "arete"];

/// Tag-level classification. `None` means the feature is excluded.
pub fn classify(tags: &Tags) -> Option<ZoneCategory> {
    let get = |k: &str| tags.get(k).map(String::as_str);
    let explicit_area = get("area") == Some("yes");
    if get("area") == Some("no") {
        return None;
    }

    let building = get("building").or(get("building:part"));
    if building.is_some_and(|v| v != "no") {
        return Some(ZoneCategory::Building);
    }
    if matches!(get("leisure"), Some("park" | "garden" | "playground"))
        || matches!(get("landuse"), Some("grass" | "recreation_ground"))
    {
        return Some(ZoneCategory::Park);
    }
    if get("natural") == Some("water")
        || tags.contains_key("water")
        || get("landuse") == Some("reservoir")
    {
        return Some(ZoneCategory::Water);
    }

    if !explicit_area {
        if LINEAR_KEYS.iter().any(|k| tags.contains_key(*k)) {
            return None;
        }
        if get("natural").is_some_and(|v| LINEAR_NATURAL.contains(&v)) {
            return None;
        }
    }
    if explicit_area || AREA_KEYS.iter().any(|k| get(k).is_some_and(|v| v != "no")) {
        return Some(ZoneCategory::OtherArea);
    }
    None
}

/// Geometry-aware classification: points and open polylines are excluded
/// regardless of their tags.
pub fn classify_feature(feature: &RawFeature) -> Option<ZoneCategory> {
    match &feature.geometry {
        RawGeometry::Point(_) => None,
        RawGeometry::Way(pts) => {
            if pts.len() < 4 || pts.first() != pts.last() {
                return None;
            }
            classify(&feature.tags)
        }
        RawGeometry::Relation(_) => {
            let kind = feature.tags.get("type").map(String::as_str);
            if !matches!(kind, Some("multipolygon")) {
                return None;
            }
            let mut tags = feature.tags.clone();
            tags.remove("type");
            classify(&tags)
        }
    }
}

/// A named, categorized polygonal map feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub zone_id: String,
    pub name: String,
    pub category: ZoneCategory,
    pub outer_ring: Vec<GeoPoint>,
    #[serde(default)]
    pub holes: Vec<Vec<GeoPoint>>,
    pub centroid: GeoPoint,
    pub area_m2: f64,
    #[serde(default)]
    pub tags: Tags,
}

impl Zone {
    /// Outer ring followed by the holes.
    pub fn geo_rings(&self) -> impl Iterator<Item = &Vec<GeoPoint>> {
        std::iter::once(&self.outer_ring).chain(self.holes.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Overpass,
    Fixture,
}

/// Immutable collection of zones retrieved for one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneDataset {
    pub center: GeoPoint,
    pub radius_m: f64,
    pub fetched_at: String,
    pub source: DatasetSource,
    pub zones: Vec<Zone>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub place_query: Option<String>,
}

impl ZoneDataset {
    pub fn zone(&self, zone_id: &str) -> Option<&Zone> {
        self.zones
            .binary_search_by(|z| z.zone_id.as_str().cmp(zone_id))
            .ok()
            .map(|i| &self.zones[i])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let mut ds: ZoneDataset = serde_json::from_str(text)
            .map_err(|e| IngestError::MalformedResponse(format!("dataset json: {e}")))?;
        ds.zones.sort_by(|a, b| a.zone_id.cmp(&b.zone_id));
        Ok(ds)
    }
}
