//! Overpass API retrieval, JSON decoding and the on-disk response cache.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use serde::Deserialize;
use tracing::{info, warn};

use super::assemble::segment_distance_to_origin;
use super::{DatasetSource, IngestError, RawFeature, RawGeometry, RelationMember, Tags};
use crate::geo::{GeoPoint, LocalPlane};

pub const DEFAULT_OVERPASS_URL: &str = "https://overpass-api.de/api/interpreter";

/// The Overpass QL query for a radius around a point.
pub fn overpass_query(center: GeoPoint, radius_m: f64) -> String {
    let around = format!("around:{},{},{}", radius_m, center.lat, center.lon);
    let mut q = String::from("[out:json][timeout:60];(");
    for key in ["building", "leisure", "natural", "landuse", "amenity", "water"] {
        q.push_str(&format!("way({around})[\"{key}\"];"));
    }
    q.push_str(&format!("relation({around})[\"type\"=\"multipolygon\"];"));
    q.push_str(");out geom;");
    q
}

/// Decoded Overpass response.
#[derive(Debug, Clone, PartialEq)]
pub struct RawResponse {
    /// `osm3s.timestamp_osm_base` when present.
    pub timestamp: Option<String>,
    pub features: Vec<RawFeature>,
}

#[derive(Deserialize)]
struct ResponseDto {
    #[serde(default)]
    osm3s: Option<Osm3sDto>,
    #[serde(default)]
    remark: Option<String>,
    elements: Vec<ElementDto>,
}

#[derive(Deserialize)]
struct Osm3sDto {
    #[serde(default)]
    timestamp_osm_base: Option<String>,
}

#[derive(Deserialize)]
struct LatLonDto {
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
struct MemberDto {
    #[serde(rename = "type")]
    member_type: String,
    #[serde(default)]
    role: String,
    #[serde(default)]
    geometry: Vec<LatLonDto>,
}

#[derive(Deserialize)]
struct ElementDto {
    #[serde(rename = "type")]
    element_type: String,
    id: i64,
    #[serde(default)]
    lat: Option<f64>,
    #[serde(default)]
    lon: Option<f64>,
    #[serde(default)]
    geometry: Vec<LatLonDto>,
    #[serde(default)]
    members: Vec<MemberDto>,
    #[serde(default)]
    tags: Tags,
}

fn to_points(geometry: Vec<LatLonDto>) -> Vec<GeoPoint> {
    geometry.into_iter().map(|p| GeoPoint::new(p.lat, p.lon)).collect()
}

impl RawResponse {
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let dto: ResponseDto = serde_json::from_str(text)
            .map_err(|e| IngestError::MalformedResponse(format!("overpass json: {e}")))?;
        if let Some(remark) = dto.remark.as_deref() {
            if remark.contains("runtime error") {
                return Err(IngestError::MalformedResponse(remark.to_string()));
            }
        }
        // Overpass unions may repeat elements; keep the first of each.
        let mut seen = BTreeSet::new();
        let mut features = Vec::new();
        for el in dto.elements {
            let geometry = match el.element_type.as_str() {
                "node" => match (el.lat, el.lon) {
                    (Some(lat), Some(lon)) => RawGeometry::Point(GeoPoint::new(lat, lon)),
                    _ => {
                        warn!(id = el.id, "node without coordinates");
                        continue;
                    }
                },
                "way" => {
                    let pts = to_points(el.geometry);
                    if pts.len() < 2 {
                        warn!(id = el.id, "way with fewer than 2 vertices");
                        continue;
                    }
                    RawGeometry::Way(pts)
                }
                "relation" => RawGeometry::Relation(
                    el.members
                        .into_iter()
                        .filter(|m| m.member_type == "way")
                        .map(|m| RelationMember {
                            role: m.role,
                            points: to_points(m.geometry),
                        })
                        .collect(),
                ),
                other => {
                    return Err(IngestError::MalformedResponse(format!(
                        "unknown element type {other:?}"
                    )))
                }
            };
            if !seen.insert((el.element_type, el.id)) {
                continue;
            }
            features.push(RawFeature {
                osm_id: el.id,
                tags: el.tags,
                geometry,
            });
        }
        Ok(Self {
            timestamp: dto.osm3s.and_then(|o| o.timestamp_osm_base),
            features,
        })
    }

    /// Features with any vertex or segment within `radius_m` of `center`,
    /// mirroring Overpass `around` semantics.
    pub fn around(&self, center: GeoPoint, radius_m: f64) -> RawResponse {
        let plane = LocalPlane::new(center);
        let near = |pts: &[GeoPoint]| -> bool {
            let local: Vec<(f64, f64)> = pts.iter().map(|p| plane.to_local(*p)).collect();
            match local.as_slice() {
                [single] => single.0.hypot(single.1) <= radius_m,
                _ => local.windows(2).any(|w| segment_distance_to_origin(w[0], w[1]) <= radius_m),
            }
        };
        let features = self
            .features
            .iter()
            .filter(|f| match &f.geometry {
                RawGeometry::Point(p) => near(std::slice::from_ref(p)),
                RawGeometry::Way(pts) => near(pts),
                RawGeometry::Relation(members) => members.iter().any(|m| near(&m.points)),
            })
            .cloned()
            .collect();
        RawResponse {
            timestamp: self.timestamp.clone(),
            features,
        }
    }
}

/// Anything that can produce raw features for a disc.
pub trait RawFeatureSource {
    fn fetch_raw(&self, center: GeoPoint, radius_m: f64) -> Result<RawResponse, IngestError>;
    fn source_kind(&self) -> DatasetSource;
}

/// A committed Overpass response replayed offline.
#[derive(Debug, Clone)]
pub struct FixtureSource {
    response: RawResponse,
}

impl FixtureSource {
    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        Ok(Self {
            response: RawResponse::parse(text)?,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, IngestError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Centre of the bounding box of every vertex, for callers that have
    /// a raw file but no place.
    pub fn bbox_center(&self) -> Option<GeoPoint> {
        let mut pts = self.response.features.iter().flat_map(|f| f.vertices());
        let first = *pts.next()?;
        let (lo, hi) = pts.fold((first, first), |(lo, hi), p| {
            (
                GeoPoint::new(lo.lat.min(p.lat), lo.lon.min(p.lon)),
                GeoPoint::new(hi.lat.max(p.lat), hi.lon.max(p.lon)),
            )
        });
        Some(GeoPoint::new((lo.lat + hi.lat) / 2.0, (lo.lon + hi.lon) / 2.0))
    }
}

impl RawFeatureSource for FixtureSource {
    fn fetch_raw(&self, center: GeoPoint, radius_m: f64) -> Result<RawResponse, IngestError> {
        if !(radius_m > 0.0) {
            return Err(IngestError::InvalidQuery(format!("radius must be positive, got {radius_m}")));
        }
        Ok(self.response.around(center, radius_m))
    }

    fn source_kind(&self) -> DatasetSource {
        DatasetSource::Fixture
    }
}

/// Blocking Overpass client with indefinite disk caching.
#[derive(Debug, Clone)]
pub struct OverpassClient {
    pub endpoint: String,
    pub cache_dir: Option<PathBuf>,
    /// Ignore cached responses and overwrite them.
    pub refresh: bool,
    pub max_attempts: u32,
    pub backoff: Duration,
    pub timeout: Duration,
}

impl Default for OverpassClient {
    fn default() -> Self {
        Self {
            endpoint: DEFAULT_OVERPASS_URL.to_string(),
            cache_dir: None,
            refresh: false,
            max_attempts: 4,
            backoff: Duration::from_secs(2),
            timeout: Duration::from_secs(90),
        }
    }
}

impl OverpassClient {
    /// Endpoint from `OVERPASS_URL`, falling back to the public instance.
    pub fn from_env() -> Self {
        let mut client = Self::default();
        if let Ok(url) = std::env::var("OVERPASS_URL") {
            if !url.trim().is_empty() {
                client.endpoint = url;
            }
        }
        client
    }

    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    pub fn cache_key(center: GeoPoint, radius_m: f64) -> String {
        format!("overpass_{:.4}_{:.4}_r{:.1}.json", center.lat, center.lon, radius_m)
    }

    fn cache_path(&self, center: GeoPoint, radius_m: f64) -> Option<PathBuf> {
        self.cache_dir
            .as_ref()
            .map(|d| d.join(Self::cache_key(center, radius_m)))
    }

    fn request(&self, query: &str) -> Result<String, IngestError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .user_agent(concat!("hapticmap/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        let mut delay = self.backoff;
        let attempts = self.max_attempts.max(1);
        for attempt in 1..=attempts {
            let mut resp = agent
                .post(&self.endpoint)
                .send_form([("data", query)])
                .map_err(|e| IngestError::NetworkFailure(e.to_string()))?;
            let status = resp.status().as_u16();
            match status {
                200 => {
                    return resp
                        .body_mut()
                        .with_config()
                        .limit(256 * 1024 * 1024)
                        .read_to_string()
                        .map_err(|e| IngestError::NetworkFailure(e.to_string()));
                }
                429 | 504 => {
                    if attempt < attempts {
                        warn!(status, attempt, ?delay, "overpass busy, backing off");
                        thread::sleep(delay);
                        delay *= 2;
                    }
                }
                _ => {
                    let body = resp.body_mut().read_to_string().unwrap_or_default();
                    return Err(IngestError::MalformedResponse(format!(
                        "overpass returned HTTP {status}: {}",
                        body.chars().take(200).collect::<String>()
                    )));
                }
            }
        }
        Err(IngestError::OverpassRateLimited { attempts })
    }
}

impl RawFeatureSource for OverpassClient {
    fn fetch_raw(&self, center: GeoPoint, radius_m: f64) -> Result<RawResponse, IngestError> {
        if !(radius_m > 0.0) || !center.is_valid() {
            return Err(IngestError::InvalidQuery(format!(
                "bad fetch parameters: center {center}, radius {radius_m}"
            )));
        }
        let cache = self.cache_path(center, radius_m);
        if let (Some(path), false) = (&cache, self.refresh) {
            if path.exists() {
                info!(path = %path.display(), "overpass cache hit");
                return RawResponse::parse(&fs::read_to_string(path)?);
            }
        }
        let text = self.request(&overpass_query(center, radius_m))?;
        let parsed = RawResponse::parse(&text)?;
        if let Some(path) = cache {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, &text)?;
        }
        Ok(parsed)
    }

    fn source_kind(&self) -> DatasetSource {
        DatasetSource::Overpass
    }
}
