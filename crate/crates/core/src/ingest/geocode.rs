//! Place-name resolution through Nominatim with a bundled fallback table.

use std::time::Duration;

use serde::Deserialize;
use tracing::warn;

use super::{IngestError, PlaceQuery};
use crate::fixtures;
use crate::geo::GeoPoint;

pub const DEFAULT_NOMINATIM_URL: &str = "https://nominatim.openstreetmap.org";

#[derive(Debug, Clone)]
pub struct Geocoder {
    pub endpoint: String,
    /// Consult the bundled place table when the network is unavailable.
    pub fixture_fallback: bool,
    pub timeout: Duration,
}

impl Default for Geocoder {
    fn default() -> Self {
        Self {
            endpoint: DEFAULT_NOMINATIM_URL.to_string(),
            fixture_fallback: true,
            timeout: Duration::from_secs(15),
        }
    }
}

#[derive(Deserialize)]
struct NominatimHit {
    lat: String,
    lon: String,
}

impl Geocoder {
    pub fn from_env() -> Self {
        let mut g = Self::default();
        if let Ok(url) = std::env::var("NOMINATIM_URL") {
            if !url.trim().is_empty() {
                g.endpoint = url;
            }
        }
        g
    }

    /// Offline geocoder backed only by the bundled table.
    pub fn offline() -> Self {
        Self {
            endpoint: String::new(),
            ..Self::default()
        }
    }

    fn lookup_remote(&self, text: &str) -> Result<GeoPoint, IngestError> {
        if self.endpoint.is_empty() {
            return Err(IngestError::NetworkFailure("no geocoder endpoint configured".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .user_agent(concat!("hapticmap/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        let url = format!("{}/search", self.endpoint.trim_end_matches('/'));
        let mut resp = agent
            .get(&url)
            .query("q", text)
            .query("format", "jsonv2")
            .query("limit", "1")
            .call()
            .map_err(|e| IngestError::NetworkFailure(e.to_string()))?;
        let hits: Vec<NominatimHit> = resp
            .body_mut()
            .read_json()
            .map_err(|e| IngestError::MalformedResponse(format!("nominatim: {e}")))?;
        let hit = hits
            .into_iter()
            .next()
            .ok_or_else(|| IngestError::GeocodeFailure(text.to_string()))?;
        let parse = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| IngestError::MalformedResponse(format!("bad coordinate {v:?}")))
        };
        Ok(GeoPoint::new(parse(&hit.lat)?, parse(&hit.lon)?))
    }

    pub fn resolve(&self, query: &PlaceQuery) -> Result<GeoPoint, IngestError> {
        if let Some(center) = query.center {
            query.validate()?;
            return Ok(center);
        }
        let text = query.query_text.as_deref().map(str::trim).unwrap_or("");
        if text.is_empty() {
            return Err(IngestError::GeocodeFailure(String::new()));
        }
        match self.lookup_remote(text) {
            Err(IngestError::NetworkFailure(reason)) if self.fixture_fallback => {
                warn!(%reason, "geocoder unreachable, using bundled places");
                fixtures::known_place(text).ok_or(IngestError::NetworkFailure(reason))
            }
            other => other,
        }
    }
}

/// Resolve with the environment-configured geocoder.
pub fn resolve_place(query: &PlaceQuery) -> Result<GeoPoint, IngestError> {
    Geocoder::from_env().resolve(query)
}
