//! Engine for exploring OpenStreetMap neighbourhoods as audio-haptic maps.
//!
//! The pipeline runs bottom-up:
//!
//! * [`ingest`] fetches raw OSM features (Overpass or a bundled fixture) and
//!   assembles them into categorized polygonal [`ingest::Zone`]s.
//! * [`geo`] holds the uniform-scale canvas projection and the distance,
//!   bearing and area math.
//! * [`index`] answers hit-tests and nearest-zone queries on the canvas.
//! * [`exploration`] turns cursor movement into haptic/audio feedback events.
//! * [`context`] phrases the cursor's surroundings egocentrically.
//! * [`render`] rasterizes the canvas and encodes the JPEG screenshot.
//! * [`agent`] assembles the multimodal prompt and talks to a provider.

pub mod agent;
pub mod api;
pub mod context;
pub mod exploration;
pub mod fixtures;
pub mod geo;
pub mod index;
pub mod ingest;
pub mod render;
pub mod replay;
pub mod world;

#[cfg(test)]
mod test_http;

pub use geo::{CanvasPoint, CanvasProjection, GeoPoint, Sector};
pub use ingest::{Zone, ZoneCategory, ZoneDataset};
pub use world::MapWorld;
