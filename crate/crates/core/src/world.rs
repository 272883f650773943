use crate::geo::{CanvasPoint, CanvasProjection, Sector};
use crate::index::{ProjectedZone, SpatialIndex};
use crate::ingest::{Zone, ZoneDataset};

/// A dataset together with its canvas projection and spatial index.
///
/// Immutable once built; sessions share it behind an `Arc`.
#[derive(Debug, Clone)]
pub struct MapWorld {
    dataset: ZoneDataset,
    index: SpatialIndex,
}

/// A zone near the cursor, measured cursor → centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearbyZone<'a> {
    pub zone: &'a Zone,
    pub distance_m: f64,
    pub sector: Sector,
    pub bearing_deg: f64,
}

impl MapWorld {
    /// Default projection: dataset center, 1 m/px, covering the radius.
    pub fn new(dataset: ZoneDataset) -> Self {
        let projection = CanvasProjection::covering_radius(dataset.center, dataset.radius_m);
        Self::with_projection(dataset, projection)
    }

    pub fn with_projection(mut dataset: ZoneDataset, projection: CanvasProjection) -> Self {
        dataset.zones.sort_by(|a, b| a.zone_id.cmp(&b.zone_id));
        let index = SpatialIndex::build(&dataset, projection);
        Self { dataset, index }
    }

    pub fn dataset(&self) -> &ZoneDataset {
        &self.dataset
    }

    pub fn zones(&self) -> &[Zone] {
        &self.dataset.zones
    }

    pub fn projection(&self) -> &CanvasProjection {
        self.index.projection()
    }

    pub fn index(&self) -> &SpatialIndex {
        &self.index
    }

    pub fn projected(&self) -> &[ProjectedZone] {
        self.index.projected()
    }

    pub fn zone_by_id(&self, zone_id: &str) -> Option<&Zone> {
        self.dataset.zone(zone_id)
    }

    pub fn position_of(&self, zone_id: &str) -> Option<usize> {
        self.dataset
            .zones
            .binary_search_by(|z| z.zone_id.as_str().cmp(zone_id))
            .ok()
    }

    pub fn hit_test(&self, p: CanvasPoint) -> Option<&Zone> {
        self.index.hit_test(p).map(|i| &self.dataset.zones[i])
    }

    pub fn nearest_zones(&self, p: CanvasPoint, k: usize) -> Vec<NearbyZone<'_>> {
        self.index
            .nearest_zones(p, k)
            .into_iter()
            .map(|n| NearbyZone {
                zone: &self.dataset.zones[n.zone],
                distance_m: n.distance_m,
                sector: n.bearing.sector,
                bearing_deg: n.bearing.degrees,
            })
            .collect()
    }
}
