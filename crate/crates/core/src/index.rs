//! Uniform-grid spatial index over the projected zones.
//!
//! Two grids share one cell size: a coverage grid (zone bbox → cells) for
//! hit-testing and a centroid grid for expanding-ring nearest-zone search.

use serde::{Deserialize, Serialize};

use crate::geo::{compass_bearing, geo_distance_m, Bearing, CanvasPoint, CanvasProjection, GeoPoint};
use crate::ingest::ZoneDataset;

pub const CELL_PX: f64 = 32.0;

/// Slack on the pixel→meter lower bound used to prune the nearest search.
/// The projection is uniform to far better than this at neighbourhood scale.
const SCALE_SLACK: f64 = 0.98;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    fn of(points: &[CanvasPoint]) -> Self {
        points.iter().fold(
            BBox {
                min_x: f64::INFINITY,
                min_y: f64::INFINITY,
                max_x: f64::NEG_INFINITY,
                max_y: f64::NEG_INFINITY,
            },
            |b, p| BBox {
                min_x: b.min_x.min(p.x),
                min_y: b.min_y.min(p.y),
                max_x: b.max_x.max(p.x),
                max_y: b.max_y.max(p.y),
            },
        )
    }

    pub fn contains(&self, p: CanvasPoint) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }
}

/// A zone's rings in canvas space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedZone {
    pub zone_ref: String,
    /// Outer ring first, then holes.
    pub canvas_rings: Vec<Vec<CanvasPoint>>,
    pub canvas_centroid: CanvasPoint,
    pub bbox: BBox,
}

impl ProjectedZone {
    pub fn outer(&self) -> &[CanvasPoint] {
        &self.canvas_rings[0]
    }

    pub fn holes(&self) -> &[Vec<CanvasPoint>] {
        &self.canvas_rings[1..]
    }

    /// Even-odd containment; edges of the outer ring and of holes count
    /// as inside.
    pub fn contains(&self, p: CanvasPoint) -> bool {
        if !self.bbox.contains(p) {
            return false;
        }
        ring_position(p, self.outer()) != RingPosition::Outside
            && self
                .holes()
                .iter()
                .all(|h| ring_position(p, h) != RingPosition::Inside)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingPosition {
    Inside,
    Boundary,
    Outside,
}

/// Crossing-number test with an exact on-edge check.
pub fn ring_position(p: CanvasPoint, ring: &[CanvasPoint]) -> RingPosition {
    let n = ring.len();
    if n < 3 {
        return RingPosition::Outside;
    }
    let mut inside = false;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if cross == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
        {
            return RingPosition::Boundary;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_at {
                inside = !inside;
            }
        }
    }
    if inside {
        RingPosition::Inside
    } else {
        RingPosition::Outside
    }
}

/// One entry of a nearest-zones answer. `zone` indexes `dataset.zones`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub zone: usize,
    pub distance_m: f64,
    pub bearing: Bearing,
}

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    projection: CanvasProjection,
    projected: Vec<ProjectedZone>,
    areas: Vec<f64>,
    centroids: Vec<GeoPoint>,
    cols: usize,
    rows: usize,
    coverage: Vec<Vec<u32>>,
    centroid_cells: Vec<Vec<u32>>,
    off_canvas_centroids: Vec<u32>,
}

impl SpatialIndex {
    pub fn build(dataset: &ZoneDataset, projection: CanvasProjection) -> Self {
        let cols = ((projection.width_px as f64 / CELL_PX).ceil() as usize).max(1);
        let rows = ((projection.height_px as f64 / CELL_PX).ceil() as usize).max(1);
        let mut coverage = vec![Vec::new(); cols * rows];
        let mut centroid_cells = vec![Vec::new(); cols * rows];
        let mut off_canvas_centroids = Vec::new();
        let mut projected = Vec::with_capacity(dataset.zones.len());

        for (i, zone) in dataset.zones.iter().enumerate() {
            let canvas_rings: Vec<Vec<CanvasPoint>> = zone
                .geo_rings()
                .map(|ring| ring.iter().map(|p| projection.project(*p)).collect())
                .collect();
            let bbox = BBox::of(&canvas_rings[0]);
            let canvas_centroid = projection.project(zone.centroid);

            let w = projection.width_px as f64;
            let h = projection.height_px as f64;
            if bbox.max_x >= 0.0 && bbox.max_y >= 0.0 && bbox.min_x <= w && bbox.min_y <= h {
                let (c0, r0) = Self::cell_of(cols, rows, CanvasPoint::new(bbox.min_x, bbox.min_y));
                let (c1, r1) = Self::cell_of(cols, rows, CanvasPoint::new(bbox.max_x, bbox.max_y));
                for r in r0..=r1 {
                    for c in c0..=c1 {
                        coverage[r * cols + c].push(i as u32);
                    }
                }
            }
            if projection.contains(canvas_centroid) {
                let (c, r) = Self::cell_of(cols, rows, canvas_centroid);
                centroid_cells[r * cols + c].push(i as u32);
            } else {
                off_canvas_centroids.push(i as u32);
            }

            projected.push(ProjectedZone {
                zone_ref: zone.zone_id.clone(),
                canvas_rings,
                canvas_centroid,
                bbox,
            });
        }

        Self {
            projection,
            projected,
            areas: dataset.zones.iter().map(|z| z.area_m2).collect(),
            centroids: dataset.zones.iter().map(|z| z.centroid).collect(),
            cols,
            rows,
            coverage,
            centroid_cells,
            off_canvas_centroids,
        }
    }

    fn cell_of(cols: usize, rows: usize, p: CanvasPoint) -> (usize, usize) {
        let c = (p.x / CELL_PX).floor().clamp(0.0, (cols - 1) as f64) as usize;
        let r = (p.y / CELL_PX).floor().clamp(0.0, (rows - 1) as f64) as usize;
        (c, r)
    }

    pub fn projection(&self) -> &CanvasProjection {
        &self.projection
    }

    pub fn projected(&self) -> &[ProjectedZone] {
        &self.projected
    }

    pub fn len(&self) -> usize {
        self.projected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projected.is_empty()
    }

    /// Zones whose bbox overlaps the cell containing `p`.
    pub fn candidates(&self, p: CanvasPoint) -> &[u32] {
        let (c, r) = Self::cell_of(self.cols, self.rows, p);
        &self.coverage[r * self.cols + c]
    }

    /// The most specific (smallest-area) zone containing `p`. Points off
    /// the canvas are never inside a zone.
    pub fn hit_test(&self, p: CanvasPoint) -> Option<usize> {
        if !self.projection.contains(p) {
            return None;
        }
        self.candidates(p)
            .iter()
            .map(|&i| i as usize)
            .filter(|&i| self.projected[i].contains(p))
            .min_by(|&a, &b| self.areas[a].total_cmp(&self.areas[b]).then(a.cmp(&b)))
    }

    fn neighbor(&self, from: GeoPoint, zone: usize) -> Neighbor {
        let to = self.centroids[zone];
        Neighbor {
            zone,
            distance_m: geo_distance_m(from, to),
            bearing: compass_bearing(from, to).unwrap_or_else(|_| Bearing::from_degrees(0.0)),
        }
    }

    /// Up to `k` zones ordered by centroid distance (ties by zone id),
    /// excluding the zone that contains `p`.
    pub fn nearest_zones(&self, p: CanvasPoint, k: usize) -> Vec<Neighbor> {
        if k == 0 || self.projected.is_empty() {
            return Vec::new();
        }
        let from = self.projection.unproject(p);
        let exclude = self.hit_test(p);
        let mut found: Vec<Neighbor> = self
            .off_canvas_centroids
            .iter()
            .map(|&i| i as usize)
            .filter(|&i| Some(i) != exclude)
            .map(|i| self.neighbor(from, i))
            .collect();

        let by_rank = |a: &Neighbor, b: &Neighbor| a.distance_m.total_cmp(&b.distance_m).then(a.zone.cmp(&b.zone));

        if !self.projection.contains(p) {
            // Rings around a clamped cell give no useful bound; scan.
            found.extend(
                self.centroid_cells
                    .iter()
                    .flatten()
                    .map(|&i| i as usize)
                    .filter(|&i| Some(i) != exclude)
                    .map(|i| self.neighbor(from, i)),
            );
            found.sort_by(by_rank);
            found.truncate(k);
            return found;
        }

        let (cc, cr) = Self::cell_of(self.cols, self.rows, p);
        let max_ring = self.cols.max(self.rows);
        let mpp = self.projection.meters_per_pixel;
        for ring in 0..=max_ring {
            let (c0, c1) = (cc as isize - ring as isize, cc as isize + ring as isize);
            let (r0, r1) = (cr as isize - ring as isize, cr as isize + ring as isize);
            for r in r0..=r1 {
                if r < 0 || r >= self.rows as isize {
                    continue;
                }
                let on_edge_row = r == r0 || r == r1;
                let mut c = c0;
                while c <= c1 {
                    if c >= 0 && c < self.cols as isize {
                        let cell = &self.centroid_cells[r as usize * self.cols + c as usize];
                        found.extend(
                            cell.iter()
                                .map(|&i| i as usize)
                                .filter(|&i| Some(i) != exclude)
                                .map(|i| self.neighbor(from, i)),
                        );
                    }
                    // Interior rows only contribute their two edge cells.
                    c = if on_edge_row || c == c1 { c + 1 } else { c1 };
                }
            }

            if found.len() >= k {
                found.sort_by(by_rank);
                let kth = found[k - 1].distance_m;
                let inner_px = [
                    p.x - (c0 as f64) * CELL_PX,
                    (c1 as f64 + 1.0) * CELL_PX - p.x,
                    p.y - (r0 as f64) * CELL_PX,
                    (r1 as f64 + 1.0) * CELL_PX - p.y,
                ]
                .into_iter()
                .fold(f64::INFINITY, f64::min);
                if inner_px * mpp * SCALE_SLACK > kth {
                    break;
                }
            }
        }
        found.sort_by(by_rank);
        found.truncate(k);
        found
    }
}
