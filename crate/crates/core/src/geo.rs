//! Uniform-scale canvas projection and the small amount of geodesy the
//! engine needs at neighbourhood scale (a few hundred meters).

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean earth radius used by every distance computation.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("bearing is undefined between identical points")]
    DegenerateBearing,
}

/// A WGS84 coordinate in degrees. Serialized as `[lat, lon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

impl From<[f64; 2]> for GeoPoint {
    fn from([lat, lon]: [f64; 2]) -> Self {
        Self { lat, lon }
    }
}

impl From<GeoPoint> for [f64; 2] {
    fn from(p: GeoPoint) -> Self {
        [p.lat, p.lon]
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6},{:.6}", self.lat, self.lon)
    }
}

/// Pixel position on the canvas. `x` grows eastward, `y` grows southward.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CanvasPoint {
    pub x: f64,
    pub y: f64,
}

impl CanvasPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: CanvasPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Haversine great-circle distance in meters.
pub fn geo_distance_m(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Local equirectangular plane around an origin, in meters (east, north).
#[derive(Debug, Clone, Copy)]
pub struct LocalPlane {
    origin: GeoPoint,
    cos_lat: f64,
}

impl LocalPlane {
    pub fn new(origin: GeoPoint) -> Self {
        Self {
            origin,
            cos_lat: origin.lat.to_radians().cos(),
        }
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    pub fn to_local(&self, p: GeoPoint) -> (f64, f64) {
        let east = EARTH_RADIUS_M * (p.lon - self.origin.lon).to_radians() * self.cos_lat;
        let north = EARTH_RADIUS_M * (p.lat - self.origin.lat).to_radians();
        (east, north)
    }

    pub fn to_geo(&self, east: f64, north: f64) -> GeoPoint {
        let lat = self.origin.lat + (north / EARTH_RADIUS_M).to_degrees();
        let lon = self.origin.lon + (east / (EARTH_RADIUS_M * self.cos_lat)).to_degrees();
        GeoPoint { lat, lon }
    }
}

/// Eight-way compass sector, clockwise from north.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Sector {
    pub const ALL: [Sector; 8] = [
        Sector::N,
        Sector::NE,
        Sector::E,
        Sector::SE,
        Sector::S,
        Sector::SW,
        Sector::W,
        Sector::NW,
    ];

    /// Half-open 45° arcs centred on each direction; 22.5° belongs to NE.
    pub fn from_degrees(degrees: f64) -> Sector {
        let shifted = (degrees + 22.5).rem_euclid(360.0);
        let idx = (shifted / 45.0).floor() as usize;
        Self::ALL[idx.min(7)]
    }

    pub fn code(self) -> &'static str {
        match self {
            Sector::N => "N",
            Sector::NE => "NE",
            Sector::E => "E",
            Sector::SE => "SE",
            Sector::S => "S",
            Sector::SW => "SW",
            Sector::W => "W",
            Sector::NW => "NW",
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            Sector::N => "north",
            Sector::NE => "northeast",
            Sector::E => "east",
            Sector::SE => "southeast",
            Sector::S => "south",
            Sector::SW => "southwest",
            Sector::W => "west",
            Sector::NW => "northwest",
        }
    }

    pub fn opposite(self) -> Sector {
        let idx = Self::ALL.iter().position(|s| *s == self).unwrap_or(0);
        Self::ALL[(idx + 4) % 8]
    }

    /// Accepts codes ("SE") and words ("southeast", "south-east", "south east").
    pub fn parse(text: &str) -> Option<Sector> {
        let norm: String = text
            .chars()
            .filter(|c| c.is_ascii_alphabetic())
            .collect::<String>()
            .to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|s| s.code().eq_ignore_ascii_case(&norm) || s.word() == norm)
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bearing {
    /// Clockwise from north, in `[0, 360)`.
    pub degrees: f64,
    pub sector: Sector,
}

impl Bearing {
    pub fn from_degrees(degrees: f64) -> Self {
        let degrees = degrees.rem_euclid(360.0);
        // rem_euclid can round up to exactly 360.0 for tiny negative inputs
        let degrees = if degrees >= 360.0 { 0.0 } else { degrees };
        Self {
            degrees,
            sector: Sector::from_degrees(degrees),
        }
    }
}

/// Bearing from `from` to `to` on the local plane at their mean latitude.
pub fn compass_bearing(from: GeoPoint, to: GeoPoint) -> Result<Bearing, GeometryError> {
    if from == to {
        return Err(GeometryError::DegenerateBearing);
    }
    let mean_lat = ((from.lat + to.lat) / 2.0).to_radians();
    let east = (to.lon - from.lon).to_radians() * mean_lat.cos();
    let north = (to.lat - from.lat).to_radians();
    if east == 0.0 && north == 0.0 {
        return Err(GeometryError::DegenerateBearing);
    }
    Ok(Bearing::from_degrees(east.atan2(north).to_degrees()))
}

/// Uniform meters-per-pixel mapping between geographic and canvas space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanvasProjection {
    pub center_geo: GeoPoint,
    pub meters_per_pixel: f64,
    pub width_px: u32,
    pub height_px: u32,
    pub earth_radius_m: f64,
}

impl CanvasProjection {
    pub const DEFAULT_SIZE_PX: u32 = 800;

    pub fn new(center_geo: GeoPoint) -> Self {
        Self {
            center_geo,
            meters_per_pixel: 1.0,
            width_px: Self::DEFAULT_SIZE_PX,
            height_px: Self::DEFAULT_SIZE_PX,
            earth_radius_m: EARTH_RADIUS_M,
        }
    }

    /// Square canvas at 1 m/px that covers the `2 * radius_m` square
    /// (never smaller than the 800 px default).
    pub fn covering_radius(center_geo: GeoPoint, radius_m: f64) -> Self {
        let side = (2.0 * radius_m).ceil().max(Self::DEFAULT_SIZE_PX as f64) as u32;
        Self {
            width_px: side,
            height_px: side,
            ..Self::new(center_geo)
        }
    }

    fn meters_per_degree_lat(&self) -> f64 {
        self.earth_radius_m * PI / 180.0
    }

    fn cos_lat0(&self) -> f64 {
        self.center_geo.lat.to_radians().cos()
    }

    pub fn project(&self, p: GeoPoint) -> CanvasPoint {
        let k = self.meters_per_degree_lat() / self.meters_per_pixel;
        CanvasPoint {
            x: self.width_px as f64 / 2.0 + (p.lon - self.center_geo.lon) * self.cos_lat0() * k,
            y: self.height_px as f64 / 2.0 - (p.lat - self.center_geo.lat) * k,
        }
    }

    pub fn unproject(&self, p: CanvasPoint) -> GeoPoint {
        let k = self.meters_per_degree_lat() / self.meters_per_pixel;
        GeoPoint {
            lat: self.center_geo.lat - (p.y - self.height_px as f64 / 2.0) / k,
            lon: self.center_geo.lon + (p.x - self.width_px as f64 / 2.0) / (self.cos_lat0() * k),
        }
    }

    /// Inclusive containment in `[0, width] x [0, height]`.
    pub fn contains(&self, p: CanvasPoint) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= self.width_px as f64 && p.y <= self.height_px as f64
    }

    pub fn center_px(&self) -> CanvasPoint {
        CanvasPoint::new(self.width_px as f64 / 2.0, self.height_px as f64 / 2.0)
    }
}

/// Signed shoelace area and centroid of a planar ring. The ring may or may
/// not repeat its first vertex.
pub fn planar_ring_area_centroid(ring: &[(f64, f64)]) -> (f64, (f64, f64)) {
    let pts = open_ring(ring);
    let n = pts.len();
    if n < 3 {
        return (0.0, (0.0, 0.0));
    }
    // Shift to the first vertex to keep the cross products well conditioned.
    let (ox, oy) = pts[0];
    let mut twice_area = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let (x0, y0) = (pts[i].0 - ox, pts[i].1 - oy);
        let (x1, y1) = (pts[(i + 1) % n].0 - ox, pts[(i + 1) % n].1 - oy);
        let cross = x0 * y1 - x1 * y0;
        twice_area += cross;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    let area = twice_area / 2.0;
    if area == 0.0 {
        return (0.0, (ox, oy));
    }
    (area, (ox + cx / (6.0 * area), oy + cy / (6.0 * area)))
}

fn open_ring<T: PartialEq + Copy>(ring: &[T]) -> &[T] {
    match ring {
        [first, .., last] if ring.len() > 1 && first == last => &ring[..ring.len() - 1],
        _ => ring,
    }
}

/// Area (m²) and area-weighted centroid of `rings[0]` minus `rings[1..]`,
/// computed on a local plane anchored at the outer ring's first vertex.
pub fn polygon_centroid_area(rings: &[Vec<GeoPoint>]) -> Result<(GeoPoint, f64), GeometryError> {
    let outer = rings
        .first()
        .filter(|r| !r.is_empty())
        .ok_or_else(|| GeometryError::DegenerateGeometry("polygon has no outer ring".into()))?;
    let plane = LocalPlane::new(outer[0]);
    let local = |ring: &Vec<GeoPoint>| -> Vec<(f64, f64)> {
        ring.iter().map(|p| plane.to_local(*p)).collect()
    };

    let (outer_area, (ox, oy)) = planar_ring_area_centroid(&local(outer));
    let outer_area = outer_area.abs();
    let mut area = outer_area;
    let mut mx = outer_area * ox;
    let mut my = outer_area * oy;
    for hole in &rings[1..] {
        let (a, (hx, hy)) = planar_ring_area_centroid(&local(hole));
        let a = a.abs();
        area -= a;
        mx -= a * hx;
        my -= a * hy;
    }
    if !(area > 1e-6) {
        return Err(GeometryError::DegenerateGeometry(format!(
            "polygon area {area:.3e} m² is below 1e-6 m²"
        )));
    }
    Ok((plane.to_geo(mx / area, my / area), area))
}
