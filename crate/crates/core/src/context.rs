//! Egocentric text describing the cursor's surroundings.
//!
//! Two registers: short sector codes for the prompt layout
//! (`- MoPOP (building) is to your SE about 170 m away`) and full words for
//! spoken sentences (`MoPOP is to your southeast, about 170 meters away.`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{compass_bearing, geo_distance_m, CanvasPoint, GeometryError, Sector};
use crate::ingest::Zone;
use crate::world::MapWorld;

/// How many neighbours the layout lists.
pub const LAYOUT_NEIGHBORS: usize = 10;

pub const EMPTY_AREA_LINE: &str = "You are over an empty area";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContextError {
    #[error("dataset has no zones")]
    EmptyDataset,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A distance rounded half-up to the nearest 10 m.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundedDistance {
    UnderTen,
    Meters(u32),
}

impl RoundedDistance {
    pub fn from_meters(m: f64) -> Self {
        let tens = (m / 10.0 + 0.5).floor();
        if tens <= 0.0 {
            RoundedDistance::UnderTen
        } else {
            RoundedDistance::Meters(tens as u32 * 10)
        }
    }

    /// `about 170 m` / `under 10 m`
    pub fn short(self) -> String {
        match self {
            RoundedDistance::UnderTen => "under 10 m".into(),
            RoundedDistance::Meters(d) => format!("about {d} m"),
        }
    }

    /// `about 170 meters` / `under 10 meters`
    pub fn long(self) -> String {
        match self {
            RoundedDistance::UnderTen => "under 10 meters".into(),
            RoundedDistance::Meters(d) => format!("about {d} meters"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialLayout {
    pub current_zone_line: String,
    pub neighbor_lines: Vec<String>,
}

impl SpatialLayout {
    /// Block used in the prompt: current zone, heading, one line per neighbour.
    pub fn to_text(&self) -> String {
        let mut out = self.current_zone_line.clone();
        if !self.neighbor_lines.is_empty() {
            out.push_str("\nNearest zones with direction and distance:");
            for line in &self.neighbor_lines {
                out.push('\n');
                out.push_str(line);
            }
        }
        out
    }
}

pub fn current_zone_line(zone: Option<&Zone>) -> String {
    match zone {
        Some(z) => format!("Current zone: {} ({})", z.name, z.category.label()),
        None => EMPTY_AREA_LINE.to_string(),
    }
}

pub fn layout_line(zone: &Zone, sector: Sector, distance_m: f64) -> String {
    format!(
        "- {} ({}) is to your {} {} away",
        zone.name,
        zone.category.label(),
        sector.code(),
        RoundedDistance::from_meters(distance_m).short()
    )
}

pub fn describe_position(world: &MapWorld, cursor: CanvasPoint) -> Result<SpatialLayout, ContextError> {
    if world.zones().is_empty() {
        return Err(ContextError::EmptyDataset);
    }
    let neighbor_lines = world
        .nearest_zones(cursor, LAYOUT_NEIGHBORS)
        .into_iter()
        .map(|n| layout_line(n.zone, n.sector, n.distance_m))
        .collect();
    Ok(SpatialLayout {
        current_zone_line: current_zone_line(world.hit_test(cursor)),
        neighbor_lines,
    })
}

/// Direction and rounded distance from the cursor to a zone's centroid.
pub fn relative_position(
    world: &MapWorld,
    zone: &Zone,
    cursor: CanvasPoint,
) -> Result<(Sector, RoundedDistance), GeometryError> {
    let from = world.projection().unproject(cursor);
    let bearing = compass_bearing(from, zone.centroid)?;
    Ok((bearing.sector, RoundedDistance::from_meters(geo_distance_m(from, zone.centroid))))
}

/// `<name> is to your <direction>, about <d> meters away.`
pub fn egocentric_sentence(world: &MapWorld, zone: &Zone, cursor: CanvasPoint) -> Result<String, GeometryError> {
    let (sector, distance) = relative_position(world, zone, cursor)?;
    Ok(format!("{} is to your {}, {} away.", zone.name, sector.word(), distance.long()))
}
