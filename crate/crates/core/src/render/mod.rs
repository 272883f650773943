//! Canvas rasterization and JPEG encoding for the prompt screenshot.

mod font;

use std::io::Cursor;

use image::codecs::jpeg::JpegEncoder;
use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::CanvasPoint;
use crate::index::ProjectedZone;
use crate::ingest::ZoneCategory;
use crate::world::MapWorld;

pub const DEFAULT_JPEG_QUALITY: u8 = 80;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("jpeg encoding failed: {0}")]
    EncodingFailure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRendering {
    #[default]
    Off,
    On,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderStyle {
    pub building: [u8; 3],
    pub park: [u8; 3],
    pub water: [u8; 3],
    pub other_area: [u8; 3],
    pub outline: [u8; 3],
    pub background: [u8; 3],
    pub star: [u8; 3],
    pub star_outline: [u8; 3],
    pub label: [u8; 3],
    pub star_glyph_size: u32,
    pub label_rendering: LabelRendering,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            building: [196, 120, 92],
            park: [126, 190, 112],
            water: [104, 158, 222],
            other_area: [214, 204, 160],
            outline: [70, 64, 60],
            background: [242, 239, 233],
            star: [222, 24, 48],
            star_outline: [20, 20, 20],
            label: [25, 25, 25],
            star_glyph_size: 18,
            label_rendering: LabelRendering::Off,
        }
    }
}

impl RenderStyle {
    pub fn fill_for(&self, category: ZoneCategory) -> [u8; 3] {
        match category {
            ZoneCategory::Building => self.building,
            ZoneCategory::Park => self.park,
            ZoneCategory::Water => self.water,
            ZoneCategory::OtherArea => self.other_area,
        }
    }

    pub fn with_labels(mut self) -> Self {
        self.label_rendering = LabelRendering::On;
        self
    }
}

/// Render zones (largest first, so nested zones stay visible), outlines,
/// optional labels, then the star marker. `cursor: None` skips the marker.
pub fn render_canvas(world: &MapWorld, cursor: Option<CanvasPoint>, style: &RenderStyle) -> RgbImage {
    let proj = world.projection();
    let mut img = RgbImage::from_pixel(proj.width_px, proj.height_px, Rgb(style.background));

    let mut order: Vec<usize> = (0..world.zones().len()).collect();
    order.sort_by(|&a, &b| {
        world.zones()[b]
            .area_m2
            .total_cmp(&world.zones()[a].area_m2)
            .then(a.cmp(&b))
    });
    for &i in &order {
        let pz = &world.projected()[i];
        fill_rings(&mut img, &pz.canvas_rings, style.fill_for(world.zones()[i].category));
        for ring in &pz.canvas_rings {
            stroke_ring(&mut img, ring, style.outline);
        }
    }
    if style.label_rendering == LabelRendering::On {
        for (zone, pz) in world.zones().iter().zip(world.projected()) {
            draw_label(&mut img, pz, &zone.name, style.label);
        }
    }
    if let Some(c) = cursor {
        draw_star(&mut img, c, style);
    }
    img
}

/// Even-odd scanline fill sampled at pixel centres.
pub fn fill_rings(img: &mut RgbImage, rings: &[Vec<CanvasPoint>], color: [u8; 3]) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (min_y, max_y) = rings
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
    if !min_y.is_finite() {
        return;
    }
    let y0 = ((min_y - 0.5).ceil() as i64).max(0);
    let y1 = ((max_y - 0.5).floor() as i64).min(h - 1);
    let mut xs: Vec<f64> = Vec::new();
    for y in y0..=y1 {
        let yc = y as f64 + 0.5;
        xs.clear();
        for ring in rings {
            let n = ring.len();
            for i in 0..n {
                let a = ring[i];
                let b = ring[(i + 1) % n];
                if (a.y <= yc) != (b.y <= yc) {
                    xs.push(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let start = ((pair[0] - 0.5).ceil() as i64).max(0);
            let end = ((pair[1] - 0.5).ceil() as i64).min(w);
            for x in start..end {
                img.put_pixel(x as u32, y as u32, Rgb(color));
            }
        }
    }
}

fn put_clipped(img: &mut RgbImage, x: i64, y: i64, color: [u8; 3]) {
    if x >= 0 && y >= 0 && x < img.width() as i64 && y < img.height() as i64 {
        img.put_pixel(x as u32, y as u32, Rgb(color));
    }
}

fn draw_line(img: &mut RgbImage, a: CanvasPoint, b: CanvasPoint, color: [u8; 3]) {
    let (mut x0, mut y0) = (a.x.floor() as i64, a.y.floor() as i64);
    let (x1, y1) = (b.x.floor() as i64, b.y.floor() as i64);
    // Skip lines entirely off one side of the image.
    let (w, h) = (img.width() as i64, img.height() as i64);
    if (x0 < 0 && x1 < 0) || (y0 < 0 && y1 < 0) || (x0 >= w && x1 >= w) || (y0 >= h && y1 >= h) {
        return;
    }
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put_clipped(img, x0, y0, color);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

fn stroke_ring(img: &mut RgbImage, ring: &[CanvasPoint], color: [u8; 3]) {
    for pair in ring.windows(2) {
        draw_line(img, pair[0], pair[1], color);
    }
}

fn star_polygon(center: CanvasPoint, outer_r: f64) -> Vec<CanvasPoint> {
    let inner_r = outer_r * 0.42;
    let mut pts: Vec<CanvasPoint> = (0..10)
        .map(|i| {
            let r = if i % 2 == 0 { outer_r } else { inner_r };
            let angle = std::f64::consts::PI * i as f64 / 5.0;
            CanvasPoint::new(center.x + r * angle.sin(), center.y - r * angle.cos())
        })
        .collect();
    pts.push(pts[0]);
    pts
}

fn draw_star(img: &mut RgbImage, c: CanvasPoint, style: &RenderStyle) {
    let star = star_polygon(c, (style.star_glyph_size.max(6) as f64) / 2.0);
    fill_rings(img, std::slice::from_ref(&star), style.star);
    stroke_ring(img, &star, style.star_outline);
    // The centre block is always solid marker colour.
    for dy in -1..=1 {
        for dx in -1..=1 {
            put_clipped(img, c.x.floor() as i64 + dx, c.y.floor() as i64 + dy, style.star);
        }
    }
}

fn draw_label(img: &mut RgbImage, pz: &ProjectedZone, text: &str, color: [u8; 3]) {
    let text: String = text.chars().take(24).collect();
    let advance = font::GLYPH_W as i64 + 1;
    let width = text.chars().count() as i64 * advance - 1;
    let x0 = pz.canvas_centroid.x.round() as i64 - width / 2;
    let y0 = pz.canvas_centroid.y.round() as i64 - font::GLYPH_H as i64 / 2;
    for (k, ch) in text.chars().enumerate() {
        let rows = font::glyph(ch);
        for (ry, bits) in rows.iter().enumerate() {
            for rx in 0..font::GLYPH_W {
                if bits & (1 << (font::GLYPH_W - 1 - rx)) != 0 {
                    put_clipped(img, x0 + k as i64 * advance + rx as i64, y0 + ry as i64, color);
                }
            }
        }
    }
}

/// Baseline JFIF JPEG at `quality` (1–100).
pub fn encode_jpeg(img: &RgbImage, quality: u8) -> Result<Vec<u8>, RenderError> {
    if !(1..=100).contains(&quality) {
        return Err(RenderError::EncodingFailure(format!("quality {quality} outside 1..=100")));
    }
    let mut out = Cursor::new(Vec::with_capacity(64 * 1024));
    JpegEncoder::new_with_quality(&mut out, quality)
        .encode_image(img)
        .map_err(|e| RenderError::EncodingFailure(e.to_string()))?;
    Ok(out.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_axis_aligned_square_exactly() {
        let mut img = RgbImage::from_pixel(50, 50, Rgb([0, 0, 0]));
        let ring = vec![
            CanvasPoint::new(10.0, 10.0),
            CanvasPoint::new(30.0, 10.0),
            CanvasPoint::new(30.0, 20.0),
            CanvasPoint::new(10.0, 20.0),
            CanvasPoint::new(10.0, 10.0),
        ];
        fill_rings(&mut img, &[ring], [255, 0, 0]);
        let filled = img.pixels().filter(|p| p.0 == [255, 0, 0]).count();
        assert_eq!(filled, 200);
        assert_eq!(img.get_pixel(10, 10).0, [255, 0, 0]);
        assert_eq!(img.get_pixel(30, 10).0, [0, 0, 0]);
    }

    #[test]
    fn hole_is_carved_out() {
        let sq = |a: f64, b: f64| {
            vec![
                CanvasPoint::new(a, a),
                CanvasPoint::new(b, a),
                CanvasPoint::new(b, b),
                CanvasPoint::new(a, b),
                CanvasPoint::new(a, a),
            ]
        };
        let mut img = RgbImage::from_pixel(40, 40, Rgb([0, 0, 0]));
        fill_rings(&mut img, &[sq(0.0, 40.0), sq(10.0, 30.0)], [9, 9, 9]);
        assert_eq!(img.pixels().filter(|p| p.0 == [9, 9, 9]).count(), 1600 - 400);
        assert_eq!(img.get_pixel(20, 20).0, [0, 0, 0]);
    }

    #[test]
    fn glyphs_cover_labels() {
        assert_ne!(font::glyph('a'), font::glyph('?'));
        assert_eq!(font::glyph('a'), font::glyph('A'));
        assert_eq!(font::glyph('~'), font::glyph('?'));
    }

    #[test]
    fn bad_quality_is_rejected() {
        let img = RgbImage::new(4, 4);
        assert!(encode_jpeg(&img, 0).is_err());
        assert!(encode_jpeg(&img, 101).is_err());
    }

    #[test]
    fn category_colors_are_distinct() {
        let s = RenderStyle::default();
        let colors: Vec<_> = ZoneCategory::ALL.iter().map(|c| s.fill_for(*c)).collect();
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert_ne!(colors[i], colors[j]);
            }
        }
    }
}
