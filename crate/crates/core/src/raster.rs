//! Pixel grids and world-to-pixel mapping.
//!
//! Pixel `(i, j)` covers `[i, i+1) x [j, j+1)` in continuous pixel coordinates and has
//! its centre at `(i + 0.5, j + 0.5)`. Column `i` grows with world x, row `j` with world y.

use serde::{Deserialize, Serialize};

use crate::geom::{point_segment_distance, Point2};

pub const FREE: u8 = 255;
pub const BLOCKED: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterConfig {
    pub width: u32,
    pub height: u32,
    /// World extent covered by the raster, in world units.
    pub world: [f64; 2],
}

impl Default for RasterConfig {
    fn default() -> Self {
        Self {
            width: 224,
            height: 224,
            world: [64.0, 64.0],
        }
    }
}

impl RasterConfig {
    pub fn transform(&self) -> PixelTransform {
        PixelTransform {
            scale: [
                self.width as f64 / self.world[0],
                self.height as f64 / self.world[1],
            ],
            offset: [0.0, 0.0],
        }
    }

    /// World length of one pixel side (the larger of the two axes).
    pub fn pixel_size(&self) -> f64 {
        (self.world[0] / self.width as f64).max(self.world[1] / self.height as f64)
    }
}

/// `pixel = world * scale + offset`, per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelTransform {
    pub scale: [f64; 2],
    pub offset: [f64; 2],
}

impl PixelTransform {
    pub fn to_pixel(&self, p: Point2) -> Point2 {
        Point2::new(
            p.x * self.scale[0] + self.offset[0],
            p.y * self.scale[1] + self.offset[1],
        )
    }

    pub fn to_world(&self, q: Point2) -> Point2 {
        Point2::new(
            (q.x - self.offset[0]) / self.scale[0],
            (q.y - self.offset[1]) / self.scale[1],
        )
    }

    /// World coordinates of the centre of pixel `(i, j)`.
    pub fn pixel_center(&self, i: i64, j: i64) -> Point2 {
        self.to_world(Point2::new(i as f64 + 0.5, j as f64 + 0.5))
    }

    pub fn containing_pixel(&self, p: Point2) -> (i64, i64) {
        let q = self.to_pixel(p);
        (q.x.floor() as i64, q.y.floor() as i64)
    }
}

/// Binary single-channel mask holding only [`FREE`] and [`BLOCKED`].
#[derive(Debug, Clone, PartialEq)]
pub struct RasterMask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<u8>,
    pub world_to_pixel: PixelTransform,
}

impl RasterMask {
    pub fn black(cfg: &RasterConfig) -> Self {
        Self {
            width: cfg.width,
            height: cfg.height,
            bits: vec![BLOCKED; (cfg.width * cfg.height) as usize],
            world_to_pixel: cfg.transform(),
        }
    }

    pub fn in_bounds(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && i < self.width as i64 && j < self.height as i64
    }

    fn index(&self, i: i64, j: i64) -> usize {
        j as usize * self.width as usize + i as usize
    }

    pub fn get(&self, i: i64, j: i64) -> u8 {
        if self.in_bounds(i, j) {
            self.bits[self.index(i, j)]
        } else {
            BLOCKED
        }
    }

    pub fn is_free(&self, i: i64, j: i64) -> bool {
        self.get(i, j) == FREE
    }

    /// Marks a pixel free; out-of-range pixels are ignored.
    pub fn set_free(&mut self, i: i64, j: i64) {
        if self.in_bounds(i, j) {
            let k = self.index(i, j);
            self.bits[k] = FREE;
        }
    }

    pub fn count_free(&self) -> usize {
        self.bits.iter().filter(|&&b| b == FREE).count()
    }

    /// Every free pixel of `self` is free in `other`.
    pub fn is_subset_of(&self, other: &RasterMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self
                .bits
                .iter()
                .zip(&other.bits)
                .all(|(&a, &b)| a != FREE || b == FREE)
    }

    pub fn is_binary(&self) -> bool {
        self.bits.iter().all(|&b| b == FREE || b == BLOCKED)
    }

    /// Number of 4-connected components of free pixels.
    pub fn free_components(&self) -> usize {
        let (w, h) = (self.width as i64, self.height as i64);
        let mut seen = vec![false; self.bits.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.bits.len() {
            if seen[start] || self.bits[start] != FREE {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(k) = stack.pop() {
                let (i, j) = ((k as i64) % w, (k as i64) / w);
                for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let (ni, nj) = (i + di, j + dj);
                    if ni < 0 || nj < 0 || ni >= w || nj >= h {
                        continue;
                    }
                    let nk = (nj * w + ni) as usize;
                    if !seen[nk] && self.bits[nk] == FREE {
                        seen[nk] = true;
                        stack.push(nk);
                    }
                }
            }
        }
        count
    }
}

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn filled(width: u32, height: u32, color: [u8; 3]) -> Self {
        Self {
            width,
            height,
            data: color.repeat((width * height) as usize),
        }
    }

    pub fn in_bounds(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && i < self.width as i64 && j < self.height as i64
    }

    pub fn get(&self, i: i64, j: i64) -> Option<[u8; 3]> {
        if !self.in_bounds(i, j) {
            return None;
        }
        let k = 3 * (j as usize * self.width as usize + i as usize);
        Some([self.data[k], self.data[k + 1], self.data[k + 2]])
    }

    pub fn put(&mut self, i: i64, j: i64, color: [u8; 3]) {
        if self.in_bounds(i, j) {
            let k = 3 * (j as usize * self.width as usize + i as usize);
            self.data[k..k + 3].copy_from_slice(&color);
        }
    }

    pub fn count(&self, color: [u8; 3]) -> usize {
        self.data.chunks_exact(3).filter(|c| *c == color).count()
    }
}

/// Visits the pixels of a segment given in continuous pixel coordinates.
///
/// Along the dominant axis every pixel centre in the half-open extent `[lo, hi)` is visited,
/// with the cross coordinate taken from the segment at that centre. A segment too short
/// to reach a centre visits the pixel containing its midpoint.
pub fn scan_segment(a: Point2, b: Point2, mut visit: impl FnMut(i64, i64)) {
    if !scan_centres(a, b, &mut visit) {
        let m = a.lerp(b, 0.5);
        visit(m.x.floor() as i64, m.y.floor() as i64);
    }
}

fn scan_centres(a: Point2, b: Point2, visit: &mut impl FnMut(i64, i64)) -> bool {
    let d = b - a;
    let mut any = false;
    if d.x.abs() >= d.y.abs() && d.x != 0.0 {
        let (lo, hi) = (a.x.min(b.x), a.x.max(b.x));
        let mut k = (lo - 0.5).ceil() as i64;
        while (k as f64 + 0.5) < hi {
            let t = (k as f64 + 0.5 - a.x) / d.x;
            visit(k, (a.y + t * d.y).floor() as i64);
            any = true;
            k += 1;
        }
    } else if d.y != 0.0 {
        let (lo, hi) = (a.y.min(b.y), a.y.max(b.y));
        let mut k = (lo - 0.5).ceil() as i64;
        while (k as f64 + 0.5) < hi {
            let t = (k as f64 + 0.5 - a.y) / d.y;
            visit((a.x + t * d.x).floor() as i64, k);
            any = true;
            k += 1;
        }
    }
    any
}

fn adjacent8(a: (i64, i64), b: (i64, i64)) -> bool {
    (a.0 - b.0).abs() <= 1 && (a.1 - b.1).abs() <= 1
}

/// Thin 8-connected pixel chain along a polyline given in continuous pixel coordinates.
///
/// Each segment contributes the pixels of [`scan_segment`] in travel order, gaps between
/// consecutive pixels are bridged, and elbow pixels whose neighbours touch are dropped.
pub fn thin_polyline(points: &[Point2]) -> Vec<(i64, i64)> {
    let cell = |p: Point2| (p.x.floor() as i64, p.y.floor() as i64);
    let Some(&first) = points.first() else {
        return Vec::new();
    };
    let mut raw = vec![cell(first)];
    for w in points.windows(2) {
        let mut seg = Vec::new();
        scan_centres(w[0], w[1], &mut |i, j| seg.push((i, j)));
        let along_x = (w[1].x - w[0].x).abs() >= (w[1].y - w[0].y).abs();
        let reversed = if along_x { w[1].x < w[0].x } else { w[1].y < w[0].y };
        if reversed {
            seg.reverse();
        }
        raw.extend(seg);
    }
    raw.push(cell(*points.last().unwrap()));
    let mut chain: Vec<(i64, i64)> = Vec::with_capacity(raw.len());
    for p in raw {
        match chain.last() {
            Some(&q) if q == p => {}
            Some(&q) if !adjacent8(q, p) => {
                let centre = |c: (i64, i64)| Point2::new(c.0 as f64 + 0.5, c.1 as f64 + 0.5);
                let (a, b) = (centre(q), centre(p));
                let mut bridge = Vec::new();
                scan_segment(a, b, |i, j| {
                    if (i, j) != q && (i, j) != p {
                        bridge.push((i, j));
                    }
                });
                bridge.sort_by(|x, y| (centre(*x) - a).dot(b - a).total_cmp(&(centre(*y) - a).dot(b - a)));
                chain.extend(bridge);
                chain.push(p);
            }
            _ => chain.push(p),
        }
        while chain.len() >= 3 && adjacent8(chain[chain.len() - 3], chain[chain.len() - 1]) {
            let last = chain.pop().unwrap();
            chain.pop();
            chain.push(last);
        }
    }
    chain
}

/// Visits pixels whose centres lie within `half_width` of segment `ab` (pixel coordinates).
pub fn thick_segment(a: Point2, b: Point2, half_width: f64, mut visit: impl FnMut(i64, i64)) {
    let i0 = (a.x.min(b.x) - half_width - 1.0).floor() as i64;
    let i1 = (a.x.max(b.x) + half_width + 1.0).ceil() as i64;
    let j0 = (a.y.min(b.y) - half_width - 1.0).floor() as i64;
    let j1 = (a.y.max(b.y) + half_width + 1.0).ceil() as i64;
    for j in j0..=j1 {
        for i in i0..=i1 {
            let c = Point2::new(i as f64 + 0.5, j as f64 + 0.5);
            if point_segment_distance(c, a, b) <= half_width {
                visit(i, j);
            }
        }
    }
}
