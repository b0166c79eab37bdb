//! Waypoint extraction from probability maps and path scoring.

use thiserror::Error;

use crate::geom::{point_segment_distance, Point2};
use crate::raster::{PixelTransform, RasterMask};
use crate::scene::SceneSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("pixel ({0}, {1}) lies outside the map")]
    OutOfBounds(i64, i64),
    #[error("dead end at pixel ({0}, {1})")]
    DeadEnd(i64, i64),
    #[error("step limit {0} exceeded")]
    StepLimit(usize),
    #[error("invalid probability map: {0}")]
    InvalidMap(String),
}

pub type Pixel = (i64, i64);

/// Scan order N, NE, E, SE, S, SW, W, NW. North is +j, i.e. increasing world y.
pub const NEIGHBOURS: [Pixel; 8] = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)];

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    pub width: u32,
    pub height: u32,
    /// Row-major, row `j` then column `i`.
    pub values: Vec<f64>,
}

impl ProbabilityMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self, ExtractError> {
        if values.len() != width as usize * height as usize {
            return Err(ExtractError::InvalidMap(format!(
                "{} values for a {width}x{height} map",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v))) {
            return Err(ExtractError::InvalidMap(format!("value {v} outside [0, 1]")));
        }
        Ok(Self { width, height, values })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width as usize * height as usize],
        }
    }

    /// Grayscale mask with 0..=255 mapped linearly onto [0, 1].
    pub fn from_mask(mask: &RasterMask) -> Self {
        Self {
            width: mask.width,
            height: mask.height,
            values: mask.bits.iter().map(|&v| v as f64 / 255.0).collect(),
        }
    }

    pub fn in_bounds(&self, (i, j): Pixel) -> bool {
        i >= 0 && j >= 0 && i < self.width as i64 && j < self.height as i64
    }

    pub fn get(&self, p: Pixel) -> f64 {
        if self.in_bounds(p) {
            self.values[p.1 as usize * self.width as usize + p.0 as usize]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, p: Pixel, v: f64) {
        if self.in_bounds(p) {
            let w = self.width as usize;
            self.values[p.1 as usize * w + p.0 as usize] = v;
        }
    }

    /// Separable Gaussian blur, kernel truncated at 3 sigma and renormalised, zero padding.
    pub fn gaussian_blur(&self, sigma: f64) -> Self {
        if !(sigma > 0.0) {
            return self.clone();
        }
        let r = (3.0 * sigma).ceil() as i64;
        let mut k: Vec<f64> = (-r..=r).map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()).collect();
        let s: f64 = k.iter().sum();
        k.iter_mut().for_each(|v| *v /= s);
        let (w, h) = (self.width as i64, self.height as i64);
        let pass = |src: &[f64], horizontal: bool| {
            let mut out = vec![0.0; src.len()];
            for j in 0..h {
                for i in 0..w {
                    let mut acc = 0.0;
                    for (t, kv) in k.iter().enumerate() {
                        let d = t as i64 - r;
                        let (x, y) = if horizontal { (i + d, j) } else { (i, j + d) };
                        if x >= 0 && y >= 0 && x < w && y < h {
                            acc += kv * src[(y * w + x) as usize];
                        }
                    }
                    out[(j * w + i) as usize] = acc.clamp(0.0, 1.0);
                }
            }
            out
        };
        let values = pass(&pass(&self.values, true), false);
        Self {
            width: self.width,
            height: self.height,
            values,
        }
    }
}

fn is_neighbour_or_same(a: Pixel, b: Pixel) -> bool {
    (a.0 - b.0).abs() <= 1 && (a.1 - b.1).abs() <= 1
}

/// Greedy walk from `start` along the brightest unvisited 8-neighbour until the goal's
/// 8-neighbourhood is reached. The goal closes the returned sequence.
pub fn extract_waypoints(m: &ProbabilityMap, start: Pixel, goal: Pixel, max_steps: usize) -> Result<Vec<Pixel>, ExtractError> {
    for p in [start, goal] {
        if !m.in_bounds(p) {
            return Err(ExtractError::OutOfBounds(p.0, p.1));
        }
    }
    let mut path = vec![start];
    if start == goal {
        return Ok(path);
    }
    let mut visited = vec![false; m.values.len()];
    let idx = |p: Pixel| p.1 as usize * m.width as usize + p.0 as usize;
    visited[idx(start)] = true;
    let mut cur = start;
    while !is_neighbour_or_same(cur, goal) {
        if path.len() >= max_steps {
            return Err(ExtractError::StepLimit(max_steps));
        }
        let mut best: Option<(Pixel, f64)> = None;
        for (di, dj) in NEIGHBOURS {
            let q = (cur.0 + di, cur.1 + dj);
            if !m.in_bounds(q) || visited[idx(q)] {
                continue;
            }
            let v = m.get(q);
            if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                best = Some((q, v));
            }
        }
        let Some((next, _)) = best else {
            return Err(ExtractError::DeadEnd(cur.0, cur.1));
        };
        visited[idx(next)] = true;
        path.push(next);
        cur = next;
    }
    if cur != goal {
        if path.len() >= max_steps {
            return Err(ExtractError::StepLimit(max_steps));
        }
        path.push(goal);
    }
    Ok(path)
}

/// Sum of consecutive Euclidean distances.
pub fn path_cost(path: &[Point2]) -> f64 {
    path.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Pixel centres in world coordinates, with the first and last pixel replaced by the
/// exact world endpoints.
pub fn pixels_to_world(pixels: &[Pixel], tf: &PixelTransform, start: Point2, goal: Point2) -> Vec<Point2> {
    let mut out: Vec<Point2> = pixels.iter().map(|&(i, j)| tf.pixel_center(i, j)).collect();
    if let Some(f) = out.first_mut() {
        *f = start;
    }
    if out.len() > 1 {
        *out.last_mut().unwrap() = goal;
    }
    out
}

/// Douglas-Peucker simplification; keeps both endpoints.
pub fn simplify_polyline(points: &[Point2], tolerance: f64) -> Vec<Point2> {
    if points.len() < 3 {
        return points.to_vec();
    }
    let mut keep = vec![false; points.len()];
    keep[0] = true;
    keep[points.len() - 1] = true;
    let mut stack = vec![(0usize, points.len() - 1)];
    while let Some((a, b)) = stack.pop() {
        let (mut far, mut dmax) = (a, 0.0);
        for k in a + 1..b {
            let d = point_segment_distance(points[k], points[a], points[b]);
            if d > dmax {
                far = k;
                dmax = d;
            }
        }
        if dmax > tolerance {
            keep[far] = true;
            stack.push((a, far));
            stack.push((far, b));
        }
    }
    points.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| *p).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearanceReport {
    /// Smallest `distance - radius - c`; `+inf` without obstacles.
    pub min_margin: f64,
    pub violations: usize,
}

/// Sub-sampling step along each segment, world units.
pub const CLEARANCE_STEP: f64 = 0.05;
/// Margins above `-CLEARANCE_TOL` do not count as violations.
pub const CLEARANCE_TOL: f64 = 1e-9;

/// Clearance of a path against the circular obstacles of a scene.
///
/// `min_margin` uses exact segment distances; `violations` counts sub-sampled points.
pub fn verify_clearance(path: &[Point2], scene: &SceneSpec, c: f64) -> ClearanceReport {
    let mut min_margin = f64::INFINITY;
    let mut violations = 0;
    if scene.obstacles.is_empty() || path.is_empty() {
        return ClearanceReport { min_margin, violations };
    }
    let margin_at = |p: Point2| {
        scene
            .obstacles
            .iter()
            .map(|o| p.distance(o.center) - o.radius - c)
            .fold(f64::INFINITY, f64::min)
    };
    if path.len() == 1 {
        min_margin = margin_at(path[0]);
        return ClearanceReport {
            min_margin,
            violations: usize::from(min_margin < -CLEARANCE_TOL),
        };
    }
    let mut samples = vec![path[0]];
    for w in path.windows(2) {
        for o in &scene.obstacles {
            min_margin = min_margin.min(point_segment_distance(o.center, w[0], w[1]) - o.radius - c);
        }
        let k = (w[0].distance(w[1]) / CLEARANCE_STEP).ceil().max(1.0) as usize;
        samples.extend((1..=k).map(|t| w[0].lerp(w[1], t as f64 / k as f64)));
    }
    for p in samples {
        if margin_at(p) < -CLEARANCE_TOL {
            violations += 1;
        }
    }
    ClearanceReport { min_margin, violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{Obstacle, ObstacleRole};

    #[test]
    fn straight_ridge_is_followed() {
        let mut m = ProbabilityMap::zeros(20, 20);
        for i in 2..=15 {
            m.set((i, 7), 1.0);
        }
        let p = extract_waypoints(&m, (2, 7), (15, 7), 100).unwrap();
        let want: Vec<Pixel> = (2..=15).map(|i| (i, 7)).collect();
        assert_eq!(p, want);
    }

    #[test]
    fn start_equals_goal() {
        let m = ProbabilityMap::zeros(4, 4);
        assert_eq!(extract_waypoints(&m, (1, 1), (1, 1), 10).unwrap(), vec![(1, 1)]);
    }

    #[test]
    fn dead_end_and_step_limit() {
        let mut m = ProbabilityMap::zeros(20, 20);
        assert_eq!(extract_waypoints(&m, (2, 2), (15, 15), 100), Err(ExtractError::DeadEnd(2, 2)));
        for i in 2..=15 {
            m.set((i, 2), 1.0);
        }
        assert_eq!(extract_waypoints(&m, (2, 2), (15, 2), 5), Err(ExtractError::StepLimit(5)));
        assert_eq!(extract_waypoints(&m, (2, 2), (25, 2), 5), Err(ExtractError::OutOfBounds(25, 2)));
    }

    #[test]
    fn ties_follow_scan_order() {
        let m = ProbabilityMap::new(3, 3, vec![0.5; 9]).unwrap();
        let p = extract_waypoints(&m, (1, 1), (1, 1), 10).unwrap();
        assert_eq!(p, vec![(1, 1)]);
        let m = ProbabilityMap::new(5, 5, vec![0.5; 25]).unwrap();
        let p = extract_waypoints(&m, (2, 0), (2, 4), 10).unwrap();
        assert_eq!(p[1], (2, 1), "N wins the tie");
    }

    #[test]
    fn map_validation() {
        assert!(ProbabilityMap::new(2, 1, vec![0.0, 1.5]).is_err());
        assert!(ProbabilityMap::new(2, 1, vec![0.0]).is_err());
        assert!(ProbabilityMap::new(2, 1, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn blur_preserves_mass_in_interior() {
        let mut m = ProbabilityMap::zeros(21, 21);
        m.set((10, 10), 1.0);
        let b = m.gaussian_blur(1.0);
        let total: f64 = b.values.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(b.get((10, 10)) > b.get((11, 10)) && b.get((11, 10)) > b.get((11, 11)));
        assert!(b.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn costs() {
        assert_eq!(path_cost(&[Point2::new(1.0, 1.0)]), 0.0);
        assert_eq!(path_cost(&[Point2::new(0.0, 0.0), Point2::new(3.0, 4.0)]), 5.0);
    }

    #[test]
    fn simplify_removes_staircase() {
        let pts: Vec<Point2> = (0..20)
            .map(|k| Point2::new(((k + 1) / 2) as f64, (k / 2) as f64))
            .collect();
        let s = simplify_polyline(&pts, 0.75);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0], pts[0]);
        assert_eq!(s[1], pts[19]);
    }

    #[test]
    fn clearance_reports() {
        let mut scene = SceneSpec::empty([64.0, 64.0], Point2::new(1.0, 1.0), Point2::new(60.0, 1.0), 1.0);
        let path = [Point2::new(0.0, 10.0), Point2::new(20.0, 10.0)];
        let r = verify_clearance(&path, &scene, 1.0);
        assert_eq!(r.min_margin, f64::INFINITY);
        assert_eq!(r.violations, 0);
        scene.obstacles.push(Obstacle::new(2.0, Point2::new(10.0, 10.0), ObstacleRole::Filler));
        let r = verify_clearance(&path, &scene, 1.0);
        assert!(r.violations > 0);
        assert!((r.min_margin + 3.0).abs() < 1e-12);
        scene.obstacles[0].center = Point2::new(10.0, 13.0);
        let r = verify_clearance(&path, &scene, 1.0);
        assert_eq!(r.violations, 0);
        assert!(r.min_margin.abs() < 1e-12);
    }
}
