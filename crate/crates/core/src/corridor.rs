//! Clearance corridor ("space of the path"): offset boundaries, end caps and the
//! filled free-space mask.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{normalize_angle, Point2, Pose2};
use crate::pathgen::PathPolyline;
use crate::raster::{scan_segment, thin_polyline, RasterConfig, RasterMask};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorridorError {
    #[error("clearance must be positive, got {0}")]
    InvalidClearance(f64),
    #[error("point ({x:.3}, {y:.3}) lies outside the raster")]
    OutOfRaster { x: f64, y: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorBoundary {
    /// Offsets on the left-hand side of the direction of travel.
    pub upper: Vec<Point2>,
    pub lower: Vec<Point2>,
    /// Arc from `upper[0]` round the back of the start point to `lower[0]`.
    pub start_cap: Vec<Point2>,
    /// Arc from the last upper point round the front of the goal to the last lower point.
    pub end_cap: Vec<Point2>,
    pub start: Point2,
    pub end: Point2,
    pub clearance: f64,
}

impl CorridorBoundary {
    pub fn points(&self) -> impl Iterator<Item = Point2> + '_ {
        self.upper
            .iter()
            .chain(&self.lower)
            .chain(&self.start_cap)
            .chain(&self.end_cap)
            .copied()
    }

    pub fn transformed(&self, pose: &Pose2) -> CorridorBoundary {
        let tf = |v: &[Point2]| v.iter().map(|&p| pose.apply(p)).collect();
        CorridorBoundary {
            upper: tf(&self.upper),
            lower: tf(&self.lower),
            start_cap: tf(&self.start_cap),
            end_cap: tf(&self.end_cap),
            start: pose.apply(self.start),
            end: pose.apply(self.end),
            clearance: self.clearance,
        }
    }
}

/// `cap_samples` points on the circle of radius `c` about `center`, sweeping half a turn
/// from `from` towards `outward`.
fn cap_arc(center: Point2, from: Point2, to: Point2, outward: Point2, c: f64, cap_samples: usize) -> Vec<Point2> {
    let t = from - center;
    let t2 = to - center;
    let sweep = t.cross(t2).abs().atan2(t.dot(t2));
    let sign = if t.cross(outward) >= 0.0 { 1.0 } else { -1.0 };
    let dir = t.normalized().expect("clearance is positive");
    let last = (cap_samples - 1) as f64;
    (0..cap_samples)
        .map(|j| {
            if j == cap_samples - 1 {
                to
            } else {
                center + dir.rotated(sign * sweep * j as f64 / last) * c
            }
        })
        .collect()
}

pub fn calcu_boundary(
    path: &PathPolyline,
    c: f64,
    cap_samples: usize,
) -> Result<CorridorBoundary, CorridorError> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(CorridorError::InvalidClearance(c));
    }
    let normals: Vec<Point2> = path.tangents.iter().map(|t| t.perp()).collect();
    let upper: Vec<Point2> = path.points.iter().zip(&normals).map(|(&p, &n)| p + n * c).collect();
    let lower: Vec<Point2> = path.points.iter().zip(&normals).map(|(&p, &n)| p - n * c).collect();
    let (start, end) = (path.start(), path.goal());
    let start_cap = cap_arc(start, upper[0], lower[0], -path.tangents[0], c, cap_samples);
    let end_cap = cap_arc(
        end,
        *upper.last().unwrap(),
        *lower.last().unwrap(),
        *path.tangents.last().unwrap(),
        c,
        cap_samples,
    );
    Ok(CorridorBoundary {
        upper,
        lower,
        start_cap,
        end_cap,
        start,
        end,
        clearance: c,
    })
}

fn check_inside(p: Point2, cfg: &RasterConfig) -> Result<(), CorridorError> {
    if p.x >= 0.0 && p.y >= 0.0 && p.x < cfg.world[0] && p.y < cfg.world[1] {
        Ok(())
    } else {
        Err(CorridorError::OutOfRaster { x: p.x, y: p.y })
    }
}

/// Fills the corridor by setting free every pixel between paired boundary points.
///
/// Pairs are interpolated so that neighbouring pair segments are at most half a pixel
/// apart at either end, which leaves no pinholes on the outside of tight bends.
pub fn rasterize_corridor(boundary: &CorridorBoundary, cfg: &RasterConfig) -> Result<RasterMask, CorridorError> {
    for p in boundary.points() {
        check_inside(p, cfg)?;
    }
    let mut mask = RasterMask::black(cfg);
    let tf = cfg.transform();
    let px = |p: Point2| tf.to_pixel(p);

    let m = boundary.upper.len();
    for j in 0..m {
        let (u0, l0) = (px(boundary.upper[j]), px(boundary.lower[j]));
        if j + 1 == m {
            fill_segment(&mut mask, u0, l0);
            break;
        }
        let (u1, l1) = (px(boundary.upper[j + 1]), px(boundary.lower[j + 1]));
        let gap = u0.distance(u1).max(l0.distance(l1));
        let steps = (2.0 * gap).ceil().max(1.0) as usize;
        for s in 0..steps {
            let t = s as f64 / steps as f64;
            fill_segment(&mut mask, u0.lerp(u1, t), l0.lerp(l1, t));
        }
    }

    for (center, cap) in [(boundary.start, &boundary.start_cap), (boundary.end, &boundary.end_cap)] {
        let cp = px(center);
        let radius_px = cap
            .first()
            .map(|&p| px(p).distance(cp))
            .unwrap_or(0.0);
        for w in cap.windows(2) {
            let (a0, a1) = ((px(w[0]) - cp).angle(), (px(w[1]) - cp).angle());
            let da = normalize_angle(a1 - a0);
            let steps = (2.0 * da.abs() * radius_px).ceil().max(1.0) as usize;
            for s in 0..=steps {
                let rim = cp + Point2::from_angle(a0 + da * s as f64 / steps as f64) * radius_px;
                fill_segment(&mut mask, cp, rim);
            }
        }
    }
    Ok(mask)
}

/// Frees the pixels of [`scan_segment`] whose centres project onto `ab`, so a pixel the
/// segment merely clips at its end is left out.
fn fill_segment(mask: &mut RasterMask, a: Point2, b: Point2) {
    let d = b - a;
    let len2 = d.dot(d);
    scan_segment(a, b, |i, k| {
        let t = if len2 > 0.0 {
            (Point2::new(i as f64 + 0.5, k as f64 + 0.5) - a).dot(d) / len2
        } else {
            0.0
        };
        if (0.0..=1.0).contains(&t) {
            mask.set_free(i, k);
        }
    });
}

/// One-pixel-wide 8-connected line through the waypoints.
pub fn rasterize_waypoints(path: &PathPolyline, cfg: &RasterConfig) -> Result<RasterMask, CorridorError> {
    for &p in &path.points {
        check_inside(p, cfg)?;
    }
    let mut mask = RasterMask::black(cfg);
    let tf = cfg.transform();
    if path.points.len() == 1 {
        let (i, j) = tf.containing_pixel(path.points[0]);
        mask.set_free(i, j);
        return Ok(mask);
    }
    let px: Vec<Point2> = path.points.iter().map(|&p| tf.to_pixel(p)).collect();
    for (i, j) in thin_polyline(&px) {
        mask.set_free(i, j);
    }
    Ok(mask)
}
