//! Planar geometry shared by the generator, the planners and the validators.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numerical tolerances used across the crate.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Relative cross-product threshold below which three points count as collinear.
    pub collinear_rel: f64,
    /// Absolute slack allowed on clearance checks after rigid transforms.
    pub clearance_abs: f64,
    /// Cost agreement required between a stored cost and its recomputed polyline length.
    pub cost_abs: f64,
    /// Widths below this are treated as zero when building subspaces.
    pub min_width: f64,
}

pub const TOL: Tolerances = Tolerances {
    collinear_rel: 1e-10,
    clearance_abs: 1e-9,
    cost_abs: 1e-6,
    min_width: 1e-9,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
}

/// A point (or free vector) in world units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn from_angle(a: f64) -> Point2 {
        let (s, c) = a.sin_cos();
        Point2::new(c, s)
    }

    pub fn rotated(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point2 {
    fn add_assign(&mut self, o: Point2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Rigid planar transform: rotate about the origin, then translate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub angle: f64,
    pub translation: Point2,
}

impl Default for Pose2 {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Pose2 {
    pub const IDENTITY: Pose2 = Pose2 {
        angle: 0.0,
        translation: Point2::ZERO,
    };

    pub fn new(angle: f64, translation: Point2) -> Self {
        Self {
            angle: normalize_angle(angle),
            translation,
        }
    }

    /// Row-major 2x2 rotation matrix.
    pub fn rotation(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.angle.sin_cos();
        [[c, -s], [s, c]]
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        p.rotated(self.angle) + self.translation
    }

    /// Rotation only, for direction vectors.
    pub fn apply_vector(&self, v: Point2) -> Point2 {
        v.rotated(self.angle)
    }

    pub fn inverse(&self) -> Pose2 {
        Pose2::new(-self.angle, -self.translation.rotated(-self.angle))
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn compose(&self, inner: &Pose2) -> Pose2 {
        Pose2::new(self.angle + inner.angle, self.apply(inner.translation))
    }
}

pub fn apply_pose(points: &[Point2], pose: &Pose2) -> Vec<Point2> {
    points.iter().map(|&p| pose.apply(p)).collect()
}

/// Convex hull with counter-clockwise vertices and their indices in the input.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexHull {
    pub vertices: Vec<Point2>,
    pub source_indices: Vec<usize>,
}

impl ConvexHull {
    /// True when `p` lies inside or on the hull, up to `eps` (world units).
    pub fn contains(&self, p: Point2, eps: f64) -> bool {
        let m = self.vertices.len();
        (0..m).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % m];
            let e = b - a;
            e.cross(p - a) >= -eps * e.norm()
        })
    }
}

/// Andrew's monotone chain. Collinear boundary points are dropped.
pub fn convex_hull(points: &[Point2]) -> Result<ConvexHull, GeomError> {
    if points.len() < 3 {
        return Err(GeomError::DegenerateInput("fewer than 3 points"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeomError::DegenerateInput("non-finite coordinate"));
    }
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        let (p, q) = (points[a], points[b]);
        p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y))
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() < 3 {
        return Err(GeomError::DegenerateInput("fewer than 3 distinct points"));
    }

    let (lo, hi) = (points[idx[0]], points[*idx.last().unwrap()]);
    let scale = lo.distance(hi).max(f64::MIN_POSITIVE);
    let eps = TOL.collinear_rel * scale * scale;
    let turns_left = |o: usize, a: usize, b: usize| {
        (points[a] - points[o]).cross(points[b] - points[o]) > eps
    };

    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for &i in &idx {
        while hull.len() >= 2 && !turns_left(hull[hull.len() - 2], hull[hull.len() - 1], i) {
            hull.pop();
        }
        hull.push(i);
    }
    let lower_len = hull.len() + 1;
    for &i in idx.iter().rev().skip(1) {
        while hull.len() >= lower_len && !turns_left(hull[hull.len() - 2], hull[hull.len() - 1], i) {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();

    if hull.len() < 3 {
        return Err(GeomError::DegenerateInput("all points collinear"));
    }
    Ok(ConvexHull {
        vertices: hull.iter().map(|&i| points[i]).collect(),
        source_indices: hull,
    })
}

pub fn polyline_length(points: &[Point2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Resamples a polyline into `n` points equally spaced in arc length along it.
pub fn resample_equal_arclength(dense: &[Point2], n: usize) -> Result<Vec<Point2>, GeomError> {
    if dense.len() < 2 || n < 2 {
        return Err(GeomError::DegenerateInput("need at least two points"));
    }
    let mut cum = Vec::with_capacity(dense.len());
    cum.push(0.0);
    for w in dense.windows(2) {
        cum.push(cum.last().unwrap() + w[0].distance(w[1]));
    }
    let total = *cum.last().unwrap();
    if !(total > 0.0) || !total.is_finite() {
        return Err(GeomError::DegenerateInput("zero-length polyline"));
    }

    let mut out = Vec::with_capacity(n);
    out.push(dense[0]);
    let mut seg = 0;
    for k in 1..n - 1 {
        let target = total * k as f64 / (n - 1) as f64;
        while cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
        out.push(dense[seg].lerp(dense[seg + 1], t));
    }
    out.push(*dense.last().unwrap());
    Ok(out)
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (p - a).dot(ab) / len2;
    if t <= 0.0 {
        p.distance(a)
    } else if t >= 1.0 {
        p.distance(b)
    } else {
        ab.cross(p - a).abs() / len2.sqrt()
    }
}

/// Exact minimum distance from `p` to a polyline. A single point is treated as a polyline.
pub fn point_polyline_distance(p: Point2, polyline: &[Point2]) -> f64 {
    match polyline {
        [] => f64::INFINITY,
        [q] => p.distance(*q),
        _ => polyline
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Minimum distance between segments `ab` and `cd`.
pub fn segment_segment_distance(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    let d1 = b - a;
    let d2 = d - c;
    let denom = d1.cross(d2);
    if denom != 0.0 {
        let t = (c - a).cross(d2) / denom;
        let u = (c - a).cross(d1) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            return 0.0;
        }
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// `true` iff two non-adjacent segments of the polyline touch or cross.
pub fn polyline_self_intersects(points: &[Point2]) -> bool {
    let n = points.len();
    if n < 4 {
        return false;
    }
    let bbox = |k: usize| {
        let (a, b) = (points[k], points[k + 1]);
        (a.x.min(b.x), a.x.max(b.x), a.y.min(b.y), a.y.max(b.y))
    };
    for i in 0..n - 1 {
        let bi = bbox(i);
        for j in i + 2..n - 1 {
            let bj = bbox(j);
            if bi.1 < bj.0 || bj.1 < bi.0 || bi.3 < bj.2 || bj.3 < bi.2 {
                continue;
            }
            if segment_segment_distance(points[i], points[i + 1], points[j], points[j + 1]) == 0.0 {
                return true;
            }
        }
    }
    false
}
