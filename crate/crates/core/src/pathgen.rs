//! Random paths built from concatenated power-basis polynomial curves.
//!
//! Each curve is the least-squares fit of a degree-`order` polynomial to points drawn
//! uniformly from a box. Curves are sampled at equal chord spacing, then rotated and
//! translated so that every curve starts where the previous one ended, heading the same way.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{polyline_length, polyline_self_intersects, resample_equal_arclength, Point2, Pose2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathGenError {
    #[error("polynomial fit is numerically singular")]
    SingularFit,
    #[error("path generation failed after {0} attempts")]
    GenerationFailed(usize),
    #[error("invalid path configuration: {0}")]
    InvalidConfig(String),
    #[error("curve domain too short for {steps} steps of {spacing}")]
    SegmentTooShort { steps: usize, spacing: f64 },
}

/// `y = sum coeffs[k] * x^k` over `domain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolySegment {
    pub coeffs: Vec<f64>,
    pub domain: (f64, f64),
}

impl PolySegment {
    pub fn new(coeffs: Vec<f64>, domain: (f64, f64)) -> Self {
        Self { coeffs, domain }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &w| acc * x + w)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &w)| acc * x + k as f64 * w)
    }

    pub fn point(&self, x: f64) -> Point2 {
        Point2::new(x, self.eval(x))
    }

    /// Unit tangent in the curve's own frame.
    pub fn tangent(&self, x: f64) -> Point2 {
        Point2::new(1.0, self.derivative(x)).normalized().expect("finite slope")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathGenConfig {
    pub order: usize,
    pub curves: usize,
    pub points_per_curve: usize,
    pub cap_samples: usize,
    pub fit_sample_count: usize,
    pub fit_box: [f64; 2],
    /// Chord length walked along each curve; fixes the waypoint spacing.
    pub curve_length: f64,
    pub seed: u64,
}

impl Default for PathGenConfig {
    fn default() -> Self {
        Self {
            order: 5,
            curves: 3,
            points_per_curve: 64,
            cap_samples: 16,
            fit_sample_count: 12,
            fit_box: [20.0, 20.0],
            curve_length: 13.0,
            seed: 0,
        }
    }
}

impl PathGenConfig {
    pub fn validate(&self) -> Result<(), PathGenError> {
        let bad = |m: &str| Err(PathGenError::InvalidConfig(m.to_string()));
        if self.order < 1 {
            return bad("order must be >= 1");
        }
        if self.curves < 1 {
            return bad("curves must be >= 1");
        }
        if self.points_per_curve < 2 {
            return bad("points_per_curve must be >= 2");
        }
        if self.cap_samples < 4 {
            return bad("cap_samples must be >= 4");
        }
        if self.fit_sample_count < self.order + 1 {
            return bad("fit_sample_count must be >= order + 1");
        }
        if !(self.fit_box[0] > 0.0 && self.fit_box[1] > 0.0) {
            return bad("fit_box must be positive");
        }
        if !(self.curve_length > 0.0 && self.curve_length <= self.fit_box[0]) {
            return bad("curve_length must be in (0, fit_box width]");
        }
        Ok(())
    }

    /// Waypoint spacing of generated paths.
    pub fn spacing(&self) -> f64 {
        self.curve_length / self.points_per_curve as f64
    }
}

/// Ordered, equally spaced waypoints of a path together with its analytic pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPolyline {
    pub points: Vec<Point2>,
    /// Unit tangent at each waypoint, in the same frame as `points`.
    pub tangents: Vec<Point2>,
    pub spacing: f64,
    /// Curve-frame to path-frame transform of each curve.
    pub segment_poses: Vec<Pose2>,
    /// The curves, each trimmed to the domain actually walked.
    pub segments: Vec<PolySegment>,
    pub segment_count: usize,
}

impl PathPolyline {
    pub fn start(&self) -> Point2 {
        self.points[0]
    }

    pub fn goal(&self) -> Point2 {
        *self.points.last().unwrap()
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.points)
    }

    pub fn transformed(&self, pose: &Pose2) -> PathPolyline {
        PathPolyline {
            points: self.points.iter().map(|&p| pose.apply(p)).collect(),
            tangents: self.tangents.iter().map(|&t| pose.apply_vector(t)).collect(),
            spacing: self.spacing,
            segment_poses: self.segment_poses.iter().map(|sp| pose.compose(sp)).collect(),
            segments: self.segments.clone(),
            segment_count: self.segment_count,
        }
    }

    /// Largest positional gap between consecutive curves at their shared endpoint.
    pub fn max_junction_gap(&self) -> f64 {
        self.junctions().map(|(gap, _)| gap).fold(0.0, f64::max)
    }

    /// Largest tangent direction mismatch (radians) between consecutive curves.
    pub fn max_junction_tangent_mismatch(&self) -> f64 {
        self.junctions().map(|(_, ang)| ang).fold(0.0, f64::max)
    }

    fn junctions(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (1..self.segments.len()).map(move |i| {
            let (prev, next) = (&self.segments[i - 1], &self.segments[i]);
            let (pp, np) = (&self.segment_poses[i - 1], &self.segment_poses[i]);
            let end = pp.apply(prev.point(prev.domain.1));
            let start = np.apply(next.point(next.domain.0));
            let t_end = pp.apply_vector(prev.tangent(prev.domain.1));
            let t_start = np.apply_vector(next.tangent(next.domain.0));
            let ang = t_end.cross(t_start).atan2(t_end.dot(t_start)).abs();
            (end.distance(start), ang)
        })
    }

    /// (max - min) / mean of consecutive waypoint distances.
    pub fn spacing_spread(&self) -> f64 {
        let d: Vec<f64> = self.points.windows(2).map(|w| w[0].distance(w[1])).collect();
        if d.is_empty() {
            return 0.0;
        }
        let max = d.iter().cloned().fold(f64::MIN, f64::max);
        let min = d.iter().cloned().fold(f64::MAX, f64::min);
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        (max - min) / mean
    }
}

/// Least-squares power-basis fit. `None` when the design matrix is rank deficient.
pub fn fit_polynomial(xs: &[f64], ys: &[f64], order: usize) -> Option<Vec<f64>> {
    let m = xs.len();
    let cols = order + 1;
    if m < cols || ys.len() != m {
        return None;
    }
    // Column scaling keeps the Vandermonde matrix well conditioned.
    let xmax = xs.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    let a = DMatrix::from_fn(m, cols, |i, k| (xs[i] / xmax).powi(k as i32));
    let b = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin / smax < 1e-12 {
        return None;
    }
    let sol = svd.solve(&b, 0.0).ok()?;
    Some((0..cols).map(|k| sol[k] / xmax.powi(k as i32)).collect())
}

pub fn random_poly_segment<R: Rng + ?Sized>(
    cfg: &PathGenConfig,
    rng: &mut R,
) -> Result<PolySegment, PathGenError> {
    let [w, h] = cfg.fit_box;
    for _ in 0..10 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = (0..cfg.fit_sample_count)
            .map(|_| (rng.gen_range(-w / 2.0..w / 2.0), rng.gen_range(-h / 2.0..h / 2.0)))
            .unzip();
        if let Some(coeffs) = fit_polynomial(&xs, &ys, cfg.order) {
            // The fit is only trusted over the span of its samples.
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            return Ok(PolySegment::new(coeffs, (lo, hi)));
        }
    }
    Err(PathGenError::SingularFit)
}

/// Smallest `x > x0` with `|p(x) - p(x0)| = chord`, found by bisection on `(x0, x0 + chord]`.
fn next_chord_x(seg: &PolySegment, x0: f64, chord: f64) -> f64 {
    let p0 = seg.point(x0);
    let (mut lo, mut hi) = (x0, x0 + chord);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if seg.point(mid).distance(p0) < chord {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// x-coordinates of `steps` successive equal chords of length `chord`, starting at `x0`.
fn chord_walk(seg: &PolySegment, x0: f64, chord: f64, steps: usize) -> Vec<f64> {
    let mut xs = Vec::with_capacity(steps + 1);
    xs.push(x0);
    for _ in 0..steps {
        let x = next_chord_x(seg, *xs.last().unwrap(), chord);
        xs.push(x);
    }
    xs
}

fn walk_fits(seg: &PolySegment, spacing: f64, steps: usize) -> bool {
    let mut x = seg.domain.0;
    for _ in 0..steps {
        x = next_chord_x(seg, x, spacing);
        if x > seg.domain.1 {
            return false;
        }
    }
    true
}

/// Samples `n` points over the full domain with equal chord spacing.
///
/// Returns the points (exactly on the curve) and the analytic slope at each.
pub fn sample_segment(seg: &PolySegment, n: usize) -> (Vec<Point2>, Vec<f64>) {
    assert!(n >= 2, "need at least two samples");
    let (a, b) = seg.domain;
    let dense: Vec<Point2> = (0..=1024)
        .map(|i| seg.point(a + (b - a) * i as f64 / 1024.0))
        .collect();
    let arc = polyline_length(&dense);
    // Arc-length resampling gives the starting bracket; bisection on the chord length
    // then makes the walk land on the domain end.
    let guess = resample_equal_arclength(&dense, n).expect("non-degenerate domain");
    let guess_chord = guess
        .windows(2)
        .map(|w| w[0].distance(w[1]))
        .fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (guess_chord * 0.5, arc / (n - 1) as f64 * 1.0001);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let end = *chord_walk(seg, a, mid, n - 1).last().unwrap();
        if end < b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut xs = chord_walk(seg, a, 0.5 * (lo + hi), n - 1);
    *xs.last_mut().unwrap() = b;
    let pts = xs.iter().map(|&x| seg.point(x)).collect();
    let grads = xs.iter().map(|&x| seg.derivative(x)).collect();
    (pts, grads)
}

/// Chains curves into one path with spacing `spacing`.
///
/// The first curve contributes `n` waypoints starting at its domain start; every
/// further curve is posed so its start coincides with, and is tangent to, the end of
/// the previous curve, and contributes `n` further waypoints. Curve domains are
/// trimmed to what was walked.
pub fn concat_segments(
    segments: &[PolySegment],
    spacing: f64,
    n: usize,
) -> Result<PathPolyline, PathGenError> {
    if segments.is_empty() {
        return Err(PathGenError::InvalidConfig("no segments".into()));
    }
    let mut points = Vec::with_capacity(segments.len() * n);
    let mut tangents = Vec::with_capacity(segments.len() * n);
    let mut poses = Vec::with_capacity(segments.len());
    let mut trimmed = Vec::with_capacity(segments.len());
    let mut heading = 0.0;
    let mut end_point = Point2::ZERO;

    for (i, seg) in segments.iter().enumerate() {
        let steps = if i == 0 { n - 1 } else { n };
        let x0 = seg.domain.0;
        let xs = chord_walk(seg, x0, spacing, steps);
        let x_end = *xs.last().unwrap();
        if x_end > seg.domain.1 + 1e-9 * spacing {
            return Err(PathGenError::SegmentTooShort { steps, spacing });
        }
        let pose = if i == 0 {
            Pose2::IDENTITY
        } else {
            let alpha = heading - seg.tangent(x0).angle();
            let rotated_start = seg.point(x0).rotated(alpha);
            Pose2::new(alpha, end_point - rotated_start)
        };
        let skip = usize::from(i > 0);
        for &x in &xs[skip..] {
            points.push(pose.apply(seg.point(x)));
            tangents.push(pose.apply_vector(seg.tangent(x)));
        }
        let t_end = pose.apply_vector(seg.tangent(x_end));
        heading = t_end.angle();
        end_point = pose.apply(seg.point(x_end));
        poses.push(pose);
        trimmed.push(PolySegment::new(seg.coeffs.clone(), (x0, x_end)));
    }

    Ok(PathPolyline {
        points,
        tangents,
        spacing,
        segment_poses: poses,
        segments: trimmed,
        segment_count: segments.len(),
    })
}

/// Generates a random path of `curves * points_per_curve` waypoints.
///
/// A path that crosses itself is redrawn.
pub fn generate_path<R: Rng + ?Sized>(
    cfg: &PathGenConfig,
    rng: &mut R,
) -> Result<PathPolyline, PathGenError> {
    cfg.validate()?;
    const ATTEMPTS: usize = 50;
    let spacing = cfg.spacing();
    for _ in 0..ATTEMPTS {
        let mut segments = Vec::with_capacity(cfg.curves);
        for i in 0..cfg.curves {
            let steps = if i == 0 { cfg.points_per_curve - 1 } else { cfg.points_per_curve };
            let seg = (0..ATTEMPTS)
                .filter_map(|_| random_poly_segment(cfg, rng).ok())
                .find(|seg| walk_fits(seg, spacing, steps))
                .ok_or(PathGenError::GenerationFailed(ATTEMPTS))?;
            segments.push(seg);
        }
        let path = concat_segments(&segments, spacing, cfg.points_per_curve)?;
        if !polyline_self_intersects(&path.points) {
            return Ok(path);
        }
    }
    Err(PathGenError::GenerationFailed(ATTEMPTS))
}
