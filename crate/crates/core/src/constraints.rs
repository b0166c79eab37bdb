//! Constraint obstacles: circles packed into the concave pockets between a path and its
//! convex hull, so that shortcuts across the pockets are blocked.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{convex_hull, point_polyline_distance, Point2};
use crate::pathgen::PathPolyline;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintError {
    #[error("subspace chord has zero length")]
    DegenerateSubspace,
    #[error("placement stalled after {0} consecutive rejections")]
    PlacementStalled(usize),
}

/// Rejections in a row after which a subspace is given up.
pub const MAX_CONSECUTIVE_REJECTIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleRole {
    Constraint,
    Filler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub radius: f64,
    pub center: Point2,
    pub role: ObstacleRole,
}

impl Obstacle {
    pub fn new(radius: f64, center: Point2, role: ObstacleRole) -> Self {
        Self { radius, center, role }
    }

    pub fn is_valid(&self) -> bool {
        self.radius > 0.0 && self.radius.is_finite() && self.center.is_finite()
    }
}

/// A pocket between a long hull edge `h_f -> h_g` and the waypoints it skips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    pub boundary: Vec<Point2>,
    pub anchor_f: Point2,
    pub anchor_g: Point2,
    /// Waypoint indices of the two anchors, `u < v`.
    pub u: usize,
    pub v: usize,
    pub dir_z: Point2,
    pub dir_n: Point2,
    pub width: f64,
}

/// Hull edges longer than `gap_threshold`, each with the waypoints strictly between the
/// indices of its two endpoints. The last hull vertex pairs with the first.
pub fn find_subspaces(path: &PathPolyline, gap_threshold: f64) -> Vec<Subspace> {
    let Ok(hull) = convex_hull(&path.points) else {
        return Vec::new();
    };
    let m = hull.vertices.len();
    let mut out = Vec::new();
    for f in 0..m {
        let g = if f == m - 1 { 0 } else { f + 1 };
        let (hf, hg) = (hull.vertices[f], hull.vertices[g]);
        if hf.distance(hg) <= gap_threshold {
            continue;
        }
        let (a, b) = (hull.source_indices[f], hull.source_indices[g]);
        let (u, v) = (a.min(b), a.max(b));
        if v <= u + 1 {
            continue;
        }
        let mut s = Subspace {
            boundary: path.points[u + 1..v].to_vec(),
            anchor_f: hf,
            anchor_g: hg,
            u,
            v,
            dir_z: Point2::ZERO,
            dir_n: Point2::ZERO,
            width: 0.0,
        };
        match subspace_frame(&s) {
            Ok((z, n, w)) if w > 0.0 => {
                s.dir_z = z;
                s.dir_n = n;
                s.width = w;
                out.push(s);
            }
            _ => {}
        }
    }
    out
}

/// Chord direction, inward normal and depth of a subspace.
///
/// The normal is flipped, if needed, to point at the centroid of the boundary points.
pub fn subspace_frame(s: &Subspace) -> Result<(Point2, Point2, f64), ConstraintError> {
    let z = (s.anchor_f - s.anchor_g)
        .normalized()
        .ok_or(ConstraintError::DegenerateSubspace)?;
    let mut n = Point2::new(z.y, -z.x);
    if !s.boundary.is_empty() {
        let k = s.boundary.len() as f64;
        let mean = s.boundary.iter().fold(Point2::ZERO, |acc, &p| acc + p) * (1.0 / k);
        if (mean - s.anchor_f).dot(n) < 0.0 {
            n = -n;
        }
    }
    let w = s
        .boundary
        .iter()
        .map(|&p| (p - s.anchor_f).dot(n).abs())
        .fold(0.0, f64::max);
    Ok((z, n, w))
}

/// `true` iff the obstacle keeps at least `c` from every point of the path.
pub fn collision_free(path: &PathPolyline, obstacle: &Obstacle, c: f64) -> bool {
    point_polyline_distance(obstacle.center, &path.points) >= obstacle.radius + c
}

/// Chain of circles for one subspace. Partial chains are returned together with the
/// stall error when too many candidates in a row collide with the path.
pub fn place_in_subspace<R: Rng + ?Sized>(
    path: &PathPolyline,
    c: f64,
    s: &Subspace,
    rng: &mut R,
) -> (Vec<Obstacle>, Option<ConstraintError>) {
    let mut chain: Vec<Obstacle> = Vec::new();
    let mut size = 0.0;
    let mut rejections = 0;
    let origin = s.anchor_f.lerp(s.anchor_g, 0.5);
    while size < 2.0 * s.width {
        let radius = 2.0 * s.width * (1.0 - rng.gen::<f64>());
        let eps_n = 1.0 - rng.gen::<f64>();
        let eps_z = rng.gen_range(-1.0..=1.0);
        let (t_n, prev) = match chain.last() {
            None => (c, origin),
            Some(o) => (eps_n * (radius + o.radius), o.center),
        };
        let t_z = eps_z * radius;
        let center = prev + s.dir_n * t_n + s.dir_z * t_z;
        let cand = Obstacle::new(radius, center, ObstacleRole::Constraint);
        if collision_free(path, &cand, c) {
            chain.push(cand);
            size += 2.0 * radius;
            rejections = 0;
        } else {
            rejections += 1;
            if rejections >= MAX_CONSECUTIVE_REJECTIONS {
                return (chain, Some(ConstraintError::PlacementStalled(rejections)));
            }
        }
    }
    (chain, None)
}

/// Constraint obstacles for every subspace, in subspace order.
pub fn place_constraint_obstacles<R: Rng + ?Sized>(
    path: &PathPolyline,
    c: f64,
    subspaces: &[Subspace],
    rng: &mut R,
) -> Vec<Obstacle> {
    let mut out = Vec::new();
    for (k, s) in subspaces.iter().enumerate() {
        let (chain, err) = place_in_subspace(path, c, s, rng);
        if let Some(e) = err {
            log::debug!("subspace {k}: {e}; keeping {} obstacles", chain.len());
        }
        out.extend(chain);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{segment_segment_distance, Pose2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn polyline(points: Vec<Point2>) -> PathPolyline {
        let n = points.len();
        let spacing = points[0].distance(points[1]);
        PathPolyline {
            tangents: vec![Point2::new(1.0, 0.0); n],
            points,
            spacing,
            segment_poses: vec![Pose2::IDENTITY],
            segments: Vec::new(),
            segment_count: 1,
        }
    }

    fn line(a: Point2, b: Point2, step: f64) -> Vec<Point2> {
        let k = (a.distance(b) / step).round() as usize;
        (0..=k).map(|i| a.lerp(b, i as f64 / k as f64)).collect()
    }

    /// Legs down x = 0 and x = 20 joined along y = 0, open towards +y, depth 30.
    fn u_shape() -> PathPolyline {
        let mut pts = line(Point2::new(0.0, 30.0), Point2::new(0.0, 0.0), 0.5);
        pts.pop();
        let mut base = line(Point2::new(0.0, 0.0), Point2::new(20.0, 0.0), 0.5);
        base.pop();
        pts.extend(base);
        pts.extend(line(Point2::new(20.0, 0.0), Point2::new(20.0, 30.0), 0.5));
        polyline(pts)
    }

    #[test]
    fn straight_path_has_no_subspace() {
        let p = polyline(line(Point2::new(0.0, 0.0), Point2::new(30.0, 0.0), 0.5));
        assert!(find_subspaces(&p, 1.5).is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(place_constraint_obstacles(&p, 1.0, &[], &mut rng).is_empty());
    }

    #[test]
    fn u_shape_has_one_subspace_across_opening() {
        let p = u_shape();
        let subs = find_subspaces(&p, 1.5);
        assert_eq!(subs.len(), 1);
        let s = &subs[0];
        let ends = [Point2::new(0.0, 30.0), Point2::new(20.0, 30.0)];
        assert!(ends.contains(&s.anchor_f) && ends.contains(&s.anchor_g));
        assert_eq!((s.u, s.v), (0, p.points.len() - 1));
        assert_eq!(s.boundary.len(), p.points.len() - 2);
        assert!(s.dir_z.x.abs() > 1.0 - 1e-12 && s.dir_z.y.abs() < 1e-12);
        assert!((s.dir_n.y + 1.0).abs() < 1e-12, "normal points down into the U");
        assert!((s.width - 30.0).abs() < 1e-9);
        assert!(s.dir_z.dot(s.dir_n).abs() <= 1e-12);
    }

    #[test]
    fn boundary_points_lie_beyond_the_chord() {
        let p = u_shape();
        for s in find_subspaces(&p, 1.5) {
            for &b in &s.boundary {
                let depth = (b - s.anchor_f).dot(s.dir_n);
                let along = (b - s.anchor_g).dot(s.dir_z);
                let chord = s.anchor_f.distance(s.anchor_g);
                assert!(depth > 0.0 || (along > 0.0 && along < chord));
            }
        }
    }

    #[test]
    fn frame_rejects_coincident_anchors() {
        let s = Subspace {
            boundary: vec![Point2::new(1.0, 1.0)],
            anchor_f: Point2::new(2.0, 2.0),
            anchor_g: Point2::new(2.0, 2.0),
            u: 0,
            v: 2,
            dir_z: Point2::ZERO,
            dir_n: Point2::ZERO,
            width: 0.0,
        };
        assert_eq!(subspace_frame(&s), Err(ConstraintError::DegenerateSubspace));
    }

    #[test]
    fn collision_free_tie_rule() {
        let p = polyline(line(Point2::new(-5.0, 0.0), Point2::new(5.0, 0.0), 0.5));
        let on = Obstacle::new(1.0, Point2::new(0.0, 0.0), ObstacleRole::Constraint);
        assert!(!collision_free(&p, &on, 1.0));
        let far = Obstacle::new(1.0, Point2::new(0.0, 3.0), ObstacleRole::Constraint);
        assert!(collision_free(&p, &far, 1.0));
        let touch = Obstacle::new(1.5, Point2::new(0.0, 4.0), ObstacleRole::Constraint);
        assert!(collision_free(&p, &touch, 2.5));
    }

    #[test]
    fn u_shape_obstacles_clear_path_and_block_chord_at_clearance() {
        let p = u_shape();
        let subs = find_subspaces(&p, 1.5);
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = 1.0;
            let (obs, err) = place_in_subspace(&p, c, &subs[0], &mut rng);
            assert!(!obs.is_empty());
            for o in &obs {
                assert!(point_polyline_distance(o.center, &p.points) - o.radius >= c);
            }
            if err.is_none() {
                let total: f64 = obs.iter().map(|o| 2.0 * o.radius).sum();
                assert!(total >= 2.0 * subs[0].width);
            }
            let (a, b) = (Point2::new(0.0, 30.0), Point2::new(20.0, 30.0));
            // A planner keeping clearance `c` cannot follow the chord.
            let blocked = obs
                .iter()
                .any(|o| segment_segment_distance(a, b, o.center, o.center) < o.radius + c);
            assert!(blocked, "seed {seed}: chord across the opening is open");
        }
    }

    #[test]
    fn placement_is_deterministic() {
        let p = u_shape();
        let subs = find_subspaces(&p, 1.5);
        let run = |s| place_constraint_obstacles(&p, 1.0, &subs, &mut ChaCha8Rng::seed_from_u64(s));
        assert_eq!(run(9), run(9));
    }
}
