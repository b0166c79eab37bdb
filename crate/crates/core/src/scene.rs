//! Planning problems around a generated path: random pose, filler obstacles, masks and
//! the problem image.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{collision_free, find_subspaces, place_constraint_obstacles, Obstacle, ObstacleRole};
use crate::corridor::{calcu_boundary, rasterize_corridor, rasterize_waypoints, CorridorBoundary, CorridorError};
use crate::geom::{convex_hull, ConvexHull, Point2, Pose2};
use crate::pathgen::{generate_path, PathGenConfig, PathGenError, PathPolyline};
use crate::raster::{RasterConfig, RasterMask, RgbImage, FREE};

pub const WHITE: [u8; 3] = [255, 255, 255];
pub const BLACK: [u8; 3] = [0, 0, 0];
pub const RED: [u8; 3] = [255, 0, 0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("no pose fits the bounds after {0} tries")]
    TimesExceeded(usize),
    #[error(transparent)]
    Path(#[from] PathGenError),
    #[error(transparent)]
    Corridor(#[from] CorridorError),
    #[error("invalid scene configuration: {0}")]
    InvalidConfig(String),
    #[error("path {path_index} failed after {attempts} attempts")]
    PathFailed { path_index: usize, attempts: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub path: PathGenConfig,
    pub raster: RasterConfig,
    pub clearance: f64,
    /// Records drawn from each generated path.
    pub records_per_path: usize,
    /// Cap on constraint plus filler obstacles in one problem.
    pub max_obstacles: usize,
    pub filler_radius: [f64; 2],
    /// Candidate fillers drawn per problem at most.
    pub filler_draws: usize,
    /// Side of the start and goal marker squares, pixels.
    pub marker_side: u32,
    pub pose_tries: usize,
    /// Hull edges longer than this many waypoint spacings open a subspace.
    pub gap_factor: f64,
    pub path_attempts: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            path: PathGenConfig::default(),
            raster: RasterConfig::default(),
            clearance: 3.0,
            records_per_path: 4,
            max_obstacles: 50,
            filler_radius: [1.0, 6.0],
            filler_draws: 1000,
            marker_side: 5,
            pose_tries: 100,
            gap_factor: 3.0,
            path_attempts: 50,
        }
    }
}

impl GeneratorConfig {
    pub fn bounds(&self) -> [f64; 2] {
        self.raster.world
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: &str| Err(SceneError::InvalidConfig(m.to_string()));
        self.path.validate()?;
        if !(self.clearance > 0.0 && self.clearance.is_finite()) {
            return bad("clearance must be positive");
        }
        if self.raster.width == 0 || self.raster.height == 0 {
            return bad("raster must be non-empty");
        }
        if !(self.raster.world[0] > 0.0 && self.raster.world[1] > 0.0) {
            return bad("world must be positive");
        }
        let [lo, hi] = self.filler_radius;
        if !(lo > 0.0 && hi >= lo) {
            return bad("filler radius range must satisfy 0 < min <= max");
        }
        if self.records_per_path == 0 || self.pose_tries == 0 || self.path_attempts == 0 {
            return bad("counts must be positive");
        }
        if self.gap_factor <= 1.0 {
            return bad("gap_factor must exceed 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub bounds: [f64; 2],
    pub start: Point2,
    pub goal: Point2,
    pub obstacles: Vec<Obstacle>,
    pub pose: Pose2,
    pub clearance: f64,
}

impl SceneSpec {
    pub fn empty(bounds: [f64; 2], start: Point2, goal: Point2, clearance: f64) -> Self {
        Self {
            bounds,
            start,
            goal,
            obstacles: Vec::new(),
            pose: Pose2::IDENTITY,
            clearance,
        }
    }

    pub fn in_bounds(&self, p: Point2) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= self.bounds[0] && p.y <= self.bounds[1]
    }

    /// Smallest surface distance from `p` to any obstacle; infinite without obstacles.
    pub fn surface_distance(&self, p: Point2) -> f64 {
        self.obstacles
            .iter()
            .map(|o| p.distance(o.center) - o.radius)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemRecord {
    pub scene: SceneSpec,
    pub problem_image: RgbImage,
    pub space_mask: RasterMask,
    pub waypoint_mask: RasterMask,
    pub solution: PathPolyline,
    pub solution_cost: f64,
    pub seed: u64,
}

/// Random rigid pose keeping every hull vertex strictly inside `[0, W] x [0, H]`.
///
/// The hull is rotated about the centre of its bounding box, then that centre is placed
/// uniformly in the bounds.
pub fn random_pose_in_bounds<R: Rng + ?Sized>(
    hull: &ConvexHull,
    bounds: [f64; 2],
    rng: &mut R,
    max_tries: usize,
) -> Result<Pose2, SceneError> {
    let (lo, hi) = hull.vertices.iter().fold(
        (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(lo, hi), p| (Point2::new(lo.x.min(p.x), lo.y.min(p.y)), Point2::new(hi.x.max(p.x), hi.y.max(p.y))),
    );
    let centre = lo.lerp(hi, 0.5);
    for _ in 0..max_tries {
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let t = Point2::new(rng.gen_range(0.0..bounds[0]), rng.gen_range(0.0..bounds[1]));
        let pose = Pose2::new(angle, t - centre.rotated(angle));
        let inside = hull.vertices.iter().all(|&v| {
            let q = pose.apply(v);
            q.x > 0.0 && q.y > 0.0 && q.x < bounds[0] && q.y < bounds[1]
        });
        if inside {
            return Ok(pose);
        }
    }
    Err(SceneError::TimesExceeded(max_tries))
}

/// Draws random circles, keeping those clearing the path by `c`, until `max_total` are
/// kept or `max_draws` have been drawn.
pub fn scatter_filler_obstacles<R: Rng + ?Sized>(
    posed_path: &PathPolyline,
    c: f64,
    bounds: [f64; 2],
    radius_range: [f64; 2],
    rng: &mut R,
    max_total: usize,
    max_draws: usize,
) -> Vec<Obstacle> {
    let mut out = Vec::with_capacity(max_total);
    for _ in 0..max_draws {
        if out.len() >= max_total {
            break;
        }
        let center = Point2::new(rng.gen_range(0.0..bounds[0]), rng.gen_range(0.0..bounds[1]));
        let radius = if radius_range[1] > radius_range[0] {
            rng.gen_range(radius_range[0]..=radius_range[1])
        } else {
            radius_range[0]
        };
        let o = Obstacle::new(radius, center, ObstacleRole::Filler);
        if collision_free(posed_path, &o, c) {
            out.push(o);
        }
    }
    out
}

/// White image with every obstacle drawn as a black disc (pixel centres inside).
pub fn draw_obstacles(obstacles: &[Obstacle], cfg: &RasterConfig) -> RgbImage {
    let mut img = RgbImage::filled(cfg.width, cfg.height, WHITE);
    let tf = cfg.transform();
    let (w, h) = (cfg.width as i64, cfg.height as i64);
    for o in obstacles {
        let lo = tf.containing_pixel(o.center - Point2::new(o.radius, o.radius));
        let hi = tf.containing_pixel(o.center + Point2::new(o.radius, o.radius));
        for j in lo.1.max(0)..=hi.1.min(h - 1) {
            let dy = tf.pixel_center(0, j).y - o.center.y;
            let span2 = o.radius * o.radius - dy * dy;
            if span2 < 0.0 {
                continue;
            }
            // Pixel centres with |x - cx| <= half, as pixel indices.
            let half = span2.sqrt();
            let i0 = ((o.center.x - half) * tf.scale[0] + tf.offset[0] - 0.5).ceil() as i64;
            let i1 = ((o.center.x + half) * tf.scale[0] + tf.offset[0] - 0.5).floor() as i64;
            let (i0, i1) = (i0.max(0), i1.min(w - 1));
            if i0 > i1 {
                continue;
            }
            let row = (j * w) as usize;
            for px in img.data[3 * (row + i0 as usize)..3 * (row + i1 as usize + 1)].chunks_exact_mut(3) {
                px.copy_from_slice(&BLACK);
            }
        }
    }
    img
}

/// Red `side x side` squares on the start and goal pixels.
pub fn draw_markers(img: &mut RgbImage, scene: &SceneSpec, cfg: &RasterConfig, side: u32) {
    let tf = cfg.transform();
    let before = (side as i64 - 1) / 2;
    for p in [scene.start, scene.goal] {
        let (ci, cj) = tf.containing_pixel(p);
        for j in cj - before..cj - before + side as i64 {
            for i in ci - before..ci - before + side as i64 {
                img.put(i, j, RED);
            }
        }
    }
}

/// Forces every free pixel of the space mask to free in the image.
pub fn clear_space(img: &mut RgbImage, space: &RasterMask) {
    debug_assert_eq!((img.width, img.height), (space.width, space.height));
    for (px, &b) in img.data.chunks_exact_mut(3).zip(&space.bits) {
        if b == FREE {
            px.copy_from_slice(&WHITE);
        }
    }
}

pub fn encode_problem_image(scene: &SceneSpec, cfg: &RasterConfig, marker_side: u32) -> RgbImage {
    let mut img = draw_obstacles(&scene.obstacles, cfg);
    draw_markers(&mut img, scene, cfg, marker_side);
    img
}

/// A path with its corridor and constraint obstacles, all in the path's own frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedPath {
    pub path: PathPolyline,
    pub boundary: CorridorBoundary,
    pub hull: ConvexHull,
    pub constraints: Vec<Obstacle>,
}

pub fn prepare_path<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> Result<PreparedPath, SceneError> {
    let path = generate_path(&cfg.path, rng)?;
    let boundary = calcu_boundary(&path, cfg.clearance, cfg.path.cap_samples)?;
    let pts: Vec<Point2> = boundary.points().collect();
    let hull = convex_hull(&pts).map_err(|_| SceneError::InvalidConfig("degenerate corridor".into()))?;
    let subspaces = find_subspaces(&path, cfg.gap_factor * path.spacing);
    let constraints = place_constraint_obstacles(&path, cfg.clearance, &subspaces, rng);
    Ok(PreparedPath {
        path,
        boundary,
        hull,
        constraints,
    })
}

/// Poses a prepared path, adds fillers up to the obstacle cap and renders the record.
pub fn assemble_scene<R: Rng + ?Sized>(
    prepared: &PreparedPath,
    cfg: &GeneratorConfig,
    rng: &mut R,
    seed: u64,
) -> Result<ProblemRecord, SceneError> {
    let bounds = cfg.bounds();
    let pose = random_pose_in_bounds(&prepared.hull, bounds, rng, cfg.pose_tries)?;
    let solution = prepared.path.transformed(&pose);
    let boundary = prepared.boundary.transformed(&pose);
    let space_mask = rasterize_corridor(&boundary, &cfg.raster)?;
    let waypoint_mask = rasterize_waypoints(&solution, &cfg.raster)?;

    let room = cfg.max_obstacles.saturating_sub(prepared.constraints.len());
    let mut obstacles: Vec<Obstacle> = prepared
        .constraints
        .iter()
        .map(|o| Obstacle::new(o.radius, pose.apply(o.center), o.role))
        .collect();
    obstacles.extend(scatter_filler_obstacles(
        &solution,
        cfg.clearance,
        bounds,
        cfg.filler_radius,
        rng,
        room,
        cfg.filler_draws,
    ));

    let scene = SceneSpec {
        bounds,
        start: solution.start(),
        goal: solution.goal(),
        obstacles,
        pose,
        clearance: cfg.clearance,
    };
    let mut problem_image = draw_obstacles(&scene.obstacles, &cfg.raster);
    clear_space(&mut problem_image, &space_mask);
    draw_markers(&mut problem_image, &scene, &cfg.raster, cfg.marker_side);
    let solution_cost = solution.length();
    Ok(ProblemRecord {
        scene,
        problem_image,
        space_mask,
        waypoint_mask,
        solution,
        solution_cost,
        seed,
    })
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one path attempt, independent of scheduling.
pub fn derive_seed(seed: u64, path_index: u64, attempt: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ path_index) ^ attempt)
}

/// All records of one path, in record order.
///
/// A path whose constraints exceed the obstacle cap, or which cannot be posed, is
/// discarded and regenerated from the next attempt's seed.
pub fn generate_path_records(cfg: &GeneratorConfig, seed: u64, path_index: usize) -> Result<Vec<ProblemRecord>, SceneError> {
    cfg.validate()?;
    'attempt: for attempt in 0..cfg.path_attempts {
        let s = derive_seed(seed, path_index as u64, attempt as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let prepared = match prepare_path(cfg, &mut rng) {
            Ok(p) => p,
            Err(e) => {
                log::debug!("path {path_index} attempt {attempt}: {e}");
                continue;
            }
        };
        if prepared.constraints.len() > cfg.max_obstacles {
            continue;
        }
        let mut records = Vec::with_capacity(cfg.records_per_path);
        for _ in 0..cfg.records_per_path {
            match assemble_scene(&prepared, cfg, &mut rng, s) {
                Ok(r) => records.push(r),
                Err(e) => {
                    log::debug!("path {path_index} attempt {attempt}: {e}");
                    continue 'attempt;
                }
            }
        }
        return Ok(records);
    }
    Err(SceneError::PathFailed {
        path_index,
        attempts: cfg.path_attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hull_of(points: &[Point2]) -> ConvexHull {
        convex_hull(points).unwrap()
    }

    #[test]
    fn small_hull_poses_quickly() {
        let hull = hull_of(&[Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), Point2::new(1.0, 1.5)]);
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pose = random_pose_in_bounds(&hull, [64.0, 64.0], &mut rng, 50).unwrap();
            for &v in &hull.vertices {
                let q = pose.apply(v);
                assert!(q.x > 0.0 && q.y > 0.0 && q.x < 64.0 && q.y < 64.0);
            }
        }
    }

    #[test]
    fn oversized_hull_times_out() {
        let hull = hull_of(&[Point2::new(0.0, 0.0), Point2::new(100.0, 0.0), Point2::new(0.0, 100.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            random_pose_in_bounds(&hull, [64.0, 64.0], &mut rng, 50),
            Err(SceneError::TimesExceeded(50))
        );
    }

    #[test]
    fn disc_spans_match_pixel_centre_rule() {
        let cfg = RasterConfig::default();
        let tf = cfg.transform();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let obstacles: Vec<Obstacle> = (0..40)
            .map(|_| {
                let c = Point2::new(rng.gen_range(-5.0..69.0), rng.gen_range(-5.0..69.0));
                Obstacle::new(rng.gen_range(0.1..6.0), c, ObstacleRole::Filler)
            })
            .collect();
        let img = draw_obstacles(&obstacles, &cfg);
        for j in 0..cfg.height as i64 {
            for i in 0..cfg.width as i64 {
                let p = tf.pixel_center(i, j);
                let d = obstacles.iter().map(|o| p.distance(o.center) - o.radius).fold(f64::INFINITY, f64::min);
                if d.abs() > 1e-9 {
                    assert_eq!(img.get(i, j) == Some(BLACK), d < 0.0, "pixel ({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn empty_scene_is_white_with_two_markers() {
        let cfg = RasterConfig::default();
        let scene = SceneSpec::empty([64.0, 64.0], Point2::new(10.0, 10.0), Point2::new(50.0, 40.0), 1.0);
        let img = encode_problem_image(&scene, &cfg, 5);
        assert_eq!(img.count(RED), 50);
        assert_eq!(img.count(WHITE), 224 * 224 - 50);
    }

    #[test]
    fn disc_area_matches() {
        let cfg = RasterConfig::default();
        let mut scene = SceneSpec::empty([64.0, 64.0], Point2::new(2.0, 2.0), Point2::new(60.0, 60.0), 1.0);
        for rho in [2.0, 4.5, 7.0] {
            scene.obstacles = vec![Obstacle::new(rho, Point2::new(31.3, 30.7), ObstacleRole::Filler)];
            let img = encode_problem_image(&scene, &cfg, 5);
            let expected = std::f64::consts::PI * rho * rho * 3.5 * 3.5;
            let got = img.count(BLACK) as f64;
            assert!((got - expected).abs() / expected < 0.05, "rho {rho}: {got} vs {expected}");
        }
    }

    #[test]
    fn zero_fillers_requested() {
        let cfg = GeneratorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = prepare_path(&cfg, &mut rng).unwrap();
        assert!(scatter_filler_obstacles(&p.path, 3.0, [64.0, 64.0], [1.0, 6.0], &mut rng, 0, 100).is_empty());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(42, 0, 0), derive_seed(42, 1, 0));
        assert_ne!(derive_seed(42, 0, 0), derive_seed(42, 0, 1));
        assert_eq!(derive_seed(42, 3, 2), derive_seed(42, 3, 2));
    }
}
