//! On-disk datasets: PNG rasters plus a line-delimited JSON manifest, and the validity suite.
//!
//! Layout of a dataset directory:
//!
//! ```text
//! manifest.jsonl          header line, then one entry per record
//! 000000_problem.png      RGB problem image
//! 000000_space.png        8-bit grayscale corridor mask, {0, 255}
//! 000000_waypoints.png    8-bit grayscale waypoint mask, {0, 255}
//! ```
//!
//! PNG rows are written top-down, so row 0 of the file is the largest `j`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Cursor, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{Obstacle, ObstacleRole};
use crate::extract::verify_clearance;
use crate::geom::{polyline_length, Point2, Pose2};
use crate::pathgen::{PathPolyline, PolySegment};
use crate::raster::{RasterConfig, RasterMask, RgbImage, BLOCKED, FREE};
use crate::scene::{GeneratorConfig, ProblemRecord, SceneSpec, BLACK};

pub const FORMAT_VERSION: &str = "edagepp-v1";
pub const MANIFEST_FILE: &str = "manifest.jsonl";
/// Largest accepted gap between a stored cost and the recomputed polyline length.
pub const COST_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt record {id}: {invariant}")]
    CorruptRecord { id: u64, invariant: String },
    #[error("malformed manifest line {line}: {reason}")]
    BadManifest { line: usize, reason: String },
    #[error("unsupported dataset format {0:?}, expected {FORMAT_VERSION:?}")]
    UnsupportedVersion(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::IoFailure {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format: String,
    pub config: GeneratorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePaths {
    pub problem: String,
    pub space: String,
    pub waypoints: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: u64,
    pub seed: u64,
    pub clearance: f64,
    pub solution_cost: f64,
    pub obstacle_count: usize,
    pub images: ImagePaths,
    pub bounds: [f64; 2],
    pub start: Point2,
    pub goal: Point2,
    pub pose: Pose2,
    pub waypoints: Vec<Point2>,
    pub tangents: Vec<Point2>,
    pub spacing: f64,
    pub segment_poses: Vec<Pose2>,
    pub segments: Vec<PolySegment>,
    pub obstacles: Vec<Obstacle>,
}

pub fn image_paths(id: u64) -> ImagePaths {
    ImagePaths {
        problem: format!("{id:06}_problem.png"),
        space: format!("{id:06}_space.png"),
        waypoints: format!("{id:06}_waypoints.png"),
    }
}

fn write_png(path: &Path, width: u32, height: u32, color: png::ColorType, rows_bottom_up: &[u8]) -> Result<(), DatasetError> {
    let channels = if color == png::ColorType::Rgb { 3 } else { 1 };
    let stride = width as usize * channels;
    let mut flipped = Vec::with_capacity(rows_bottom_up.len());
    for row in rows_bottom_up.chunks_exact(stride).rev() {
        flipped.extend_from_slice(row);
    }
    let mut buf = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut buf, width, height);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Balanced);
        enc.set_filter(png::Filter::Adaptive);
        let mut w = enc
            .write_header()
            .map_err(|e| io_err(path)(std::io::Error::other(e)))?;
        w.write_image_data(&flipped)
            .map_err(|e| io_err(path)(std::io::Error::other(e)))?;
    }
    fs::write(path, buf).map_err(io_err(path))
}

/// Writes an RGB image as PNG.
pub fn write_rgb_png(path: &Path, img: &RgbImage) -> Result<(), DatasetError> {
    write_png(path, img.width, img.height, png::ColorType::Rgb, &img.data)
}

/// Writes a mask as single-channel PNG.
pub fn write_mask_png(path: &Path, mask: &RasterMask) -> Result<(), DatasetError> {
    write_png(path, mask.width, mask.height, png::ColorType::Grayscale, &mask.bits)
}

/// Decoded 8-bit image: width, height, channels and bottom-up rows.
pub fn read_png(path: &Path) -> Result<(u32, u32, usize, Vec<u8>), String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| format!("{}: {e}", path.display()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| format!("{}: image too large", path.display()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| format!("{}: {e}", path.display()))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(format!("{}: expected 8-bit channels", path.display()));
    }
    let channels = match info.color_type {
        png::ColorType::Rgb => 3,
        png::ColorType::Grayscale => 1,
        c => return Err(format!("{}: unsupported colour type {c:?}", path.display())),
    };
    buf.truncate(info.buffer_size());
    let stride = info.width as usize * channels;
    let mut rows = Vec::with_capacity(buf.len());
    for row in buf.chunks_exact(stride).rev() {
        rows.extend_from_slice(row);
    }
    Ok((info.width, info.height, channels, rows))
}

/// Writes the three rasters of a record and returns its manifest entry.
pub fn write_record_files(record: &ProblemRecord, id: u64, dir: &Path) -> Result<ManifestEntry, DatasetError> {
    let images = image_paths(id);
    write_rgb_png(&dir.join(&images.problem), &record.problem_image)?;
    write_mask_png(&dir.join(&images.space), &record.space_mask)?;
    write_mask_png(&dir.join(&images.waypoints), &record.waypoint_mask)?;
    let s = &record.scene;
    Ok(ManifestEntry {
        id,
        seed: record.seed,
        clearance: s.clearance,
        solution_cost: record.solution_cost,
        obstacle_count: s.obstacles.len(),
        images,
        bounds: s.bounds,
        start: s.start,
        goal: s.goal,
        pose: s.pose,
        waypoints: record.solution.points.clone(),
        tangents: record.solution.tangents.clone(),
        spacing: record.solution.spacing,
        segment_poses: record.solution.segment_poses.clone(),
        segments: record.solution.segments.clone(),
        obstacles: s.obstacles.clone(),
    })
}

/// Serialised manifest writer; records are appended in the order given.
pub struct DatasetWriter {
    dir: PathBuf,
    manifest: BufWriter<File>,
}

impl DatasetWriter {
    /// Creates `dir` if needed and starts a fresh manifest.
    pub fn create(dir: &Path, config: &GeneratorConfig) -> Result<Self, DatasetError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join(MANIFEST_FILE);
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut manifest = BufWriter::new(file);
        let header = ManifestHeader {
            format: FORMAT_VERSION.to_string(),
            config: config.clone(),
        };
        let line = serde_json::to_string(&header).expect("header serialises");
        writeln!(manifest, "{line}").map_err(io_err(&path))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn append(&mut self, entry: &ManifestEntry) -> Result<(), DatasetError> {
        let line = serde_json::to_string(entry).expect("entry serialises");
        let path = self.dir.join(MANIFEST_FILE);
        writeln!(self.manifest, "{line}").map_err(io_err(&path))
    }

    /// Writes the rasters and appends the entry.
    pub fn write_record(&mut self, record: &ProblemRecord, id: u64) -> Result<ManifestEntry, DatasetError> {
        let entry = write_record_files(record, id, &self.dir)?;
        self.append(&entry)?;
        Ok(entry)
    }

    pub fn finish(mut self) -> Result<(), DatasetError> {
        let path = self.dir.join(MANIFEST_FILE);
        self.manifest.flush().map_err(io_err(&path))
    }
}

/// Header and entries of a dataset manifest.
pub fn read_manifest(dir: &Path) -> Result<(ManifestHeader, Vec<ManifestEntry>), DatasetError> {
    let path = dir.join(MANIFEST_FILE);
    let file = File::open(&path).map_err(io_err(&path))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or(DatasetError::BadManifest {
            line: 1,
            reason: "empty manifest".into(),
        })?
        .map_err(io_err(&path))?;
    let probe: serde_json::Value = serde_json::from_str(&first).map_err(|e| DatasetError::BadManifest {
        line: 1,
        reason: e.to_string(),
    })?;
    let format = probe.get("format").and_then(|v| v.as_str()).unwrap_or("").to_string();
    if format != FORMAT_VERSION {
        return Err(DatasetError::UnsupportedVersion(format));
    }
    let header: ManifestHeader = serde_json::from_value(probe).map_err(|e| DatasetError::BadManifest {
        line: 1,
        reason: e.to_string(),
    })?;
    let mut entries = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(io_err(&path))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|e| DatasetError::BadManifest {
            line: k + 2,
            reason: e.to_string(),
        })?;
        entries.push(entry);
    }
    Ok((header, entries))
}

fn read_mask(path: &Path, raster: &RasterConfig) -> Result<RasterMask, String> {
    let (w, h, ch, bits) = read_png(path)?;
    if ch != 1 {
        return Err(format!("{}: expected a single-channel mask", path.display()));
    }
    if (w, h) != (raster.width, raster.height) {
        return Err(format!("{}: size {w}x{h} differs from the configured raster", path.display()));
    }
    let mut mask = RasterMask::black(raster);
    if bits.iter().any(|&b| b != FREE && b != BLOCKED) {
        return Err(format!("{}: mask is not binary", path.display()));
    }
    mask.bits = bits;
    Ok(mask)
}

/// Rebuilds a record from its entry and rasters, checking the stored invariants.
pub fn read_record(entry: &ManifestEntry, dir: &Path, raster: &RasterConfig) -> Result<ProblemRecord, DatasetError> {
    let corrupt = |invariant: String| DatasetError::CorruptRecord { id: entry.id, invariant };
    let (w, h, ch, data) = read_png(&dir.join(&entry.images.problem)).map_err(corrupt)?;
    if ch != 3 || (w, h) != (raster.width, raster.height) {
        return Err(corrupt(format!("problem image is {w}x{h} with {ch} channels")));
    }
    let problem_image = RgbImage { width: w, height: h, data };
    let space_mask = read_mask(&dir.join(&entry.images.space), raster).map_err(corrupt)?;
    let waypoint_mask = read_mask(&dir.join(&entry.images.waypoints), raster).map_err(corrupt)?;

    if entry.waypoints.is_empty() || entry.waypoints.len() != entry.tangents.len() {
        return Err(corrupt("waypoint and tangent lists disagree".into()));
    }
    if entry.obstacles.len() != entry.obstacle_count {
        return Err(corrupt(format!(
            "obstacle_count {} but {} obstacles listed",
            entry.obstacle_count,
            entry.obstacles.len()
        )));
    }
    if !entry.obstacles.iter().all(Obstacle::is_valid) {
        return Err(corrupt("obstacle with non-positive or non-finite radius".into()));
    }
    let length = polyline_length(&entry.waypoints);
    if !(entry.solution_cost > 0.0) || (length - entry.solution_cost).abs() > COST_TOL {
        return Err(corrupt(format!(
            "solution_cost {} differs from polyline length {length}",
            entry.solution_cost
        )));
    }
    if entry.waypoints[0] != entry.start || *entry.waypoints.last().unwrap() != entry.goal {
        return Err(corrupt("start/goal differ from the solution endpoints".into()));
    }
    let solution = PathPolyline {
        points: entry.waypoints.clone(),
        tangents: entry.tangents.clone(),
        spacing: entry.spacing,
        segment_poses: entry.segment_poses.clone(),
        segment_count: entry.segments.len(),
        segments: entry.segments.clone(),
    };
    Ok(ProblemRecord {
        scene: SceneSpec {
            bounds: entry.bounds,
            start: entry.start,
            goal: entry.goal,
            obstacles: entry.obstacles.clone(),
            pose: entry.pose,
            clearance: entry.clearance,
        },
        problem_image,
        space_mask,
        waypoint_mask,
        solution,
        solution_cost: entry.solution_cost,
        seed: entry.seed,
    })
}

pub const CHECK_READ: &str = "readable";
pub const CHECK_MASK_CHAIN: &str = "mask_chain";
pub const CHECK_CLEARANCE: &str = "clearance";
pub const CHECK_START_GOAL: &str = "start_goal_free";
pub const CHECK_SOLUTION_FREE: &str = "solution_in_free_space";
pub const CHECK_OBSTACLE_COUNT: &str = "obstacle_count";

pub const ALL_CHECKS: [&str; 6] = [
    CHECK_READ,
    CHECK_MASK_CHAIN,
    CHECK_CLEARANCE,
    CHECK_START_GOAL,
    CHECK_SOLUTION_FREE,
    CHECK_OBSTACLE_COUNT,
];

/// Names of the validity checks a record fails; empty when it passes.
///
/// * `mask_chain`: waypoint mask within the space mask, and no obstacle (black) pixel of the
///   problem image inside the space mask.
/// * `clearance`: every solution point keeps `c` from every obstacle surface.
/// * `start_goal_free`: start and goal inside the bounds, on free space pixels.
/// * `solution_in_free_space`: every waypoint in bounds and on a free space pixel.
/// * `obstacle_count`: at most `max_obstacles` obstacles.
pub fn check_record(record: &ProblemRecord, max_obstacles: usize) -> Vec<&'static str> {
    let mut failed = Vec::new();
    let space = &record.space_mask;
    let img = &record.problem_image;
    let chain_ok = record.waypoint_mask.is_subset_of(space)
        && (0..space.height as i64).all(|j| {
            (0..space.width as i64).all(|i| !space.is_free(i, j) || img.get(i, j) != Some(BLACK))
        });
    if !chain_ok {
        failed.push(CHECK_MASK_CHAIN);
    }
    let c = record.scene.clearance;
    if verify_clearance(&record.solution.points, &record.scene, c).violations > 0 {
        failed.push(CHECK_CLEARANCE);
    }
    let tf = space.world_to_pixel;
    let on_free = |p: Point2| {
        let (i, j) = tf.containing_pixel(p);
        record.scene.in_bounds(p) && space.is_free(i, j)
    };
    if !(on_free(record.scene.start) && on_free(record.scene.goal)) {
        failed.push(CHECK_START_GOAL);
    }
    if !record.solution.points.iter().all(|&p| on_free(p)) {
        failed.push(CHECK_SOLUTION_FREE);
    }
    if record.scene.obstacles.len() > max_obstacles {
        failed.push(CHECK_OBSTACLE_COUNT);
    }
    failed
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordReport {
    pub id: u64,
    pub passed: bool,
    pub failed_checks: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub records: Vec<RecordReport>,
    /// Fraction of records passing each check, in [`ALL_CHECKS`] order.
    pub check_pass_rates: Vec<(String, f64)>,
    pub pass_rate: f64,
}

impl DatasetReport {
    pub fn all_passed(&self) -> bool {
        self.records.iter().all(|r| r.passed)
    }

    pub fn failed_ids(&self) -> Vec<u64> {
        self.records.iter().filter(|r| !r.passed).map(|r| r.id).collect()
    }
}

/// Runs the validity suite over every record of a dataset. Record failures are data.
pub fn validate_dataset(dir: &Path) -> Result<DatasetReport, DatasetError> {
    let (header, entries) = read_manifest(dir)?;
    let records: Vec<RecordReport> = entries
        .iter()
        .map(|e| match read_record(e, dir, &header.config.raster) {
            Ok(r) => {
                let failed: Vec<String> = check_record(&r, header.config.max_obstacles)
                    .into_iter()
                    .map(String::from)
                    .collect();
                RecordReport {
                    id: e.id,
                    passed: failed.is_empty(),
                    failed_checks: failed,
                    detail: None,
                }
            }
            Err(err) => RecordReport {
                id: e.id,
                passed: false,
                failed_checks: vec![CHECK_READ.to_string()],
                detail: Some(err.to_string()),
            },
        })
        .collect();
    let n = records.len().max(1) as f64;
    let check_pass_rates = ALL_CHECKS
        .iter()
        .map(|c| {
            let ok = records.iter().filter(|r| !r.failed_checks.iter().any(|f| f == c)).count();
            (c.to_string(), ok as f64 / n)
        })
        .collect();
    let pass_rate = records.iter().filter(|r| r.passed).count() as f64 / n;
    Ok(DatasetReport {
        records,
        check_pass_rates,
        pass_rate,
    })
}

/// Counts of constraint and filler obstacles.
pub fn role_counts(obstacles: &[Obstacle]) -> (usize, usize) {
    let k = obstacles.iter().filter(|o| o.role == ObstacleRole::Constraint).count();
    (k, obstacles.len() - k)
}
