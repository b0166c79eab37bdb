//! Subcommands of the `edagepp` binary, callable as plain functions.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use edagepp_core::constraints::{Obstacle, ObstacleRole};
use edagepp_core::corridor::{calcu_boundary, rasterize_corridor, rasterize_waypoints};
use edagepp_core::dataset::{
    read_manifest, read_png, read_record, validate_dataset, write_record_files, write_rgb_png, DatasetError, DatasetReport,
    DatasetWriter, ManifestEntry, MANIFEST_FILE,
};
use edagepp_core::extract::{
    extract_waypoints, path_cost, pixels_to_world, ExtractError, Pixel, ProbabilityMap,
};
use edagepp_core::geom::{polyline_length, resample_equal_arclength, Point2};
use edagepp_core::pathgen::PathPolyline;
use edagepp_core::planners::{
    grid_dijkstra_oracle, run_to_margins, shortcut_oracle_cost, Budget, PlannerConfig, PlannerKind,
};
use edagepp_core::raster::{RasterConfig, RgbImage};
use edagepp_core::scene::{derive_seed, encode_problem_image, generate_path_records, GeneratorConfig, SceneSpec};

pub const BENCH_SCHEMA: &str = "bench-v1";
pub const TIMING_SCHEMA: &str = "timing-v1";
/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "EDAGE_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("I/O failure: {0}")]
    Io(String),
    #[error("validation failed for records {0:?}")]
    Validation(Vec<u64>),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

impl CliError {
    /// 0 success, 1 validation or run failure, 2 usage or configuration error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Worker count after applying [`THREADS_ENV`].
pub fn resolve_workers(flag: usize) -> Result<usize, CliError> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV}={v:?} is not a count")))?,
        _ => flag,
    };
    if n == 0 {
        return Err(CliError::Config("worker count must be >= 1".into()));
    }
    Ok(n)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))
}

/// Generator settings shared by `generate` and `timing-compare`.
pub fn generator_config(per_path: usize, clearance: f64, world: f64, raster: u32) -> Result<GeneratorConfig, CliError> {
    let mut cfg = GeneratorConfig::default();
    cfg.records_per_path = per_path;
    cfg.clearance = clearance;
    cfg.raster = RasterConfig {
        width: raster,
        height: raster,
        world: [world, world],
    };
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub generator: GeneratorConfig,
    /// Number of generated paths, n_P.
    pub paths: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub records: usize,
    pub failed_paths: Vec<usize>,
    pub seconds: f64,
    pub records_per_sec: f64,
}

enum PathFailure {
    Generation(usize, String),
    Io(String),
}

/// Record id of the `k`-th record of path `path_index`.
pub fn record_id(path_index: usize, per_path: usize, k: usize) -> u64 {
    (path_index * per_path + k) as u64
}

/// Generates `paths * records_per_path` records into `cfg.out`.
///
/// Rasters are written by the workers; manifest lines are appended afterwards in id
/// order, so the output does not depend on the worker count.
pub fn cmd_generate(cfg: &RunConfig) -> Result<GenerateSummary, CliError> {
    let g = &cfg.generator;
    g.validate().map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.workers == 0 {
        return Err(CliError::Config("worker count must be >= 1".into()));
    }
    let t0 = Instant::now();
    let mut writer = DatasetWriter::create(&cfg.out, g)?;
    let out = cfg.out.clone();
    let results: Vec<Result<Vec<ManifestEntry>, PathFailure>> = pool(cfg.workers)?.install(|| {
        (0..cfg.paths)
            .into_par_iter()
            .map(|pi| {
                let records = generate_path_records(g, cfg.seed, pi).map_err(|e| PathFailure::Generation(pi, e.to_string()))?;
                records
                    .iter()
                    .enumerate()
                    .map(|(k, r)| {
                        write_record_files(r, record_id(pi, g.records_per_path, k), &out)
                            .map_err(|e| PathFailure::Io(e.to_string()))
                    })
                    .collect()
            })
            .collect()
    });
    let mut summary = GenerateSummary {
        records: 0,
        failed_paths: Vec::new(),
        seconds: 0.0,
        records_per_sec: 0.0,
    };
    for r in results {
        match r {
            Ok(entries) => {
                for e in &entries {
                    writer.append(e)?;
                }
                summary.records += entries.len();
            }
            Err(PathFailure::Generation(pi, msg)) => {
                log::warn!("path {pi} skipped: {msg}");
                summary.failed_paths.push(pi);
            }
            Err(PathFailure::Io(msg)) => return Err(CliError::Io(msg)),
        }
    }
    writer.finish()?;
    summary.seconds = t0.elapsed().as_secs_f64();
    summary.records_per_sec = summary.records as f64 / summary.seconds.max(1e-9);
    Ok(summary)
}

/// Runs the validity suite; errors with the failing ids when any record fails.
pub fn cmd_validate(dir: &Path) -> Result<DatasetReport, CliError> {
    if !dir.join(MANIFEST_FILE).is_file() {
        return Err(CliError::Usage(format!("{} holds no {MANIFEST_FILE}", dir.display())));
    }
    Ok(validate_dataset(dir)?)
}

pub fn planner_name(kind: PlannerKind) -> &'static str {
    match kind {
        PlannerKind::RrtStar => "rrt-star",
        PlannerKind::IrrtStar => "irrt-star",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub dir: PathBuf,
    pub planner: PlannerKind,
    /// Fractions, e.g. 0.05 for +5%.
    pub margins: Vec<f64>,
    pub budget_ms: u64,
    pub seed: u64,
    pub limit: Option<usize>,
    /// Also run the grid oracle at this resolution.
    pub oracle_resolution: Option<usize>,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginRun {
    pub margin: f64,
    pub success: bool,
    /// Seconds to reach the margin; the full budget on failure.
    pub time: f64,
    /// Best cost when the margin was reached, or at the end of the run.
    pub cost: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordBench {
    pub id: u64,
    pub solution_cost: f64,
    pub runs: Vec<MarginRun>,
    pub final_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        Self { mean, std: var.sqrt(), n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginStats {
    pub margin: f64,
    pub success_rate: f64,
    /// Over all records, failures counted at the full budget.
    pub time: MeanStd,
    /// Over successful records.
    pub cost: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema: String,
    pub planner: PlannerKind,
    pub budget_ms: u64,
    pub margins: Vec<MarginStats>,
    /// Fraction of records with oracle cost >= 0.9 x solution cost, when the oracle ran.
    pub oracle_near_optimal_rate: Option<f64>,
    pub records: Vec<RecordBench>,
}

impl BenchReport {
    pub fn table(&self) -> String {
        let mut s = format!(
            "planner {}, budget {} ms, {} records\n{:<8} {:>9} {:>22} {:>22}\n",
            planner_name(self.planner),
            self.budget_ms,
            self.records.len(),
            "margin",
            "success",
            "time (s)",
            "cost"
        );
        for m in &self.margins {
            s += &format!(
                "{:<8} {:>8.1}% {:>22} {:>22}\n",
                format!("+{}%", m.margin * 100.0),
                m.success_rate * 100.0,
                format!("{:.3} ± {:.3}", m.time.mean, m.time.std),
                format!("{:.2} ± {:.2}", m.cost.mean, m.cost.std),
            );
        }
        if let Some(r) = self.oracle_near_optimal_rate {
            s += &format!("oracle >= 0.90 x solution: {:.1}%\n", r * 100.0);
        }
        s
    }
}

fn bench_record(entry: &ManifestEntry, cfg: &BenchConfig, dir: &Path, raster: &RasterConfig) -> RecordBench {
    let mut out = RecordBench {
        id: entry.id,
        solution_cost: entry.solution_cost,
        runs: Vec::new(),
        final_cost: None,
        oracle_cost: None,
        error: None,
    };
    let record = match read_record(entry, dir, raster) {
        Ok(r) => r,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    let scene = &record.scene;
    let pcfg = PlannerConfig {
        clearance: scene.clearance,
        seed: derive_seed(cfg.seed, entry.id, 0),
        max_iterations: usize::MAX,
        max_time: Some(cfg.budget_ms as f64 / 1000.0),
        ..PlannerConfig::default()
    };
    let budget = Budget::of(&pcfg);
    let budget_s = cfg.budget_ms as f64 / 1000.0;
    match run_to_margins(cfg.planner, scene, &pcfg, record.solution_cost, &cfg.margins, budget) {
        Ok((res, hits)) => {
            out.final_cost = res.success.then_some(res.cost);
            out.runs = cfg
                .margins
                .iter()
                .zip(hits)
                .map(|(&margin, h)| match h {
                    Some(h) => MarginRun {
                        margin,
                        success: true,
                        time: h.elapsed,
                        cost: Some(h.cost),
                        iterations: h.iterations,
                    },
                    None => MarginRun {
                        margin,
                        success: false,
                        time: budget_s,
                        cost: out.final_cost,
                        iterations: res.iterations,
                    },
                })
                .collect();
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    if let Some(res) = cfg.oracle_resolution {
        out.oracle_cost = Some(grid_dijkstra_oracle(scene, scene.clearance, res));
    }
    out
}

/// Runs the planner on every record towards each margin of its stored solution cost.
pub fn cmd_bench(cfg: &BenchConfig) -> Result<BenchReport, CliError> {
    if !cfg.dir.join(MANIFEST_FILE).is_file() {
        return Err(CliError::Usage(format!("{} holds no {MANIFEST_FILE}", cfg.dir.display())));
    }
    if cfg.margins.is_empty() || cfg.margins.iter().any(|m| !(*m >= 0.0)) {
        return Err(CliError::Config("margins must be non-negative".into()));
    }
    if cfg.budget_ms == 0 {
        return Err(CliError::Config("budget must be positive".into()));
    }
    let (header, mut entries) = read_manifest(&cfg.dir)?;
    if let Some(n) = cfg.limit {
        entries.truncate(n);
    }
    let raster = header.config.raster;
    let records: Vec<RecordBench> = pool(cfg.workers)?.install(|| {
        entries
            .par_iter()
            .map(|e| bench_record(e, cfg, &cfg.dir, &raster))
            .collect()
    });
    let margins = cfg
        .margins
        .iter()
        .enumerate()
        .map(|(k, &margin)| {
            let runs: Vec<&MarginRun> = records.iter().filter_map(|r| r.runs.get(k)).collect();
            let n = records.len().max(1) as f64;
            let times: Vec<f64> = runs.iter().map(|r| r.time).collect();
            let costs: Vec<f64> = runs.iter().filter(|r| r.success).filter_map(|r| r.cost).collect();
            MarginStats {
                margin,
                success_rate: runs.iter().filter(|r| r.success).count() as f64 / n,
                time: MeanStd::of(&times),
                cost: MeanStd::of(&costs),
            }
        })
        .collect();
    let oracle_near_optimal_rate = cfg.oracle_resolution.map(|_| {
        let ok = records
            .iter()
            .filter(|r| r.oracle_cost.is_some_and(|o| o >= 0.9 * r.solution_cost))
            .count();
        ok as f64 / records.len().max(1) as f64
    });
    Ok(BenchReport {
        schema: BENCH_SCHEMA.to_string(),
        planner: cfg.planner,
        budget_ms: cfg.budget_ms,
        margins,
        oracle_near_optimal_rate,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub map: PathBuf,
    pub start: Pixel,
    pub goal: Pixel,
    /// Output path of the coordinate list; the overlay goes next to it.
    pub out: PathBuf,
    /// World extent covered by the map, for world coordinates.
    pub world: f64,
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractOutput {
    pub pixels: Vec<Pixel>,
    pub world: Vec<Point2>,
    pub cost: f64,
    pub overlay: PathBuf,
}

/// Grayscale (or RGB, averaged) PNG as a probability map.
pub fn read_probability_map(path: &Path) -> Result<ProbabilityMap, CliError> {
    let (w, h, ch, data) = read_png(path).map_err(CliError::Io)?;
    let values = data
        .chunks_exact(ch)
        .map(|px| px.iter().map(|&v| v as f64).sum::<f64>() / (255.0 * ch as f64))
        .collect();
    Ok(ProbabilityMap::new(w, h, values)?)
}

/// Greedy waypoint extraction from a probability-map image.
pub fn cmd_extract(cfg: &ExtractConfig) -> Result<ExtractOutput, CliError> {
    let map = read_probability_map(&cfg.map)?;
    let max_steps = cfg.max_steps.unwrap_or((map.width * map.height) as usize);
    let pixels = extract_waypoints(&map, cfg.start, cfg.goal, max_steps)?;
    let raster = RasterConfig {
        width: map.width,
        height: map.height,
        world: [cfg.world, cfg.world],
    };
    let tf = raster.transform();
    let centre = |p: Pixel| tf.pixel_center(p.0, p.1);
    let world = pixels_to_world(&pixels, &tf, centre(cfg.start), centre(cfg.goal));
    let cost = path_cost(&world);

    let mut img = RgbImage::filled(map.width, map.height, [0, 0, 0]);
    for j in 0..map.height as i64 {
        for i in 0..map.width as i64 {
            let v = (map.get((i, j)) * 255.0).round() as u8;
            img.put(i, j, [v, v, v]);
        }
    }
    for &(i, j) in &pixels {
        img.put(i, j, [255, 0, 0]);
    }
    let overlay = cfg.out.with_extension("overlay.png");
    write_rgb_png(&overlay, &img)?;
    let out = ExtractOutput {
        pixels,
        world,
        cost,
        overlay,
    };
    let json = serde_json::to_string_pretty(&out).expect("output serialises");
    fs::write(&cfg.out, json).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub count: usize,
    pub generator: GeneratorConfig,
    pub seed: u64,
    /// Per-problem planner budget.
    pub budget_ms: u64,
    pub margin: f64,
    pub oracle_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub schema: String,
    pub count: usize,
    /// Seconds for `count` records, single worker, rasters included.
    pub edage_seconds: f64,
    /// Seconds of planner time plus rendering for `count` random problems.
    pub rrt_seconds: f64,
    /// `rrt_seconds / edage_seconds`; `None` when `count` is zero.
    pub ratio: Option<f64>,
    pub edage_cost: MeanStd,
    pub rrt_cost: MeanStd,
    pub rrt_successes: usize,
}

impl TimingReport {
    pub fn table(&self) -> String {
        let ratio = self.ratio.map_or("-".to_string(), |r| format!("{r:.1}x"));
        format!(
            "{:<10} {:>10} {:>8} {:>20}\n{:<10} {:>10.3} {:>8} {:>20}\n{:<10} {:>10.3} {:>8} {:>20}\nratio {ratio}, planner reached the margin on {}/{}\n",
            "pipeline",
            "time (s)",
            "count",
            "path cost",
            "edagepp",
            self.edage_seconds,
            self.count,
            format!("{:.2} ± {:.2}", self.edage_cost.mean, self.edage_cost.std),
            "rrt-star",
            self.rrt_seconds,
            self.count,
            format!("{:.2} ± {:.2}", self.rrt_cost.mean, self.rrt_cost.std),
            self.rrt_successes,
            self.count
        )
    }
}

/// Random problem for the planner-based pipeline: start and goal at least 20 apart, then
/// filler-sized circles until the obstacle cap, none within `r + c` of start or goal.
pub fn random_problem<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> SceneSpec {
    let c = cfg.clearance;
    let [w, h] = cfg.bounds();
    let pick = |rng: &mut R| Point2::new(rng.gen_range(c..w - c), rng.gen_range(c..h - c));
    let (start, goal) = loop {
        let (a, b) = (pick(rng), pick(rng));
        if a.distance(b) >= 20.0 {
            break (a, b);
        }
    };
    let mut scene = SceneSpec::empty(cfg.bounds(), start, goal, c);
    let [lo, hi] = cfg.filler_radius;
    for _ in 0..cfg.filler_draws {
        if scene.obstacles.len() >= cfg.max_obstacles {
            break;
        }
        let o = Obstacle::new(
            rng.gen_range(lo..=hi),
            Point2::new(rng.gen_range(0.0..w), rng.gen_range(0.0..h)),
            ObstacleRole::Filler,
        );
        if o.center.distance(start) >= o.radius + c && o.center.distance(goal) >= o.radius + c {
            scene.obstacles.push(o);
        }
    }
    scene
}

/// Wall time of generating `count` records versus planning `count` random problems to
/// within `margin` of a near-optimal reference cost, the grid oracle's path pulled taut
/// ([`shortcut_oracle_cost`]).
///
/// The reference that sets each planner target is not timed, and unsolvable random
/// problems are redrawn untimed; both choices favour the planner pipeline.
pub fn cmd_timing_compare(cfg: &TimingConfig) -> Result<TimingReport, CliError> {
    let g = &cfg.generator;
    g.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let mut report = TimingReport {
        schema: TIMING_SCHEMA.to_string(),
        count: cfg.count,
        edage_seconds: 0.0,
        rrt_seconds: 0.0,
        ratio: None,
        edage_cost: MeanStd::of(&[]),
        rrt_cost: MeanStd::of(&[]),
        rrt_successes: 0,
    };
    if cfg.count == 0 {
        return Ok(report);
    }

    let t0 = Instant::now();
    let mut costs = Vec::with_capacity(cfg.count);
    let mut pi = 0;
    while costs.len() < cfg.count {
        match generate_path_records(g, cfg.seed, pi) {
            Ok(records) => costs.extend(records.iter().take(cfg.count - costs.len()).map(|r| r.solution_cost)),
            Err(e) => log::warn!("path {pi} skipped: {e}"),
        }
        pi += 1;
    }
    report.edage_seconds = t0.elapsed().as_secs_f64();
    report.edage_cost = MeanStd::of(&costs);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, u64::MAX, 0));
    let mut rrt_costs = Vec::new();
    let mut timed = Duration::ZERO;
    let mut k = 0u64;
    for _ in 0..cfg.count {
        let (scene, target) = loop {
            let s = random_problem(g, &mut rng);
            let o = shortcut_oracle_cost(&s, g.clearance, cfg.oracle_resolution);
            if o.is_finite() {
                break (s, o);
            }
        };
        let pcfg = PlannerConfig {
            clearance: g.clearance,
            seed: derive_seed(cfg.seed, u64::MAX, k + 1),
            max_iterations: usize::MAX,
            max_time: Some(cfg.budget_ms as f64 / 1000.0),
            ..PlannerConfig::default()
        };
        k += 1;
        let t = Instant::now();
        let (res, hits) = run_to_margins(PlannerKind::RrtStar, &scene, &pcfg, target, &[cfg.margin], Budget::of(&pcfg))
            .map_err(|e| CliError::Config(e.to_string()))?;
        std::hint::black_box(encode_problem_image(&scene, &g.raster, g.marker_side));
        if let Some(poly) = res.path.as_deref().and_then(|p| training_polyline(p, g.path.spacing())) {
            let _ = std::hint::black_box(rasterize_waypoints(&poly, &g.raster));
            let space = calcu_boundary(&poly, g.clearance, g.path.cap_samples)
                .and_then(|b| rasterize_corridor(&b, &g.raster));
            let _ = std::hint::black_box(space);
        }
        timed += t.elapsed();
        if let Some(h) = hits[0] {
            report.rrt_successes += 1;
            rrt_costs.push(h.cost);
        } else if res.success {
            rrt_costs.push(res.cost);
        }
    }
    report.rrt_seconds = timed.as_secs_f64();
    report.rrt_cost = MeanStd::of(&rrt_costs);
    report.ratio = Some(report.rrt_seconds / report.edage_seconds.max(1e-9));
    Ok(report)
}

/// A planner path resampled at the generator spacing with per-point tangents, the form the
/// corridor and waypoint rasterizers take.
pub fn training_polyline(path: &[Point2], spacing: f64) -> Option<PathPolyline> {
    let len = polyline_length(path);
    if path.len() < 2 || !(len > 0.0) {
        return None;
    }
    let n = ((len / spacing).ceil() as usize + 1).max(2);
    let points = resample_equal_arclength(path, n).ok()?;
    let tangents = (0..n)
        .map(|k| {
            let (a, b) = (points[k.saturating_sub(1)], points[(k + 1).min(n - 1)]);
            (b - a).normalized().unwrap_or(Point2::new(1.0, 0.0))
        })
        .collect();
    Some(PathPolyline {
        points,
        tangents,
        spacing: len / (n - 1) as f64,
        segment_poses: Vec::new(),
        segments: Vec::new(),
        segment_count: 1,
    })
}

/// Parses `"i,j"`.
pub fn parse_pixel(s: &str) -> Result<Pixel, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected i,j, got {s:?}"))?;
    let p = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

/// Writes any report as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(value).expect("report serialises");
    fs::write(path, s).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
