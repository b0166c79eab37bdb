use std::fs;
use std::path::Path;
use std::process::Command;

use edagepp_cli::*;
use edagepp_core::corridor::rasterize_corridor;
use edagepp_core::dataset::{read_manifest, read_record, write_mask_png, DatasetWriter, MANIFEST_FILE};
use edagepp_core::planners::PlannerKind;
use edagepp_core::raster::{RasterConfig, RasterMask};
use edagepp_core::scene::{encode_problem_image, generate_path_records, GeneratorConfig};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_edagepp"));
    c.env_remove(THREADS_ENV);
    c
}

fn run_generate(out: &Path, paths: usize, clearance: f64, workers: usize) -> GenerateSummary {
    cmd_generate(&RunConfig {
        generator: generator_config(4, clearance, 64.0, 224).unwrap(),
        paths,
        seed: 42,
        workers,
        out: out.to_path_buf(),
    })
    .unwrap()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn generate_then_validate_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    let status = bin()
        .args(["generate", "--paths", "3", "--per-path", "2", "--seed", "5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let (_, entries) = read_manifest(&out).unwrap();
    assert_eq!(entries.len(), 6);
    let status = bin().arg("validate").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn corrupted_record_exits_one_with_id() {
    let dir = tempfile::tempdir().unwrap();
    run_generate(dir.path(), 2, 3.0, 1);
    fs::write(dir.path().join("000005_space.png"), b"not a png").unwrap();
    let out = bin().arg("validate").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("record 000005 failed"), "{text}");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin().arg("validate").arg(dir.path()).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["generate", "--bogus"]).status().unwrap().code(), Some(2));
    let bad = bin()
        .args(["generate", "--clearance", "-1", "--out"])
        .arg(dir.path().join("x"))
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(2));
    let zero = bin()
        .env(THREADS_ENV, "0")
        .args(["generate", "--paths", "1", "--out"])
        .arg(dir.path().join("y"))
        .status()
        .unwrap();
    assert_eq!(zero.code(), Some(2));
}

#[test]
fn output_is_independent_of_worker_count() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_generate(a.path(), 6, 3.0, 1);
    run_generate(b.path(), 6, 3.0, 3);
    run_generate(c.path(), 6, 3.0, 1);
    let ref_bytes = dir_bytes(a.path());
    assert_eq!(ref_bytes.len(), 1 + 24 * 3);
    assert_eq!(ref_bytes, dir_bytes(b.path()));
    assert_eq!(ref_bytes, dir_bytes(c.path()));
}

#[test]
fn env_var_overrides_workers() {
    std::env::set_var(THREADS_ENV, "3");
    assert_eq!(resolve_workers(1).unwrap(), 3);
    std::env::set_var(THREADS_ENV, "x");
    assert!(resolve_workers(1).is_err());
    std::env::remove_var(THREADS_ENV);
    assert_eq!(resolve_workers(2).unwrap(), 2);
}

#[test]
fn wider_clearance_gives_larger_corridors() {
    let g1 = generator_config(4, 1.0, 64.0, 224).unwrap();
    let g3 = generator_config(4, 3.0, 64.0, 224).unwrap();
    for pi in 0..10 {
        let r1 = generate_path_records(&g1, 42, pi).unwrap();
        let r3 = generate_path_records(&g3, 42, pi).unwrap();
        for (a, b) in r1.iter().zip(&r3) {
            assert!(b.space_mask.count_free() > a.space_mask.count_free(), "path {pi}");
        }
    }
}

#[test]
fn extract_follows_a_drawn_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RasterConfig { width: 40, height: 40, world: [40.0, 40.0] };
    let mut m = RasterMask::black(&cfg);
    for k in 5..=30 {
        m.set_free(k, 5 + (k - 5) / 2);
    }
    let map = dir.path().join("map.png");
    write_mask_png(&map, &m).unwrap();
    let out = dir.path().join("path.json");
    let status = bin()
        .args(["extract", "--start", "5,5", "--goal", "30,17", "--world", "40", "--map"])
        .arg(&map)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let pixels = v["pixels"].as_array().unwrap();
    assert_eq!(pixels.len(), 26);
    for (k, p) in pixels.iter().enumerate() {
        let k = k as i64 + 5;
        assert_eq!(p[0].as_i64().unwrap(), k);
        assert_eq!(p[1].as_i64().unwrap(), 5 + (k - 5) / 2);
    }
    assert!(dir.path().join("path.overlay.png").is_file());

    let blank = dir.path().join("blank.png");
    write_mask_png(&blank, &RasterMask::black(&cfg)).unwrap();
    let status = bin()
        .args(["extract", "--start", "5,5", "--goal", "30,17", "--map"])
        .arg(&blank)
        .arg("--out")
        .arg(dir.path().join("p2.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn bench_on_obstacle_free_record_succeeds_at_once() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GeneratorConfig::default();
    let mut r = generate_path_records(&cfg, 9, 0).unwrap().remove(0);
    r.scene.obstacles.clear();
    r.problem_image = encode_problem_image(&r.scene, &cfg.raster, cfg.marker_side);
    r.space_mask = rasterize_corridor(
        &edagepp_core::corridor::calcu_boundary(&r.solution, cfg.clearance, 16).unwrap(),
        &cfg.raster,
    )
    .unwrap();
    let mut w = DatasetWriter::create(dir.path(), &cfg).unwrap();
    w.write_record(&r, 0).unwrap();
    w.finish().unwrap();
    let (h, e) = read_manifest(dir.path()).unwrap();
    assert!(read_record(&e[0], dir.path(), &h.config.raster).is_ok());

    let report = cmd_bench(&BenchConfig {
        dir: dir.path().to_path_buf(),
        planner: PlannerKind::RrtStar,
        margins: vec![0.0, 0.02, 0.05],
        budget_ms: 5_000,
        seed: 1,
        limit: None,
        oracle_resolution: Some(128),
        workers: 1,
    })
    .unwrap();
    assert_eq!(report.schema, BENCH_SCHEMA);
    for m in &report.margins {
        assert_eq!(m.success_rate, 1.0);
        assert!(m.time.mean < 1.0);
    }
    assert!(report.table().contains("+5%"));
    let json: serde_json::Value = serde_json::to_value(&report).unwrap();
    assert_eq!(json["schema"], "bench-v1");
    assert_eq!(json["planner"], "rrt-star");
}

#[test]
fn bench_without_manifest_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_bench(&BenchConfig {
        dir: dir.path().to_path_buf(),
        planner: PlannerKind::RrtStar,
        margins: vec![0.05],
        budget_ms: 10,
        seed: 1,
        limit: None,
        oracle_resolution: None,
        workers: 1,
    })
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(!dir.path().join(MANIFEST_FILE).exists());
}

#[test]
fn timing_compare_with_zero_count_is_empty() {
    let out = bin().args(["timing-compare", "--count", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = cmd_timing_compare(&TimingConfig {
        count: 0,
        generator: GeneratorConfig::default(),
        seed: 1,
        budget_ms: 10,
        margin: 0.05,
        oracle_resolution: 64,
    })
    .unwrap();
    assert_eq!(r.count, 0);
    assert_eq!(r.ratio, None);
    assert_eq!(r.rrt_successes, 0);
}

#[test]
fn timing_compare_small_run_reports_costs() {
    let r = cmd_timing_compare(&TimingConfig {
        count: 3,
        generator: GeneratorConfig::default(),
        seed: 2,
        budget_ms: 300,
        margin: 0.05,
        oracle_resolution: 64,
    })
    .unwrap();
    assert_eq!(r.edage_cost.n, 3);
    assert!(r.edage_cost.mean > 30.0 && r.edage_cost.mean < 45.0);
    assert!(r.ratio.unwrap() > 0.0);
    assert!(r.table().contains("ratio"));
}
