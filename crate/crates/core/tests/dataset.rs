use std::fs;
use std::path::Path;

use edagepp_core::dataset::*;
use edagepp_core::scene::{generate_path_records, GeneratorConfig, ProblemRecord};

fn write_set(dir: &Path, paths: usize) -> Vec<ProblemRecord> {
    let cfg = GeneratorConfig::default();
    let mut w = DatasetWriter::create(dir, &cfg).unwrap();
    let mut all = Vec::new();
    for pi in 0..paths {
        for (k, r) in generate_path_records(&cfg, 11, pi).unwrap().into_iter().enumerate() {
            w.write_record(&r, (pi * cfg.records_per_path + k) as u64).unwrap();
            all.push(r);
        }
    }
    w.finish().unwrap();
    all
}

fn edit_manifest(dir: &Path, edit: impl Fn(&mut ManifestEntry)) {
    let (header, mut entries) = read_manifest(dir).unwrap();
    edit(&mut entries[0]);
    let mut text = serde_json::to_string(&header).unwrap() + "\n";
    for e in &entries {
        text += &(serde_json::to_string(e).unwrap() + "\n");
    }
    fs::write(dir.join(MANIFEST_FILE), text).unwrap();
}

#[test]
fn round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let written = write_set(dir.path(), 3);
    let (header, entries) = read_manifest(dir.path()).unwrap();
    assert_eq!(header.format, FORMAT_VERSION);
    assert_eq!(entries.len(), written.len());
    for (e, r) in entries.iter().zip(&written) {
        let back = read_record(e, dir.path(), &header.config.raster).unwrap();
        assert_eq!(&back, r);
    }
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_set(a.path(), 2);
    write_set(b.path(), 2);
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 1 + 8 * 3);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn manifest_lines_are_self_contained() {
    let dir = tempfile::tempdir().unwrap();
    write_set(dir.path(), 1);
    let text = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    for line in &lines[1..] {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in [
            "id",
            "seed",
            "clearance",
            "solution_cost",
            "obstacle_count",
            "images",
            "waypoints",
            "obstacles",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        for img in ["problem", "space", "waypoints"] {
            let name = v["images"][img].as_str().unwrap();
            assert!(dir.path().join(name).is_file());
        }
    }
    let header: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(header["format"], FORMAT_VERSION);
    assert_eq!(header["config"]["raster"]["width"], 224);
}

#[test]
fn truncated_raster_is_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    write_set(dir.path(), 1);
    let (header, entries) = read_manifest(dir.path()).unwrap();
    let p = dir.path().join(&entries[0].images.space);
    let bytes = fs::read(&p).unwrap();
    fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
    match read_record(&entries[0], dir.path(), &header.config.raster) {
        Err(DatasetError::CorruptRecord { id, .. }) => assert_eq!(id, 0),
        other => panic!("expected CorruptRecord, got {other:?}"),
    }
    let report = validate_dataset(dir.path()).unwrap();
    assert_eq!(report.failed_ids(), vec![0]);
    assert_eq!(report.records[0].failed_checks, vec![CHECK_READ.to_string()]);
}

#[test]
fn cost_mismatch_is_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    write_set(dir.path(), 1);
    edit_manifest(dir.path(), |e| e.solution_cost += 2e-6);
    let (header, entries) = read_manifest(dir.path()).unwrap();
    match read_record(&entries[0], dir.path(), &header.config.raster) {
        Err(DatasetError::CorruptRecord { invariant, .. }) => assert!(invariant.contains("solution_cost")),
        other => panic!("expected CorruptRecord, got {other:?}"),
    }
    edit_manifest(dir.path(), |e| e.solution_cost -= 1.5e-6);
    let (header, entries) = read_manifest(dir.path()).unwrap();
    assert!(read_record(&entries[0], dir.path(), &header.config.raster).is_ok());
}

#[test]
fn fresh_set_passes_validation() {
    let dir = tempfile::tempdir().unwrap();
    write_set(dir.path(), 5);
    let report = validate_dataset(dir.path()).unwrap();
    assert_eq!(report.records.len(), 20);
    assert!(report.all_passed(), "{:?}", report.failed_ids());
    assert_eq!(report.pass_rate, 1.0);
}

#[test]
fn obstacle_on_path_fails_clearance_only() {
    let dir = tempfile::tempdir().unwrap();
    write_set(dir.path(), 1);
    edit_manifest(dir.path(), |e| {
        let mid = e.waypoints[e.waypoints.len() / 2];
        e.obstacles[0].center = mid;
    });
    let report = validate_dataset(dir.path()).unwrap();
    assert_eq!(report.records[0].failed_checks, vec![CHECK_CLEARANCE.to_string()]);
    assert!(report.records[1..].iter().all(|r| r.passed));
}

#[test]
fn swapped_masks_fail_mask_chain() {
    let dir = tempfile::tempdir().unwrap();
    write_set(dir.path(), 1);
    edit_manifest(dir.path(), |e| std::mem::swap(&mut e.images.space, &mut e.images.waypoints));
    let report = validate_dataset(dir.path()).unwrap();
    assert!(report.records[0].failed_checks.contains(&CHECK_MASK_CHAIN.to_string()));
    assert!(!report.records[0].failed_checks.contains(&CHECK_CLEARANCE.to_string()));
}

#[test]
fn too_many_obstacles_fail_count_check() {
    let dir = tempfile::tempdir().unwrap();
    write_set(dir.path(), 1);
    edit_manifest(dir.path(), |e| {
        let far = edagepp_core::constraints::Obstacle::new(
            1e-3,
            edagepp_core::geom::Point2::new(-100.0, -100.0),
            edagepp_core::constraints::ObstacleRole::Filler,
        );
        while e.obstacles.len() <= 50 {
            e.obstacles.push(far);
        }
        e.obstacle_count = e.obstacles.len();
    });
    let report = validate_dataset(dir.path()).unwrap();
    assert_eq!(report.records[0].failed_checks, vec![CHECK_OBSTACLE_COUNT.to_string()]);
}

#[test]
fn unknown_version_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_set(dir.path(), 1);
    let text = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
    fs::write(dir.path().join(MANIFEST_FILE), text.replacen(FORMAT_VERSION, "edagepp-v9", 1)).unwrap();
    let err = validate_dataset(dir.path()).unwrap_err();
    assert!(matches!(err, DatasetError::UnsupportedVersion(ref v) if v == "edagepp-v9"));
    assert!(err.to_string().contains("edagepp-v1"));
}
