use edagepp_core::extract::verify_clearance;
use edagepp_core::planners::*;
use edagepp_core::scene::{generate_path_records, GeneratorConfig};

/// 8-connected grid paths exceed the Euclidean length by at most this factor.
const GRID_METRIC: f64 = 1.0824;

#[test]
fn oracle_and_planner_agree_on_generated_scenes() {
    let cfg = GeneratorConfig::default();
    for pi in 0..6 {
        let r = generate_path_records(&cfg, 21, pi).unwrap().remove(0);
        let pcfg = PlannerConfig {
            clearance: cfg.clearance,
            max_iterations: 4_000,
            seed: pi as u64,
            ..Default::default()
        };
        let res = 128;
        let oracle = grid_dijkstra_oracle(&r.scene, cfg.clearance, res);
        let diag = std::f64::consts::SQRT_2 * cfg.bounds()[0] / res as f64;
        assert!(oracle.is_finite(), "record {pi}: the stored solution is feasible");
        assert!(oracle <= GRID_METRIC * r.solution_cost + diag, "record {pi}");
        if let Ok(p) = rrt_star(&r.scene, &pcfg) {
            assert!(oracle <= GRID_METRIC * p.cost + diag, "record {pi}: {oracle} vs {}", p.cost);
            let path = p.path.unwrap();
            let rep = verify_clearance(&path, &r.scene, cfg.clearance);
            assert_eq!(rep.violations, 0, "record {pi}");
            assert_eq!(path[0], r.scene.start);
            assert_eq!(*path.last().unwrap(), r.scene.goal);
        }
    }
}

#[test]
fn planners_are_deterministic_under_iteration_budget() {
    let cfg = GeneratorConfig::default();
    let r = generate_path_records(&cfg, 3, 0).unwrap().remove(0);
    let pcfg = PlannerConfig {
        clearance: cfg.clearance,
        max_iterations: 1_500,
        seed: 8,
        ..Default::default()
    };
    let key = |r: Result<PlannerResult, PlannerError>| r.map(|x| (x.path, x.cost, x.iterations, x.cost_trace)).ok();
    assert_eq!(key(rrt_star(&r.scene, &pcfg)), key(rrt_star(&r.scene, &pcfg)));
    assert_eq!(key(informed_rrt_star(&r.scene, &pcfg)), key(informed_rrt_star(&r.scene, &pcfg)));
}
