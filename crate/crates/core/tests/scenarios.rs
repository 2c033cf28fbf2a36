use std::path::PathBuf;

use coexist::scenario::scenario_to_toml;
use coexist::testing::{multi_node_desk, single_pair_desk, single_pair_toml, small_instance};
use coexist::{
    communication_design, evaluate_objective, load_scenario, load_scenario_file, poa_solve,
    validate_solution, BcdOptions, ScenarioConfig, Solution, Trajectory,
};

fn scenario(name: &str) -> ScenarioConfig<f64> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    load_scenario_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn shipped_scenarios_match_the_fixtures() {
    assert_eq!(
        scenario("single_pair_full.toml"),
        load_scenario(&single_pair_toml(50.0, 100)).unwrap()
    );
    assert_eq!(
        scenario("single_pair_desk.toml"),
        single_pair_desk(20.0, 40)
    );
    assert_eq!(
        scenario("multi_node_desk.toml"),
        multi_node_desk(40.0, 80, 1.0 / 3.0)
    );
    assert_eq!(scenario("compare_2x2.toml"), small_instance(2, 2, 8));
}

#[test]
fn full_scale_single_pair_has_half_second_slots() {
    let cfg = scenario("single_pair_full.toml");
    assert_eq!((cfg.num_sns(), cfg.num_aps(), cfg.slots), (1, 1, 100));
    assert!((cfg.slot_delta - 0.5).abs() < 1e-12);
    assert!((cfg.beta0 - 1e-6).abs() < 1e-18);
    assert!((cfg.noise_power - 1e-14).abs() < 1e-26);
}

#[test]
fn canonical_toml_roundtrips() {
    for name in [
        "single_pair_full.toml",
        "single_pair_desk.toml",
        "multi_node_desk.toml",
        "compare_2x2.toml",
    ] {
        let cfg = scenario(name);
        assert_eq!(
            load_scenario(&scenario_to_toml(&cfg)).unwrap(),
            cfg,
            "{name}"
        );
    }
}

fn roundtrip(cfg: &ScenarioConfig<f64>, sol: &Solution<f64>) {
    let text = serde_json::to_string(sol).unwrap();
    let back: Solution<f64> = serde_json::from_str(&text).unwrap();
    assert_eq!(&back, sol);
    assert_eq!(
        validate_solution(cfg, &back, 1e-6).unwrap(),
        validate_solution(cfg, sol, 1e-6).unwrap()
    );
    let again = evaluate_objective(cfg, &back.trajectory, &back.schedule, &back.power).unwrap();
    assert!((again.objective - sol.objective).abs() <= 1e-9 * sol.objective.abs());
}

#[test]
fn both_solvers_on_the_comparison_scenario() {
    let cfg = scenario("compare_2x2.toml");
    let traj = Trajectory::straight_line(&cfg);
    let poa = poa_solve(&cfg, &traj, 1e-2, 200_000).unwrap();
    let sca = communication_design(&cfg, &traj, &BcdOptions::default())
        .unwrap()
        .solution;
    for sol in [&poa, &sca] {
        assert!(validate_solution(&cfg, sol, 1e-6).unwrap().is_empty());
        roundtrip(&cfg, sol);
    }
    let ub = poa.diagnostics.upper_bound.unwrap();
    assert!(sca.objective <= ub + 1e-9);
    assert!((sca.objective - poa.objective).abs() <= 0.05 * poa.objective);
}
