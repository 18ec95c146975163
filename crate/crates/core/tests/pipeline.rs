mod common;

use std::fs;

use tubenav::harness::{
    export_plot_data, fleet_spec, load_plan, plan, simulate, simulation_settings, verify_artifacts, write_plan,
    write_simulation, HarnessError, PlanOverrides, Scenario, SimulationOverrides, PLOT_DIR,
};
use tubenav::tubes::verify_tube;

const TWO_LANES: &str = r#"
version = 1
name = "two-lanes"

[arena]
bounds = [[0.0, 10.0], [0.0, 10.0]]

[[agents]]
id = 1
dynamics = "single_integrator"
initial = [[0.0, 1.0], [1.0, 2.0]]
target = [[9.0, 10.0], [1.0, 2.0]]
prescribed_time_s = 20.0

[[agents]]
id = 2
dynamics = "single_integrator"
initial = [[0.0, 1.0], [7.0, 8.0]]
target = [[9.0, 10.0], [7.0, 8.0]]
prescribed_time_s = 20.0
"#;

#[test]
fn bundled_scenarios_load() {
    let cs1 = common::bundled("case-study-1");
    assert_eq!(cs1.agents.len(), 3);
    assert_eq!(cs1.agents[0].obstacles.len(), 4);
    assert_eq!(cs1.horizon(), 200.0);
    assert_eq!(cs1.agents[0].state_dim, 3);

    let cs2 = common::bundled("case-study-2");
    assert_eq!(cs2.agents.len(), 6);
    for a in &cs2.agents {
        assert_eq!(a.workspace_mask, vec![0, 1, 2]);
        assert_eq!(a.arena.ndim(), 3);
        for k in 0..3 {
            assert_eq!((a.arena.dim(k).lo(), a.arena.dim(k).hi()), (0.0, 5.0));
        }
    }

    let ex = common::bundled("example-1");
    assert_eq!(ex.agents.len(), 4);
}

#[test]
fn planning_is_deterministic() {
    let sc = common::bundled("case-study-1");
    let a = plan(&sc, &PlanOverrides::default()).unwrap();
    let b = plan(&sc, &PlanOverrides::default()).unwrap();
    assert_eq!(a.pre, b.pre);
    assert_eq!(a.post, b.post);
    assert_eq!(a.log, b.log);
    assert_eq!(a.report, b.report);
}

#[test]
fn obstacle_circumvention_clears_every_obstacle() {
    let sc = common::bundled("case-study-1");
    let p = plan(&sc, &PlanOverrides::default()).unwrap();
    let dt = sc.horizon() / 1e4;
    for (a, tube) in sc.agents.iter().zip(&p.pre) {
        let r = verify_tube(tube, &a.start, &a.target, &a.arena, &a.obstacles, dt).unwrap();
        assert!(r.all_ok(), "agent {}: {r:?}", a.id);
        assert!(r.obstacles.witness.is_none());
    }
    assert!(p.report.ok());
}

#[test]
fn conflict_free_plans_are_left_alone() {
    let sc = Scenario::from_toml(TWO_LANES).unwrap();
    let p = plan(&sc, &PlanOverrides::default()).unwrap();
    assert_eq!(p.log.updates().count(), 0);
    assert_eq!(p.log.passes(), 1);
    for (pre, post) in p.pre.iter().zip(&p.post) {
        assert!(!post.is_parameterized());
        assert_eq!(post.tube(), pre);
    }
}

#[test]
fn overlapping_targets_are_rejected() {
    let text = TWO_LANES.replace("[[9.0, 10.0], [7.0, 8.0]]", "[[8.5, 9.5], [1.5, 2.5]]");
    match Scenario::from_toml(&text) {
        Err(HarnessError::Invalid(msgs)) => assert!(msgs.iter().any(|m| m.contains("T1") && m.contains("T2")), "{msgs:?}"),
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn scenarios_without_agents_are_rejected() {
    let text = "version = 1\n[arena]\nbounds = [[0.0, 1.0], [0.0, 1.0]]\n";
    assert!(matches!(Scenario::from_toml(text), Err(HarnessError::Invalid(_))));
}

#[test]
fn unknown_schema_version_is_rejected() {
    let text = TWO_LANES.replacen("version = 1", "version = 7", 1);
    assert!(Scenario::from_toml(&text).is_err());
}

#[test]
fn weak_gains_lose_containment_under_large_disturbance() {
    let text = TWO_LANES
        .replace("prescribed_time_s = 20.0", "prescribed_time_s = 20.0\ngains = [1e-6]\ndisturbance_max = [1.0]")
        + "\n[simulation]\ndt_s = 0.01\n";
    let sc = Scenario::from_toml(&text).unwrap();
    let p = plan(&sc, &PlanOverrides::default()).unwrap();
    let settings = simulation_settings(&sc, &SimulationOverrides::default()).unwrap();
    let fleet = fleet_spec(&sc, &p.tubes(), &settings).unwrap();
    let runs = simulate(&fleet, &settings).unwrap();
    let run = &runs[0];
    let violations: usize = run.trajectories.iter().map(|t| t.funnel_violations()).sum();
    assert!(violations > 0);
    assert!(!run.report.all_contained);
    assert!(!run.verdicts.iter().all(|v| v.satisfied()));
}

#[test]
fn artifacts_round_trip_and_verify() {
    let sc = common::bundled("example-1");
    let p = plan(&sc, &PlanOverrides::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = write_plan(dir.path(), &sc, &p).unwrap();
    assert!(summary.success());

    let loaded = load_plan(dir.path()).unwrap();
    assert_eq!(loaded.pre, p.pre);
    assert_eq!(loaded.post, p.post);
    assert_eq!(loaded.log, p.log);
    assert_eq!(loaded.report, p.report);

    let v = verify_artifacts(dir.path()).unwrap();
    assert!(v.ok());
    assert!(v.matches_stored);
    assert_eq!(v.verdicts_satisfied, None);

    let settings = simulation_settings(
        &sc,
        &SimulationOverrides {
            dt: Some(0.05),
            ..Default::default()
        },
    )
    .unwrap();
    let fleet = fleet_spec(&sc, &p.tubes(), &settings).unwrap();
    let runs = simulate(&fleet, &settings).unwrap();
    write_simulation(dir.path(), &sc, &p, &settings, &runs).unwrap();
    assert_eq!(verify_artifacts(dir.path()).unwrap().verdicts_satisfied, Some(true));
}

#[test]
fn tampered_tubes_fail_verification() {
    let sc = common::bundled("example-1");
    let p = plan(&sc, &PlanOverrides::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_plan(dir.path(), &sc, &p).unwrap();
    let mut broken = p.clone();
    broken.post = p.pre.iter().cloned().map(tubenav::negotiation::ParameterizedTube::new).collect();
    write_plan(dir.path(), &sc, &broken).unwrap();
    let v = verify_artifacts(dir.path()).unwrap();
    assert!(!v.recomputed.disjointness.is_clean());
    assert!(!v.ok());
}

#[test]
fn missing_artifacts_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(verify_artifacts(dir.path()), Err(HarnessError::MissingArtifact(_))));
}

fn rows(path: &std::path::Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn export_writes_one_table_per_agent_and_dimension() {
    for (name, agents, dims) in [("case-study-1", 3, 2), ("case-study-2", 6, 3)] {
        let sc = common::bundled(name);
        let p = plan(&sc, &PlanOverrides::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_plan(dir.path(), &sc, &p).unwrap();
        let files = export_plot_data(dir.path(), 1000).unwrap();
        let tables: Vec<_> = files
            .iter()
            .filter(|f| f.file_name().unwrap().to_string_lossy().starts_with("tube_"))
            .collect();
        assert_eq!(tables.len(), agents * dims, "{name}");
        for f in tables {
            assert!(f.starts_with(dir.path().join(PLOT_DIR)));
            let r = rows(f);
            assert_eq!(r.len(), 1000);
            assert_eq!(r[0][0], 0.0);
            assert_eq!(r[999][0], sc.horizon());
            assert!(r.iter().all(|row| row[1] < row[2]));
        }
    }
}

#[test]
fn export_with_two_samples_gives_endpoints() {
    let sc = common::bundled("example-1");
    let p = plan(&sc, &PlanOverrides::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_plan(dir.path(), &sc, &p).unwrap();
    let files = export_plot_data(dir.path(), 2).unwrap();
    let f = files.iter().find(|f| f.ends_with("tube_agent1_dim2.csv")).unwrap();
    let r = rows(f);
    assert_eq!(r.len(), 2);
    let (start, target) = (&sc.agents[0].start, &sc.agents[0].target);
    assert_eq!((r[0][1], r[0][2]), (start.dim(1).lo(), start.dim(1).hi()));
    assert_eq!((r[1][1], r[1][2]), (target.dim(1).lo(), target.dim(1).hi()));
    assert!(export_plot_data(dir.path(), 1).is_err());

    let collisions = fs::read_to_string(dir.path().join(PLOT_DIR).join("collisions.csv")).unwrap();
    assert_eq!(collisions.lines().count(), 1 + p.log.updates().count());
}
