use super::*;
use crate::control::{ChannelMap, ControllerGains};
use crate::tubes::{build_reachability_tube, Obstacle, WidthPolicy};

fn rect(b: &[[f64; 2]]) -> HyperRect {
    HyperRect::from_bounds(b).unwrap()
}

fn controller(kappa: f64, n: usize) -> Controller {
    Controller::new(ControllerGains::uniform(kappa, n).unwrap(), ChannelMap::Identity)
}

#[test]
fn equilibrium_at_centre_of_constant_tube() {
    let r = rect(&[[0.0, 2.0], [1.0, 3.0]]);
    let tube = Tube::constant(AgentId(0), &r, 0.0, 5.0).unwrap();
    let tr = simulate_agent(
        &DynamicsModel::SingleIntegrator { n: 2 },
        &tube,
        &controller(3.0, 2),
        &DisturbanceSpec::none(2),
        &[1.0, 2.0],
        0.01,
        5.0,
    )
    .unwrap();
    assert_eq!(tr.len(), 501);
    for i in 0..tr.len() {
        assert_eq!(tr.state(i), &[1.0, 2.0]);
        assert_eq!(tr.input(i), &[0.0, 0.0]);
        assert!(tr.contained(i));
    }
    assert_eq!(tr.time(500), 5.0);
}

#[test]
fn transit_stays_contained_under_disturbance() {
    let arena = rect(&[[0.0, 10.0]]);
    let tube = build_reachability_tube(
        AgentId(1),
        &rect(&[[0.0, 1.0]]),
        &rect(&[[9.0, 10.0]]),
        10.0,
        &arena,
        WidthPolicy::Full,
    )
    .unwrap();
    for seed in 0..20 {
        let d = DisturbanceSpec {
            d_max: vec![0.1],
            seed,
            process: DisturbanceProcess::Uniform,
        };
        let tr = simulate_agent(
            &DynamicsModel::SingleIntegrator { n: 1 },
            &tube,
            &controller(5.0, 1),
            &d,
            &[0.5],
            1e-3,
            10.5,
        )
        .unwrap();
        assert!(tr.all_contained(), "seed {seed}");
        assert_eq!(tr.funnel_violations(), 0);
        let v = evaluate_ras(&tr, &rect(&[[9.0, 10.0]]), &ObstacleSet::default(), Some(&arena), 10.0, 0.5);
        assert!(v.reach && v.avoid && v.stay, "{v:?}");
    }
}

#[test]
fn soft_gain_violates_and_keeps_running() {
    let arena = rect(&[[0.0, 10.0]]);
    let tube = build_reachability_tube(
        AgentId(1),
        &rect(&[[0.0, 1.0]]),
        &rect(&[[9.0, 10.0]]),
        10.0,
        &arena,
        WidthPolicy::Full,
    )
    .unwrap();
    let d = DisturbanceSpec {
        d_max: vec![1.0],
        seed: 1,
        process: DisturbanceProcess::ConstantBias,
    };
    let tr = simulate_agent(
        &DynamicsModel::SingleIntegrator { n: 1 },
        &tube,
        &controller(1e-6, 1),
        &d,
        &[0.5],
        1e-3,
        10.0,
    )
    .unwrap();
    assert_eq!(tr.len(), 10_001);
    assert!(tr.funnel_violations() > 0);
    assert!(!tr.all_contained());
}

#[test]
fn initial_state_outside_tube_is_rejected() {
    let tube = Tube::constant(AgentId(0), &rect(&[[0.0, 1.0]]), 0.0, 1.0).unwrap();
    let err = simulate_agent(
        &DynamicsModel::SingleIntegrator { n: 1 },
        &tube,
        &controller(1.0, 1),
        &DisturbanceSpec::none(1),
        &[1.0],
        0.01,
        1.0,
    )
    .unwrap_err();
    assert!(matches!(err, SimulationError::InitialOutsideTube { .. }));
}

fn pinned(states: &[[f64; 2]], dt: f64) -> Trajectory {
    let n = states.len();
    Trajectory {
        agent: AgentId(4),
        state_dim: 2,
        input_dim: 2,
        t: (0..n).map(|k| k as f64 * dt).collect(),
        x: states.iter().flatten().copied().collect(),
        u: vec![0.0; 2 * n],
        bounds: vec![0.0; 4 * n],
        contained: vec![true; n],
        events: Vec::new(),
    }
}

#[test]
fn ras_verdicts() {
    let target = rect(&[[0.0, 1.0], [0.0, 1.0]]);
    let tr = pinned(&[[0.5, 0.5]; 5], 1.0);
    let v = evaluate_ras(&tr, &target, &ObstacleSet::default(), None, 3.0, 1.0);
    assert!(v.reach && v.avoid && v.stay);
    assert_eq!(v.reach_time, Some(0.0));

    let obs = ObstacleSet::new(AgentId(4), vec![Obstacle::new("O1", rect(&[[2.0, 3.0], [2.0, 3.0]]))]);
    let tr = pinned(&[[5.0, 5.0], [2.5, 2.5], [0.5, 0.5], [0.5, 0.5], [5.0, 5.0]], 1.0);
    let v = evaluate_ras(&tr, &target, &obs, None, 3.0, 1.0);
    assert!(v.reach && !v.avoid && !v.stay);
    assert_eq!(v.avoid_violation, Some(1.0));
    assert_eq!(v.avoid_witness.as_deref(), Some("O1"));
    assert_eq!(v.stay_violation, Some(4.0));

    let arena = rect(&[[0.0, 4.0], [0.0, 4.0]]);
    let tr = pinned(&[[0.5, 0.5], [4.5, 0.5], [0.5, 0.5], [0.5, 0.5], [0.5, 0.5]], 1.0);
    let v = evaluate_ras(&tr, &target, &ObstacleSet::default(), Some(&arena), 3.0, 1.0);
    assert_eq!(v.avoid_witness.as_deref(), Some("arena"));
}

#[test]
fn rk4_is_fourth_order_on_a_smooth_plant() {
    let pendulum = DynamicsModel::Custom(CustomAffine::new(
        2,
        1,
        |x, out| {
            out[0] = x[1];
            out[1] = -x[0].sin();
        },
        |_, u, out| out[1] += u[0],
    ));
    let run = |dt: f64| {
        let steps = (2.0 / dt).round() as usize;
        let mut x = vec![1.0, 0.0];
        for _ in 0..steps {
            x = step_dynamics(&pendulum, &x, &[0.3], &[0.0, 0.0], dt).unwrap();
        }
        x
    };
    let a = run(0.1);
    let b = run(0.05);
    let c = run(0.025);
    let e1 = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let e2 = ((b[0] - c[0]).powi(2) + (b[1] - c[1]).powi(2)).sqrt();
    assert!((e1 / e2).log2() > 3.5, "order {}", (e1 / e2).log2());
}

fn fleet_agent(id: u32, s: HyperRect, t: HyperRect, arena: &HyperRect) -> FleetAgent {
    let tube = build_reachability_tube(AgentId(id), &s, &t, 10.0, arena, WidthPolicy::Full).unwrap();
    FleetAgent {
        id: AgentId(id),
        model: DynamicsModel::SingleIntegrator { n: 2 },
        tube,
        controller: controller(2.0, 2),
        d_max: vec![0.05, 0.05],
        process: DisturbanceProcess::Uniform,
        x0: s.center(),
        target: t,
        obstacles: ObstacleSet::default(),
        arena: arena.clone(),
        prescribed_time: 10.0,
        stay_window: 0.5,
        workspace_mask: vec![0, 1],
    }
}

#[test]
fn fleet_matches_single_runs_and_reports_distance() {
    let arena = rect(&[[0.0, 10.0], [0.0, 10.0]]);
    let a = fleet_agent(1, rect(&[[0.0, 1.0], [0.0, 1.0]]), rect(&[[9.0, 10.0], [0.0, 1.0]]), &arena);
    let b = fleet_agent(2, rect(&[[0.0, 1.0], [8.0, 9.0]]), rect(&[[9.0, 10.0], [8.0, 9.0]]), &arena);
    let spec = FleetSpec::new(vec![a.clone(), b], 1e-3, 0.0).unwrap();
    assert!(spec.tubes_disjoint());
    let run = simulate_fleet(&spec, 7).unwrap();
    assert!(run.report.all_satisfied && run.report.safety_chain_holds);
    assert!(run.report.min_distance.unwrap() > 6.0);

    let solo = simulate_agent(
        &a.model,
        &a.tube,
        &a.controller,
        &DisturbanceSpec {
            d_max: a.d_max.clone(),
            seed: 7,
            process: a.process,
        },
        &a.x0,
        1e-3,
        10.5,
    )
    .unwrap();
    assert_eq!(solo.final_state(), run.trajectories[0].final_state());

    let again = simulate_fleet(&spec, 7).unwrap();
    assert_eq!(again.trajectories, run.trajectories);
    let other = simulate_fleet(&spec, 8).unwrap();
    assert_ne!(other.trajectories, run.trajectories);
}

#[test]
fn csv_has_header_and_round_trip_floats() {
    let tr = pinned(&[[0.1, 1.0 / 3.0], [0.2, 0.3]], 0.5);
    let mut buf = Vec::new();
    tr.write_csv(&mut buf, 1).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x1,x2,u1,u2,lower1,upper1,lower2,upper2,contained");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[2].parse::<f64>().unwrap(), 1.0 / 3.0);
    assert_eq!(row[9], "1");
}
