#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tubenav::harness::{
    plan, AgentSpec, ArenaSpec, DynamicsKind, ObstacleSpec, Plan, PlanOverrides, Scenario, ScenarioFile,
};
use tubenav::tubes::WidthPolicy;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"))
}

pub fn bundled(name: &str) -> Scenario {
    Scenario::load(scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn gap(a: &[[f64; 2]], b: &[[f64; 2]], margin: f64) -> bool {
    a.iter().zip(b).any(|(x, y)| x[1] + margin < y[0] || y[1] + margin < x[0])
}

fn random_box(rng: &mut ChaCha8Rng, span: f64, sizes: (f64, f64), dims: usize) -> Vec<[f64; 2]> {
    (0..dims)
        .map(|_| {
            let w = rng.random_range(sizes.0..sizes.1);
            let lo = rng.random_range(0.0..span - w);
            [lo, lo + w]
        })
        .collect()
}

/// Well-posed scenario with 2-6 single integrators and 0-4 obstacles in a 2-D
/// or 3-D cube. Start and target boxes of all agents and the obstacles keep a
/// margin from one another.
pub fn random_scenario(rng: &mut ChaCha8Rng, index: usize) -> Scenario {
    let dims = if rng.random_bool(0.7) { 2 } else { 3 };
    let span = if dims == 2 { 10.0 } else { 5.0 };
    let sizes = if dims == 2 { (0.5, 1.0) } else { (0.3, 0.6) };
    let margin = 0.05 * span;
    let n_agents = rng.random_range(2..=6);
    let n_obstacles = rng.random_range(0..=4);
    let t_p = rng.random_range(50.0..200.0);

    let mut placed: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut place = |rng: &mut ChaCha8Rng, sizes: (f64, f64)| loop {
        let b = random_box(rng, span, sizes, dims);
        if placed.iter().all(|p| gap(p, &b, margin)) {
            placed.push(b.clone());
            return b;
        }
    };
    let mut agents = Vec::new();
    for id in 1..=n_agents {
        let initial = place(rng, sizes);
        let target = place(rng, sizes);
        agents.push(AgentSpec {
            id,
            dynamics: DynamicsKind::SingleIntegrator,
            initial,
            target,
            prescribed_time_s: t_p,
            gains: None,
            disturbance_max: None,
            channel_map: Default::default(),
            initial_state: None,
            obstacles: Vec::new(),
            width: WidthPolicy::Full,
        });
    }
    let obstacles = (1..=n_obstacles)
        .map(|j| ObstacleSpec {
            name: format!("O{j}"),
            bounds: place(rng, (sizes.0, 1.5 * sizes.1)),
        })
        .collect();
    let file = ScenarioFile {
        version: 1,
        name: Some(format!("random-{index}")),
        description: None,
        arena: ArenaSpec {
            bounds: vec![[0.0, span]; dims],
        },
        obstacles,
        agents,
        negotiation: Default::default(),
        simulation: Default::default(),
    };
    Scenario::from_file(file).expect("generator keeps scenarios well posed")
}

/// The first `count` generated scenarios that plan without an infeasibility
/// error, plus the number of draws that did not.
pub fn feasible_random_scenarios(count: usize, seed: u64) -> (Vec<(Scenario, Plan)>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut rejected = 0;
    let mut index = 0;
    while out.len() < count {
        let sc = random_scenario(&mut rng, index);
        index += 1;
        match plan(&sc, &PlanOverrides::default()) {
            Ok(p) => out.push((sc, p)),
            Err(_) => rejected += 1,
        }
    }
    (out, rejected)
}
