use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::pipeline::{verify_plan, Plan, PlanReport, SimulationSettings};
use super::scenario::Scenario;
use super::HarnessError;
use crate::negotiation::{Action, NegotiationLog, ParameterizedTube};
use crate::simulation::{Event, FleetReport, FleetRun, RasVerdict};
use crate::tubes::Tube;
use crate::AgentId;

pub const SCENARIO_FILE: &str = "scenario.toml";
pub const TUBES_PRE_FILE: &str = "tubes_pre.json";
pub const TUBES_POST_FILE: &str = "tubes_post.json";
pub const NEGOTIATION_FILE: &str = "negotiation.jsonl";
pub const PLAN_REPORT_FILE: &str = "plan_report.json";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const VERDICTS_FILE: &str = "verdicts.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRAJECTORY_DIR: &str = "trajectories";
pub const PLOT_DIR: &str = "plot";

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "TUBENAV_OUT_DIR";

/// `$TUBENAV_OUT_DIR/<name>`, or `runs/<name>` when the variable is unset.
pub fn default_output_dir(name: &str) -> PathBuf {
    let root = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    root.join(name)
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp-{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| HarnessError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| HarnessError::io(&tmp, e))?;
    f.sync_all().map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let f = fs::File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            HarnessError::MissingArtifact(path.to_path_buf())
        } else {
            HarnessError::io(path, e)
        }
    })?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| HarnessError::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TubeFile<T> {
    version: u32,
    tubes: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedVerdicts {
    pub seed: u64,
    pub verdicts: Vec<RasVerdict>,
}

#[derive(Serialize)]
struct SeedEvent<'a> {
    seed: u64,
    #[serde(flatten)]
    event: &'a Event,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub ok: bool,
    pub passes: usize,
    pub updated_agents: Vec<AgentId>,
    pub parameterizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub settings: SimulationSettings,
    pub reports: Vec<FleetReport>,
    pub funnel_violations: usize,
    pub min_distance: Option<f64>,
    pub all_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub agents: Vec<AgentId>,
    pub plan: PlanSummary,
    pub simulation: Option<SimulationSummary>,
}

impl Summary {
    /// Plan verified and, when simulated, every agent satisfied its task under every seed.
    pub fn success(&self) -> bool {
        self.plan.ok && self.simulation.as_ref().is_none_or(|s| s.all_satisfied)
    }
}

fn plan_summary(plan: &Plan) -> PlanSummary {
    PlanSummary {
        ok: plan.report.ok(),
        passes: plan.log.passes(),
        updated_agents: plan.log.updated_agents(),
        parameterizations: plan.log.updates().count(),
    }
}

/// Writes the scenario, tubes, negotiation log, plan report and a summary.
pub fn write_plan(dir: &Path, scenario: &Scenario, plan: &Plan) -> Result<Summary, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_atomic(&dir.join(SCENARIO_FILE), scenario.to_toml().as_bytes())?;
    write_json(
        &dir.join(TUBES_PRE_FILE),
        &TubeFile {
            version: 1,
            tubes: plan.pre.clone(),
        },
    )?;
    write_json(
        &dir.join(TUBES_POST_FILE),
        &TubeFile {
            version: 1,
            tubes: plan.post.clone(),
        },
    )?;
    let mut log = Vec::new();
    plan.log
        .write_jsonl(&mut log)
        .map_err(|e| HarnessError::io(&dir.join(NEGOTIATION_FILE), e))?;
    write_atomic(&dir.join(NEGOTIATION_FILE), &log)?;
    write_json(&dir.join(PLAN_REPORT_FILE), &plan.report)?;
    let summary = Summary {
        scenario: scenario.name.clone(),
        agents: scenario.agent_ids(),
        plan: plan_summary(plan),
        simulation: None,
    };
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

pub fn trajectory_path(dir: &Path, agent: AgentId, seed: u64) -> PathBuf {
    dir.join(TRAJECTORY_DIR).join(format!("agent_{agent}_seed_{seed}.csv"))
}

/// Writes trajectories, events, verdicts and an updated summary.
pub fn write_simulation(
    dir: &Path,
    scenario: &Scenario,
    plan: &Plan,
    settings: &SimulationSettings,
    runs: &[FleetRun],
) -> Result<Summary, HarnessError> {
    let mut events = Vec::new();
    let mut verdicts = Vec::new();
    for run in runs {
        let seed = run.report.seed;
        for tr in &run.trajectories {
            let mut buf = Vec::new();
            tr.write_csv(&mut buf, settings.trajectory_stride)
                .map_err(|e| HarnessError::io(dir, e))?;
            write_atomic(&trajectory_path(dir, tr.agent(), seed), &buf)?;
            for ev in tr.events() {
                serde_json::to_writer(&mut events, &SeedEvent { seed, event: ev }).expect("in-memory write");
                events.push(b'\n');
            }
        }
        for ev in &run.events {
            serde_json::to_writer(&mut events, &SeedEvent { seed, event: ev }).expect("in-memory write");
            events.push(b'\n');
        }
        verdicts.push(SeedVerdicts {
            seed,
            verdicts: run.verdicts.clone(),
        });
    }
    write_atomic(&dir.join(EVENTS_FILE), &events)?;
    write_json(&dir.join(VERDICTS_FILE), &verdicts)?;

    let reports: Vec<FleetReport> = runs.iter().map(|r| r.report.clone()).collect();
    let summary = Summary {
        scenario: scenario.name.clone(),
        agents: scenario.agent_ids(),
        plan: plan_summary(plan),
        simulation: Some(SimulationSummary {
            settings: settings.clone(),
            funnel_violations: runs
                .iter()
                .flat_map(|r| &r.verdicts)
                .map(|v| v.funnel_violations)
                .sum(),
            min_distance: reports.iter().filter_map(|r| r.min_distance).reduce(f64::min),
            all_satisfied: reports.iter().all(|r| r.all_satisfied),
            reports,
        }),
    };
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

/// Plan artifacts read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedPlan {
    pub scenario: Scenario,
    pub pre: Vec<Tube>,
    pub post: Vec<ParameterizedTube>,
    pub log: NegotiationLog,
    pub report: PlanReport,
}

impl LoadedPlan {
    pub fn into_plan(self) -> (Scenario, Plan) {
        (
            self.scenario,
            Plan {
                pre: self.pre,
                post: self.post,
                log: self.log,
                report: self.report,
            },
        )
    }
}

pub fn load_plan(dir: &Path) -> Result<LoadedPlan, HarnessError> {
    let scenario_path = dir.join(SCENARIO_FILE);
    if !scenario_path.exists() {
        return Err(HarnessError::MissingArtifact(scenario_path));
    }
    let scenario = Scenario::load(&scenario_path)?;
    let pre: TubeFile<Tube> = read_json(&dir.join(TUBES_PRE_FILE))?;
    let post: TubeFile<ParameterizedTube> = read_json(&dir.join(TUBES_POST_FILE))?;
    for t in &pre.tubes {
        t.validate().map_err(|source| HarnessError::Tube { agent: t.agent(), source })?;
    }
    for t in &post.tubes {
        t.validate().map_err(|source| HarnessError::Tube { agent: t.agent(), source })?;
    }
    let log_path = dir.join(NEGOTIATION_FILE);
    let f = fs::File::open(&log_path).map_err(|_| HarnessError::MissingArtifact(log_path.clone()))?;
    let log = NegotiationLog::read_jsonl(BufReader::new(f)).map_err(|e| HarnessError::io(&log_path, e))?;
    let report: PlanReport = read_json(&dir.join(PLAN_REPORT_FILE))?;
    Ok(LoadedPlan {
        scenario,
        pre: pre.tubes,
        post: post.tubes,
        log,
        report,
    })
}

/// Outcome of re-verifying an artifact directory.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub recomputed: PlanReport,
    /// Recomputed plan report equals the stored one exactly.
    pub matches_stored: bool,
    /// `Some(all satisfied)` when simulation verdicts are present.
    pub verdicts_satisfied: Option<bool>,
}

impl VerifyOutcome {
    pub fn ok(&self) -> bool {
        self.recomputed.ok() && self.matches_stored && self.verdicts_satisfied != Some(false)
    }
}

/// Reloads the artifacts in `dir` and re-runs every plan check.
pub fn verify_artifacts(dir: &Path) -> Result<VerifyOutcome, HarnessError> {
    let loaded = load_plan(dir)?;
    let tubes: Vec<Tube> = loaded.post.iter().map(|p| p.tube().clone()).collect();
    let recomputed = verify_plan(&loaded.scenario, &tubes, loaded.report.params)?;
    let verdicts_satisfied = if dir.join(VERDICTS_FILE).exists() {
        let v: Vec<SeedVerdicts> = read_json(&dir.join(VERDICTS_FILE))?;
        Some(v.iter().flat_map(|s| &s.verdicts).all(RasVerdict::satisfied))
    } else {
        None
    };
    Ok(VerifyOutcome {
        matches_stored: recomputed == loaded.report,
        recomputed,
        verdicts_satisfied,
    })
}

/// Writes plotting tables under `dir/plot`:
///
/// * `tube_agent<id>_dim<k>.csv` with `t,lower,upper` at `samples` uniform times
///   for every workspace dimension,
/// * `collisions.csv` with the collision interval of every negotiation update,
/// * `trajectory_agent<id>.csv` with the workspace positions of the lowest
///   simulated seed, resampled to at most `samples` rows, when trajectories exist.
pub fn export_plot_data(dir: &Path, samples: usize) -> Result<Vec<PathBuf>, HarnessError> {
    if samples < 2 {
        return Err(HarnessError::Invalid(vec!["export needs at least 2 samples".into()]));
    }
    let loaded = load_plan(dir)?;
    let out = dir.join(PLOT_DIR);
    let mut written = Vec::new();
    for (a, p) in loaded.scenario.agents.iter().zip(&loaded.post) {
        let tube = p.tube();
        let (t0, t1) = (tube.start_time(), tube.horizon());
        for &k in &a.workspace_mask {
            let mut s = String::from("t,lower,upper\n");
            for i in 0..samples {
                let t = if i == samples - 1 {
                    t1
                } else {
                    t0 + (t1 - t0) * (i as f64 / (samples - 1) as f64)
                };
                let (lo, hi) = tube.profile(k).bounds(t);
                s.push_str(&format!("{t},{lo},{hi}\n"));
            }
            let path = out.join(format!("tube_agent{}_dim{}.csv", a.id, k + 1));
            write_atomic(&path, s.as_bytes())?;
            written.push(path);
        }
    }

    let mut s = String::from("iter,hub,neighbors,t_lo,t_hi\n");
    for r in loaded.log.records().iter().filter(|r| r.action == Action::Parameterized) {
        let neighbors: Vec<String> = r.conflict_pair.iter().map(|p| p[1].to_string()).collect();
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iter,
            r.hub,
            neighbors.join(";"),
            r.t_lo.unwrap_or(f64::NAN),
            r.t_hi.unwrap_or(f64::NAN)
        ));
    }
    let path = out.join("collisions.csv");
    write_atomic(&path, s.as_bytes())?;
    written.push(path);

    if let Ok(v) = read_json::<Vec<SeedVerdicts>>(&dir.join(VERDICTS_FILE)) {
        if let Some(seed) = v.iter().map(|s| s.seed).min() {
            for a in &loaded.scenario.agents {
                let src = trajectory_path(dir, a.id, seed);
                let Ok(text) = fs::read_to_string(&src) else {
                    continue;
                };
                let rows: Vec<&str> = text.lines().skip(1).collect();
                let mut s = String::from("t");
                for &k in &a.workspace_mask {
                    s.push_str(&format!(",x{}", k + 1));
                }
                s.push('\n');
                let n = rows.len();
                let picks: Vec<usize> = if n <= samples {
                    (0..n).collect()
                } else {
                    (0..samples).map(|i| i * (n - 1) / (samples - 1)).collect()
                };
                for i in picks {
                    let cols: Vec<&str> = rows[i].split(',').collect();
                    s.push_str(cols[0]);
                    for &k in &a.workspace_mask {
                        s.push(',');
                        s.push_str(cols[1 + k]);
                    }
                    s.push('\n');
                }
                let path = out.join(format!("trajectory_agent{}.csv", a.id));
                write_atomic(&path, s.as_bytes())?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
