//! `tubenav`: plan, simulate, verify and export multi-agent tube scenarios.
//!
//! Exit status: 0 when every check passed, 1 when a plan or task check failed,
//! 2 on usage, input or I/O errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use tubenav::harness::{
    self, default_output_dir, PlanOverrides, Scenario, SimulationOverrides, Summary,
};

#[derive(Parser)]
#[command(name = "tubenav", version, about = "Multi-agent reach-avoid-stay planning with spatiotemporal tubes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, circumvent and negotiate tubes; write tube files and the negotiation log.
    Plan {
        scenario: PathBuf,
        /// Output directory (default: $TUBENAV_OUT_DIR/<name> or runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Freeze offset in seconds.
        #[arg(long)]
        delta: Option<f64>,
        /// Maximum number of token passes.
        #[arg(long)]
        max_iter: Option<usize>,
        /// Conflict detection grid in seconds.
        #[arg(long)]
        dt_check: Option<f64>,
    },
    /// Plan, then simulate the closed loop under one or more disturbance seeds.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of consecutive seeds to run.
        #[arg(long)]
        seeds: Option<usize>,
        /// First seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Integration step in seconds.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        dt_check: Option<f64>,
    },
    /// Reload an artifact directory and re-run every check.
    Verify { artifacts: PathBuf },
    /// Write plotting tables under <artifacts>/plot.
    Export {
        artifacts: PathBuf,
        /// Samples per tube boundary table.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

fn out_dir(out: Option<PathBuf>, scenario: &Scenario) -> PathBuf {
    out.unwrap_or_else(|| default_output_dir(&scenario.name))
}

fn load(path: &Path) -> Result<Scenario> {
    Scenario::load(path).with_context(|| format!("loading {}", path.display()))
}

fn report(summary: &Summary, dir: &Path) {
    let p = &summary.plan;
    println!(
        "plan: {} ({} passes, {} updates, updated agents {:?})",
        if p.ok { "ok" } else { "FAILED" },
        p.passes,
        p.parameterizations,
        p.updated_agents.iter().map(|a| a.0).collect::<Vec<_>>()
    );
    if let Some(s) = &summary.simulation {
        let satisfied = s.reports.iter().filter(|r| r.all_satisfied).count();
        println!(
            "simulation: {satisfied}/{} seeds satisfied, {} funnel violations, min distance {}",
            s.reports.len(),
            s.funnel_violations,
            s.min_distance.map_or_else(|| "n/a".to_string(), |d| format!("{d:.6}"))
        );
    }
    println!("artifacts: {}", dir.display());
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Plan {
            scenario,
            out,
            delta,
            max_iter,
            dt_check,
        } => {
            let sc = load(&scenario)?;
            let dir = out_dir(out, &sc);
            let plan = harness::plan(&sc, &PlanOverrides { delta, dt_check, max_iter })?;
            let summary = harness::write_plan(&dir, &sc, &plan)?;
            report(&summary, &dir);
            Ok(summary.success())
        }
        Command::Simulate {
            scenario,
            out,
            seeds,
            seed,
            dt,
            delta,
            max_iter,
            dt_check,
        } => {
            let sc = load(&scenario)?;
            let dir = out_dir(out, &sc);
            let plan = harness::plan(&sc, &PlanOverrides { delta, dt_check, max_iter })?;
            harness::write_plan(&dir, &sc, &plan)?;
            let settings = harness::simulation_settings(&sc, &SimulationOverrides { dt, seeds, seed })?;
            let fleet = harness::fleet_spec(&sc, &plan.tubes(), &settings)?;
            let runs = harness::simulate(&fleet, &settings)?;
            let summary = harness::write_simulation(&dir, &sc, &plan, &settings, &runs)?;
            report(&summary, &dir);
            Ok(summary.success())
        }
        Command::Verify { artifacts } => {
            let v = harness::verify_artifacts(&artifacts)?;
            for a in &v.recomputed.validity {
                let r = &a.report;
                println!(
                    "agent {}: arena {} start {} end {} obstacles {}",
                    a.agent,
                    pass(r.arena.ok),
                    pass(r.start.ok),
                    pass(r.end.ok),
                    pass(r.obstacles.ok)
                );
            }
            let d = &v.recomputed.disjointness;
            println!(
                "disjointness: {} ({} pairs, {} intersecting samples)",
                pass(d.is_clean()),
                d.pairs_checked,
                d.intersecting_samples
            );
            println!("stored report reproduced: {}", pass(v.matches_stored));
            if let Some(ok) = v.verdicts_satisfied {
                println!("verdicts: {}", pass(ok));
            }
            Ok(v.ok())
        }
        Command::Export { artifacts, samples } => {
            let files = harness::export_plot_data(&artifacts, samples)?;
            for f in &files {
                println!("{}", f.display());
            }
            Ok(true)
        }
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Error chain on one line; causes already quoted by their parent are skipped.
fn render(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if out.contains(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
    }
    out
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::from(2)
        }
    }
}
