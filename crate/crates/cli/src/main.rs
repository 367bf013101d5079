use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sdmon_core::navigation::{coverage_cells, coverage_gaps};
use sdmon_core::runner::{replay_log, run_scenario};
use sdmon_core::scenario::{Scenario, ScenarioError};

/// Scenario runner for the social-distance monitoring simulator.
#[derive(Parser)]
#[command(name = "sdmon", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and print the summary report as JSON.
    Run {
        scenario: PathBuf,
        /// Override the scenario's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the run duration in seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Write events.ndjson, summary.json and trajectories.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a scenario file without running it.
    Validate { scenario: PathBuf },
    /// Recompute the summary statistics from a previously written event log.
    Replay { log: PathBuf },
    /// Audit the patrol plan: every 0.25 m grid cell of the region outside
    /// the camera footprint must lie within sensor range of the path.
    Coverage { scenario: PathBuf },
}

/// Exit code 1 for runtime failures, 2 for anything wrong with the inputs.
enum Failure {
    Runtime(String),
    Invalid(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Invalid(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Runtime(m) | Failure::Invalid(m) => m,
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io(_) => Failure::Runtime(e.to_string()),
            ScenarioError::Parse(_) | ScenarioError::Validation(_) => {
                Failure::Invalid(e.to_string())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run {
            scenario,
            seed,
            duration,
            out,
        } => cmd_run(scenario, seed, duration, out),
        Cmd::Validate { scenario } => cmd_validate(scenario),
        Cmd::Replay { log } => cmd_replay(log),
        Cmd::Coverage { scenario } => cmd_coverage(scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn cmd_run(
    path: PathBuf,
    seed: Option<u64>,
    duration: Option<f64>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut sc = Scenario::load(&path)?;
    if let Some(seed) = seed {
        sc.seed = seed;
    }
    if let Some(d) = duration {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Failure::Invalid(format!(
                "duration override must be a positive number of seconds, got {d}"
            )));
        }
        // A survey window that spanned the whole run stretches with it.
        if (sc.survey_window.1 - sc.duration_s).abs() < 1e-9 {
            sc.survey_window.1 = d;
        }
        sc.duration_s = d;
    }
    let report = run_scenario(&sc).map_err(|e| Failure::Runtime(e.to_string()))?;
    if let Some(dir) = out {
        let io = |e: std::io::Error| Failure::Runtime(format!("cannot write report: {e}"));
        fs::create_dir_all(&dir).map_err(io)?;
        fs::write(dir.join("events.ndjson"), report.event_log()).map_err(io)?;
        fs::write(dir.join("summary.json"), report.summary_json()).map_err(io)?;
        fs::write(dir.join("trajectories.csv"), report.trajectory_table()).map_err(io)?;
        eprintln!("wrote {}", dir.display());
    }
    print!("{}", report.summary_json());
    Ok(())
}

fn cmd_validate(path: PathBuf) -> Result<(), Failure> {
    let sc = Scenario::load(&path)?;
    println!(
        "ok: tag={} duration={}s pedestrians={} obstacles={} rgbd={} cctv={}",
        sc.tag,
        sc.duration_s,
        sc.pedestrians.len(),
        sc.obstacles.len(),
        if sc.rgbd.is_some() { "yes" } else { "no" },
        sc.cctv.len(),
    );
    Ok(())
}

fn cmd_replay(path: PathBuf) -> Result<(), Failure> {
    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::Runtime(format!("cannot read log: {e}")))?;
    let (meta, summary) = replay_log(&text).map_err(|e| Failure::Invalid(e.to_string()))?;
    let out = serde_json::json!({
        "tag": meta.tag,
        "seed": meta.seed,
        "survey_start_s": meta.survey_start_s,
        "survey_end_s": meta.survey_end_s,
        "breach_pairs_cctv": summary.breach_pairs_cctv,
        "breach_pairs_rgbd_only": summary.breach_pairs_rgbd_only,
        "breach_pairs_hybrid": summary.breach_pairs_hybrid,
        "enforcement_count": summary.enforcement_count,
        "attend_times": summary.attend_times,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("summary serializes")
    );
    Ok(())
}

fn cmd_coverage(path: PathBuf) -> Result<(), Failure> {
    let sc = Scenario::load(&path)?;
    let spec = sc.lawnmower.as_ref().ok_or_else(|| {
        Failure::Invalid("scenario has no [lawnmower] section to audit".into())
    })?;
    let range = sc
        .rgbd
        .as_ref()
        .map(|c| c.range_r)
        .ok_or_else(|| Failure::Invalid("patrol coverage needs an [rgbd] camera".into()))?;
    let plan = sc
        .build_lawnmower()
        .expect("validated scenario always yields a plan");
    let footprint = sc.lawnmower_footprint();
    let cells = coverage_cells(spec.region_min, spec.region_max, footprint);
    let gaps = coverage_gaps(&plan, spec.region_min, spec.region_max, footprint, range);
    let covered = cells.len() - gaps.len();
    println!("waypoints: {}", plan.waypoints.len());
    println!(
        "coverage: {}/{} cells ({:.1}%)",
        covered,
        cells.len(),
        100.0 * covered as f64 / cells.len().max(1) as f64
    );
    if gaps.is_empty() {
        println!("complete");
        Ok(())
    } else {
        let g = gaps[0];
        Err(Failure::Runtime(format!(
            "{} uncovered cells, first at ({:.2}, {:.2})",
            gaps.len(),
            g.x,
            g.y
        )))
    }
}
