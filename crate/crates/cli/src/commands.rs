use crate::artifacts::{self, Artifacts, Metrics, TelemetryRow};
use crate::error::{CliError, Result};
use lmpc_core::datastore::{IterationDataset, Trajectory};
use lmpc_core::lmpc_agent::StepTelemetry;
use lmpc_core::orchestrator::{
    cost_decrease_violations, min_pairwise_distance, run, verify_trajectories, CostViolation, IterationRecord,
    RunRecord, RunReport, ScenarioConfig,
};
use lmpc_core::synthesis::{synthesize, verify_reachability, ReachabilityReport, SynthesisParams};
use lmpc_core::trajopt::SolverSettings;
use lmpc_core::Error;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_VIOLATIONS: i32 = 3;

#[derive(Clone, Copy, Debug, Default)]
pub struct RunFlags {
    pub max_iterations: Option<usize>,
    /// Leave wall-clock timings out of every artifact.
    pub deterministic: bool,
}

/// Runs the scenario and writes all artifacts into `out`, then verifies them
/// from disk.
pub fn run_to_dir(scenario: &Path, out: &Path, flags: RunFlags) -> Result<(RunRecord, VerifyReport)> {
    let config = artifacts::load_scenario(scenario)?;
    let record = run(&config, &SolverSettings::default(), flags.max_iterations)?;
    write_run(out, &config, &record, !flags.deterministic)?;
    let report = verify_dir(out)?;
    Ok((record, report))
}

pub fn write_run(out: &Path, config: &ScenarioConfig, record: &RunRecord, with_timing: bool) -> Result<()> {
    fs::create_dir_all(out).map_err(CliError::io(out))?;
    artifacts::write_json(&out.join(artifacts::SCENARIO_FILE), config)?;
    for rec in &record.iterations {
        let path = artifacts::trajectories_path(out, rec.iteration);
        artifacts::write_trajectories(&path, rec.iteration, &rec.trajectories, &rec.telemetry, with_timing)?;
    }
    artifacts::write_telemetry(&out.join(artifacts::TELEMETRY_FILE), record, with_timing)?;
    artifacts::write_json(&out.join(artifacts::METRICS_FILE), &Metrics::from_record(record, with_timing))
}

pub fn cmd_run(scenario: &Path, out: &Path, flags: RunFlags) -> i32 {
    match run_to_dir(scenario, out, flags) {
        Ok((record, report)) => {
            let costs = record.global_costs();
            eprintln!("global cost per iteration: {costs:?}");
            if report.passed {
                EXIT_OK
            } else {
                eprintln!("run finished but its artifacts fail verification; see {}", artifacts::VERIFY_FILE);
                EXIT_ERROR
            }
        }
        Err(CliError::Core(e @ Error::ScenarioInfeasible(_))) => {
            eprintln!("error: {e}");
            EXIT_INFEASIBLE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationReachability {
    pub iteration: usize,
    pub params_used: SynthesisParams,
    pub report: ReachabilityReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub iterations: usize,
    pub run: RunReport,
    /// Terminal components rebuilt from the stored data preceding each iteration.
    pub reachability: Vec<IterationReachability>,
    pub synthesis_errors: Vec<String>,
    pub cost: Vec<CostViolation>,
    /// Disagreements between `metrics.json` and the trajectories.
    pub metrics: Vec<String>,
    /// Checks that could not run, such as reachability past corrupted data.
    pub skipped: Vec<String>,
}

fn reachability_checks(arts: &Artifacts, report: &mut VerifyReport) {
    let config = &arts.scenario;
    let radii = config.radii();
    let models = config.agents.iter().map(|a| a.model).collect();
    let goals = (0..config.agents.len()).map(|i| config.goal(i)).collect();
    let mut dataset = IterationDataset::new(models, goals, config.eps);
    for (q, trajs) in arts.iterations.iter().enumerate() {
        if q > 0 {
            match synthesize(&dataset, config.synthesis, &radii) {
                Ok(s) => report.reachability.push(IterationReachability {
                    iteration: q,
                    params_used: s.params_used,
                    report: verify_reachability(&s, &dataset, &radii),
                }),
                Err(e) => report.synthesis_errors.push(format!("iteration {q}: {e}")),
            }
        }
        if let Err(e) = dataset.record_iteration(trajs.clone()) {
            if q + 1 < arts.iterations.len() {
                report.skipped.push(format!("reachability from iteration {}: {e}", q + 1));
            }
            return;
        }
    }
}

fn telemetry_record(arts: &Artifacts, rows: &[TelemetryRow]) -> RunRecord {
    let m = arts.scenario.agents.len();
    let mut telemetry: Vec<Vec<Vec<StepTelemetry>>> = vec![vec![Vec::new(); m]; arts.iterations.len()];
    for r in rows {
        if let Some(agent) = telemetry.get_mut(r.iteration).and_then(|it| it.get_mut(r.agent)) {
            agent.push(r.to_step());
        }
    }
    let iterations = arts
        .iterations
        .iter()
        .zip(telemetry)
        .enumerate()
        .map(|(q, (trajectories, telemetry))| IterationRecord {
            iteration: q,
            trajectories: trajectories.clone(),
            telemetry,
            synthesis: None,
        })
        .collect();
    RunRecord { iterations, converged_at: None }
}

fn metrics_checks(arts: &Artifacts, metrics: &Metrics) -> Vec<String> {
    let mut out = Vec::new();
    let costs: Vec<usize> =
        arts.iterations.iter().map(|t| t.iter().map(|x| x.completion_time).max().unwrap_or(0)).collect();
    if metrics.global_costs != costs {
        out.push(format!("global costs {:?} differ from trajectories {:?}", metrics.global_costs, costs));
    }
    for (q, (m, trajs)) in metrics.iterations.iter().zip(&arts.iterations).enumerate() {
        let d = min_pairwise_distance(trajs);
        if m.min_distance.to_bits() != d.to_bits() && !(m.min_distance.is_infinite() && d.is_infinite()) {
            out.push(format!("iteration {q}: min distance {} differs from trajectories {d}", m.min_distance));
        }
    }
    out
}

/// Re-checks a run directory from its stored trajectories alone and writes
/// `verify-report.json`.
pub fn verify_dir(dir: &Path) -> Result<VerifyReport> {
    let arts = artifacts::load_artifacts(dir)?;
    let mut report = VerifyReport {
        passed: false,
        iterations: arts.iterations.len(),
        run: verify_trajectories(&arts.iterations, &arts.scenario),
        reachability: Vec::new(),
        synthesis_errors: Vec::new(),
        cost: Vec::new(),
        metrics: Vec::new(),
        skipped: Vec::new(),
    };
    reachability_checks(&arts, &mut report);
    let telemetry = dir.join(artifacts::TELEMETRY_FILE);
    if telemetry.is_file() {
        let rows = artifacts::read_telemetry(&telemetry)?;
        report.cost = cost_decrease_violations(&telemetry_record(&arts, &rows));
    } else {
        report.skipped.push(format!("cost decrease: no {}", artifacts::TELEMETRY_FILE));
    }
    let metrics = dir.join(artifacts::METRICS_FILE);
    if metrics.is_file() {
        report.metrics = metrics_checks(&arts, &artifacts::read_json(&metrics)?);
    }
    report.passed = report.run.passed()
        && report.reachability.iter().all(|r| r.report.passed())
        && report.synthesis_errors.is_empty()
        && report.cost.is_empty()
        && report.metrics.is_empty()
        && report.skipped.is_empty();
    artifacts::write_json(&dir.join(artifacts::VERIFY_FILE), &report)?;
    Ok(report)
}

fn describe(report: &VerifyReport) -> Vec<String> {
    let mut lines: Vec<String> = report.run.violations.iter().map(|v| format!("{v:?}")).collect();
    for r in &report.reachability {
        lines.extend(r.report.violations.iter().map(|v| format!("iteration {}: {v:?}", r.iteration)));
    }
    lines.extend(report.synthesis_errors.iter().cloned());
    lines.extend(report.cost.iter().map(|v| format!("{v:?}")));
    lines.extend(report.metrics.iter().cloned());
    lines.extend(report.skipped.iter().map(|s| format!("skipped {s}")));
    lines
}

pub fn cmd_verify(dir: &Path) -> i32 {
    match verify_dir(dir) {
        Ok(report) if report.passed => {
            eprintln!("verified {} iterations", report.iterations);
            EXIT_OK
        }
        Ok(report) => {
            let lines = describe(&report);
            for line in lines.iter().take(20) {
                eprintln!("violation: {line}");
            }
            if lines.len() > 20 {
                eprintln!("... {} more in {}", lines.len() - 20, artifacts::VERIFY_FILE);
            }
            EXIT_VIOLATIONS
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Steps between position snapshots.
pub const SNAPSHOT_STRIDE: usize = 10;

fn position_at(traj: &Trajectory, t: usize) -> (f64, f64) {
    let s = &traj.states[t.min(traj.states.len() - 1)];
    (s[0], s[1])
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::malformed(path, e))?;
    w.write_record(header).map_err(|e| CliError::malformed(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::malformed(path, e))?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Plot-ready tables: initial versus final paths, speed and input profiles,
/// per-iteration minimum distance and buffer snapshots.
pub fn export_dir(dir: &Path, out: &Path) -> Result<()> {
    let arts = artifacts::load_artifacts(dir)?;
    fs::create_dir_all(out).map_err(CliError::io(out))?;
    let f = artifacts::format_float;
    let last = arts.iterations.len() - 1;
    let ends: Vec<usize> = if last == 0 { vec![0] } else { vec![0, last] };

    let mut paths = Vec::new();
    for &q in &ends {
        for (i, traj) in arts.iterations[q].iter().enumerate() {
            for (t, s) in traj.states.iter().enumerate() {
                paths.push(vec![q.to_string(), i.to_string(), t.to_string(), f(s[0]), f(s[1])]);
            }
        }
    }
    write_rows(&out.join("paths.csv"), &["iteration", "agent", "t", "x", "y"], paths)?;

    let mut profiles = Vec::new();
    for (q, trajs) in arts.iterations.iter().enumerate() {
        for (i, traj) in trajs.iter().enumerate() {
            for (t, s) in traj.states.iter().enumerate() {
                let (d, a) = traj.inputs.get(t).map_or((String::new(), String::new()), |u| (f(u[0]), f(u[1])));
                profiles.push(vec![q.to_string(), i.to_string(), t.to_string(), f(s[3]), d, a]);
            }
        }
    }
    write_rows(&out.join("profiles.csv"), &["iteration", "agent", "t", "v", "delta", "a"], profiles)?;

    let radii = arts.scenario.radii();
    let required = (0..radii.len())
        .flat_map(|a| (a + 1..radii.len()).map(move |b| (a, b)))
        .map(|(a, b)| radii[a] + radii[b])
        .fold(f64::INFINITY, f64::min);
    let distances = arts.iterations.iter().enumerate().map(|(q, trajs)| {
        vec![q.to_string(), f(min_pairwise_distance(trajs)), if required.is_finite() { f(required) } else { String::new() }]
    });
    write_rows(&out.join("min_distance.csv"), &["iteration", "min_distance", "required"], distances)?;

    let mut snapshots = Vec::new();
    for &q in &ends {
        let trajs = &arts.iterations[q];
        let makespan = trajs.iter().map(|t| t.completion_time).max().unwrap_or(0);
        let mut times: Vec<usize> = (0..=makespan).step_by(SNAPSHOT_STRIDE).collect();
        if times.last() != Some(&makespan) {
            times.push(makespan);
        }
        for t in times {
            for (i, traj) in trajs.iter().enumerate() {
                let (x, y) = position_at(traj, t);
                snapshots.push(vec![q.to_string(), t.to_string(), i.to_string(), f(x), f(y), f(radii[i])]);
            }
        }
    }
    write_rows(&out.join("snapshots.csv"), &["iteration", "t", "agent", "x", "y", "radius"], snapshots)
}

pub fn cmd_export(dir: &Path, out: &Path) -> i32 {
    match export_dir(dir, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
