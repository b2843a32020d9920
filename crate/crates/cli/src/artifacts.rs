//! Run artifact layout, CSV/JSON emission and parsing.
//!
//! ```text
//! <out>/scenario.json
//! <out>/iterations/q<k>/trajectories.csv
//! <out>/telemetry.csv
//! <out>/metrics.json
//! <out>/verify-report.json
//! ```

use crate::error::{CliError, Result};
use lmpc_core::datastore::Trajectory;
use lmpc_core::dynamics::{Input, State};
use lmpc_core::lmpc_agent::{SearchStats, StepTelemetry};
use lmpc_core::orchestrator::{RunRecord, ScenarioConfig, SynthesisSummary};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

pub const SCENARIO_FILE: &str = "scenario.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const VERIFY_FILE: &str = "verify-report.json";
pub const TELEMETRY_FILE: &str = "telemetry.csv";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const ITERATIONS_DIR: &str = "iterations";

pub const TRAJECTORY_HEADER: [&str; 11] =
    ["agent", "iteration", "t", "x", "y", "psi", "v", "delta", "a", "terminal_gap", "solve_ms"];

pub fn iteration_dir(root: &Path, q: usize) -> PathBuf {
    root.join(ITERATIONS_DIR).join(format!("q{q}"))
}

pub fn trajectories_path(root: &Path, q: usize) -> PathBuf {
    iteration_dir(root, q).join(TRAJECTORIES_FILE)
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses a scenario, reporting the line, column and field path of the first
/// problem. Semantic checks run after parsing succeeds.
pub fn parse_scenario(text: &str, path: &Path) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        CliError::Config {
            path: path.to_path_buf(),
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    if !path.is_file() {
        return Err(CliError::MissingArtifact(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_scenario(&text, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact types serialize");
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.is_file() {
        return Err(CliError::MissingArtifact(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::malformed(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    csv::Writer::from_path(path).map_err(|e| CliError::malformed(path, e))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    if !path.is_file() {
        return Err(CliError::MissingArtifact(path.to_path_buf()));
    }
    csv::Reader::from_path(path).map_err(|e| CliError::malformed(path, e))
}

/// Writes one iteration's trajectories. Inputs sit on the row of the state
/// they were applied at; each agent's last row leaves them empty.
/// `telemetry` may be empty (initial iteration); `with_timing` controls the
/// wall-clock column.
pub fn write_trajectories(
    path: &Path,
    iteration: usize,
    trajectories: &[Trajectory],
    telemetry: &[Vec<StepTelemetry>],
    with_timing: bool,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e: csv::Error| CliError::malformed(path, e);
    w.write_record(TRAJECTORY_HEADER).map_err(err)?;
    for (agent, traj) in trajectories.iter().enumerate() {
        let tel = telemetry.get(agent);
        for (t, x) in traj.states.iter().enumerate() {
            let mut row = vec![agent.to_string(), iteration.to_string(), t.to_string()];
            row.extend(x.iter().map(|v| format_float(*v)));
            match traj.inputs.get(t) {
                Some(u) => {
                    row.push(format_float(u[0]));
                    row.push(format_float(u[1]));
                    let step = tel.and_then(|s| s.get(t));
                    row.push(step.map(|s| format_float(s.terminal_gap)).unwrap_or_default());
                    row.push(step.filter(|_| with_timing).map(|s| format!("{:.3}", s.solve_ms)).unwrap_or_default());
                }
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
            w.write_record(&row).map_err(err)?;
        }
    }
    w.flush().map_err(CliError::io(path))
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, name: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| CliError::malformed(path, format!("line {line}: bad `{name}` value {s:?}")))
}

/// Reads one iteration's trajectories back. Rows must be grouped by agent
/// in ascending order with consecutive times from zero.
pub fn read_trajectories(path: &Path, iteration: usize) -> Result<Vec<Trajectory>> {
    let mut r = csv_reader(path)?;
    let header = r.headers().map_err(|e| CliError::malformed(path, e))?.clone();
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(CliError::malformed(path, format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut agents: Vec<(Vec<State>, Vec<Input>)> = Vec::new();
    let mut closed = false;
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::malformed(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("");
        let agent: usize = parse_field(path, line, "agent", field(0))?;
        let q: usize = parse_field(path, line, "iteration", field(1))?;
        let t: usize = parse_field(path, line, "t", field(2))?;
        if q != iteration {
            return Err(CliError::malformed(path, format!("line {line}: iteration {q}, expected {iteration}")));
        }
        if agent == agents.len() {
            if agents.last().is_some() && !closed {
                return Err(CliError::malformed(path, format!("line {line}: agent {} has no final row", agent - 1)));
            }
            agents.push((Vec::new(), Vec::new()));
            closed = false;
        } else if agent + 1 != agents.len() || closed {
            return Err(CliError::malformed(path, format!("line {line}: rows out of order")));
        }
        let (states, inputs) = agents.last_mut().unwrap();
        if t != states.len() {
            return Err(CliError::malformed(path, format!("line {line}: expected t={}", states.len())));
        }
        let mut x = State::zeros();
        for (k, name) in ["x", "y", "psi", "v"].iter().enumerate() {
            x[k] = parse_field(path, line, name, field(3 + k))?;
        }
        states.push(x);
        if field(7).is_empty() && field(8).is_empty() {
            closed = true;
        } else {
            let d: f64 = parse_field(path, line, "delta", field(7))?;
            let a: f64 = parse_field(path, line, "a", field(8))?;
            inputs.push(Input::new(d, a));
        }
    }
    if agents.is_empty() {
        return Err(CliError::malformed(path, "no rows"));
    }
    if !closed {
        return Err(CliError::malformed(path, "last agent has no final row"));
    }
    agents
        .into_iter()
        .enumerate()
        .map(|(i, (states, inputs))| Ok(Trajectory::new(i, iteration, states, inputs)?))
        .collect()
}

/// One controller step as stored in `telemetry.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRow {
    pub agent: usize,
    pub iteration: usize,
    pub t: usize,
    pub candidates: usize,
    pub pruned: usize,
    pub screened_out: usize,
    pub attempted: usize,
    pub solved: usize,
    pub failed: usize,
    pub realized_cost: usize,
    pub bound: usize,
    pub terminal_gap: f64,
    pub used_fallback: bool,
    pub solve_ms: Option<f64>,
}

impl TelemetryRow {
    pub fn new(agent: usize, iteration: usize, s: &StepTelemetry, with_timing: bool) -> Self {
        Self {
            agent,
            iteration,
            t: s.t,
            candidates: s.stats.candidates,
            pruned: s.stats.pruned,
            screened_out: s.stats.screened_out,
            attempted: s.stats.attempted,
            solved: s.stats.solved,
            failed: s.stats.failed,
            realized_cost: s.realized_cost,
            bound: s.bound,
            terminal_gap: s.terminal_gap,
            used_fallback: s.used_fallback,
            solve_ms: with_timing.then_some(s.solve_ms),
        }
    }

    pub fn to_step(&self) -> StepTelemetry {
        StepTelemetry {
            t: self.t,
            stats: SearchStats {
                candidates: self.candidates,
                pruned: self.pruned,
                screened_out: self.screened_out,
                attempted: self.attempted,
                solved: self.solved,
                failed: self.failed,
            },
            realized_cost: self.realized_cost,
            bound: self.bound,
            terminal_gap: self.terminal_gap,
            used_fallback: self.used_fallback,
            solve_ms: self.solve_ms.unwrap_or(0.0),
        }
    }
}

pub fn write_telemetry(path: &Path, record: &RunRecord, with_timing: bool) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut wrote = false;
    for rec in &record.iterations {
        for (agent, steps) in rec.telemetry.iter().enumerate() {
            for s in steps {
                w.serialize(TelemetryRow::new(agent, rec.iteration, s, with_timing))
                    .map_err(|e| CliError::malformed(path, e))?;
                wrote = true;
            }
        }
    }
    if !wrote {
        // Keep the header so the file parses as an empty table.
        w.write_record([
            "agent", "iteration", "t", "candidates", "pruned", "screened_out", "attempted", "solved", "failed",
            "realized_cost", "bound", "terminal_gap", "used_fallback", "solve_ms",
        ])
        .map_err(|e| CliError::malformed(path, e))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_telemetry(path: &Path) -> Result<Vec<TelemetryRow>> {
    let mut r = csv_reader(path)?;
    r.deserialize().map(|row| row.map_err(|e| CliError::malformed(path, e))).collect()
}

/// Per-step maxima over agents, summarized across an iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub max_ms: f64,
    pub min_ms: f64,
    pub mean_ms: f64,
}

impl TimingStats {
    pub fn from_telemetry(telemetry: &[Vec<StepTelemetry>]) -> Option<Self> {
        let steps = telemetry.iter().map(Vec::len).max().unwrap_or(0);
        let per_step: Vec<f64> = (0..steps)
            .map(|k| telemetry.iter().filter_map(|a| a.get(k)).map(|s| s.solve_ms).fold(0.0, f64::max))
            .collect();
        if per_step.is_empty() {
            return None;
        }
        Some(Self {
            max_ms: per_step.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_ms: per_step.iter().copied().fold(f64::INFINITY, f64::min),
            mean_ms: per_step.iter().sum::<f64>() / per_step.len() as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub completion_times: Vec<usize>,
    pub global_cost: usize,
    pub total_cost: usize,
    pub min_distance: f64,
    pub fallback_steps: usize,
    pub synthesis: Option<SynthesisSummary>,
    pub solve_time: Option<TimingStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub global_costs: Vec<usize>,
    pub total_costs: Vec<usize>,
    pub converged_at: Option<usize>,
    /// Relative drop of the global cost from the initial to the last iteration.
    pub reduction: f64,
    pub iterations: Vec<IterationMetrics>,
}

impl Metrics {
    pub fn from_record(record: &RunRecord, with_timing: bool) -> Self {
        let iterations: Vec<IterationMetrics> = record
            .iterations
            .iter()
            .map(|r| IterationMetrics {
                iteration: r.iteration,
                completion_times: r.completion_times(),
                global_cost: r.global_cost(),
                total_cost: r.total_cost(),
                min_distance: r.min_distance(),
                fallback_steps: r.telemetry.iter().flatten().filter(|s| s.used_fallback).count(),
                synthesis: r.synthesis.clone(),
                solve_time: if with_timing { TimingStats::from_telemetry(&r.telemetry) } else { None },
            })
            .collect();
        let global_costs: Vec<usize> = iterations.iter().map(|m| m.global_cost).collect();
        let reduction = match (global_costs.first(), global_costs.last()) {
            (Some(&first), Some(&last)) if first > 0 => 1.0 - last as f64 / first as f64,
            _ => 0.0,
        };
        Self {
            total_costs: iterations.iter().map(|m| m.total_cost).collect(),
            global_costs,
            converged_at: record.converged_at,
            reduction,
            iterations,
        }
    }
}

/// A run directory read back from disk.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub scenario: ScenarioConfig,
    /// `iterations[q][i]` is agent `i`'s trajectory at iteration `q`.
    pub iterations: Vec<Vec<Trajectory>>,
}

/// Loads the scenario echo and every consecutive `iterations/q<k>` directory.
pub fn load_artifacts(root: &Path) -> Result<Artifacts> {
    let scenario = load_scenario(&root.join(SCENARIO_FILE))?;
    let mut iterations = Vec::new();
    loop {
        let path = trajectories_path(root, iterations.len());
        if !path.is_file() {
            break;
        }
        iterations.push(read_trajectories(&path, iterations.len())?);
    }
    if iterations.is_empty() {
        return Err(CliError::MissingArtifact(trajectories_path(root, 0)));
    }
    if let Some((q, t)) = iterations.iter().enumerate().find(|(_, t)| t.len() != scenario.agents.len()) {
        return Err(CliError::malformed(
            trajectories_path(root, q),
            format!("{} agents, scenario has {}", t.len(), scenario.agents.len()),
        ));
    }
    Ok(Artifacts { scenario, iterations })
}
