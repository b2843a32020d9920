//! Iterated execution of the task: staggered initial trajectories, parallel
//! per-agent closed-loop runs against frozen synthesis artifacts, synthesis
//! between iterations, and run verification.

use crate::datastore::{IterationDataset, Trajectory, CONSISTENCY_TOL};
use crate::dynamics::{goal_reached, AgentModel, Input, State};
use crate::error::{Error, Result};
use crate::lmpc_agent::{AgentContext, LmpcAgent, StepTelemetry};
use crate::synthesis::{synthesize, verify_reachability, ReachabilityReport, SynthesisOutput, SynthesisParams, WindowPolicy};
use crate::trajopt::{solve_ocp, Limits, OcpProblem, SolveStatus, SolverSettings};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

/// Allowed slack on the pairwise buffer distance in recorded runs.
pub const DISTANCE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    /// `[x, y, psi, v]`.
    pub start: [f64; 4],
    pub goal: [f64; 4],
    pub radius: f64,
    pub model: AgentModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub agents: Vec<AgentConfig>,
    pub horizon: usize,
    pub iterations: usize,
    pub synthesis: SynthesisParams,
    pub eps: f64,
    /// Symmetric magnitude bounds on `[x, y, psi, v]`; `None` is unbounded.
    pub state_bounds: [Option<f64>; 4],
    /// Symmetric magnitude bounds on `[steer, accel]`.
    pub input_bounds: [f64; 2],
    /// Largest input change per second, `[steer, accel]`.
    pub rate_limits: [f64; 2],
}

impl ScenarioConfig {
    /// The three-vehicle crossing scenario with the reference parameters.
    pub fn table_one() -> Self {
        let model = AgentModel::Bicycle(Default::default());
        let agent = |start: [f64; 4], goal: [f64; 4]| AgentConfig { start, goal, radius: 0.75, model };
        Self {
            agents: vec![
                agent([0.0, 5.0, -FRAC_PI_2, 0.0], [0.0, -5.0, -FRAC_PI_2, 0.0]),
                agent([-5.0, -5.0, FRAC_PI_4, 0.0], [5.0, 5.0, FRAC_PI_4, 0.0]),
                agent([5.0, -5.0, 3.0 * FRAC_PI_4, 0.0], [-5.0, 5.0, 3.0 * FRAC_PI_4, 0.0]),
            ],
            horizon: 20,
            iterations: 20,
            synthesis: SynthesisParams { iter_window: 2, back_window: 0, fwd_window: 175, policy: WindowPolicy::Adaptive },
            eps: 1e-4,
            state_bounds: [Some(10.0), Some(10.0), None, Some(10.0)],
            input_bounds: [0.5, 3.0],
            rate_limits: [0.7, 7.0],
        }
    }

    pub fn start(&self, i: usize) -> State {
        State::from(self.agents[i].start)
    }

    pub fn goal(&self, i: usize) -> State {
        State::from(self.agents[i].goal)
    }

    pub fn radii(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.radius).collect()
    }

    pub fn limits(&self, i: usize) -> Limits {
        let dt = self.agents[i].model.dt();
        let bound = |b: Option<f64>| b.unwrap_or(f64::INFINITY);
        let s = self.state_bounds.map(bound);
        Limits {
            state_lower: -State::from(s),
            state_upper: State::from(s),
            input_lower: -Input::from(self.input_bounds),
            input_upper: Input::from(self.input_bounds),
            rate_limit: Input::from(self.rate_limits) * dt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.agents.is_empty() {
            return bad("at least one agent is required".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive".into());
        }
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        if !self.state_bounds.iter().flatten().all(|&b| finite_pos(b)) {
            return bad("state bounds must be positive".into());
        }
        if !self.input_bounds.iter().chain(&self.rate_limits).all(|&b| finite_pos(b)) {
            return bad("input bounds and rate limits must be positive".into());
        }
        for (i, a) in self.agents.iter().enumerate() {
            if !a.model.is_valid() {
                return bad(format!("agent {i}: invalid model parameters"));
            }
            if !finite_pos(a.radius) {
                return bad(format!("agent {i}: radius must be positive"));
            }
            if !a.start.iter().chain(&a.goal).all(|x| x.is_finite()) {
                return bad(format!("agent {i}: start and goal must be finite"));
            }
            if a.goal[3] != 0.0 || (matches!(a.model, AgentModel::DoubleIntegrator { .. }) && a.goal[2] != 0.0) {
                return bad(format!("agent {i}: goal must be at rest"));
            }
            let limits = self.limits(i);
            if !limits.contains_state(&self.start(i)) || !limits.contains_state(&self.goal(i)) {
                return bad(format!("agent {i}: start or goal outside the state bounds"));
            }
        }
        Ok(())
    }
}

fn distance(a: &State, b: &State) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Position of each agent at `t`, holding the final state after completion.
fn composite_state(trajectories: &[Trajectory], i: usize, t: usize) -> &State {
    let s = &trajectories[i].states;
    &s[t.min(s.len() - 1)]
}

/// Smallest pairwise center distance minus the buffer requirement, with the
/// time and pair where it occurs.
fn worst_clearance(trajectories: &[Trajectory], radii: &[f64]) -> Option<(f64, f64, usize, usize, usize)> {
    let horizon = trajectories.iter().map(|t| t.states.len()).max().unwrap_or(0);
    let mut worst: Option<(f64, f64, usize, usize, usize)> = None;
    for t in 0..horizon {
        for a in 0..trajectories.len() {
            for b in a + 1..trajectories.len() {
                let d = distance(composite_state(trajectories, a, t), composite_state(trajectories, b, t));
                let margin = d - radii[a] - radii[b];
                if worst.is_none_or(|w| margin < w.0) {
                    worst = Some((margin, d, t, a, b));
                }
            }
        }
    }
    worst
}

/// Smallest pairwise center distance over all common times.
pub fn min_pairwise_distance(trajectories: &[Trajectory]) -> f64 {
    let zeros = vec![0.0; trajectories.len()];
    worst_clearance(trajectories, &zeros).map_or(f64::INFINITY, |w| w.1)
}

/// Straight rest-to-rest profile along the heading: symmetric trapezoidal
/// acceleration pulses around a cruise phase, scaled to cover `dist` exactly.
fn straight_profile(dist: f64, dt: f64, rate: f64, accel_max: f64, speed_max: f64) -> Vec<f64> {
    let a_nom = 0.5f64.min(accel_max).min(rate * 5.0);
    let ramp = ((a_nom / rate).ceil() as usize).max(1);
    let cruise_speed = 1.5f64.min(0.5 * speed_max);
    let hold = (((cruise_speed / (a_nom * dt)) as usize).saturating_sub(ramp)).max(1);
    let mut pulse: Vec<f64> = (1..=ramp).map(|k| k as f64 / ramp as f64).collect();
    pulse.extend(std::iter::repeat_n(1.0, hold));
    pulse.extend((0..ramp).rev().map(|k| k as f64 / ramp as f64));
    let travel = |shape: &[f64]| {
        let (mut v, mut x) = (0.0, 0.0);
        for s in shape {
            x += dt * v;
            v += dt * s;
        }
        x
    };
    let shape_with = |cruise: usize| {
        let mut s = pulse.clone();
        s.extend(std::iter::repeat_n(0.0, cruise));
        s.extend(pulse.iter().map(|p| -p));
        s
    };
    let peak: f64 = dt * pulse.iter().sum::<f64>();
    let base = travel(&shape_with(0));
    let cruise = if dist > base * a_nom { ((dist - base * a_nom) / (a_nom * peak * dt)).ceil() as usize } else { 0 };
    let mut shape = shape_with(cruise);
    while shape.last() == Some(&0.0) {
        shape.pop();
    }
    let scale = dist / travel(&shape);
    shape.iter().map(|s| s * scale).collect()
}

/// A rest-to-rest leg for one agent ignoring all others.
fn single_leg(config: &ScenarioConfig, i: usize, settings: &SolverSettings) -> Result<Vec<Input>> {
    let start = config.start(i);
    let goal = config.goal(i);
    let model = config.agents[i].model;
    let limits = config.limits(i);
    let dt = model.dt();
    let (dx, dy) = (goal[0] - start[0], goal[1] - start[1]);
    let dist = (dx * dx + dy * dy).sqrt();
    if dist == 0.0 && (goal - start).abs().max() == 0.0 {
        return Ok(Vec::new());
    }
    if let AgentModel::Bicycle(_) = model {
        let along = dist > 0.0 && (dx - dist * start[2].cos()).abs() < 1e-9 && (dy - dist * start[2].sin()).abs() < 1e-9;
        if along && start[3] == 0.0 && goal[2] == start[2] {
            let accel = straight_profile(dist, dt, limits.rate_limit[1], limits.input_upper[1], limits.state_upper[3]);
            let inputs: Vec<Input> = accel.iter().map(|&a| Input::new(0.0, a)).collect();
            let states = model.rollout(&start, &inputs);
            if goal_reached(states.last().unwrap(), &goal, config.eps) {
                return Ok(inputs);
            }
        }
    }
    // General case: grow the horizon until the trajectory optimizer connects
    // start and goal.
    let mut horizon = (dist / (dt * 1.0)).ceil().max(10.0) as usize;
    let cap = horizon * 8 + 400;
    while horizon <= cap {
        let mut p = OcpProblem::new(model, horizon, start, goal, &limits);
        p.terminal_input = Some(Input::zeros());
        let sol = solve_ocp(&p, None, settings);
        if sol.status == SolveStatus::Solved && goal_reached(sol.states.last().unwrap(), &goal, config.eps) {
            let stop = sol.states.iter().position(|x| goal_reached(x, &goal, config.eps)).unwrap();
            return Ok(sol.inputs[..stop].to_vec());
        }
        horizon += horizon / 2;
    }
    Err(Error::ScenarioInfeasible(format!("no initial leg found for agent {i}")))
}

/// Staggered initial run: agents move one after another, the others parked
/// at their start or goal. Fails if the parked composite violates a buffer.
pub fn generate_initial_trajectories(config: &ScenarioConfig, settings: &SolverSettings) -> Result<Vec<Trajectory>> {
    config.validate()?;
    let radii = config.radii();
    let m = config.agents.len();
    for a in 0..m {
        for b in a + 1..m {
            let need = radii[a] + radii[b];
            for (what, pa, pb) in [
                ("starts", config.start(a), config.start(b)),
                ("goals", config.goal(a), config.goal(b)),
                ("goal and start", config.goal(a), config.start(b)),
            ] {
                if distance(&pa, &pb) < need {
                    return Err(Error::ScenarioInfeasible(format!(
                        "{what} of agents {a} and {b} are closer than {need}"
                    )));
                }
            }
        }
    }
    let mut offset = 0;
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let leg = single_leg(config, i, settings)?;
        let mut inputs = vec![Input::zeros(); offset];
        inputs.extend(leg.iter().copied());
        offset += leg.len();
        let states = config.agents[i].model.rollout(&config.start(i), &inputs);
        out.push(Trajectory::new(i, 0, states, inputs)?);
    }
    if let Some((margin, d, t, a, b)) = worst_clearance(&out, &radii) {
        if margin < 0.0 {
            return Err(Error::ScenarioInfeasible(format!(
                "staggered initial run brings agents {a} and {b} to {d:.4} m at t={t}"
            )));
        }
    }
    Ok(out)
}

/// One agent's closed-loop run for an iteration.
#[derive(Clone, Debug)]
pub struct AgentRun {
    pub trajectory: Trajectory,
    pub telemetry: Vec<StepTelemetry>,
}

/// Runs every agent to its goal against the frozen artifacts `synth`.
/// Agents share nothing while running.
pub fn run_iteration(
    q: usize,
    synth: &SynthesisOutput,
    dataset: &IterationDataset,
    config: &ScenarioConfig,
    settings: &SolverSettings,
    watchdog: usize,
) -> Result<Vec<AgentRun>> {
    let contexts: Vec<AgentContext> = (0..config.agents.len())
        .map(|i| AgentContext::from_synthesis(i, synth, dataset, config.horizon, config.limits(i)))
        .collect();
    let starts: Vec<State> = (0..config.agents.len()).map(|i| config.start(i)).collect();
    contexts
        .into_par_iter()
        .zip(starts)
        .map(|(ctx, start)| run_agent(q, ctx, start, settings, watchdog))
        .collect()
}

fn run_agent(q: usize, ctx: AgentContext, start: State, settings: &SolverSettings, watchdog: usize) -> Result<AgentRun> {
    let (agent, model, goal, eps) = (ctx.agent_id, ctx.model, ctx.goal, ctx.eps);
    let mut controller = LmpcAgent::new(ctx, *settings);
    let mut states = vec![start];
    let mut inputs = Vec::new();
    let mut x = start;
    let mut t = 0;
    while !goal_reached(&x, &goal, eps) {
        if t >= watchdog {
            return Err(Error::Watchdog { agent, iteration: q, limit: watchdog });
        }
        let u = controller.control_step(&x, t)?;
        x = model.step(&x, &u);
        states.push(x);
        inputs.push(u);
        t += 1;
    }
    let trajectory = Trajectory::new(agent, q, states, inputs)?;
    Ok(AgentRun { trajectory, telemetry: controller.telemetry().to_vec() })
}

/// Window parameters and outcome of the synthesis an iteration ran against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSummary {
    pub params_used: SynthesisParams,
    pub attempts: usize,
    pub iterations: Vec<usize>,
    pub reachability: ReachabilityReport,
}

#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub iteration: usize,
    pub trajectories: Vec<Trajectory>,
    /// Per agent; empty for the initial iteration.
    pub telemetry: Vec<Vec<StepTelemetry>>,
    pub synthesis: Option<SynthesisSummary>,
}

impl IterationRecord {
    pub fn completion_times(&self) -> Vec<usize> {
        self.trajectories.iter().map(|t| t.completion_time).collect()
    }

    /// Steps until the last agent arrives.
    pub fn global_cost(&self) -> usize {
        self.completion_times().into_iter().max().unwrap_or(0)
    }

    pub fn total_cost(&self) -> usize {
        self.completion_times().into_iter().sum()
    }

    pub fn min_distance(&self) -> f64 {
        min_pairwise_distance(&self.trajectories)
    }
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub iterations: Vec<IterationRecord>,
    /// Iteration at which two consecutive runs coincided, if any.
    pub converged_at: Option<usize>,
}

impl RunRecord {
    pub fn global_costs(&self) -> Vec<usize> {
        self.iterations.iter().map(IterationRecord::global_cost).collect()
    }
}

/// Executes the full iterated task. `max_iterations` overrides the
/// configured iteration count.
pub fn run(config: &ScenarioConfig, settings: &SolverSettings, max_iterations: Option<usize>) -> Result<RunRecord> {
    run_with(config, settings, max_iterations, |_| {})
}

/// As [`run`], reporting each finished iteration to `progress`.
pub fn run_with(
    config: &ScenarioConfig,
    settings: &SolverSettings,
    max_iterations: Option<usize>,
    mut progress: impl FnMut(&IterationRecord),
) -> Result<RunRecord> {
    let initial = generate_initial_trajectories(config, settings)?;
    let models = config.agents.iter().map(|a| a.model).collect();
    let goals = (0..config.agents.len()).map(|i| config.goal(i)).collect();
    let mut dataset = IterationDataset::new(models, goals, config.eps);
    dataset.record_iteration(initial.clone())?;
    let first = IterationRecord { iteration: 0, trajectories: initial, telemetry: Vec::new(), synthesis: None };
    progress(&first);
    let watchdog = 4 * first.global_cost().max(1);
    let mut record = RunRecord { iterations: vec![first], converged_at: None };
    let radii = config.radii();
    for q in 1..=max_iterations.unwrap_or(config.iterations) {
        let synth = synthesize(&dataset, config.synthesis, &radii)?;
        let reachability = verify_reachability(&synth, &dataset, &radii);
        let runs = run_iteration(q, &synth, &dataset, config, settings, watchdog)?;
        let (trajectories, telemetry): (Vec<_>, Vec<_>) = runs.into_iter().map(|r| (r.trajectory, r.telemetry)).unzip();
        dataset.record_iteration(trajectories.clone())?;
        let summary = SynthesisSummary {
            params_used: synth.params_used,
            attempts: synth.attempts,
            iterations: synth.iterations.clone(),
            reachability,
        };
        let rec = IterationRecord { iteration: q, trajectories, telemetry, synthesis: Some(summary) };
        progress(&rec);
        let prev = record.iterations.last().unwrap();
        let steady = prev.completion_times() == rec.completion_times();
        record.iterations.push(rec);
        if steady {
            record.converged_at = Some(q);
            break;
        }
    }
    Ok(record)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunViolation {
    Collision { iteration: usize, t: usize, a: usize, b: usize, distance: f64, required: f64 },
    CompletionIncrease { iteration: usize, agent: usize, previous: usize, current: usize },
    GlobalCostIncrease { iteration: usize, previous: usize, current: usize },
    Dynamics { iteration: usize, agent: usize, time: usize, deviation: f64 },
    NotConverged { iteration: usize, agent: usize, distance: f64 },
    StartMismatch { iteration: usize, agent: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub violations: Vec<RunViolation>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks buffers, cost monotonicity, dynamics consistency and convergence
/// of a run given as per-iteration, per-agent trajectories.
pub fn verify_trajectories(iterations: &[Vec<Trajectory>], config: &ScenarioConfig) -> RunReport {
    let radii = config.radii();
    let mut v = Vec::new();
    let mut prev: Option<Vec<usize>> = None;
    for (q, trajs) in iterations.iter().enumerate() {
        let m = trajs.len();
        let horizon = trajs.iter().map(|t| t.states.len()).max().unwrap_or(0);
        for t in 0..horizon {
            for a in 0..m {
                for b in a + 1..m {
                    let d = distance(composite_state(trajs, a, t), composite_state(trajs, b, t));
                    let required = radii[a] + radii[b];
                    if !(d >= required - DISTANCE_TOL) {
                        v.push(RunViolation::Collision { iteration: q, t, a, b, distance: d, required });
                    }
                }
            }
        }
        for (i, traj) in trajs.iter().enumerate() {
            let model = &config.agents[i].model;
            if traj.states.first() != Some(&config.start(i)) {
                v.push(RunViolation::StartMismatch { iteration: q, agent: i });
            }
            if traj.states.len() != traj.inputs.len() + 1 {
                v.push(RunViolation::Dynamics { iteration: q, agent: i, time: 0, deviation: f64::INFINITY });
                continue;
            }
            if let Some((time, deviation)) = traj.first_defect(model, CONSISTENCY_TOL) {
                v.push(RunViolation::Dynamics { iteration: q, agent: i, time, deviation });
            }
            let gap = (traj.final_state() - config.goal(i)).norm();
            if !goal_reached(traj.final_state(), &config.goal(i), config.eps) {
                v.push(RunViolation::NotConverged { iteration: q, agent: i, distance: gap });
            }
        }
        let times: Vec<usize> = trajs.iter().map(|t| t.completion_time).collect();
        if let Some(p) = &prev {
            for i in 0..m.min(p.len()) {
                if times[i] > p[i] {
                    v.push(RunViolation::CompletionIncrease { iteration: q, agent: i, previous: p[i], current: times[i] });
                }
            }
            let (pg, cg) = (p.iter().max().copied().unwrap_or(0), times.iter().max().copied().unwrap_or(0));
            if cg > pg {
                v.push(RunViolation::GlobalCostIncrease { iteration: q, previous: pg, current: cg });
            }
        }
        prev = Some(times);
    }
    RunReport { violations: v }
}

pub fn verify_run(record: &RunRecord, config: &ScenarioConfig) -> RunReport {
    let iterations: Vec<Vec<Trajectory>> = record.iterations.iter().map(|r| r.trajectories.clone()).collect();
    verify_trajectories(&iterations, config)
}

/// Steps at which the finite-horizon optimal cost failed to drop by at least
/// one while the agent was away from its goal, and agents that took longer
/// than their initial optimal cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostViolation {
    NoDecrease { iteration: usize, agent: usize, t: usize, before: usize, after: usize },
    SlowerThanBound { iteration: usize, agent: usize, completion: usize, bound: usize },
}

pub fn cost_decrease_violations(record: &RunRecord) -> Vec<CostViolation> {
    let mut out = Vec::new();
    for rec in &record.iterations {
        for (agent, tel) in rec.telemetry.iter().enumerate() {
            for w in tel.windows(2) {
                if w[1].realized_cost + 1 > w[0].realized_cost {
                    out.push(CostViolation::NoDecrease {
                        iteration: rec.iteration,
                        agent,
                        t: w[1].t,
                        before: w[0].realized_cost,
                        after: w[1].realized_cost,
                    });
                }
            }
            if let Some(first) = tel.first() {
                let completion = rec.trajectories[agent].completion_time;
                if completion > first.realized_cost {
                    out.push(CostViolation::SlowerThanBound {
                        iteration: rec.iteration,
                        agent,
                        completion,
                        bound: first.realized_cost,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_one_is_valid() {
        let c = ScenarioConfig::table_one();
        c.validate().unwrap();
        let d = distance(&c.start(0), &c.start(1));
        assert!((d - 125f64.sqrt()).abs() < 1e-12);
        assert!(d >= 1.5);
    }

    #[test]
    fn straight_profile_is_rest_to_rest() {
        let a = straight_profile(10.0, 0.1, 0.7, 3.0, 10.0);
        let model = AgentModel::Bicycle(Default::default());
        let inputs: Vec<Input> = a.iter().map(|&a| Input::new(0.0, a)).collect();
        let states = model.rollout(&State::zeros(), &inputs);
        let end = states.last().unwrap();
        assert!((end[0] - 10.0).abs() < 1e-9 && end[3].abs() < 1e-12, "{end:?}");
        assert!(a.windows(2).all(|w| (w[1] - w[0]).abs() <= 0.7 + 1e-12));
        assert!(a[0].abs() <= 0.7 && a.last().unwrap().abs() <= 0.7);
        assert!(a.iter().all(|x| x.abs() <= 3.0));
    }

    #[test]
    fn staggered_makespan_is_sum_of_legs() {
        let c = ScenarioConfig::table_one();
        let trajs = generate_initial_trajectories(&c, &SolverSettings::default()).unwrap();
        let legs: Vec<usize> = (0..3).map(|i| single_leg(&c, i, &SolverSettings::default()).unwrap().len()).collect();
        assert_eq!(trajs.iter().map(|t| t.completion_time).max().unwrap(), legs.iter().sum::<usize>());
        assert!(min_pairwise_distance(&trajs) >= 1.5);
        assert!(verify_trajectories(&[trajs], &c).passed());
    }

    #[test]
    fn goal_in_start_buffer_is_infeasible() {
        let mut c = ScenarioConfig::table_one();
        c.agents[0].goal = [-4.5, -4.5, FRAC_PI_4, 0.0];
        let err = generate_initial_trajectories(&c, &SolverSettings::default()).unwrap_err();
        assert!(matches!(err, Error::ScenarioInfeasible(_)), "{err:?}");
    }

    #[test]
    fn swapped_positions_flag_a_collision() {
        let c = ScenarioConfig::table_one();
        let mut trajs = generate_initial_trajectories(&c, &SolverSettings::default()).unwrap();
        let t = 5;
        let p = trajs[0].states[t];
        trajs[1].states[t][0] = p[0];
        trajs[1].states[t][1] = p[1];
        let report = verify_trajectories(&[trajs], &c);
        assert!(report.violations.iter().any(|v| matches!(v, RunViolation::Collision { t: 5, .. })));
    }

    #[test]
    fn truncated_run_is_not_converged() {
        let c = ScenarioConfig::table_one();
        let mut trajs = generate_initial_trajectories(&c, &SolverSettings::default()).unwrap();
        let keep = trajs[2].completion_time - 10;
        trajs[2].states.truncate(keep + 1);
        trajs[2].inputs.truncate(keep);
        trajs[2].completion_time = keep;
        let report = verify_trajectories(&[trajs], &c);
        assert!(report.violations.iter().any(|v| matches!(v, RunViolation::NotConverged { agent: 2, .. })));
    }
}
