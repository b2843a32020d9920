//! Per-agent receding-horizon controller: terminal candidate enumeration
//! with pruning, one trajectory solve per candidate, and the shifted
//! previous plan as a fallback.

use crate::datastore::{IterationDataset, Trajectory};
use crate::dynamics::{goal_reached, AgentModel, Input, State};
use crate::error::{Error, Result};
use crate::synthesis::{
    HyperplaneSet, PointOrigin, SafeSetPoint, SynthesisOutput, TimedSafeSet, ValueTable, STATE_MATCH_TOL,
};
use crate::trajopt::{solve_ocp, violations, Limits, OcpProblem, OcpSolution, SolveStatus, SolverSettings};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateTerminal {
    pub point: SafeSetPoint,
    /// Planned steps until the terminal point is reached. Equal to the
    /// horizon except for goal arrivals, which hold zero input afterwards.
    pub steps: usize,
    pub value: usize,
    /// `cost_to_come + steps + value`.
    pub bound: usize,
}

impl CandidateTerminal {
    pub fn is_goal(&self) -> bool {
        self.value == 0
    }

    fn key(&self) -> (usize, usize, usize) {
        (self.bound, self.point.source_iteration, self.point.source_time)
    }
}

/// Candidate bookkeeping for one controller step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub candidates: usize,
    pub pruned: usize,
    pub screened_out: usize,
    pub attempted: usize,
    pub solved: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FhocpOutcome {
    pub chosen: CandidateTerminal,
    /// Full-horizon plan; goal arrivals are padded with zero inputs.
    pub solution: OcpSolution,
    pub realized_cost: usize,
    pub stats: SearchStats,
}

/// Shifted previous plan ending one step deeper in the safe set.
#[derive(Clone, Debug, PartialEq)]
pub struct Fallback {
    pub states: Vec<State>,
    pub inputs: Vec<Input>,
    pub terminal: CandidateTerminal,
}

/// Everything one agent may read during an iteration: its own synthesized
/// artifacts and its own previous run.
#[derive(Clone, Debug)]
pub struct AgentContext {
    pub agent_id: usize,
    pub model: AgentModel,
    pub goal: State,
    pub eps: f64,
    pub horizon: usize,
    pub limits: Limits,
    pub safe_set: TimedSafeSet,
    pub values: ValueTable,
    pub hyperplanes: HyperplaneSet,
    /// The most recent successful run of this agent.
    pub previous: Trajectory,
}

impl AgentContext {
    pub fn from_synthesis(
        agent: usize,
        synth: &SynthesisOutput,
        dataset: &IterationDataset,
        horizon: usize,
        limits: Limits,
    ) -> Self {
        let last = *synth.iterations.last().expect("synthesis draws from at least one iteration");
        Self {
            agent_id: agent,
            model: *dataset.model(agent),
            goal: *dataset.goal(agent),
            eps: dataset.eps(),
            horizon,
            limits,
            safe_set: synth.safe_sets[agent].clone(),
            values: synth.values[agent].clone(),
            hyperplanes: synth.hyperplanes[agent].clone(),
            previous: dataset.trajectory(agent, last).clone(),
        }
    }

    fn goal_value(&self, time: usize) -> Option<usize> {
        self.values.value_of(&self.goal, time)
    }

    fn goal_candidate(&self, time: usize, steps: usize, cost_to_come: usize) -> CandidateTerminal {
        let point = self
            .safe_set
            .at(time)
            .iter()
            .filter(|p| p.cost_to_go == 0)
            .min_by_key(|p| p.provenance())
            .copied()
            .unwrap_or(SafeSetPoint {
                source_iteration: self.previous.iteration,
                source_time: self.previous.completion_time,
                state: self.goal,
                successor_input: Input::zeros(),
                cost_to_go: 0,
                origin: PointOrigin::GoalExtension,
            });
        let point = SafeSetPoint { state: self.goal, successor_input: Input::zeros(), ..point };
        CandidateTerminal { point, steps, value: 0, bound: cost_to_come + steps }
    }

    /// The point of the set at `time` sharing `state` whose own cost-to-go
    /// attains the value, so that its successor input realizes it.
    fn representative(&self, state: &State, time: usize) -> Option<(SafeSetPoint, usize)> {
        let value = self.values.value_of(state, time)?;
        self.safe_set
            .at(time)
            .iter()
            .filter(|p| p.cost_to_go == value && (p.state - state).abs().max() <= STATE_MATCH_TOL)
            .min_by_key(|p| p.provenance())
            .map(|p| (*p, value))
    }
}

/// Terminal candidates from the safe set at `t + N`, with values from
/// `table` at `time`, pruned against the previous completion time and sorted
/// by `(bound, source_iteration, source_time)`. Coinciding states are kept
/// once, through the point whose cost-to-go equals the value.
pub fn enumerate_candidates(
    points: &[SafeSetPoint],
    table: &ValueTable,
    time: usize,
    cost_to_come: usize,
    horizon: usize,
    prev_completion: usize,
) -> Result<Vec<CandidateTerminal>> {
    let mut out: Vec<CandidateTerminal> = Vec::new();
    for p in points {
        let value = table.value_of(&p.state, time).unwrap_or(p.cost_to_go);
        if p.cost_to_go != value {
            continue;
        }
        let bound = cost_to_come + horizon + value;
        if bound > prev_completion {
            continue;
        }
        out.push(CandidateTerminal { point: *p, steps: horizon, value, bound });
    }
    out.sort_by_key(CandidateTerminal::key);
    let mut kept: Vec<CandidateTerminal> = Vec::with_capacity(out.len());
    for c in out {
        let dup = kept
            .iter()
            .rev()
            .take_while(|k| k.bound == c.bound)
            .any(|k| (k.point.state - c.point.state).abs().max() <= STATE_MATCH_TOL);
        if !dup {
            kept.push(c);
        }
    }
    if kept.is_empty() {
        return Err(Error::AllPruned);
    }
    Ok(kept)
}

fn abs_max(lo: f64, hi: f64) -> f64 {
    lo.abs().max(hi.abs())
}

/// Necessary condition for reaching `target` from `state` in `steps` steps,
/// from speed and turn-rate envelopes under the box and rate limits. Never
/// rejects a reachable target.
#[allow(clippy::too_many_arguments)]
pub fn reachable(
    model: &AgentModel,
    limits: &Limits,
    state: &State,
    prev_input: &Input,
    target: &State,
    terminal_input: Option<&Input>,
    steps: usize,
) -> bool {
    let n = steps;
    let dt = model.dt();
    let slack = 1e-9;
    // Per-step magnitude bound on input j.
    let input_bound = |j: usize, k: usize| {
        let mut b = abs_max(limits.input_lower[j], limits.input_upper[j]);
        let r = limits.rate_limit[j];
        b = b.min(prev_input[j].abs() + (k + 1) as f64 * r);
        if let Some(a) = terminal_input {
            b = b.min(a[j].abs() + (n - k) as f64 * r);
        }
        b
    };
    match model {
        AgentModel::Bicycle(p) => {
            let vmax = abs_max(limits.state_lower[3], limits.state_upper[3]);
            let accel: Vec<f64> = (0..n).map(|k| input_bound(1, k)).collect();
            let total: f64 = accel.iter().map(|a| dt * a).sum();
            if (target[3] - state[3]).abs() > total + slack {
                return false;
            }
            let mut fwd = vec![0.0; n + 1];
            fwd[0] = state[3].abs();
            for k in 0..n {
                fwd[k + 1] = (fwd[k] + dt * accel[k]).min(vmax);
            }
            let mut bwd = vec![0.0; n + 1];
            bwd[n] = target[3].abs();
            for k in (0..n).rev() {
                bwd[k] = (bwd[k + 1] + dt * accel[k]).min(vmax);
            }
            let mut dist = 0.0;
            let mut turn = 0.0;
            for k in 0..n {
                let speed = fwd[k].min(bwd[k]);
                dist += dt * speed;
                let steer = input_bound(0, k).min(std::f64::consts::FRAC_PI_2 - 1e-9);
                turn += dt * speed * p.slip(steer).sin() / p.l_r;
            }
            let gap = ((target[0] - state[0]).powi(2) + (target[1] - state[1]).powi(2)).sqrt();
            gap <= dist * (1.0 + slack) + slack && (target[2] - state[2]).abs() <= turn * (1.0 + slack) + slack
        }
        AgentModel::DoubleIntegrator { .. } => (0..2).all(|j| {
            let amax: f64 = (0..n).map(|k| input_bound(j, k)).fold(0.0, f64::max);
            let drift = state[j] + n as f64 * dt * state[2 + j];
            let reach = dt * dt * amax * (n * n.saturating_sub(1)) as f64 / 2.0;
            (target[j] - drift).abs() <= reach * (1.0 + slack) + slack
                && (target[2 + j] - state[2 + j]).abs() <= n as f64 * dt * amax * (1.0 + slack) + slack
        }),
    }
}

fn realized_cost(states: &[State], horizon: usize, goal: &State, eps: f64, value: usize) -> usize {
    states[..horizon].iter().filter(|x| !goal_reached(x, goal, eps)).count() + value
}

fn problem_for(
    ctx: &AgentContext,
    state: &State,
    t: usize,
    prev_input: &Input,
    target: &State,
    terminal_input: Input,
    steps: usize,
) -> OcpProblem {
    let mut p = OcpProblem::new(ctx.model, steps, *state, *target, &ctx.limits);
    p.previous_input = *prev_input;
    p.terminal_input = Some(terminal_input);
    p.hyperplanes = (0..steps).map(|k| ctx.hyperplanes.at(t + k).to_vec()).collect();
    p
}

/// Extends a plan of `steps` inputs to the full horizon with zero inputs and
/// checks the padded plan against every path constraint.
fn pad_and_check(
    ctx: &AgentContext,
    state: &State,
    t: usize,
    prev_input: &Input,
    c: &CandidateTerminal,
    inputs: &[Input],
    settings: &SolverSettings,
) -> Option<(Vec<State>, Vec<Input>, f64)> {
    let n = ctx.horizon;
    let mut full = inputs.to_vec();
    full.resize(n, Input::zeros());
    let states = ctx.model.rollout(state, &full);
    let target = if c.is_goal() { ctx.goal } else { c.point.state };
    let terminal_input = if c.is_goal() { Input::zeros() } else { c.point.successor_input };
    let mut p = problem_for(ctx, state, t, prev_input, &target, terminal_input, n);
    // The hold phase of a goal arrival must also respect the hyperplanes.
    if c.steps < n {
        p.hyperplanes.push(ctx.hyperplanes.at(t + n).to_vec());
    }
    let v = violations(&p, &states, &full).ok()?;
    (v.dynamics.max(v.path) <= settings.tol_feas && v.terminal <= settings.tol_term).then_some((states, full, v.terminal))
}

/// Solves the decoupled finite-horizon problem at `(state, t)`: candidates
/// are tried best-first and the search stops once no remaining bound can
/// beat the best realized cost. The fallback's terminal is always a
/// candidate and its plan is the warm start for every solve.
pub fn solve_fhocp(
    state: &State,
    t: usize,
    ctx: &AgentContext,
    prev_input: &Input,
    fallback: Option<&Fallback>,
    settings: &SolverSettings,
) -> Result<FhocpOutcome> {
    let n = ctx.horizon;
    let time = t + n;
    let prev_completion = ctx.previous.completion_time;
    let set = ctx.safe_set.at(time);
    let mut stats = SearchStats { candidates: set.len(), ..Default::default() };
    let regular = match enumerate_candidates(set, &ctx.values, time, t, n, prev_completion) {
        Ok(c) => c,
        Err(Error::AllPruned) => Vec::new(),
        Err(e) => return Err(e),
    };
    stats.pruned = set.len() - regular.len();
    let mut cands: Vec<CandidateTerminal> = regular.into_iter().filter(|c| !c.is_goal()).collect();
    // The goal is an equilibrium: holding it after an early arrival ends the
    // horizon in the terminal set whenever the goal belongs to it.
    if ctx.goal_value(time) == Some(0) {
        for steps in (1..=n).filter(|s| t + s <= prev_completion) {
            cands.push(ctx.goal_candidate(time, steps, t));
        }
    }
    if let Some(f) = fallback {
        if !cands.iter().any(|c| c.key() == f.terminal.key() && c.steps == f.terminal.steps) {
            cands.push(f.terminal);
        }
    }
    cands.sort_by_key(|c| (c.key(), c.steps));
    let fallback_key = fallback.map(|f| (f.terminal.key(), f.terminal.steps));
    let before = cands.len();
    cands.retain(|c| {
        Some((c.key(), c.steps)) == fallback_key || {
            let target = if c.is_goal() { ctx.goal } else { c.point.state };
            let anchor = if c.is_goal() { Input::zeros() } else { c.point.successor_input };
            reachable(&ctx.model, &ctx.limits, state, prev_input, &target, Some(&anchor), c.steps)
        }
    });
    stats.screened_out = before - cands.len();

    let mut best: Option<FhocpOutcome> = None;
    for c in &cands {
        if let Some(b) = &best {
            if b.realized_cost + t <= c.bound {
                break;
            }
        }
        stats.attempted += 1;
        let (target, anchor) =
            if c.is_goal() { (ctx.goal, Input::zeros()) } else { (c.point.state, c.point.successor_input) };
        let problem = problem_for(ctx, state, t, prev_input, &target, anchor, c.steps);
        let warm = fallback.map(|f| &f.inputs[..c.steps]);
        let sol = solve_ocp(&problem, warm, settings);
        if sol.status != SolveStatus::Solved {
            stats.failed += 1;
            continue;
        }
        let Some((states, inputs, gap)) = pad_and_check(ctx, state, t, prev_input, c, &sol.inputs, settings) else {
            stats.failed += 1;
            continue;
        };
        stats.solved += 1;
        let realized = realized_cost(&states, n, &ctx.goal, ctx.eps, c.value);
        if best.as_ref().is_none_or(|b| realized < b.realized_cost) {
            let solution = OcpSolution { states, inputs, terminal_gap: gap, ..sol };
            best = Some(FhocpOutcome { chosen: *c, solution, realized_cost: realized, stats });
        }
    }
    match best {
        Some(mut b) => {
            b.stats = stats;
            Ok(b)
        }
        None => Err(Error::NoFeasibleCandidate),
    }
}

/// Drops the first step of the previous plan and appends the stored
/// successor input of its terminal point. `t` is the new time.
pub fn fallback_candidate(prev: &FhocpOutcome, ctx: &AgentContext, t: usize) -> Result<Fallback> {
    let n = ctx.horizon;
    let time = t + n;
    let c = &prev.chosen;
    let start = prev.solution.states[1];
    let mut inputs: Vec<Input> = prev.solution.inputs[1..].to_vec();
    let terminal = if c.is_goal() {
        inputs.push(Input::zeros());
        ctx.goal_candidate(time, c.steps.saturating_sub(1).max(1), t)
    } else {
        inputs.push(c.point.successor_input);
        let succ_time = c.point.source_time + 1;
        let at_end = c.point.origin == PointOrigin::GoalExtension || c.point.cost_to_go <= 1;
        if at_end {
            ctx.goal_candidate(time, n, t)
        } else {
            let succ = ctx
                .safe_set
                .at(time)
                .iter()
                .find(|p| p.provenance() == (c.point.source_iteration, succ_time))
                .ok_or(Error::NotInSafeSet(time))?;
            let (point, value) = ctx.representative(&succ.state, time).ok_or(Error::NotInSafeSet(time))?;
            if value == 0 {
                ctx.goal_candidate(time, n, t)
            } else {
                CandidateTerminal { point, steps: n, value, bound: t + n + value }
            }
        }
    };
    let states = ctx.model.rollout(&start, &inputs);
    Ok(Fallback { states, inputs, terminal })
}

/// The plan that replays the previous run from its start: its first `N`
/// inputs and the point it reaches at time `N`.
pub fn initial_fallback(ctx: &AgentContext, state: &State) -> Result<Fallback> {
    let n = ctx.horizon;
    let prev = &ctx.previous;
    let mut inputs: Vec<Input> = prev.inputs.iter().take(n).copied().collect();
    inputs.resize(n, Input::zeros());
    let terminal = if prev.completion_time <= n {
        ctx.goal_candidate(n, prev.completion_time.max(1), 0)
    } else {
        let (point, value) = ctx.representative(&prev.states[n], n).ok_or(Error::NotInSafeSet(n))?;
        if value == 0 {
            ctx.goal_candidate(n, n, 0)
        } else {
            CandidateTerminal { point, steps: n, value, bound: n + value }
        }
    };
    let states = ctx.model.rollout(state, &inputs);
    Ok(Fallback { states, inputs, terminal })
}

fn outcome_from_fallback(f: Fallback, ctx: &AgentContext, stats: SearchStats) -> FhocpOutcome {
    let n = ctx.horizon;
    let target = if f.terminal.is_goal() { ctx.goal } else { f.terminal.point.state };
    let gap = (f.states[n] - target).abs().max();
    let realized = realized_cost(&f.states, n, &ctx.goal, ctx.eps, f.terminal.value);
    let solution = OcpSolution {
        status: SolveStatus::Solved,
        states: f.states,
        inputs: f.inputs,
        max_violation: gap,
        terminal_gap: gap,
        iterations_used: 0,
    };
    FhocpOutcome { chosen: f.terminal, solution, realized_cost: realized, stats }
}

/// Per-step record emitted to the run artifacts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTelemetry {
    pub t: usize,
    pub stats: SearchStats,
    /// Optimal cost of the step's finite-horizon problem.
    pub realized_cost: usize,
    pub bound: usize,
    pub terminal_gap: f64,
    pub used_fallback: bool,
    pub solve_ms: f64,
}

/// Receding-horizon controller for one agent over one iteration.
pub struct LmpcAgent {
    ctx: AgentContext,
    settings: SolverSettings,
    last: Option<FhocpOutcome>,
    prev_input: Input,
    telemetry: Vec<StepTelemetry>,
}

impl LmpcAgent {
    pub fn new(ctx: AgentContext, settings: SolverSettings) -> Self {
        Self { ctx, settings, last: None, prev_input: Input::zeros(), telemetry: Vec::new() }
    }

    pub fn context(&self) -> &AgentContext {
        &self.ctx
    }

    pub fn telemetry(&self) -> &[StepTelemetry] {
        &self.telemetry
    }

    pub fn last_outcome(&self) -> Option<&FhocpOutcome> {
        self.last.as_ref()
    }

    /// First input of the best plan at `(state, t)`, or of the fallback when
    /// no candidate solves.
    pub fn control_step(&mut self, state: &State, t: usize) -> Result<Input> {
        let clock = Instant::now();
        let fallback = match &self.last {
            _ if t == 0 => initial_fallback(&self.ctx, state)?,
            Some(prev) => fallback_candidate(prev, &self.ctx, t)?,
            None => return Err(Error::NoPreviousSolution),
        };
        let (outcome, used_fallback) =
            match solve_fhocp(state, t, &self.ctx, &self.prev_input, Some(&fallback), &self.settings) {
                Ok(o) => (o, false),
                Err(Error::NoFeasibleCandidate) => {
                    (outcome_from_fallback(fallback, &self.ctx, SearchStats::default()), true)
                }
                Err(e) => return Err(e),
            };
        let u = outcome.solution.inputs[0];
        self.telemetry.push(StepTelemetry {
            t,
            stats: outcome.stats,
            realized_cost: outcome.realized_cost,
            bound: outcome.chosen.bound,
            terminal_gap: outcome.solution.terminal_gap,
            used_fallback,
            solve_ms: clock.elapsed().as_secs_f64() * 1e3,
        });
        self.prev_input = u;
        self.last = Some(outcome);
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(k: usize, x: f64, cost: usize) -> SafeSetPoint {
        SafeSetPoint {
            source_iteration: 0,
            source_time: k,
            state: State::new(x, 0.0, 0.0, 0.0),
            successor_input: Input::zeros(),
            cost_to_go: cost,
            origin: PointOrigin::Recorded,
        }
    }

    fn table(points: &[SafeSetPoint]) -> ValueTable {
        ValueTable::build(0, &[points.to_vec()])
    }

    #[test]
    fn pruning_uses_the_stated_bound() {
        let pruned = [point(0, 1.0, 25)];
        assert!(matches!(enumerate_candidates(&pruned, &table(&pruned), 0, 10, 20, 50), Err(Error::AllPruned)));
        let kept = [point(0, 1.0, 19)];
        let c = enumerate_candidates(&kept, &table(&kept), 0, 10, 20, 50).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].bound, 49);
    }

    #[test]
    fn previous_trajectory_witness_survives() {
        // At t = 0 the point N steps into a run of length 50 has value 30.
        let pts = [point(20, 1.0, 30), point(21, 2.0, 29)];
        let c = enumerate_candidates(&pts, &table(&pts), 0, 0, 20, 50).unwrap();
        assert_eq!(c.iter().map(|c| c.bound).collect::<Vec<_>>(), vec![49, 50]);
    }

    #[test]
    fn candidates_sorted_and_deduplicated() {
        let mut a = point(5, 1.0, 7);
        a.source_iteration = 2;
        let mut b = point(3, 1.0, 5);
        b.source_iteration = 1;
        let c = point(9, 3.0, 5);
        let pts = [a, b, c];
        let out = enumerate_candidates(&pts, &table(&pts), 0, 0, 2, 100).unwrap();
        let prov: Vec<_> = out.iter().map(|c| c.point.provenance()).collect();
        assert_eq!(prov, vec![(0, 9), (1, 3)]);
    }

    #[test]
    fn reachability_screen_is_conservative() {
        let model = AgentModel::Bicycle(crate::dynamics::BicycleParams::default());
        let limits = Limits {
            state_lower: State::new(-10.0, -10.0, f64::NEG_INFINITY, -10.0),
            state_upper: State::new(10.0, 10.0, f64::INFINITY, 10.0),
            input_lower: Input::new(-0.5, -3.0),
            input_upper: Input::new(0.5, 3.0),
            rate_limit: Input::new(0.07, 0.7),
        };
        let x0 = State::zeros();
        let inputs = vec![Input::new(0.05, 0.7); 10];
        let states = model.rollout(&x0, &inputs);
        let anchor = Input::new(0.05, 0.7);
        assert!(reachable(&model, &limits, &x0, &Input::zeros(), &states[10], Some(&anchor), 10));
        let far = State::new(5.0, 0.0, 0.0, 0.0);
        assert!(!reachable(&model, &limits, &x0, &Input::zeros(), &far, None, 10));
    }
}
