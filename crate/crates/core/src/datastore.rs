//! Recorded closed-loop runs and the cross-iteration dataset.

use crate::dynamics::{goal_reached, AgentModel, Input, State};
use crate::error::{Error, Result};

/// Absolute tolerance for the step-consistency check on recorded data.
pub const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub agent_id: usize,
    pub iteration: usize,
    /// `completion_time + 1` states.
    pub states: Vec<State>,
    /// `completion_time` inputs; `inputs[k]` is applied at `states[k]`.
    pub inputs: Vec<Input>,
    pub completion_time: usize,
}

impl Trajectory {
    pub fn new(agent_id: usize, iteration: usize, states: Vec<State>, inputs: Vec<Input>) -> Result<Self> {
        if states.len() != inputs.len() + 1 {
            return Err(Error::MalformedTrajectory { states: states.len(), inputs: inputs.len() });
        }
        let completion_time = inputs.len();
        Ok(Self { agent_id, iteration, states, inputs, completion_time })
    }

    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory has at least one state")
    }

    /// First recorded successor deviating from the model prediction by more
    /// than `tol`.
    pub fn first_defect(&self, model: &AgentModel, tol: f64) -> Option<(usize, f64)> {
        self.inputs.iter().enumerate().find_map(|(k, u)| {
            let dev = (model.step(&self.states[k], u) - self.states[k + 1]).abs().max();
            (!(dev <= tol)).then_some((k + 1, dev))
        })
    }

    /// Largest deviation between a recorded successor and the model prediction,
    /// with the time index at which it occurs.
    pub fn worst_defect(&self, model: &AgentModel) -> (usize, f64) {
        let mut worst = (0, 0.0);
        for (k, u) in self.inputs.iter().enumerate() {
            let predicted = model.step(&self.states[k], u);
            let dev = (predicted - self.states[k + 1]).abs().max();
            if dev > worst.1 || dev.is_nan() {
                worst = (k + 1, dev);
            }
        }
        worst
    }
}

/// Remaining steps to the end of `trajectory` from time `t`.
pub fn cost_to_go(trajectory: &Trajectory, t: usize) -> Result<usize> {
    if t > trajectory.completion_time {
        return Err(Error::IndexOutOfRange { index: t, len: trajectory.completion_time });
    }
    Ok(trajectory.completion_time - t)
}

/// Append-only store of every iteration's per-agent trajectories.
#[derive(Clone, Debug)]
pub struct IterationDataset {
    models: Vec<AgentModel>,
    goals: Vec<State>,
    eps: f64,
    /// `runs[agent][iteration]`.
    runs: Vec<Vec<Trajectory>>,
    /// `success[agent][iteration]`.
    success: Vec<Vec<bool>>,
}

impl IterationDataset {
    pub fn new(models: Vec<AgentModel>, goals: Vec<State>, eps: f64) -> Self {
        assert_eq!(models.len(), goals.len());
        let m = models.len();
        Self { models, goals, eps, runs: vec![Vec::new(); m], success: vec![Vec::new(); m] }
    }

    pub fn num_agents(&self) -> usize {
        self.models.len()
    }

    pub fn num_iterations(&self) -> usize {
        self.runs.first().map_or(0, Vec::len)
    }

    pub fn model(&self, agent: usize) -> &AgentModel {
        &self.models[agent]
    }

    pub fn goal(&self, agent: usize) -> &State {
        &self.goals[agent]
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn trajectory(&self, agent: usize, iteration: usize) -> &Trajectory {
        &self.runs[agent][iteration]
    }

    pub fn trajectories(&self, agent: usize) -> &[Trajectory] {
        &self.runs[agent]
    }

    pub fn completion_times(&self, agent: usize) -> Vec<usize> {
        self.runs[agent].iter().map(|t| t.completion_time).collect()
    }

    pub fn is_successful(&self, agent: usize, iteration: usize) -> bool {
        self.success[agent][iteration]
    }

    /// Iterations in which every agent reached its goal, ascending.
    pub fn successful_iterations(&self) -> Vec<usize> {
        (0..self.num_iterations())
            .filter(|&q| (0..self.num_agents()).all(|i| self.success[i][q]))
            .collect()
    }

    /// Appends one iteration. Every trajectory must be consistent with its
    /// agent's model; unsuccessful runs are stored but flagged.
    pub fn record_iteration(&mut self, trajectories: Vec<Trajectory>) -> Result<()> {
        if trajectories.len() != self.num_agents() {
            return Err(Error::AgentCountMismatch { expected: self.num_agents(), got: trajectories.len() });
        }
        let iteration = self.num_iterations();
        for (i, traj) in trajectories.iter().enumerate() {
            if traj.states.len() != traj.inputs.len() + 1 {
                return Err(Error::MalformedTrajectory { states: traj.states.len(), inputs: traj.inputs.len() });
            }
            if let Some((time, deviation)) = traj.first_defect(&self.models[i], CONSISTENCY_TOL) {
                return Err(Error::DynamicsMismatch { agent: i, iteration, time, deviation });
            }
        }
        for (i, mut traj) in trajectories.into_iter().enumerate() {
            traj.agent_id = i;
            traj.iteration = iteration;
            let ok = goal_reached(traj.final_state(), &self.goals[i], self.eps);
            self.success[i].push(ok);
            self.runs[i].push(traj);
        }
        Ok(())
    }
}
