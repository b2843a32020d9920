use crate::datastore::IterationDataset;
use crate::dynamics::{Input, State};
use crate::error::{Error, Result};
use crate::geometry::Point;
use serde::{Deserialize, Serialize};

use super::{SynthesisParams, TimeWindow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointOrigin {
    /// A state recorded at `(source_iteration, source_time)`.
    Recorded,
    /// The goal held with zero input past the end of `source_iteration`.
    GoalExtension,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafeSetPoint {
    pub source_iteration: usize,
    pub source_time: usize,
    pub state: State,
    /// Input recorded at this point; zero at and beyond the end of the run.
    pub successor_input: Input,
    pub cost_to_go: usize,
    pub origin: PointOrigin,
}

impl SafeSetPoint {
    pub fn position(&self) -> Point {
        Point::new(self.state[0], self.state[1])
    }

    pub fn provenance(&self) -> (usize, usize) {
        (self.source_iteration, self.source_time)
    }
}

/// One agent's safe sets indexed by time. Lookups past the stored range
/// return the last entry, which holds only goal points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedSafeSet {
    pub agent_id: usize,
    pub sets: Vec<Vec<SafeSetPoint>>,
    /// Longest completion time among the iterations the sets were built from.
    pub horizon_end: usize,
}

impl TimedSafeSet {
    pub fn at(&self, t: usize) -> &[SafeSetPoint] {
        &self.sets[t.min(self.sets.len() - 1)]
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// The iterations a window of size `iter_window` draws from: the
/// `iter_window + 1` most recent successful ones.
pub fn iteration_window(dataset: &IterationDataset, iter_window: usize) -> Vec<usize> {
    let succ = dataset.successful_iterations();
    let first = succ.len().saturating_sub(iter_window + 1);
    succ[first..].to_vec()
}

/// Candidate safe set for `agent` at time `t` under window `params`.
pub fn candidate_safe_sets(
    dataset: &IterationDataset,
    params: &SynthesisParams,
    agent: usize,
    t: usize,
) -> Result<Vec<SafeSetPoint>> {
    let iters = iteration_window(dataset, params.iter_window);
    if iters.is_empty() {
        return Err(Error::EmptyDataset(agent));
    }
    Ok(points_for(dataset, &iters, agent, t, params.window()))
}

pub(crate) fn points_for(
    dataset: &IterationDataset,
    iters: &[usize],
    agent: usize,
    t: usize,
    window: TimeWindow,
) -> Vec<SafeSetPoint> {
    let (lo, hi) = window.range(t);
    let mut out = Vec::new();
    for &p in iters {
        let traj = dataset.trajectory(agent, p);
        let end = traj.completion_time;
        for k in lo..=hi.min(end) {
            out.push(SafeSetPoint {
                source_iteration: p,
                source_time: k,
                state: traj.states[k],
                successor_input: traj.inputs.get(k).copied().unwrap_or_else(Input::zeros),
                cost_to_go: end - k,
                origin: PointOrigin::Recorded,
            });
        }
        if hi > end {
            out.push(SafeSetPoint {
                source_iteration: p,
                source_time: lo.max(end + 1),
                state: *dataset.goal(agent),
                successor_input: Input::zeros(),
                cost_to_go: 0,
                origin: PointOrigin::GoalExtension,
            });
        }
    }
    out
}

/// Positions only, for the separability screen.
pub(crate) fn positions_for(
    dataset: &IterationDataset,
    iters: &[usize],
    agent: usize,
    t: usize,
    window: TimeWindow,
    out: &mut Vec<Point>,
) {
    out.clear();
    let (lo, hi) = window.range(t);
    for &p in iters {
        let traj = dataset.trajectory(agent, p);
        let end = traj.completion_time;
        for k in lo..=hi.min(end) {
            out.push(Point::new(traj.states[k][0], traj.states[k][1]));
        }
        if hi > end {
            let g = dataset.goal(agent);
            out.push(Point::new(g[0], g[1]));
        }
    }
}
