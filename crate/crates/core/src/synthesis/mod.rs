//! Between-iteration synthesis of the per-agent terminal components: windowed
//! time-varying safe sets, pairwise separating-hyperplane constraints and
//! value tables, with the window shrink-and-retry loop.

mod safe_set;
mod separation;
mod value;
mod verify;

pub use safe_set::{candidate_safe_sets, iteration_window, PointOrigin, SafeSetPoint, TimedSafeSet};
pub use separation::{fit_separating_hyperplane, Separation};
pub use value::{min_values, value_lookup, ValueEntry, ValueTable, STATE_MATCH_TOL};
pub use verify::{verify_reachability, ReachabilityReport, ReachabilityViolation};

use crate::datastore::IterationDataset;
use crate::error::{Error, Result};
use crate::geometry::{convex_hull, hull_nearest_points, HalfPlane, Point};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Slack on the pairwise separation test. Recorded closed-loop runs satisfy
/// the buffer constraint only up to the optimizer's feasibility tolerance.
pub const SEPARATION_TOL: f64 = 1e-6;

/// How time windows are reduced when safe sets of two agents cannot be
/// separated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowPolicy {
    /// One window for all agents and times, shrunk by [`shrink_schedule`].
    Global,
    /// Windows chosen per agent and per time, never decreasing in time.
    #[default]
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisParams {
    /// Number of earlier successful iterations kept besides the latest.
    pub iter_window: usize,
    /// Steps looked back from `t`.
    pub back_window: usize,
    /// Steps looked ahead from `t`.
    pub fwd_window: usize,
    #[serde(default)]
    pub policy: WindowPolicy,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        Self { iter_window: 2, back_window: 0, fwd_window: 175, policy: WindowPolicy::Adaptive }
    }
}

impl SynthesisParams {
    pub fn window(&self) -> TimeWindow {
        TimeWindow { back: self.back_window, fwd: self.fwd_window }
    }
}

/// Recorded time indices `[t - back, t + fwd]` that enter the set at `t`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeWindow {
    pub back: usize,
    pub fwd: usize,
}

impl TimeWindow {
    pub fn range(&self, t: usize) -> (usize, usize) {
        (t.saturating_sub(self.back), t + self.fwd)
    }

    /// Both sides shortened by `steps`, floored at zero.
    pub fn shrunk(&self, steps: usize) -> Self {
        Self { back: self.back.saturating_sub(steps), fwd: self.fwd.saturating_sub(steps) }
    }

    fn span(&self) -> usize {
        self.back.max(self.fwd)
    }
}

/// Window reductions tried in order: drop iterations first; once the
/// iteration window would hit zero, shorten both time windows by one and
/// restore it. A final single-iteration, zero-width attempt closes the list.
pub fn shrink_schedule(initial: SynthesisParams) -> Vec<SynthesisParams> {
    let mut out = vec![initial];
    let mut cur = initial;
    loop {
        if cur.iter_window > 0 {
            cur.iter_window -= 1;
        }
        if cur.iter_window == 0 {
            if cur.back_window == 0 && cur.fwd_window == 0 {
                if out.last() != Some(&cur) {
                    out.push(cur);
                }
                break;
            }
            cur.back_window = cur.back_window.saturating_sub(1);
            cur.fwd_window = cur.fwd_window.saturating_sub(1);
            cur.iter_window = initial.iter_window;
        }
        out.push(cur);
    }
    out
}

/// Per-agent, per-time stacked position constraints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneSet {
    pub agent_id: usize,
    /// `rows[t]` holds one half-plane per other agent, ascending agent order.
    pub rows: Vec<Vec<HalfPlane>>,
}

impl HyperplaneSet {
    pub fn at(&self, t: usize) -> &[HalfPlane] {
        &self.rows[t.min(self.rows.len() - 1)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOutput {
    pub safe_sets: Vec<TimedSafeSet>,
    pub hyperplanes: Vec<HyperplaneSet>,
    pub values: Vec<ValueTable>,
    /// Parameters of the accepted attempt. Under the adaptive policy the time
    /// windows here are the caps and `windows` holds the values used.
    pub params_used: SynthesisParams,
    /// `windows[i][t]` is the time window of agent `i` at slice `t`.
    pub windows: Vec<Vec<TimeWindow>>,
    /// Iterations the sets were drawn from.
    pub iterations: Vec<usize>,
    /// Number of window settings evaluated, including the accepted one.
    pub attempts: usize,
}

impl SynthesisOutput {
    pub fn num_agents(&self) -> usize {
        self.safe_sets.len()
    }

    /// Number of stored time slices; later times reuse the last one.
    pub fn num_slices(&self) -> usize {
        self.safe_sets.first().map_or(0, TimedSafeSet::len)
    }
}

struct Conflict {
    time: usize,
    a: usize,
    b: usize,
}

fn slice_count(dataset: &IterationDataset, iters: &[usize]) -> usize {
    let end = (0..dataset.num_agents())
        .flat_map(|i| iters.iter().map(move |&p| dataset.trajectory(i, p).completion_time))
        .max()
        .unwrap_or(0);
    // Slice `end + 1` is the all-goal tail.
    end + 2
}

fn hull(dataset: &IterationDataset, iters: &[usize], agent: usize, t: usize, w: TimeWindow, scratch: &mut Vec<Point>) -> Vec<Point> {
    safe_set::positions_for(dataset, iters, agent, t, w, scratch);
    convex_hull(scratch)
}

fn separated(a: &[Point], b: &[Point], required: f64) -> bool {
    hull_nearest_points(a, b).is_some_and(|(pa, pb)| (pb - pa).norm() >= required - SEPARATION_TOL)
}

fn first_conflict(hulls: &[Vec<Point>], radii: &[f64]) -> Option<(usize, usize)> {
    let m = hulls.len();
    (0..m)
        .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
        .find(|&(a, b)| !separated(&hulls[a], &hulls[b], radii[a] + radii[b]))
}

/// Builds safe sets, hyperplane decompositions and value tables from the
/// successful iterations in `dataset`, shrinking windows until every pair of
/// agents' sets is separable with margin `r_i + r_j` at every time.
pub fn synthesize(dataset: &IterationDataset, params: SynthesisParams, radii: &[f64]) -> Result<SynthesisOutput> {
    assert_eq!(radii.len(), dataset.num_agents());
    if dataset.successful_iterations().is_empty() {
        return Err(Error::EmptyDataset(0));
    }
    match params.policy {
        WindowPolicy::Global => synthesize_global(dataset, params, radii),
        WindowPolicy::Adaptive => synthesize_adaptive(dataset, params, radii),
    }
}

fn synthesize_global(dataset: &IterationDataset, params: SynthesisParams, radii: &[f64]) -> Result<SynthesisOutput> {
    let m = dataset.num_agents();
    let mut seen = HashSet::new();
    let mut attempts = 0;
    let mut hint = 0usize;
    let mut last_conflict = None;
    let mut scratch = Vec::new();
    for theta in shrink_schedule(params) {
        let iters = iteration_window(dataset, theta.iter_window);
        // Different iteration windows can select the same iterations.
        if !seen.insert((iters.clone(), theta.back_window, theta.fwd_window)) {
            continue;
        }
        attempts += 1;
        let slices = slice_count(dataset, &iters);
        let order = std::iter::once(hint.min(slices - 1)).chain((0..slices).filter(|&t| t != hint));
        let mut failed = None;
        for t in order {
            let hulls: Vec<_> = (0..m).map(|i| hull(dataset, &iters, i, t, theta.window(), &mut scratch)).collect();
            if let Some((a, b)) = first_conflict(&hulls, radii) {
                failed = Some(Conflict { time: t, a, b });
                break;
            }
        }
        match failed {
            Some(c) => {
                hint = c.time;
                last_conflict = Some(c);
            }
            None => {
                let windows = vec![vec![theta.window(); slices]; m];
                return Ok(build(dataset, &iters, theta, windows, radii, attempts));
            }
        }
    }
    let c = last_conflict.expect("at least one attempt failed");
    Err(Error::SynthesisExhausted { time: c.time, a: c.a, b: c.b })
}

fn synthesize_adaptive(dataset: &IterationDataset, params: SynthesisParams, radii: &[f64]) -> Result<SynthesisOutput> {
    let mut seen = HashSet::new();
    let mut attempts = 0;
    let mut last_conflict = None;
    for iter_window in (0..=params.iter_window).rev() {
        let iters = iteration_window(dataset, iter_window);
        if !seen.insert(iters.clone()) {
            continue;
        }
        attempts += 1;
        match fit_windows(dataset, &iters, params.window(), radii) {
            Ok(windows) => {
                let theta = SynthesisParams { iter_window, ..params };
                return Ok(build(dataset, &iters, theta, windows, radii, attempts));
            }
            Err(c) => last_conflict = Some(c),
        }
    }
    let c = last_conflict.expect("at least one attempt failed");
    Err(Error::SynthesisExhausted { time: c.time, a: c.a, b: c.b })
}

/// Largest window of `agent` at `t`, at most `cap`, whose hull is separated
/// from `other`. Hulls only grow with the window, so the search bisects on
/// the number of steps removed.
fn widest_separated(
    dataset: &IterationDataset,
    iters: &[usize],
    agent: usize,
    t: usize,
    cap: TimeWindow,
    other: &[Point],
    required: f64,
    scratch: &mut Vec<Point>,
) -> Option<usize> {
    let ok = |s: usize, scratch: &mut Vec<Point>| separated(&hull(dataset, iters, agent, t, cap.shrunk(s), scratch), other, required);
    let span = cap.span();
    if !ok(span, scratch) {
        return None;
    }
    let (mut lo, mut hi) = (0, span);
    if ok(0, scratch) {
        return Some(0);
    }
    // Invariant: `lo` steps fail, `hi` steps succeed.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid, scratch) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Backward pass over time choosing per-agent windows. Each agent's window at
/// `t` is capped by its window at `t + 1`, so the successor of every point in
/// a set lies in the next set. On a conflict the agent needing the smaller
/// reduction is shrunk.
fn fit_windows(
    dataset: &IterationDataset,
    iters: &[usize],
    cap: TimeWindow,
    radii: &[f64],
) -> std::result::Result<Vec<Vec<TimeWindow>>, Conflict> {
    let m = dataset.num_agents();
    let slices = slice_count(dataset, iters);
    let mut windows = vec![vec![cap; slices]; m];
    let mut cur = vec![cap; m];
    let mut scratch = Vec::new();
    for t in (0..slices).rev() {
        let mut hulls: Vec<_> = (0..m).map(|i| hull(dataset, iters, i, t, cur[i], &mut scratch)).collect();
        while let Some((a, b)) = first_conflict(&hulls, radii) {
            if cur[a].span() == 0 && cur[b].span() == 0 {
                return Err(Conflict { time: t, a, b });
            }
            let required = radii[a] + radii[b];
            let need_a = widest_separated(dataset, iters, a, t, cur[a], &hulls[b], required, &mut scratch);
            let need_b = widest_separated(dataset, iters, b, t, cur[b], &hulls[a], required, &mut scratch);
            let shrink_a = match (need_a, need_b) {
                (Some(sa), Some(sb)) => sa < sb || (sa == sb && cur[a].span() > cur[b].span()),
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => {
                    cur[a] = cur[a].shrunk(1);
                    cur[b] = cur[b].shrunk(1);
                    hulls[a] = hull(dataset, iters, a, t, cur[a], &mut scratch);
                    hulls[b] = hull(dataset, iters, b, t, cur[b], &mut scratch);
                    continue;
                }
            };
            let (i, steps) = if shrink_a { (a, need_a.unwrap()) } else { (b, need_b.unwrap()) };
            cur[i] = cur[i].shrunk(steps);
            hulls[i] = hull(dataset, iters, i, t, cur[i], &mut scratch);
        }
        for i in 0..m {
            windows[i][t] = cur[i];
        }
    }
    Ok(windows)
}

fn build(
    dataset: &IterationDataset,
    iters: &[usize],
    theta: SynthesisParams,
    windows: Vec<Vec<TimeWindow>>,
    radii: &[f64],
    attempts: usize,
) -> SynthesisOutput {
    let m = dataset.num_agents();
    let slices = windows[0].len();
    let sets: Vec<Vec<Vec<SafeSetPoint>>> = (0..m)
        .map(|i| (0..slices).map(|t| safe_set::points_for(dataset, iters, i, t, windows[i][t])).collect())
        .collect();
    let mut rows: Vec<Vec<Vec<HalfPlane>>> = vec![vec![Vec::with_capacity(m.saturating_sub(1)); slices]; m];
    for t in 0..slices {
        let positions: Vec<Vec<Point>> =
            (0..m).map(|i| sets[i][t].iter().map(SafeSetPoint::position).collect()).collect();
        for a in 0..m {
            for b in a + 1..m {
                let sep = fit_separating_hyperplane(&positions[a], &positions[b])
                    .expect("separability was checked for this window");
                let (ha, hb) = sep.split(radii[a], radii[b]);
                rows[a][t].push(ha);
                rows[b][t].push(hb);
            }
        }
    }
    // Rows for agent b were pushed in ascending order of the partner a < b
    // first, then partners > b, which is ascending overall.
    let safe_sets = sets
        .into_iter()
        .enumerate()
        .map(|(i, sets)| TimedSafeSet {
            agent_id: i,
            horizon_end: iters.iter().map(|&p| dataset.trajectory(i, p).completion_time).max().unwrap_or(0),
            sets,
        })
        .collect::<Vec<_>>();
    let values = safe_sets.iter().map(|s| ValueTable::build(s.agent_id, &s.sets)).collect();
    let hyperplanes = rows.into_iter().enumerate().map(|(i, rows)| HyperplaneSet { agent_id: i, rows }).collect();
    SynthesisOutput { safe_sets, hyperplanes, values, params_used: theta, windows, iterations: iters.to_vec(), attempts }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_follows_iteration_then_time_order() {
        let s = shrink_schedule(SynthesisParams { iter_window: 2, back_window: 1, fwd_window: 2, policy: WindowPolicy::Global });
        let tuples: Vec<_> = s.iter().map(|p| (p.iter_window, p.back_window, p.fwd_window)).collect();
        assert_eq!(
            tuples,
            vec![(2, 1, 2), (1, 1, 2), (2, 0, 1), (1, 0, 1), (2, 0, 0), (1, 0, 0), (0, 0, 0)]
        );
    }

    #[test]
    fn schedule_without_iteration_window() {
        let s = shrink_schedule(SynthesisParams { iter_window: 0, back_window: 0, fwd_window: 2, policy: WindowPolicy::Global });
        let tuples: Vec<_> = s.iter().map(|p| (p.iter_window, p.back_window, p.fwd_window)).collect();
        assert_eq!(tuples, vec![(0, 0, 2), (0, 0, 1), (0, 0, 0)]);
    }
}
