//! Exhaustive check that synthesized safe sets are reachable to the goal
//! through stored inputs while honoring their time-stamped hyperplanes.
//!
//! Reachability is checked inductively: every point at `t` must satisfy the
//! hyperplanes at `t`, and its recorded successor must be a member of the set
//! at `t + 1`. Costs-to-go strictly decrease along recorded successors, so
//! chains end at a goal point, which is an equilibrium.

use crate::datastore::{IterationDataset, CONSISTENCY_TOL};
use crate::dynamics::goal_reached;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use super::value::STATE_MATCH_TOL;
use super::{PointOrigin, SynthesisOutput, SEPARATION_TOL};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReachabilityViolation {
    EmptySet { agent: usize, t: usize },
    Hyperplane { agent: usize, t: usize, iteration: usize, time: usize, row: usize, residual: f64 },
    SuccessorMismatch { agent: usize, t: usize, iteration: usize, time: usize, deviation: f64 },
    SuccessorMissing { agent: usize, t: usize, iteration: usize, time: usize },
    TerminalNotAtGoal { agent: usize, t: usize, iteration: usize, time: usize },
    Separation { t: usize, a: usize, b: usize, gap: f64, required: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReachabilityReport {
    pub points_checked: usize,
    pub violations: Vec<ReachabilityViolation>,
}

impl ReachabilityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn verify_reachability(synth: &SynthesisOutput, dataset: &IterationDataset, radii: &[f64]) -> ReachabilityReport {
    let mut report = ReachabilityReport::default();
    let slices = synth.num_slices();
    for (agent, ss) in synth.safe_sets.iter().enumerate() {
        let planes = &synth.hyperplanes[agent];
        let goal = dataset.goal(agent);
        let model = dataset.model(agent);
        let members: Vec<HashSet<(usize, usize)>> =
            ss.sets.iter().map(|s| s.iter().map(|p| p.provenance()).collect()).collect();
        for t in 0..slices {
            let set = ss.at(t);
            if set.is_empty() {
                report.violations.push(ReachabilityViolation::EmptySet { agent, t });
                continue;
            }
            let next_t = (t + 1).min(slices - 1);
            let next = ss.at(next_t);
            let next_has_goal = next.iter().any(|p| (p.state - goal).abs().max() <= STATE_MATCH_TOL);
            for p in set {
                report.points_checked += 1;
                let pos = p.position();
                for (row, h) in planes.at(t).iter().enumerate() {
                    let r = h.residual(&pos);
                    if r > SEPARATION_TOL {
                        report.violations.push(ReachabilityViolation::Hyperplane {
                            agent,
                            t,
                            iteration: p.source_iteration,
                            time: p.source_time,
                            row,
                            residual: r,
                        });
                    }
                }
                let traj = dataset.trajectory(agent, p.source_iteration);
                let at_end = p.origin == PointOrigin::GoalExtension || p.source_time >= traj.completion_time;
                if at_end {
                    if !goal_reached(&p.state, goal, dataset.eps()) {
                        report.violations.push(ReachabilityViolation::TerminalNotAtGoal {
                            agent,
                            t,
                            iteration: p.source_iteration,
                            time: p.source_time,
                        });
                    }
                    if !next_has_goal {
                        report.violations.push(ReachabilityViolation::SuccessorMissing {
                            agent,
                            t,
                            iteration: p.source_iteration,
                            time: p.source_time,
                        });
                    }
                    continue;
                }
                let k = p.source_time;
                let predicted = model.step(&p.state, &p.successor_input);
                let deviation = (predicted - traj.states[k + 1]).abs().max();
                if !(deviation <= CONSISTENCY_TOL) {
                    report.violations.push(ReachabilityViolation::SuccessorMismatch {
                        agent,
                        t,
                        iteration: p.source_iteration,
                        time: k,
                        deviation,
                    });
                }
                let succ = (p.source_iteration, k + 1);
                let succ_is_end = k + 1 == traj.completion_time;
                let present = members[next_t].contains(&succ)
                    || (succ_is_end && next_has_goal)
                    || (t + 1 >= slices && next_has_goal);
                if !present {
                    report.violations.push(ReachabilityViolation::SuccessorMissing {
                        agent,
                        t,
                        iteration: p.source_iteration,
                        time: k,
                    });
                }
            }
        }
    }
    // Paired rows must certify the buffer distance.
    let m = synth.num_agents();
    for t in 0..slices {
        for a in 0..m {
            for b in a + 1..m {
                let ra = &synth.hyperplanes[a].at(t)[b - 1];
                let rb = &synth.hyperplanes[b].at(t)[a];
                let parallel = (ra.normal[0] + rb.normal[0]).abs() < 1e-9 && (ra.normal[1] + rb.normal[1]).abs() < 1e-9;
                let gap = ra.offset + rb.offset;
                let required = radii[a] + radii[b];
                if !parallel || gap < required - 1e-9 {
                    report.violations.push(ReachabilityViolation::Separation { t, a, b, gap, required });
                }
            }
        }
    }
    report
}
