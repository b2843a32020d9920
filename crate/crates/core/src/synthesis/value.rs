use crate::dynamics::State;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

use super::safe_set::SafeSetPoint;

/// Componentwise tolerance under which two recorded states are the same point.
pub const STATE_MATCH_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueEntry {
    pub state: State,
    pub value: usize,
}

/// Minimum cost-to-go over recorded occurrences of each safe-set state.
/// States absent from a time slice have infinite value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub agent_id: usize,
    /// Per time, entries sorted by the first state component.
    pub tables: Vec<Vec<ValueEntry>>,
}

fn same_state(a: &State, b: &State) -> bool {
    (a - b).abs().max() <= STATE_MATCH_TOL
}

impl ValueTable {
    pub fn build(agent_id: usize, sets: &[Vec<SafeSetPoint>]) -> Self {
        Self { agent_id, tables: sets.iter().map(|s| dedup_min(s)).collect() }
    }

    pub fn slice(&self, t: usize) -> &[ValueEntry] {
        &self.tables[t.min(self.tables.len() - 1)]
    }

    /// Value of `state` at time `t`, or `None` outside the safe set.
    pub fn value_of(&self, state: &State, t: usize) -> Option<usize> {
        let entries = self.slice(t);
        let start = entries.partition_point(|e| e.state[0] < state[0] - STATE_MATCH_TOL);
        entries[start..]
            .iter()
            .take_while(|e| e.state[0] <= state[0] + STATE_MATCH_TOL)
            .filter(|e| same_state(&e.state, state))
            .map(|e| e.value)
            .min()
    }
}

/// Per-point minimum over all points whose states match within tolerance.
pub fn min_values(points: &[SafeSetPoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].state[0].total_cmp(&points[b].state[0]));
    let mut best: Vec<usize> = points.iter().map(|p| p.cost_to_go).collect();
    for (pos, &i) in order.iter().enumerate() {
        for &j in order[pos + 1..].iter() {
            if points[j].state[0] > points[i].state[0] + STATE_MATCH_TOL {
                break;
            }
            if same_state(&points[i].state, &points[j].state) {
                let m = best[i].min(best[j]);
                best[i] = m;
                best[j] = m;
            }
        }
    }
    best
}

fn dedup_min(points: &[SafeSetPoint]) -> Vec<ValueEntry> {
    let values = min_values(points);
    let mut entries: Vec<ValueEntry> = Vec::with_capacity(points.len());
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].state[0].total_cmp(&points[b].state[0]).then(values[a].cmp(&values[b])));
    for i in order {
        let s = points[i].state;
        let dup = entries
            .iter()
            .rev()
            .take_while(|e| e.state[0] >= s[0] - STATE_MATCH_TOL)
            .any(|e| same_state(&e.state, &s));
        if !dup {
            entries.push(ValueEntry { state: s, value: values[i] });
        }
    }
    entries
}

/// Minimum cost-to-go among the points of the safe set at `t` that coincide
/// with `point`.
pub fn value_lookup(table: &ValueTable, point: &SafeSetPoint, t: usize) -> Result<usize> {
    table.value_of(&point.state, t).ok_or(Error::NotInSafeSet(t))
}
