use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Action, HyperParams, StateIndex};
use crate::error::{Error, Result};

/// Dense row-major table of action values plus visit counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    states: usize,
    actions: usize,
    values: Vec<f64>,
    visits: Vec<u64>,
}

impl QTable {
    pub fn zeros(states: usize, actions: usize) -> Self {
        QTable {
            states,
            actions,
            values: vec![0.0; states * actions],
            visits: vec![0; states * actions],
        }
    }

    pub fn from_parts(
        states: usize,
        actions: usize,
        values: Vec<f64>,
        visits: Vec<u64>,
    ) -> Result<Self> {
        let cells = states
            .checked_mul(actions)
            .ok_or_else(|| Error::invalid("states", "table size overflows"))?;
        if values.len() != cells || visits.len() != cells {
            return Err(Error::IncompatibleTable(format!(
                "expected {cells} cells, got {} values and {} visit counts",
                values.len(),
                visits.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::IncompatibleTable("non-finite action value".into()));
        }
        Ok(QTable {
            states,
            actions,
            values,
            visits,
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn visit_counts(&self) -> &[u64] {
        &self.visits
    }

    pub fn row(&self, s: StateIndex) -> &[f64] {
        &self.values[s * self.actions..(s + 1) * self.actions]
    }

    pub fn row_mut(&mut self, s: StateIndex) -> &mut [f64] {
        &mut self.values[s * self.actions..(s + 1) * self.actions]
    }

    pub fn get(&self, s: StateIndex, a: usize) -> f64 {
        self.values[s * self.actions + a]
    }

    pub fn set(&mut self, s: StateIndex, a: usize, v: f64) {
        self.values[s * self.actions + a] = v;
    }

    pub fn visits(&self, s: StateIndex, a: usize) -> u64 {
        self.visits[s * self.actions + a]
    }

    pub fn max_value(&self, s: StateIndex) -> f64 {
        self.row(s)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn visited_states(&self) -> usize {
        self.visits
            .chunks(self.actions)
            .filter(|row| row.iter().any(|&v| v > 0))
            .count()
    }

    /// `Q(s,a) ← Q(s,a) + α·(r + γ·max_a' Q(s',a') − Q(s,a))`.
    pub fn update(
        &mut self,
        s: StateIndex,
        a: usize,
        reward: f64,
        s_next: StateIndex,
        hp: &HyperParams,
    ) {
        let target = reward + hp.gamma * self.max_value(s_next);
        let cell = s * self.actions + a;
        let q = self.values[cell];
        self.values[cell] = q + hp.alpha * (target - q);
        self.visits[cell] += 1;
    }
}

/// Index of the largest value, lowest index on ties.
pub fn greedy_index(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy column choice over the row of `s`.
///
/// One uniform draw decides between exploring and exploiting; exploring
/// spends a second draw on the column. With `epsilon == 0` no randomness is
/// consumed.
pub fn select_index<R: Rng + ?Sized>(
    q: &QTable,
    s: StateIndex,
    epsilon: f64,
    rng: &mut R,
) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..q.actions())
    } else {
        greedy_index(q.row(s))
    }
}

pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    s: StateIndex,
    epsilon: f64,
    rng: &mut R,
) -> Action {
    debug_assert_eq!(q.actions(), Action::COUNT);
    Action::from_ordinal(select_index(q, s, epsilon, rng)).unwrap_or(Action::NoOp)
}
