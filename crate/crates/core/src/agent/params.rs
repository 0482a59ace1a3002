use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon0: f64,
    pub epsilon_min: f64,
    /// Multiplicative decay applied once per episode.
    pub epsilon_decay: f64,
    pub episodes: u32,
    pub ticks_per_episode: u32,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            alpha: 0.1,
            gamma: 0.5,
            epsilon0: 1.0,
            epsilon_min: 0.05,
            epsilon_decay: 0.8,
            episodes: 12,
            ticks_per_episode: 2000,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid("alpha", "must lie in (0, 1]"));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid("gamma", "must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.epsilon0) {
            return Err(Error::invalid("epsilon0", "must lie in [0, 1]"));
        }
        if !(0.0..=self.epsilon0).contains(&self.epsilon_min) {
            return Err(Error::invalid("epsilon_min", "must lie in [0, epsilon0]"));
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay) {
            return Err(Error::invalid("epsilon_decay", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

pub fn decay_epsilon(epsilon: f64, hp: &HyperParams) -> f64 {
    (epsilon * hp.epsilon_decay).max(hp.epsilon_min)
}
