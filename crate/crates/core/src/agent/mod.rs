//! The knowledge plane: a single centralized tabular Q-learning agent.

mod action;
mod params;
pub mod persist;
mod qtable;
mod reward;
mod telemetry;

pub use action::Action;
pub use params::{decay_epsilon, HyperParams};
pub use persist::{
    load_qtable, read_qtable, save_qtable, write_qtable, TableHeader, QTABLE_MAGIC, QTABLE_VERSION,
};
pub use qtable::{greedy_index, select_action, select_index, QTable};
pub use reward::{compute_reward, RewardConfig};
pub use telemetry::{Feature, StateBins, StateIndex, TelemetrySample};
