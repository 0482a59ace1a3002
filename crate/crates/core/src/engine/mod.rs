//! Discrete-event loop: scenarios, episodes, training and sweeps.

mod episode;
mod scenario;
mod sweep;

pub use episode::{
    apply_action, baseline_policy, run_episode, run_episode_logged, ActionEffect, Driver, Episode,
    EpisodeResult, Observation, StepOutcome, TickKpi, TickRecord,
};
pub use scenario::{default_topology, Demand, Policy, Scenario, StationConfig};
pub use sweep::{
    evaluate, sweep_users, train, CurvePoint, Kpi, KpiStat, SeedRun, SweepRow, TrainOutcome,
};
