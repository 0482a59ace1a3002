//! Operator surface behind the `kdnsim` binary.

mod commands;
mod manifest;
mod scenario_file;

pub use commands::{
    cmd_evaluate, cmd_inspect_qtable, cmd_serve, cmd_sweep, cmd_train, parse_list, parse_u32_list,
    plot_file, EvaluateOutput, SweepOutput, TrainOutput, CURVE_FILE, EVALUATION_FILE, QTABLE_FILE,
    RUNS_FILE, SWEEP_FILE,
};
pub use manifest::{RunManifest, MANIFEST_FILE};
pub use scenario_file::{parse_scenario, parse_scenario_str, ScenarioSource};
