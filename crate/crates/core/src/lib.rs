//! `kdnsim` simulates a small-cell radio network (macro base stations plus
//! short-range THz access points) whose control loop is closed by a tabular
//! Q-learning agent. The agent reads per-UE telemetry, decides handovers and
//! transmit-power changes, and is compared against an idle baseline that never
//! touches the network after the initial nearest-station attachment.
//!
//! Module map:
//!
//! * [`model`]: topology types, link budget, throughput, latency and loss.
//! * [`mobility`]: random-waypoint motion of UEs.
//! * [`agent`]: telemetry discretization, epsilon-greedy selection, the
//!   Q-update, rewards and Q-table persistence.
//! * [`engine`]: scenarios, episodes, training and user-count sweeps.
//! * [`bridge`]: a length-prefixed JSON reset/step protocol over TCP.
//! * [`cli`]: scenario files, run manifests and the command implementations
//!   behind the `kdnsim` binary.

pub mod agent;
pub mod bridge;
pub mod cli;
pub mod engine;
pub mod error;
pub mod mobility;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
