//! Scenario files: TOML with one section per subsystem. Every key is
//! optional; omitted keys take the documented defaults and unknown keys are
//! rejected. `scenarios/reference.toml` lists every key with its default.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::agent::{HyperParams, RewardConfig, StateBins};
use crate::engine::{default_topology, Demand, Policy, Scenario, StationConfig};
use crate::error::{Error, Result};
use crate::mobility::MobilityConfig;
use crate::model::{Area, LatencyModel, LossModel, Point, RadioParams, StationKind};

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AreaSection {
    width_m: f64,
    height_m: f64,
}

impl Default for AreaSection {
    fn default() -> Self {
        let a = MobilityConfig::default().area;
        AreaSection {
            width_m: a.width,
            height_m: a.height,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MobilitySection {
    speed_min_mps: f64,
    speed_max_mps: f64,
    pause_max_s: f64,
    tick_duration_s: f64,
}

impl Default for MobilitySection {
    fn default() -> Self {
        let m = MobilityConfig::default();
        MobilitySection {
            speed_min_mps: m.speed_min,
            speed_max_mps: m.speed_max,
            pause_max_s: m.pause_max_s,
            tick_duration_s: m.tick_duration_s,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RadioSection {
    noise_dbm: f64,
    min_distance_m: f64,
    sinr_cap_db: f64,
    thz_absorption_db_per_m: f64,
    thz_threshold_hz: f64,
    latency: LatencyModel,
    loss: LossModel,
}

impl Default for RadioSection {
    fn default() -> Self {
        let r = RadioParams::default();
        let s = Scenario::default();
        RadioSection {
            noise_dbm: r.noise_dbm,
            min_distance_m: r.min_distance_m,
            sinr_cap_db: r.sinr_cap_db,
            thz_absorption_db_per_m: s.thz_absorption_db_per_m,
            thz_threshold_hz: s.thz_threshold_hz,
            latency: r.latency,
            loss: r.loss,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationEntry {
    kind: StationKind,
    x_m: f64,
    y_m: f64,
    carrier_frequency_hz: Option<f64>,
    bandwidth_hz: Option<f64>,
    power_levels_dbm: Option<Vec<f64>>,
    base_latency_ms: Option<f64>,
    capacity_ue: Option<u32>,
}

impl StationEntry {
    fn resolve(self) -> StationConfig {
        let d = StationConfig::defaults_for(self.kind, Point::new(self.x_m, self.y_m));
        StationConfig {
            carrier_frequency_hz: self.carrier_frequency_hz.unwrap_or(d.carrier_frequency_hz),
            bandwidth_hz: self.bandwidth_hz.unwrap_or(d.bandwidth_hz),
            power_levels_dbm: self.power_levels_dbm.unwrap_or(d.power_levels_dbm.clone()),
            base_latency_ms: self.base_latency_ms.unwrap_or(d.base_latency_ms),
            capacity_ue: self.capacity_ue.unwrap_or(d.capacity_ue),
            ..d
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScenarioFile {
    seed: u64,
    ue_count: u32,
    policy: Policy,
    area: AreaSection,
    mobility: MobilitySection,
    demand: Demand,
    radio: RadioSection,
    reward: RewardConfig,
    agent: HyperParams,
    bins: StateBins,
    stations: Vec<StationEntry>,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        let s = Scenario::default();
        ScenarioFile {
            seed: s.seed,
            ue_count: s.ue_count,
            policy: s.policy,
            area: AreaSection::default(),
            mobility: MobilitySection::default(),
            demand: s.demand,
            radio: RadioSection::default(),
            reward: s.reward,
            agent: s.agent,
            bins: s.bins,
            stations: Vec::new(),
        }
    }
}

impl ScenarioFile {
    fn into_scenario(self) -> Scenario {
        let area = Area {
            width: self.area.width_m,
            height: self.area.height_m,
        };
        let stations = if self.stations.is_empty() {
            default_topology(area.width, area.height)
        } else {
            self.stations
                .into_iter()
                .map(StationEntry::resolve)
                .collect()
        };
        Scenario {
            seed: self.seed,
            ue_count: self.ue_count,
            policy: self.policy,
            stations,
            demand: self.demand,
            mobility: MobilityConfig {
                area,
                speed_min: self.mobility.speed_min_mps,
                speed_max: self.mobility.speed_max_mps,
                pause_max_s: self.mobility.pause_max_s,
                tick_duration_s: self.mobility.tick_duration_s,
            },
            radio: RadioParams {
                noise_dbm: self.radio.noise_dbm,
                min_distance_m: self.radio.min_distance_m,
                sinr_cap_db: self.radio.sinr_cap_db,
                latency: self.radio.latency,
                loss: self.radio.loss,
            },
            thz_absorption_db_per_m: self.radio.thz_absorption_db_per_m,
            thz_threshold_hz: self.radio.thz_threshold_hz,
            reward: self.reward,
            agent: self.agent,
            bins: self.bins,
        }
    }
}

/// Where a scenario came from, for the run manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSource {
    pub path: Option<PathBuf>,
    /// SHA-256 of the file bytes (of the empty string for built-in defaults).
    pub sha256: String,
}

fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|line| {
            let t = line.trim_start();
            t.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

/// Parses scenario text. `origin` only labels diagnostics.
pub fn parse_scenario_str(text: &str, origin: &Path) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Config {
        path: origin.to_owned(),
        message: e.to_string().trim_end().to_owned(),
    })?;
    let scenario = file.into_scenario();
    scenario.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => {
            let at = line_of_key(text, name)
                .map(|l| format!(" (line {l})"))
                .unwrap_or_default();
            Error::Config {
                path: origin.to_owned(),
                message: format!("key `{name}`{at}: {reason}"),
            }
        }
        other => other,
    })?;
    Ok(scenario)
}

pub fn parse_scenario(path: &Path) -> Result<(Scenario, ScenarioSource)> {
    let bytes = fs::read(path).map_err(|e| Error::path_io(path, e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Config {
        path: path.to_owned(),
        message: "scenario file is not valid UTF-8".into(),
    })?;
    let scenario = parse_scenario_str(&text, path)?;
    Ok((
        scenario,
        ScenarioSource {
            path: Some(path.to_owned()),
            sha256: format!("{:x}", Sha256::digest(&bytes)),
        },
    ))
}

impl ScenarioSource {
    pub fn builtin() -> Self {
        ScenarioSource {
            path: None,
            sha256: format!("{:x}", Sha256::digest(b"")),
        }
    }
}
