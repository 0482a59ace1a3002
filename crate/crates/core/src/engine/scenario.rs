use serde::{Deserialize, Serialize};

use crate::agent::{HyperParams, RewardConfig, StateBins};
use crate::error::{Error, Result};
use crate::mobility::MobilityConfig;
use crate::model::{BaseStation, Point, RadioParams, StationKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    RlKdn,
    IdleBaseline,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::RlKdn => "rl-kdn",
            Policy::IdleBaseline => "idle-baseline",
        }
    }
}

/// Offered load per UE.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Demand {
    Constant { bps: f64 },
    Uniform { min_bps: f64, max_bps: f64 },
}

impl Default for Demand {
    fn default() -> Self {
        Demand::Constant { bps: 1e9 }
    }
}

/// Fully resolved station definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationConfig {
    pub kind: StationKind,
    pub position: Point,
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub power_levels_dbm: Vec<f64>,
    pub base_latency_ms: f64,
    pub capacity_ue: u32,
}

impl StationConfig {
    pub fn macro_bs(position: Point) -> Self {
        StationConfig {
            kind: StationKind::MacroBs,
            position,
            carrier_frequency_hz: 3.5e9,
            bandwidth_hz: 100e6,
            power_levels_dbm: vec![30.0, 36.0, 40.0, 43.0],
            base_latency_ms: 2.0,
            capacity_ue: 100,
        }
    }

    pub fn access_point(position: Point) -> Self {
        StationConfig {
            kind: StationKind::AccessPoint,
            position,
            carrier_frequency_hz: 300e9,
            bandwidth_hz: 10e9,
            power_levels_dbm: vec![10.0, 15.0, 20.0, 23.0],
            base_latency_ms: 2.0,
            capacity_ue: 8,
        }
    }

    pub fn defaults_for(kind: StationKind, position: Point) -> Self {
        match kind {
            StationKind::MacroBs => StationConfig::macro_bs(position),
            StationKind::AccessPoint => StationConfig::access_point(position),
        }
    }
}

/// Two macro stations and six access points on a regular grid, scaled to the
/// area.
pub fn default_topology(width: f64, height: f64) -> Vec<StationConfig> {
    let mut stations = vec![
        StationConfig::macro_bs(Point::new(0.25 * width, 0.5 * height)),
        StationConfig::macro_bs(Point::new(0.75 * width, 0.5 * height)),
    ];
    for row in 0..2 {
        for col in 0..3 {
            stations.push(StationConfig::access_point(Point::new(
                (2 * col + 1) as f64 * width / 6.0,
                (2 * row + 1) as f64 * height / 4.0,
            )));
        }
    }
    stations
}

/// Everything needed to simulate one world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub ue_count: u32,
    pub policy: Policy,
    pub stations: Vec<StationConfig>,
    pub demand: Demand,
    pub mobility: MobilityConfig,
    pub radio: RadioParams,
    /// Absorption applied to carriers at or above `thz_threshold_hz`.
    pub thz_absorption_db_per_m: f64,
    pub thz_threshold_hz: f64,
    pub reward: RewardConfig,
    pub agent: HyperParams,
    pub bins: StateBins,
}

impl Default for Scenario {
    fn default() -> Self {
        let mobility = MobilityConfig::default();
        Scenario {
            seed: 1,
            ue_count: 100,
            policy: Policy::RlKdn,
            stations: default_topology(mobility.area.width, mobility.area.height),
            demand: Demand::default(),
            mobility,
            radio: RadioParams::default(),
            thz_absorption_db_per_m: 0.5,
            thz_threshold_hz: 100e9,
            reward: RewardConfig::default(),
            agent: HyperParams::default(),
            bins: StateBins::default(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.ue_count < 1 {
            return Err(Error::invalid("ue_count", "ue_count ≥ 1"));
        }
        if self.stations.is_empty() {
            return Err(Error::invalid(
                "stations",
                "at least one station is required",
            ));
        }
        match self.demand {
            Demand::Constant { bps } if !(bps.is_finite() && bps > 0.0) => {
                return Err(Error::invalid("demand", "bps must be > 0"));
            }
            Demand::Uniform { min_bps, max_bps }
                if !(min_bps.is_finite()
                    && max_bps.is_finite()
                    && min_bps > 0.0
                    && min_bps <= max_bps) =>
            {
                return Err(Error::invalid("demand", "need 0 < min_bps <= max_bps"));
            }
            _ => {}
        }
        if !self.radio.noise_dbm.is_finite() {
            return Err(Error::invalid("noise_dbm", "must be finite"));
        }
        if !(self.radio.min_distance_m.is_finite() && self.radio.min_distance_m > 0.0) {
            return Err(Error::invalid("min_distance_m", "must be > 0"));
        }
        if !self.radio.sinr_cap_db.is_finite() {
            return Err(Error::invalid("sinr_cap_db", "must be finite"));
        }
        let l = &self.radio.latency;
        if !(l.k_q >= 0.0 && l.u_cap > 0.0 && l.u_cap < 1.0 && l.eps_u > 0.0) {
            return Err(Error::invalid(
                "latency",
                "need k_q >= 0, 0 < u_cap < 1, eps_u > 0",
            ));
        }
        let p = &self.radio.loss;
        if !(p.k_over >= 0.0 && p.k_rf >= 0.0 && p.width_db > 0.0 && p.sinr_floor_db.is_finite()) {
            return Err(Error::invalid(
                "loss",
                "need k_over >= 0, k_rf >= 0, width_db > 0",
            ));
        }
        if !(self.thz_absorption_db_per_m.is_finite() && self.thz_absorption_db_per_m >= 0.0) {
            return Err(Error::invalid("thz_absorption_db_per_m", "must be >= 0"));
        }
        self.mobility.validate()?;
        self.reward.validate()?;
        self.agent.validate()?;
        self.bins.validate()?;
        self.build_stations().map(|_| ())
    }

    pub fn absorption_for(&self, carrier_frequency_hz: f64) -> f64 {
        if carrier_frequency_hz >= self.thz_threshold_hz {
            self.thz_absorption_db_per_m
        } else {
            0.0
        }
    }

    pub fn build_stations(&self) -> Result<Vec<BaseStation>> {
        self.stations
            .iter()
            .enumerate()
            .map(|(id, s)| {
                if !self.mobility.area.contains(s.position) {
                    return Err(Error::InvalidParameter {
                        name: "stations",
                        reason: format!("station {id} lies outside the area"),
                    });
                }
                BaseStation::new(
                    id,
                    s.kind,
                    s.position,
                    s.carrier_frequency_hz,
                    s.bandwidth_hz,
                    s.power_levels_dbm.clone(),
                    s.base_latency_ms,
                    s.capacity_ue,
                    self.absorption_for(s.carrier_frequency_hz),
                )
            })
            .collect()
    }

    pub fn with_ue_count(&self, ue_count: u32) -> Scenario {
        Scenario {
            ue_count,
            ..self.clone()
        }
    }
}
