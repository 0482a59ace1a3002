//! Static topology and flow-level radio arithmetic.
//!
//! Everything here is a pure function of positions, association and power
//! levels. [`NetworkState::refresh_metrics`] turns one snapshot into per-UE
//! [`LinkMetrics`], which is the telemetry the knowledge plane observes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type StationId = usize;
pub type UeId = usize;

/// Free-space constant for meters and hertz: 20·log10(4π/c).
const FSPL_CONSTANT_DB: f64 = -147.55;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned area with its lower-left corner at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StationKind {
    MacroBs,
    AccessPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: StationId,
    pub kind: StationKind,
    pub position: Point,
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    /// Allowed transmit powers in dBm, strictly increasing.
    power_levels_dbm: Vec<f64>,
    /// Index of the current transmit power in `power_levels_dbm`.
    power_index: usize,
    pub base_latency_ms: f64,
    pub capacity_ue: u32,
    /// Molecular absorption applied along the path, dB per meter.
    pub absorption_db_per_m: f64,
}

impl BaseStation {
    /// Builds a station transmitting at the middle power level (the lower
    /// middle one for an even number of levels).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: StationId,
        kind: StationKind,
        position: Point,
        carrier_frequency_hz: f64,
        bandwidth_hz: f64,
        power_levels_dbm: Vec<f64>,
        base_latency_ms: f64,
        capacity_ue: u32,
        absorption_db_per_m: f64,
    ) -> Result<Self> {
        if !(carrier_frequency_hz.is_finite() && carrier_frequency_hz > 0.0) {
            return Err(Error::invalid(
                "carrier_frequency_hz",
                "must be finite and > 0",
            ));
        }
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(Error::invalid("bandwidth_hz", "must be finite and > 0"));
        }
        if !(base_latency_ms.is_finite() && base_latency_ms >= 0.0) {
            return Err(Error::invalid("base_latency_ms", "must be finite and >= 0"));
        }
        if capacity_ue == 0 {
            return Err(Error::invalid("capacity_ue", "must be >= 1"));
        }
        if !(absorption_db_per_m.is_finite() && absorption_db_per_m >= 0.0) {
            return Err(Error::invalid(
                "absorption_db_per_m",
                "must be finite and >= 0",
            ));
        }
        if power_levels_dbm.is_empty()
            || power_levels_dbm.iter().any(|p| !p.is_finite())
            || power_levels_dbm.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::invalid(
                "power_levels_dbm",
                "must be a non-empty, strictly increasing list of finite values",
            ));
        }
        let power_index = (power_levels_dbm.len() - 1) / 2;
        Ok(BaseStation {
            id,
            kind,
            position,
            carrier_frequency_hz,
            bandwidth_hz,
            power_levels_dbm,
            power_index,
            base_latency_ms,
            capacity_ue,
            absorption_db_per_m,
        })
    }

    pub fn tx_power_dbm(&self) -> f64 {
        self.power_levels_dbm[self.power_index]
    }

    pub fn power_levels_dbm(&self) -> &[f64] {
        &self.power_levels_dbm
    }

    pub fn power_index(&self) -> usize {
        self.power_index
    }

    /// Moves one level up or down, saturating at the ends. Returns whether the
    /// power actually changed.
    pub fn step_power(&mut self, up: bool) -> bool {
        let before = self.power_index;
        if up {
            self.power_index = (self.power_index + 1).min(self.power_levels_dbm.len() - 1);
        } else {
            self.power_index = self.power_index.saturating_sub(1);
        }
        before != self.power_index
    }

    pub fn path_loss_to(&self, p: Point, radio: &RadioParams) -> f64 {
        let d = self.position.distance(p).max(radio.min_distance_m);
        // Inputs are validated at construction, so this cannot fail.
        path_loss(d, self.carrier_frequency_hz, self.absorption_db_per_m).unwrap_or(f64::INFINITY)
    }
}

/// Random-waypoint bookkeeping carried by each UE.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Motion {
    pub waypoint: Point,
    pub speed: f64,
    pub pause_left_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserEquipment {
    pub id: UeId,
    pub position: Point,
    /// Velocity over the last mobility step, m/s.
    pub velocity: Point,
    pub serving_bs: StationId,
    pub demand_bps: f64,
    pub motion: Motion,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub distance_m: f64,
    pub path_loss_db: f64,
    pub sinr_db: f64,
    /// Delivered rate: `min(shannon share, demand) · (1 − packet_loss)`.
    pub throughput_bps: f64,
    pub latency_ms: f64,
    pub packet_loss: f64,
}

/// Queueing-delay curve constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyModel {
    pub k_q: f64,
    pub u_cap: f64,
    pub eps_u: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel {
            k_q: 1.0,
            u_cap: 0.95,
            eps_u: 0.05,
        }
    }
}

/// Packet-loss curve constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossModel {
    pub k_over: f64,
    pub k_rf: f64,
    pub sinr_floor_db: f64,
    pub width_db: f64,
}

impl Default for LossModel {
    fn default() -> Self {
        LossModel {
            k_over: 0.4,
            k_rf: 0.1,
            sinr_floor_db: 3.0,
            width_db: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Flat receiver noise floor, dBm.
    pub noise_dbm: f64,
    pub min_distance_m: f64,
    pub sinr_cap_db: f64,
    pub latency: LatencyModel,
    pub loss: LossModel,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            noise_dbm: -100.0,
            min_distance_m: 1.0,
            sinr_cap_db: 60.0,
            latency: LatencyModel::default(),
            loss: LossModel::default(),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Free-space path loss plus a linear absorption term, in dB.
pub fn path_loss(distance_m: f64, frequency_hz: f64, absorption_db_per_m: f64) -> Result<f64> {
    if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
        return Err(Error::invalid("frequency", "must be finite and > 0"));
    }
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(Error::invalid("distance", "must be finite and > 0"));
    }
    if !(absorption_db_per_m.is_finite() && absorption_db_per_m >= 0.0) {
        return Err(Error::invalid("absorption", "must be finite and >= 0"));
    }
    Ok(20.0 * distance_m.log10()
        + 20.0 * frequency_hz.log10()
        + FSPL_CONSTANT_DB
        + absorption_db_per_m * distance_m)
}

/// SINR from already-computed received powers. Interference and noise are in
/// milliwatts; a zero denominator yields `cap_db`.
pub fn sinr_from_powers(signal_mw: f64, interference_mw: f64, noise_mw: f64, cap_db: f64) -> f64 {
    let denom = interference_mw + noise_mw;
    if denom <= 0.0 {
        return cap_db;
    }
    if signal_mw <= 0.0 {
        return f64::NEG_INFINITY;
    }
    linear_to_db(signal_mw / denom).min(cap_db)
}

/// SINR of `ue` served by `serving`. Only interferers on the serving carrier
/// count.
pub fn sinr(
    ue: &UserEquipment,
    serving: &BaseStation,
    interferers: &[BaseStation],
    radio: &RadioParams,
) -> f64 {
    let rx =
        |bs: &BaseStation| db_to_linear(bs.tx_power_dbm() - bs.path_loss_to(ue.position, radio));
    let interference: f64 = interferers
        .iter()
        .filter(|bs| bs.id != serving.id && bs.carrier_frequency_hz == serving.carrier_frequency_hz)
        .map(rx)
        .sum();
    sinr_from_powers(
        rx(serving),
        interference,
        db_to_linear(radio.noise_dbm),
        radio.sinr_cap_db,
    )
}

/// Equal-share Shannon rate for one of `load` UEs on a cell.
pub fn ue_throughput(sinr_db: f64, bandwidth_hz: f64, load: u32) -> f64 {
    let load = load.max(1);
    if sinr_db == f64::NEG_INFINITY {
        return 0.0;
    }
    (bandwidth_hz / f64::from(load)) * (1.0 + db_to_linear(sinr_db)).log2()
}

pub fn ue_latency(base_latency_ms: f64, utilization: f64, model: &LatencyModel) -> f64 {
    let u = utilization.max(0.0);
    let headroom = (1.0 - u.min(model.u_cap)).max(model.eps_u);
    base_latency_ms * (1.0 + model.k_q * u / headroom)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn packet_loss(utilization: f64, sinr_db: f64, model: &LossModel) -> f64 {
    let overload = (utilization - 1.0).max(0.0) * model.k_over;
    let rf = sigmoid((model.sinr_floor_db - sinr_db) / model.width_db) * model.k_rf;
    let loss = overload + rf;
    if loss.is_nan() {
        return 1.0;
    }
    loss.clamp(0.0, 1.0)
}

pub fn jain_fairness(values: &[f64]) -> f64 {
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    if values.is_empty() || sum_sq == 0.0 {
        return 1.0;
    }
    sum * sum / (values.len() as f64 * sum_sq)
}

/// Live network snapshot. UE and station ids equal their indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub tick: u64,
    pub stations: Vec<BaseStation>,
    pub ues: Vec<UserEquipment>,
    /// Indexed by UE id.
    pub links: Vec<LinkMetrics>,
    /// Indexed by station id.
    pub loads: Vec<u32>,
}

impl NetworkState {
    pub fn new(stations: Vec<BaseStation>, ues: Vec<UserEquipment>) -> Result<Self> {
        let state = NetworkState {
            tick: 0,
            loads: vec![0; stations.len()],
            links: Vec::new(),
            stations,
            ues,
        };
        state.check_integrity()?;
        Ok(state)
    }

    pub fn check_integrity(&self) -> Result<()> {
        if let Some((i, bs)) = self.stations.iter().enumerate().find(|(i, bs)| bs.id != *i) {
            return Err(Error::Integrity(format!(
                "station at index {i} has id {}",
                bs.id
            )));
        }
        for (i, ue) in self.ues.iter().enumerate() {
            if ue.id != i {
                return Err(Error::Integrity(format!(
                    "ue at index {i} has id {}",
                    ue.id
                )));
            }
            if ue.serving_bs >= self.stations.len() {
                return Err(Error::Integrity(format!(
                    "ue {} is served by unknown station {}",
                    ue.id, ue.serving_bs
                )));
            }
        }
        Ok(())
    }

    pub fn utilization(&self, bs: StationId) -> f64 {
        f64::from(self.loads[bs]) / f64::from(self.stations[bs].capacity_ue)
    }

    pub fn load_ratios(&self) -> Vec<f64> {
        (0..self.stations.len())
            .map(|b| self.utilization(b))
            .collect()
    }

    pub fn recompute_loads(&mut self) {
        self.loads.clear();
        self.loads.resize(self.stations.len(), 0);
        for ue in &self.ues {
            self.loads[ue.serving_bs] += 1;
        }
    }

    /// Recomputes loads and every UE's link metrics.
    pub fn refresh_metrics(&self, radio: &RadioParams) -> Result<NetworkState> {
        let mut next = self.clone();
        next.refresh_in_place(radio)?;
        Ok(next)
    }

    pub fn refresh_in_place(&mut self, radio: &RadioParams) -> Result<()> {
        self.check_integrity()?;
        self.recompute_loads();

        let noise_mw = db_to_linear(radio.noise_dbm);
        let min_d2 = radio.min_distance_m * radio.min_distance_m;
        // Received power in closed form: P_tx / (K · d² · 10^(a·d/10)), with K
        // the frequency part of the free-space loss.
        let gains: Vec<(f64, f64)> = self
            .stations
            .iter()
            .map(|bs| {
                let k_db = 20.0 * bs.carrier_frequency_hz.log10() + FSPL_CONSTANT_DB;
                (
                    db_to_linear(bs.tx_power_dbm() - k_db),
                    bs.absorption_db_per_m * std::f64::consts::LN_10 / 10.0,
                )
            })
            .collect();
        let mut rx_mw = vec![0.0; self.stations.len()];
        let mut links = std::mem::take(&mut self.links);
        links.clear();
        links.reserve(self.ues.len());

        for ue in &self.ues {
            for ((bs, &(scale, absorb)), rx) in
                self.stations.iter().zip(&gains).zip(rx_mw.iter_mut())
            {
                let dx = bs.position.x - ue.position.x;
                let dy = bs.position.y - ue.position.y;
                let d2 = (dx * dx + dy * dy).max(min_d2);
                *rx = if absorb > 0.0 {
                    scale / (d2 * (absorb * d2.sqrt()).exp())
                } else {
                    scale / d2
                };
            }
            let serving = &self.stations[ue.serving_bs];
            let interference: f64 = self
                .stations
                .iter()
                .filter(|bs| {
                    bs.id != serving.id && bs.carrier_frequency_hz == serving.carrier_frequency_hz
                })
                .map(|bs| rx_mw[bs.id])
                .sum();
            let sinr_db =
                sinr_from_powers(rx_mw[serving.id], interference, noise_mw, radio.sinr_cap_db);

            let load = self.loads[serving.id];
            let utilization = f64::from(load) / f64::from(serving.capacity_ue);
            let share = ue_throughput(sinr_db, serving.bandwidth_hz, load);
            let loss = packet_loss(utilization, sinr_db, &radio.loss);
            links.push(LinkMetrics {
                distance_m: serving.position.distance(ue.position),
                path_loss_db: serving.path_loss_to(ue.position, radio),
                sinr_db,
                throughput_bps: share.min(ue.demand_bps) * (1.0 - loss),
                latency_ms: ue_latency(serving.base_latency_ms, utilization, &radio.latency),
                packet_loss: loss,
            });
        }
        self.links = links;
        Ok(())
    }

    /// Station ids sorted by distance from `p`, ties broken by id.
    pub fn stations_by_distance(&self, p: Point) -> Vec<StationId> {
        let mut ids: Vec<StationId> = (0..self.stations.len()).collect();
        ids.sort_by(|&a, &b| {
            let da = self.stations[a].position.distance(p);
            let db = self.stations[b].position.distance(p);
            da.total_cmp(&db).then(a.cmp(&b))
        });
        ids
    }

    pub fn nearest_station(&self, p: Point) -> Option<StationId> {
        self.stations_by_distance(p).first().copied()
    }
}
