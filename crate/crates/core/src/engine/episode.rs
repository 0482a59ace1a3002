use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{Demand, Scenario};
use crate::agent::{compute_reward, select_action, Action, QTable, TelemetrySample};
use crate::error::{Error, Result};
use crate::mobility::{observed_speed, step_mobility};
use crate::model::{NetworkState, RadioParams, UeId, UserEquipment};
use crate::rng::{self, STREAM_PLACEMENT, STREAM_UE_BASE};

/// Aggregate KPIs of one tick, measured after that tick's action.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TickKpi {
    /// Sum of delivered UE throughput, bits/s.
    pub throughput_bps: f64,
    /// Mean over UEs.
    pub latency_ms: f64,
    /// Mean over UEs.
    pub packet_loss: f64,
    pub reward: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub ticks: Vec<TickKpi>,
    pub mean_throughput_bps: f64,
    pub mean_latency_ms: f64,
    pub mean_packet_loss: f64,
    pub cumulative_reward: f64,
    pub handovers: u64,
    pub power_changes: u64,
}

/// Per-tick event record for debugging sinks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u32,
    pub ue_id: UeId,
    pub state: usize,
    pub action: Action,
    pub reward: f64,
    pub kpi: TickKpi,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionEffect {
    pub handover: bool,
    pub power_changed: bool,
}

/// A decision point: the UE whose turn it is and what it currently sees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub tick: u32,
    pub ue_id: UeId,
    pub telemetry: TelemetrySample,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub reward: f64,
    /// Telemetry of the acted-on UE after the action took effect.
    pub post: TelemetrySample,
    pub kpi: TickKpi,
    pub effect: ActionEffect,
    pub done: bool,
}

/// Always `NoOp`: the idle baseline keeps its nearest-station attachment and
/// default power levels for the whole episode.
pub fn baseline_policy(state: &NetworkState, ue_id: UeId) -> Result<Action> {
    if ue_id >= state.ues.len() {
        return Err(Error::Integrity(format!("unknown ue {ue_id}")));
    }
    Ok(Action::NoOp)
}

fn apply_in_place(state: &mut NetworkState, ue_id: UeId, action: Action) -> Result<ActionEffect> {
    let ue = state
        .ues
        .get(ue_id)
        .ok_or_else(|| Error::Integrity(format!("unknown ue {ue_id}")))?;
    if !action.is_valid() {
        return Err(Error::invalid(
            "action",
            format!("{action:?} is not a legal action"),
        ));
    }
    let serving = ue.serving_bs;
    let mut effect = ActionEffect::default();
    match action {
        Action::NoOp => {}
        Action::Handover(rank) => {
            let target = state
                .stations_by_distance(ue.position)
                .into_iter()
                .filter(|&b| b != serving)
                .nth(usize::from(rank) - 1);
            if let Some(target) = target {
                state.ues[ue_id].serving_bs = target;
                effect.handover = true;
            }
        }
        Action::PowerUp => effect.power_changed = state.stations[serving].step_power(true),
        Action::PowerDown => effect.power_changed = state.stations[serving].step_power(false),
    }
    Ok(effect)
}

/// Applies `action` for `ue_id` and returns the refreshed state.
pub fn apply_action(
    state: &NetworkState,
    ue_id: UeId,
    action: Action,
    radio: &RadioParams,
) -> Result<NetworkState> {
    let mut next = state.clone();
    apply_in_place(&mut next, ue_id, action)?;
    next.refresh_in_place(radio)?;
    Ok(next)
}

/// Step-wise episode driver shared by the in-process loop and the bridge.
///
/// Each tick is split in two: [`Episode::begin_tick`] moves every UE,
/// refreshes metrics and returns the observation of the UE whose turn it is;
/// [`Episode::act`] applies one action, refreshes again, scores it and closes
/// the tick.
pub struct Episode {
    scenario: Scenario,
    state: NetworkState,
    ue_rngs: Vec<ChaCha8Rng>,
    speeds: Vec<f64>,
    pending: Option<UeId>,
    ticks_total: u32,
    result: EpisodeResult,
}

impl Episode {
    /// Places UEs uniformly, attaches each to its nearest station and sets
    /// every station to its middle power level.
    pub fn new(scenario: &Scenario, episode_seed: u64) -> Result<Self> {
        scenario.validate()?;
        let stations = scenario.build_stations()?;
        let mobility = &scenario.mobility;
        let mut placement = rng::stream(episode_seed, STREAM_PLACEMENT);
        let n = scenario.ue_count as usize;
        let mut ue_rngs = Vec::with_capacity(n);
        let mut ues = Vec::with_capacity(n);
        let mut state = NetworkState::new(stations, Vec::new())?;
        for id in 0..n {
            let position = mobility.random_point(&mut placement);
            let demand_bps = match scenario.demand {
                Demand::Constant { bps } => bps,
                Demand::Uniform { min_bps, max_bps } => placement.random_range(min_bps..=max_bps),
            };
            let mut ue_rng = rng::stream(episode_seed, STREAM_UE_BASE + id as u64);
            let motion = mobility.initial_motion(&mut ue_rng);
            ue_rngs.push(ue_rng);
            ues.push(UserEquipment {
                id,
                position,
                velocity: Default::default(),
                serving_bs: state
                    .nearest_station(position)
                    .expect("at least one station"),
                demand_bps,
                motion,
            });
        }
        state.ues = ues;
        state.refresh_in_place(&scenario.radio)?;
        Ok(Episode {
            scenario: scenario.clone(),
            ticks_total: scenario.agent.ticks_per_episode,
            state,
            ue_rngs,
            speeds: vec![0.0; n],
            pending: None,
            result: EpisodeResult::default(),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn tick(&self) -> u32 {
        self.state.tick as u32
    }

    pub fn is_done(&self) -> bool {
        self.tick() >= self.ticks_total
    }

    pub fn telemetry(&self, ue_id: UeId) -> Result<TelemetrySample> {
        let ue = self
            .state
            .ues
            .get(ue_id)
            .ok_or_else(|| Error::Integrity(format!("unknown ue {ue_id}")))?;
        let link = &self.state.links[ue_id];
        Ok(TelemetrySample {
            ue_id,
            packet_loss: link.packet_loss,
            latency_ms: link.latency_ms,
            throughput_bps: link.throughput_bps,
            speed_mps: self.speeds[ue_id],
            distance_to_serving_m: link.distance_m,
            serving_load_ratio: self.state.utilization(ue.serving_bs),
        })
    }

    pub fn begin_tick(&mut self) -> Result<Observation> {
        if self.is_done() {
            return Err(Error::Protocol("episode finished".into()));
        }
        if let Some(ue_id) = self.pending {
            return Ok(Observation {
                tick: self.tick(),
                ue_id,
                telemetry: self.telemetry(ue_id)?,
            });
        }
        let mobility = &self.scenario.mobility;
        for (ue, rng) in self.state.ues.iter_mut().zip(self.ue_rngs.iter_mut()) {
            let moved = step_mobility(ue, mobility, rng);
            self.speeds[ue.id] =
                observed_speed(ue.position, moved.position, mobility.tick_duration_s);
            *ue = moved;
        }
        self.state.refresh_in_place(&self.scenario.radio)?;
        let ue_id = (self.state.tick % self.state.ues.len() as u64) as usize;
        self.pending = Some(ue_id);
        Ok(Observation {
            tick: self.tick(),
            ue_id,
            telemetry: self.telemetry(ue_id)?,
        })
    }

    pub fn act(&mut self, ue_id: UeId, action: Action) -> Result<StepOutcome> {
        if self.is_done() {
            return Err(Error::Protocol("episode finished".into()));
        }
        if self.pending.is_none() {
            return Err(Error::Protocol("no tick in progress".into()));
        }
        let effect = apply_in_place(&mut self.state, ue_id, action)?;
        if effect.handover || effect.power_changed {
            self.state.refresh_in_place(&self.scenario.radio)?;
        }
        let post = self.telemetry(ue_id)?;
        let reward = compute_reward(&post, &self.state.load_ratios(), &self.scenario.reward);

        let n = self.state.links.len() as f64;
        let kpi = TickKpi {
            throughput_bps: self.state.links.iter().map(|l| l.throughput_bps).sum(),
            latency_ms: self.state.links.iter().map(|l| l.latency_ms).sum::<f64>() / n,
            packet_loss: self.state.links.iter().map(|l| l.packet_loss).sum::<f64>() / n,
            reward,
        };
        self.result.ticks.push(kpi);
        self.result.cumulative_reward += reward;
        self.result.handovers += u64::from(effect.handover);
        self.result.power_changes += u64::from(effect.power_changed);
        self.pending = None;
        self.state.tick += 1;
        Ok(StepOutcome {
            reward,
            post,
            kpi,
            effect,
            done: self.is_done(),
        })
    }

    pub fn result(&self) -> EpisodeResult {
        let mut r = self.result.clone();
        let n = r.ticks.len();
        if n > 0 {
            let nf = n as f64;
            r.mean_throughput_bps = r.ticks.iter().map(|t| t.throughput_bps).sum::<f64>() / nf;
            r.mean_latency_ms = r.ticks.iter().map(|t| t.latency_ms).sum::<f64>() / nf;
            r.mean_packet_loss = r.ticks.iter().map(|t| t.packet_loss).sum::<f64>() / nf;
        }
        r
    }

    pub fn into_result(self) -> EpisodeResult {
        self.result()
    }
}

/// Who picks the actions during an episode.
pub enum Driver<'a> {
    Baseline,
    Agent {
        q: &'a mut QTable,
        epsilon: f64,
        /// Apply the Q-update after every action.
        learn: bool,
        rng: &'a mut ChaCha8Rng,
    },
}

pub fn run_episode(
    scenario: &Scenario,
    episode_seed: u64,
    driver: Driver<'_>,
) -> Result<EpisodeResult> {
    run_episode_logged(scenario, episode_seed, driver, &mut |_| {})
}

/// Runs one episode, calling `sink` once per tick.
pub fn run_episode_logged(
    scenario: &Scenario,
    episode_seed: u64,
    mut driver: Driver<'_>,
    sink: &mut dyn FnMut(&TickRecord),
) -> Result<EpisodeResult> {
    let mut episode = Episode::new(scenario, episode_seed)?;
    let bins = &scenario.bins;
    while !episode.is_done() {
        let obs = episode.begin_tick()?;
        let s = bins.discretize(&obs.telemetry)?;
        let action = match &mut driver {
            Driver::Baseline => baseline_policy(episode.state(), obs.ue_id)?,
            Driver::Agent {
                q, epsilon, rng, ..
            } => select_action(q, s, *epsilon, *rng),
        };
        let out = episode.act(obs.ue_id, action)?;
        if let Driver::Agent { q, learn: true, .. } = &mut driver {
            let s_next = bins.discretize(&out.post)?;
            q.update(s, action.ordinal(), out.reward, s_next, &scenario.agent);
        }
        sink(&TickRecord {
            tick: obs.tick,
            ue_id: obs.ue_id,
            state: s,
            action,
            reward: out.reward,
            kpi: out.kpi,
        });
    }
    Ok(episode.into_result())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::HyperParams;
    use crate::engine::StationConfig;
    use crate::model::Point;

    fn small(ticks: u32) -> Scenario {
        Scenario {
            ue_count: 10,
            agent: HyperParams {
                ticks_per_episode: ticks,
                ..HyperParams::default()
            },
            ..Scenario::default()
        }
    }

    #[test]
    fn empty_episode() {
        let sc = small(0);
        let mut q = QTable::zeros(sc.bins.state_count(), Action::COUNT);
        let mut r = rng::stream(0, 0);
        let res = run_episode(
            &sc,
            1,
            Driver::Agent {
                q: &mut q,
                epsilon: 1.0,
                learn: true,
                rng: &mut r,
            },
        )
        .unwrap();
        assert!(res.ticks.is_empty());
        assert_eq!(q, QTable::zeros(sc.bins.state_count(), Action::COUNT));
    }

    #[test]
    fn greedy_zero_table_matches_baseline() {
        let sc = small(300);
        let mut q = QTable::zeros(sc.bins.state_count(), Action::COUNT);
        let mut r = rng::stream(0, 0);
        let mut actions = Vec::new();
        let rl = run_episode_logged(
            &sc,
            9,
            Driver::Agent {
                q: &mut q,
                epsilon: 0.0,
                learn: false,
                rng: &mut r,
            },
            &mut |rec| actions.push(rec.action),
        )
        .unwrap();
        let base = run_episode(&sc, 9, Driver::Baseline).unwrap();
        assert!(actions.iter().all(|a| *a == Action::NoOp));
        assert_eq!(rl, base);
    }

    #[test]
    fn baseline_never_changes_anything() {
        let sc = small(200);
        let mut episode = Episode::new(&sc, 3).unwrap();
        let initial: Vec<_> = episode.state().ues.iter().map(|u| u.serving_bs).collect();
        let powers: Vec<_> = episode
            .state()
            .stations
            .iter()
            .map(|b| b.tx_power_dbm())
            .collect();
        while !episode.is_done() {
            let obs = episode.begin_tick().unwrap();
            let a = baseline_policy(episode.state(), obs.ue_id).unwrap();
            assert_eq!(a, Action::NoOp);
            episode.act(obs.ue_id, a).unwrap();
            let now: Vec<_> = episode
                .state()
                .stations
                .iter()
                .map(|b| b.tx_power_dbm())
                .collect();
            assert_eq!(now, powers);
        }
        let assoc: Vec<_> = episode.state().ues.iter().map(|u| u.serving_bs).collect();
        assert_eq!(assoc, initial);
        assert_eq!(episode.result().handovers, 0);
    }

    #[test]
    fn runs_are_deterministic() {
        let sc = small(150);
        let run = || {
            let mut q = QTable::zeros(sc.bins.state_count(), Action::COUNT);
            let mut r = rng::stream(5, 0);
            let res = run_episode(
                &sc,
                11,
                Driver::Agent {
                    q: &mut q,
                    epsilon: 0.5,
                    learn: true,
                    rng: &mut r,
                },
            )
            .unwrap();
            (res, q)
        };
        assert_eq!(run(), run());
    }

    fn two_station_state() -> (NetworkState, RadioParams) {
        let sc = Scenario {
            stations: vec![
                StationConfig::macro_bs(Point::new(100.0, 250.0)),
                StationConfig::macro_bs(Point::new(400.0, 250.0)),
            ],
            ue_count: 1,
            ..Scenario::default()
        };
        let ep = Episode::new(&sc, 0).unwrap();
        (ep.state().clone(), sc.radio)
    }

    #[test]
    fn action_examples() {
        let (state, radio) = two_station_state();
        let serving = state.ues[0].serving_bs;

        let same = apply_action(&state, 0, Action::NoOp, &radio).unwrap();
        assert_eq!(same, state.refresh_metrics(&radio).unwrap());

        let moved = apply_action(&state, 0, Action::Handover(1), &radio).unwrap();
        assert_eq!(moved.ues[0].serving_bs, 1 - serving);
        assert_eq!(moved.loads[1 - serving], 1);

        let unchanged = apply_action(&state, 0, Action::Handover(2), &radio).unwrap();
        assert_eq!(unchanged.ues[0].serving_bs, serving);

        let mut top = state.clone();
        for _ in 0..5 {
            top = apply_action(&top, 0, Action::PowerUp, &radio).unwrap();
        }
        assert_eq!(top.stations[serving].tx_power_dbm(), 43.0);
        let again = apply_action(&top, 0, Action::PowerUp, &radio).unwrap();
        assert_eq!(again.stations[serving].tx_power_dbm(), 43.0);

        assert!(matches!(
            apply_action(&state, 7, Action::NoOp, &radio),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn act_after_done_is_rejected() {
        let sc = small(1);
        let mut ep = Episode::new(&sc, 0).unwrap();
        let obs = ep.begin_tick().unwrap();
        assert!(ep.act(obs.ue_id, Action::NoOp).unwrap().done);
        assert!(ep.begin_tick().is_err());
        assert!(ep.act(obs.ue_id, Action::NoOp).is_err());
    }
}
