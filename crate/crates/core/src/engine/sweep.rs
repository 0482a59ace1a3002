use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::{run_episode, Driver, EpisodeResult};
use super::scenario::{Policy, Scenario};
use crate::agent::{decay_epsilon, Action, QTable};
use crate::error::Result;
use crate::rng::{self, derive_seed, tag};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: u32,
    /// Exploration rate used during this episode.
    pub epsilon: f64,
    pub cumulative_reward: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub q: QTable,
    pub curve: Vec<CurvePoint>,
}

/// Trains a fresh zero-initialized table for `scenario.agent.episodes`
/// episodes. Episode `e` runs on a world seeded from `(scenario.seed, e)`, so
/// training never replays the evaluation world.
pub fn train(scenario: &Scenario) -> Result<TrainOutcome> {
    scenario.validate()?;
    let hp = scenario.agent;
    let mut q = QTable::zeros(scenario.bins.state_count(), Action::COUNT);
    let mut agent_rng = rng::stream(derive_seed(scenario.seed, tag::TRAIN_AGENT), 0);
    let mut epsilon = hp.epsilon0;
    let mut curve = Vec::with_capacity(hp.episodes as usize);
    for e in 0..hp.episodes {
        let episode_seed = derive_seed(scenario.seed, tag::TRAIN_EPISODE + u64::from(e));
        let result = run_episode(
            scenario,
            episode_seed,
            Driver::Agent {
                q: &mut q,
                epsilon,
                learn: true,
                rng: &mut agent_rng,
            },
        )?;
        log::debug!(
            "episode {e}: epsilon {epsilon:.3}, reward {:.1}, {} states visited",
            result.cumulative_reward,
            q.visited_states()
        );
        curve.push(CurvePoint {
            episode: e,
            epsilon,
            cumulative_reward: result.cumulative_reward,
        });
        epsilon = decay_epsilon(epsilon, &hp);
    }
    Ok(TrainOutcome { q, curve })
}

/// One greedy, non-learning episode on the world seeded by `scenario.seed`.
/// `q` is ignored for the baseline.
pub fn evaluate(scenario: &Scenario, policy: Policy, q: &QTable) -> Result<EpisodeResult> {
    match policy {
        Policy::IdleBaseline => run_episode(scenario, scenario.seed, Driver::Baseline),
        Policy::RlKdn => {
            let mut q = q.clone();
            let mut unused = rng::stream(scenario.seed, 0);
            run_episode(
                scenario,
                scenario.seed,
                Driver::Agent {
                    q: &mut q,
                    epsilon: 0.0,
                    learn: false,
                    rng: &mut unused,
                },
            )
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kpi {
    Throughput,
    Latency,
    PacketLoss,
}

impl Kpi {
    pub const ALL: [Kpi; 3] = [Kpi::Throughput, Kpi::Latency, Kpi::PacketLoss];

    pub fn name(self) -> &'static str {
        match self {
            Kpi::Throughput => "throughput_gbps",
            Kpi::Latency => "latency_ms",
            Kpi::PacketLoss => "packet_loss_pct",
        }
    }

    /// Episode mean in the unit used for reporting (Gbps, ms, percent).
    pub fn of(self, r: &EpisodeResult) -> f64 {
        match self {
            Kpi::Throughput => r.mean_throughput_bps / 1e9,
            Kpi::Latency => r.mean_latency_ms,
            Kpi::PacketLoss => r.mean_packet_loss * 100.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpiStat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub stddev: f64,
    pub n: usize,
}

impl KpiStat {
    pub fn from_samples(xs: &[f64]) -> KpiStat {
        let n = xs.len();
        if n == 0 {
            return KpiStat {
                mean: 0.0,
                stddev: 0.0,
                n,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stddev = if n < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        KpiStat { mean, stddev, n }
    }
}

/// Outcome of one `(ue_count, policy, seed)` evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub ue_count: u32,
    pub policy: Policy,
    pub seed: u64,
    pub throughput_gbps: f64,
    pub latency_ms: f64,
    pub packet_loss_pct: f64,
    pub handovers: u64,
    pub power_changes: u64,
}

impl SeedRun {
    fn new(ue_count: u32, policy: Policy, seed: u64, r: &EpisodeResult) -> SeedRun {
        SeedRun {
            ue_count,
            policy,
            seed,
            throughput_gbps: Kpi::Throughput.of(r),
            latency_ms: Kpi::Latency.of(r),
            packet_loss_pct: Kpi::PacketLoss.of(r),
            handovers: r.handovers,
            power_changes: r.power_changes,
        }
    }

    pub fn kpi(&self, k: Kpi) -> f64 {
        match k {
            Kpi::Throughput => self.throughput_gbps,
            Kpi::Latency => self.latency_ms,
            Kpi::PacketLoss => self.packet_loss_pct,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ue_count: u32,
    pub policy: Policy,
    pub throughput_gbps: KpiStat,
    pub latency_ms: KpiStat,
    pub packet_loss_pct: KpiStat,
}

impl SweepRow {
    pub fn stat(&self, k: Kpi) -> &KpiStat {
        match k {
            Kpi::Throughput => &self.throughput_gbps,
            Kpi::Latency => &self.latency_ms,
            Kpi::PacketLoss => &self.packet_loss_pct,
        }
    }
}

fn run_pair(template: &Scenario, ue_count: u32, seed: u64) -> Result<[SeedRun; 2]> {
    let scenario = Scenario {
        ue_count,
        seed,
        ..template.clone()
    };
    let base = evaluate(&scenario, Policy::IdleBaseline, &QTable::zeros(0, 0))?;
    let trained = train(&scenario)?;
    let rl = evaluate(&scenario, Policy::RlKdn, &trained.q)?;
    log::info!(
        "ue_count {ue_count} seed {seed}: rl {:.3} Gbps / {:.2} ms, baseline {:.3} Gbps / {:.2} ms",
        Kpi::Throughput.of(&rl),
        rl.mean_latency_ms,
        Kpi::Throughput.of(&base),
        base.mean_latency_ms
    );
    Ok([
        SeedRun::new(ue_count, Policy::RlKdn, seed, &rl),
        SeedRun::new(ue_count, Policy::IdleBaseline, seed, &base),
    ])
}

/// Paired RL-vs-baseline sweep. Independent `(ue_count, seed)` jobs run in
/// parallel; results are ordered by `(ue_count, policy, seed)` regardless of
/// completion order. Returns the aggregated rows and the per-seed runs.
pub fn sweep_users(
    template: &Scenario,
    ue_counts: &[u32],
    seeds: &[u64],
) -> Result<(Vec<SweepRow>, Vec<SeedRun>)> {
    template.validate()?;
    let jobs: Vec<(u32, u64)> = ue_counts
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    let pairs = jobs
        .par_iter()
        .map(|&(n, s)| run_pair(template, n, s))
        .collect::<Result<Vec<_>>>()?;

    let mut runs: Vec<SeedRun> = pairs.into_iter().flatten().collect();
    runs.sort_by_key(|r| (r.ue_count, r.policy, r.seed));

    let mut rows = Vec::new();
    for &n in ue_counts {
        for policy in [Policy::RlKdn, Policy::IdleBaseline] {
            let group: Vec<&SeedRun> = runs
                .iter()
                .filter(|r| r.ue_count == n && r.policy == policy)
                .collect();
            let stat =
                |k: Kpi| KpiStat::from_samples(&group.iter().map(|r| r.kpi(k)).collect::<Vec<_>>());
            rows.push(SweepRow {
                ue_count: n,
                policy,
                throughput_gbps: stat(Kpi::Throughput),
                latency_ms: stat(Kpi::Latency),
                packet_loss_pct: stat(Kpi::PacketLoss),
            });
        }
    }
    Ok((rows, runs))
}
