use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::{SocketAddr, TcpListener};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::manifest::RunManifest;
use super::scenario_file::ScenarioSource;
use crate::agent::{
    greedy_index, load_qtable, read_qtable, save_qtable, Action, QTable, TableHeader,
};
use crate::bridge;
use crate::engine::{evaluate, sweep_users, train, Kpi, Policy, Scenario, SweepRow};
use crate::error::{Error, Result};

pub const QTABLE_FILE: &str = "qtable.kdnq";
pub const CURVE_FILE: &str = "learning_curve.csv";
pub const EVALUATION_FILE: &str = "evaluation.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const RUNS_FILE: &str = "runs.csv";

/// Plot-data file for one KPI.
pub fn plot_file(kpi: Kpi) -> &'static str {
    match kpi {
        Kpi::Throughput => "plot_throughput.csv",
        Kpi::Latency => "plot_latency.csv",
        Kpi::PacketLoss => "plot_packet_loss.csv",
    }
}

/// Parses comma-separated values; `a..b:step` expands to an inclusive range.
pub fn parse_list<T>(text: &str) -> std::result::Result<Vec<T>, String>
where
    T: FromStr + Copy + PartialOrd + std::ops::Add<Output = T> + Default,
{
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((range, step)) = part.split_once(':') {
            let (lo, hi) = range
                .split_once("..")
                .ok_or_else(|| format!("`{part}`: expected start..end:step"))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<T>()
                    .map_err(|_| format!("`{part}`: bad number `{s}`"))
            };
            let (lo, hi, step) = (parse(lo)?, parse(hi)?, parse(step)?);
            if step <= T::default() {
                return Err(format!("`{part}`: step must be positive"));
            }
            let mut v = lo;
            while v <= hi {
                out.push(v);
                v = v + step;
            }
        } else {
            out.push(
                part.parse::<T>()
                    .map_err(|_| format!("bad number `{part}`"))?,
            );
        }
    }
    if out.is_empty() {
        return Err("list is empty".into());
    }
    Ok(out)
}

pub fn parse_u32_list(text: &str) -> std::result::Result<Vec<u32>, String> {
    parse_list(text)
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::path_io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::path_io(path, e))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutput {
    pub manifest: PathBuf,
    pub qtable: PathBuf,
    pub curve: PathBuf,
}

/// Trains on `scenario` and writes `qtable.kdnq` and `learning_curve.csv`.
pub fn cmd_train(
    scenario: &Scenario,
    source: &ScenarioSource,
    out_dir: &Path,
) -> Result<TrainOutput> {
    scenario.validate()?;
    let manifest = RunManifest::new("train", scenario, source, vec![scenario.seed], out_dir)
        .write_to(out_dir)?;
    let outcome = train(scenario)?;
    let qtable = out_dir.join(QTABLE_FILE);
    save_qtable(
        &qtable,
        &outcome.q,
        &TableHeader::for_agent(&scenario.bins, &scenario.agent),
    )?;
    let curve = out_dir.join(CURVE_FILE);
    write_csv(&curve, &outcome.curve)?;
    Ok(TrainOutput {
        manifest,
        qtable,
        curve,
    })
}

#[derive(Serialize)]
struct EvaluationRow {
    policy: Policy,
    seed: u64,
    ue_count: u32,
    throughput_gbps: f64,
    latency_ms: f64,
    packet_loss_pct: f64,
    cumulative_reward: f64,
    handovers: u64,
    power_changes: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluateOutput {
    pub manifest: PathBuf,
    pub evaluation: PathBuf,
}

/// Evaluates `scenario.policy` greedily on each seed. For `rl-kdn` the table
/// comes from `qtable` when given, otherwise it is trained on the same seed.
pub fn cmd_evaluate(
    scenario: &Scenario,
    source: &ScenarioSource,
    seeds: &[u64],
    qtable: Option<&Path>,
    out_dir: &Path,
) -> Result<EvaluateOutput> {
    scenario.validate()?;
    let loaded = match (scenario.policy, qtable) {
        (Policy::RlKdn, Some(path)) => Some(load_qtable(path, &scenario.bins)?.0),
        _ => None,
    };
    let manifest = RunManifest::new("evaluate", scenario, source, seeds.to_vec(), out_dir)
        .write_to(out_dir)?;
    let mut rows = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let sc = Scenario {
            seed,
            ..scenario.clone()
        };
        let q = match (&loaded, sc.policy) {
            (Some(q), _) => q.clone(),
            (None, Policy::RlKdn) => train(&sc)?.q,
            (None, Policy::IdleBaseline) => QTable::zeros(0, 0),
        };
        let r = evaluate(&sc, sc.policy, &q)?;
        rows.push(EvaluationRow {
            policy: sc.policy,
            seed,
            ue_count: sc.ue_count,
            throughput_gbps: Kpi::Throughput.of(&r),
            latency_ms: Kpi::Latency.of(&r),
            packet_loss_pct: Kpi::PacketLoss.of(&r),
            cumulative_reward: r.cumulative_reward,
            handovers: r.handovers,
            power_changes: r.power_changes,
        });
    }
    let evaluation = out_dir.join(EVALUATION_FILE);
    write_csv(&evaluation, rows)?;
    Ok(EvaluateOutput {
        manifest,
        evaluation,
    })
}

#[derive(Serialize)]
struct SweepCsvRow {
    ue_count: u32,
    policy: Policy,
    kpi: &'static str,
    mean: f64,
    stddev: f64,
    n: usize,
}

#[derive(Serialize)]
struct PlotRow {
    ue_count: u32,
    rl_kdn_mean: f64,
    rl_kdn_stddev: f64,
    idle_baseline_mean: f64,
    idle_baseline_stddev: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub manifest: PathBuf,
    pub sweep: PathBuf,
    pub runs: PathBuf,
    pub plots: Vec<PathBuf>,
    pub rows: Vec<SweepRow>,
}

/// Paired RL-vs-baseline sweep over `ue_counts` x `seeds`.
pub fn cmd_sweep(
    scenario: &Scenario,
    source: &ScenarioSource,
    ue_counts: &[u32],
    seeds: &[u64],
    out_dir: &Path,
) -> Result<SweepOutput> {
    scenario.validate()?;
    if ue_counts.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidParameter {
            name: "ue_counts",
            reason: "sweep needs at least one ue count and one seed".into(),
        });
    }
    if let Some(&bad) = ue_counts.iter().find(|&&n| n == 0) {
        return Err(Error::InvalidParameter {
            name: "ue_count",
            reason: format!("ue_count ≥ 1 (got {bad})"),
        });
    }
    let mut m = RunManifest::new("sweep", scenario, source, seeds.to_vec(), out_dir);
    m.ue_counts = ue_counts.to_vec();
    let manifest = m.write_to(out_dir)?;

    let (rows, runs) = sweep_users(scenario, ue_counts, seeds)?;

    let sweep = out_dir.join(SWEEP_FILE);
    write_csv(
        &sweep,
        rows.iter().flat_map(|r| {
            Kpi::ALL.iter().map(move |&k| {
                let s = r.stat(k);
                SweepCsvRow {
                    ue_count: r.ue_count,
                    policy: r.policy,
                    kpi: k.name(),
                    mean: s.mean,
                    stddev: s.stddev,
                    n: s.n,
                }
            })
        }),
    )?;
    let runs_path = out_dir.join(RUNS_FILE);
    write_csv(&runs_path, &runs)?;

    let mut by_point: BTreeMap<(u32, Policy), &SweepRow> = BTreeMap::new();
    for r in &rows {
        by_point.insert((r.ue_count, r.policy), r);
    }
    let mut plots = Vec::new();
    for k in Kpi::ALL {
        let path = out_dir.join(plot_file(k));
        write_csv(
            &path,
            ue_counts.iter().map(|&n| {
                let rl = by_point[&(n, Policy::RlKdn)].stat(k);
                let base = by_point[&(n, Policy::IdleBaseline)].stat(k);
                PlotRow {
                    ue_count: n,
                    rl_kdn_mean: rl.mean,
                    rl_kdn_stddev: rl.stddev,
                    idle_baseline_mean: base.mean,
                    idle_baseline_stddev: base.stddev,
                }
            }),
        )?;
        plots.push(path);
    }
    Ok(SweepOutput {
        manifest,
        sweep,
        runs: runs_path,
        plots,
        rows,
    })
}

/// Binds `127.0.0.1:port` (0 picks a free port), reports the bound address
/// through `on_bound`, then serves a single client until it closes.
pub fn cmd_serve(scenario: &Scenario, port: u16, on_bound: impl FnOnce(SocketAddr)) -> Result<()> {
    scenario.validate()?;
    let listener = TcpListener::bind(("127.0.0.1", port))?;
    on_bound(listener.local_addr()?);
    bridge::serve(&listener, scenario)
}

/// Human-readable summary of a q-table file.
pub fn cmd_inspect_qtable(path: &Path) -> Result<String> {
    let file = std::fs::File::open(path).map_err(|e| Error::path_io(path, e))?;
    let (q, header) = read_qtable(std::io::BufReader::new(file))?;
    let mut out = String::new();
    let _ = writeln!(out, "file: {}", path.display());
    let _ = writeln!(out, "states: {}  actions: {}", q.states(), q.actions());
    let _ = writeln!(out, "features: {}", header.feature_order.join(", "));
    let _ = writeln!(out, "actions: {}", header.action_set.join(", "));
    if let Some(hp) = &header.hyperparams {
        let _ = writeln!(
            out,
            "alpha {}  gamma {}  episodes {}  ticks/episode {}",
            hp.alpha, hp.gamma, hp.episodes, hp.ticks_per_episode
        );
    }
    let total: u64 = q.visit_counts().iter().sum();
    let _ = writeln!(
        out,
        "visited states: {}  total updates: {}",
        q.visited_states(),
        total
    );
    let (lo, hi) = q
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if q.values().is_empty() {
        let _ = writeln!(out, "q range: (empty)");
    } else {
        let _ = writeln!(out, "q range: [{lo:.4}, {hi:.4}]");
    }
    let mut greedy = vec![0usize; q.actions()];
    for s in 0..q.states() {
        let visited = (0..q.actions()).any(|a| q.visits(s, a) > 0);
        if visited {
            greedy[greedy_index(q.row(s))] += 1;
        }
    }
    let _ = writeln!(out, "greedy action over visited states:");
    for (a, n) in greedy.iter().enumerate() {
        let name = Action::from_ordinal(a).map(Action::name).unwrap_or("?");
        let _ = writeln!(out, "  {name:<12} {n}");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(
            parse_u32_list("20..300:40").unwrap(),
            vec![20, 60, 100, 140, 180, 220, 260, 300]
        );
        assert_eq!(parse_list::<u64>("1, 2,5").unwrap(), vec![1, 2, 5]);
        assert_eq!(parse_u32_list("1,3..7:2").unwrap(), vec![1, 3, 5, 7]);
        assert!(parse_u32_list("").is_err());
        assert!(parse_u32_list("1..5:0").is_err());
        assert!(parse_u32_list("x").is_err());
    }
}
