#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::thread;

use kdnsim::agent::{select_index, HyperParams, QTable, StateBins, TableHeader, TelemetrySample};
use kdnsim::bridge::{self, encode_frame, BridgeClient, Frame, Message, Reset, Step};
use kdnsim::engine::Scenario;
use kdnsim::rng;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

/// Scenario used for the recorded bridge session.
pub fn golden_scenario() -> Scenario {
    Scenario {
        seed: 11,
        ue_count: 4,
        agent: HyperParams {
            ticks_per_episode: 3,
            ..HyperParams::default()
        },
        ..Scenario::default()
    }
}

/// Requests of the recorded session, in order.
pub fn golden_requests() -> Vec<Frame> {
    let frame = |id, message| Frame { id, message };
    vec![
        frame(
            1,
            Message::Hello(bridge::Hello {
                version: bridge::PROTOCOL_VERSION.to_owned(),
                spaces: None,
            }),
        ),
        frame(2, Message::Reset(Reset { seed: Some(11) })),
        frame(
            3,
            Message::Step(Step {
                ue_id: 0,
                action: 4,
            }),
        ),
        frame(
            4,
            Message::Step(Step {
                ue_id: 1,
                action: 9,
            }),
        ),
        frame(
            5,
            Message::Step(Step {
                ue_id: 1,
                action: 1,
            }),
        ),
        frame(6, Message::Close),
    ]
}

fn read_raw(stream: &mut TcpStream) -> Vec<u8> {
    let mut prefix = [0u8; 4];
    stream.read_exact(&mut prefix).unwrap();
    let mut body = vec![0u8; u32::from_be_bytes(prefix) as usize];
    stream.read_exact(&mut body).unwrap();
    [prefix.to_vec(), body].concat()
}

/// Plays the golden requests against a live server and returns
/// `(name, bytes)` for every frame on the wire, requests and replies
/// interleaved.
pub fn record_golden_session() -> Vec<(String, Vec<u8>)> {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let scenario = golden_scenario();
    let server = thread::spawn(move || bridge::serve(&listener, &scenario));
    let mut stream = TcpStream::connect(addr).unwrap();
    let mut out = Vec::new();
    for (i, req) in golden_requests().into_iter().enumerate() {
        let bytes = encode_frame(&req).unwrap();
        stream.write_all(&bytes).unwrap();
        out.push((
            format!("{:02}a_request_{}.frame", i + 1, req.message.kind()),
            bytes,
        ));
        if matches!(req.message, Message::Close) {
            break;
        }
        let reply = read_raw(&mut stream);
        let kind = bridge::decode_frame(&reply).unwrap().message.kind();
        out.push((format!("{:02}b_reply_{kind}.frame", i + 1), reply));
    }
    server.join().unwrap().unwrap();
    out
}

/// A 64-state table whose values exercise sign, zero sign, subnormals and
/// extremes.
pub fn golden_table() -> (QTable, TableHeader) {
    let bins = StateBins {
        packet_loss: vec![0.02],
        latency_ms: vec![20.0],
        throughput_bps: vec![5e8],
        speed_mps: vec![5.0],
        distance_m: vec![100.0],
        load_ratio: vec![0.7],
    };
    let states = bins.state_count();
    let specials = [
        0.0,
        -0.0,
        1.0,
        -1.5,
        f64::MIN_POSITIVE / 4.0,
        f64::MAX,
        -f64::MAX,
        0.1,
        1e-300,
    ];
    let values: Vec<f64> = (0..states * 6)
        .map(|i| {
            if i % 7 == 0 {
                specials[i / 7 % specials.len()]
            } else {
                (i as f64).sin() * 3.0
            }
        })
        .collect();
    let visits: Vec<u64> = (0..states * 6)
        .map(|i| (i as u64 * 2654435761) % 1000)
        .collect();
    let q = QTable::from_parts(states, 6, values, visits).unwrap();
    (q, TableHeader::for_agent(&bins, &HyperParams::default()))
}

/// Agent living outside the simulator: it only sees bridge messages and
/// keeps its own table and RNG. Seed discipline matches the in-process
/// `Driver::Agent` built from `rng::stream(agent_seed, 0)`.
pub struct ScriptedAgent {
    pub q: QTable,
    pub bins: StateBins,
    pub hp: HyperParams,
    pub epsilon: f64,
    pub rng: rand_chacha::ChaCha8Rng,
}

impl ScriptedAgent {
    pub fn new(scenario: &Scenario, epsilon: f64, agent_seed: u64) -> Self {
        ScriptedAgent {
            q: QTable::zeros(scenario.bins.state_count(), 6),
            bins: scenario.bins.clone(),
            hp: scenario.agent,
            epsilon,
            rng: rng::stream(agent_seed, 0),
        }
    }

    fn state_of(&self, obs: &[f64; 6]) -> usize {
        let t = TelemetrySample {
            ue_id: 0,
            packet_loss: obs[0],
            latency_ms: obs[1],
            throughput_bps: obs[2],
            speed_mps: obs[3],
            distance_to_serving_m: obs[4],
            serving_load_ratio: obs[5],
        };
        self.bins.discretize(&t).unwrap()
    }

    /// Runs a full learning episode over the bridge; returns the rewards.
    pub fn run(&mut self, client: &mut BridgeClient, episode_seed: u64) -> Vec<f64> {
        let ack = client.reset(Some(episode_seed)).unwrap();
        let mut rewards = Vec::new();
        let (mut ue, mut obs, mut done) = (ack.ue_id, ack.observation, ack.done);
        while !done {
            let s = self.state_of(&obs.unwrap());
            let a = select_index(&self.q, s, self.epsilon, &mut self.rng);
            let step = client.step(ue.unwrap(), a).unwrap();
            let post: [f64; 6] = serde_json::from_value(step.info["post_action"].clone()).unwrap();
            let s_next = self.state_of(&post);
            self.q.update(s, a, step.reward, s_next, &self.hp);
            rewards.push(step.reward);
            (ue, obs, done) = (step.ue_id, step.observation, step.done);
        }
        rewards
    }
}
