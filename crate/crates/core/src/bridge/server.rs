use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter};
use std::net::{TcpListener, TcpStream};

use serde_json::json;

use super::protocol::*;
use crate::agent::{Action, Feature};
use crate::engine::{Episode, Scenario};
use crate::error::{Error, Result};

struct Session<'a> {
    scenario: &'a Scenario,
    episode: Option<Episode>,
    last_client_id: Option<u64>,
    next_id: u64,
}

enum Reply {
    Send(Message),
    /// Send and then hang up.
    Fatal(String),
    Closed,
}

fn error(message: impl Into<String>) -> Message {
    Message::Error(ErrorMsg {
        message: message.into(),
        fatal: false,
    })
}

fn spaces(scenario: &Scenario) -> SpaceDescriptor {
    let observation = Feature::ORDER
        .iter()
        .map(|f| FeatureDescriptor {
            name: f.name().to_owned(),
            low: 0.0,
            high: match f {
                Feature::PacketLoss => Some(1.0),
                _ => None,
            },
        })
        .collect();
    SpaceDescriptor {
        observation,
        actions: Action::ALL.iter().map(|a| a.name().to_owned()).collect(),
        ue_count: scenario.ue_count,
        ticks_per_episode: scenario.agent.ticks_per_episode,
    }
}

impl Session<'_> {
    fn handle(&mut self, frame: Frame) -> Reply {
        if self.last_client_id.is_some_and(|last| frame.id <= last) {
            return Reply::Fatal(format!(
                "message id {} does not increase (last was {})",
                frame.id,
                self.last_client_id.unwrap_or_default()
            ));
        }
        let first = self.last_client_id.is_none();
        self.last_client_id = Some(frame.id);

        match (first, frame.message) {
            (true, Message::Hello(hello)) => {
                if hello.version != PROTOCOL_VERSION {
                    return Reply::Fatal(format!(
                        "unsupported protocol version {:?}, expected {PROTOCOL_VERSION:?}",
                        hello.version
                    ));
                }
                Reply::Send(Message::Hello(Hello {
                    version: PROTOCOL_VERSION.to_owned(),
                    spaces: Some(spaces(self.scenario)),
                }))
            }
            (true, other) => Reply::Fatal(format!("expected Hello, got {}", other.kind())),
            (false, Message::Reset(reset)) => self.reset(reset),
            (false, Message::Step(step)) => self.step(step),
            (false, Message::Close) => Reply::Closed,
            (false, Message::Hello(_)) => Reply::Send(error("Hello already exchanged")),
            (false, other) => Reply::Fatal(format!("{} is not a client message", other.kind())),
        }
    }

    fn reset(&mut self, reset: Reset) -> Reply {
        let seed = reset.seed.unwrap_or(self.scenario.seed);
        let mut episode = match Episode::new(self.scenario, seed) {
            Ok(e) => e,
            Err(e) => return Reply::Send(error(e.to_string())),
        };
        let ack = if episode.is_done() {
            ResetAck {
                tick: 0,
                ue_id: None,
                observation: None,
                done: true,
            }
        } else {
            match episode.begin_tick() {
                Ok(obs) => ResetAck {
                    tick: obs.tick,
                    ue_id: Some(obs.ue_id),
                    observation: Some(observation_of(&obs.telemetry)),
                    done: false,
                },
                Err(e) => return Reply::Send(error(e.to_string())),
            }
        };
        self.episode = Some(episode);
        Reply::Send(Message::ResetAck(ack))
    }

    fn step(&mut self, step: Step) -> Reply {
        let Some(episode) = self.episode.as_mut() else {
            return Reply::Send(error("no episode in progress; send Reset first"));
        };
        if episode.is_done() {
            return Reply::Send(error("episode finished"));
        }
        let Some(action) = Action::from_ordinal(step.action) else {
            return Reply::Send(error(format!(
                "action ordinal {} out of range 0..{}",
                step.action,
                Action::COUNT
            )));
        };
        let out = match episode.act(step.ue_id, action) {
            Ok(out) => out,
            Err(e) => return Reply::Send(error(e.to_string())),
        };
        let next = if out.done {
            None
        } else {
            match episode.begin_tick() {
                Ok(obs) => Some(obs),
                Err(e) => return Reply::Send(error(e.to_string())),
            }
        };
        let mut info = BTreeMap::new();
        info.insert("acted_ue".to_owned(), json!(step.ue_id));
        info.insert("post_action".to_owned(), json!(observation_of(&out.post)));
        info.insert("throughput_bps".to_owned(), json!(out.kpi.throughput_bps));
        info.insert("latency_ms".to_owned(), json!(out.kpi.latency_ms));
        info.insert("packet_loss".to_owned(), json!(out.kpi.packet_loss));
        info.insert("handover".to_owned(), json!(out.effect.handover));
        info.insert("power_changed".to_owned(), json!(out.effect.power_changed));
        Reply::Send(Message::StepAck(StepAck {
            tick: episode.tick(),
            ue_id: next.map(|o| o.ue_id),
            observation: next.map(|o| observation_of(&o.telemetry)),
            reward: out.reward,
            done: out.done,
            info,
        }))
    }

    fn frame(&mut self, message: Message) -> Frame {
        self.next_id += 1;
        Frame {
            id: self.next_id,
            message,
        }
    }
}

/// Serves one client on an accepted stream until it sends `Close`, hangs up,
/// or commits a fatal protocol error.
pub fn serve_connection(stream: TcpStream, scenario: &Scenario) -> Result<()> {
    scenario.validate()?;
    let peer = stream.peer_addr().ok();
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    let mut session = Session {
        scenario,
        episode: None,
        last_client_id: None,
        next_id: 0,
    };
    log::info!("bridge: client {peer:?} connected");
    loop {
        let frame = match read_frame(&mut reader) {
            Ok(Some(f)) => f,
            Ok(None) => {
                log::info!("bridge: client {peer:?} hung up");
                return Ok(());
            }
            Err(Error::Protocol(msg)) => {
                let reply = session.frame(Message::Error(ErrorMsg {
                    message: msg.clone(),
                    fatal: true,
                }));
                write_frame(&mut writer, &reply)?;
                return Err(Error::Protocol(msg));
            }
            Err(e) => return Err(e),
        };
        log::debug!("bridge: <- {} #{}", frame.message.kind(), frame.id);
        match session.handle(frame) {
            Reply::Send(message) => {
                let reply = session.frame(message);
                write_frame(&mut writer, &reply)?;
            }
            Reply::Fatal(message) => {
                let reply = session.frame(Message::Error(ErrorMsg {
                    message: message.clone(),
                    fatal: true,
                }));
                write_frame(&mut writer, &reply)?;
                return Err(Error::Protocol(message));
            }
            Reply::Closed => {
                log::info!("bridge: client {peer:?} closed the session");
                return Ok(());
            }
        }
    }
}

/// Accepts a single client on `listener` and serves it. Further connection
/// attempts wait in the listen backlog and are dropped when the listener goes
/// away.
pub fn serve(listener: &TcpListener, scenario: &Scenario) -> Result<()> {
    let (stream, _) = listener.accept()?;
    stream.set_nodelay(true)?;
    serve_connection(stream, scenario)
}
