use std::collections::BTreeMap;
use std::io::{ErrorKind, Read, Write};

use serde::{Deserialize, Serialize};

use crate::agent::{Feature, TelemetrySample};
use crate::error::{Error, Result};

pub const PROTOCOL_VERSION: &str = "kdnsim/1";

/// Frames above this size are rejected before allocation.
pub const MAX_FRAME_LEN: usize = 16 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    /// Strictly increasing per sender and connection.
    pub id: u64,
    #[serde(flatten)]
    pub message: Message,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum Message {
    Hello(Hello),
    Reset(Reset),
    ResetAck(ResetAck),
    Step(Step),
    StepAck(StepAck),
    Close,
    Error(ErrorMsg),
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello(_) => "Hello",
            Message::Reset(_) => "Reset",
            Message::ResetAck(_) => "ResetAck",
            Message::Step(_) => "Step",
            Message::StepAck(_) => "StepAck",
            Message::Close => "Close",
            Message::Error(_) => "Error",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureDescriptor {
    pub name: String,
    pub low: f64,
    /// `None` means unbounded above.
    pub high: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDescriptor {
    pub observation: Vec<FeatureDescriptor>,
    pub actions: Vec<String>,
    pub ue_count: u32,
    pub ticks_per_episode: u32,
}

/// Sent by the client with `spaces: null`; answered by the server with the
/// observation and action spaces filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hello {
    pub version: String,
    #[serde(default)]
    pub spaces: Option<SpaceDescriptor>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reset {
    /// Episode seed; the scenario seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResetAck {
    pub tick: u32,
    /// UE whose decision is due; `None` for an empty episode.
    pub ue_id: Option<usize>,
    pub observation: Option<[f64; Feature::COUNT]>,
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub ue_id: usize,
    pub action: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepAck {
    /// Tick of the next decision.
    pub tick: u32,
    /// UE whose decision is due next; `None` once done.
    pub ue_id: Option<usize>,
    /// Observation of `ue_id` at the next decision; `None` once done.
    pub observation: Option<[f64; Feature::COUNT]>,
    pub reward: f64,
    pub done: bool,
    /// `post_action` holds the acted-on UE's observation right after the
    /// action; the rest are aggregate KPIs and action effects.
    pub info: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorMsg {
    pub message: String,
    /// The server closes the connection after a fatal error.
    pub fatal: bool,
}

pub fn observation_of(t: &TelemetrySample) -> [f64; Feature::COUNT] {
    t.features()
}

pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(frame)?;
    if json.len() > MAX_FRAME_LEN {
        return Err(Error::Protocol(format!(
            "frame of {} bytes is too large",
            json.len()
        )));
    }
    let mut out = Vec::with_capacity(4 + json.len());
    out.extend_from_slice(&(json.len() as u32).to_be_bytes());
    out.extend_from_slice(&json);
    Ok(out)
}

/// Decodes exactly one frame occupying all of `bytes`.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame> {
    if bytes.len() < 4 {
        return Err(Error::Protocol(
            "frame shorter than its length prefix".into(),
        ));
    }
    let len = u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes")) as usize;
    if bytes.len() - 4 != len {
        return Err(Error::Protocol(format!(
            "length prefix says {len} bytes, got {}",
            bytes.len() - 4
        )));
    }
    parse_body(&bytes[4..])
}

fn parse_body(body: &[u8]) -> Result<Frame> {
    serde_json::from_slice(body).map_err(|e| Error::Protocol(format!("malformed message: {e}")))
}

pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> Result<()> {
    w.write_all(&encode_frame(frame)?)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame. Returns `Ok(None)` on a clean end of stream between frames.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Frame>> {
    let mut prefix = [0u8; 4];
    match r.read_exact(&mut prefix) {
        Ok(()) => {}
        Err(e) if e.kind() == ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_be_bytes(prefix) as usize;
    if len > MAX_FRAME_LEN {
        return Err(Error::Protocol(format!(
            "frame of {len} bytes is too large"
        )));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    parse_body(&body).map(Some)
}
