//! Remote reset/step environment over TCP.
//!
//! Every frame is a 4-byte big-endian payload length followed by one UTF-8
//! JSON object of the form `{"id":N,"kind":K,"payload":{...}}`. See
//! `docs/bridge-protocol.md` for the field-by-field schema.

mod client;
mod protocol;
mod server;

pub use client::BridgeClient;
pub use protocol::{
    decode_frame, encode_frame, observation_of, read_frame, write_frame, ErrorMsg,
    FeatureDescriptor, Frame, Hello, Message, Reset, ResetAck, SpaceDescriptor, Step, StepAck,
    MAX_FRAME_LEN, PROTOCOL_VERSION,
};
pub use server::{serve, serve_connection};
