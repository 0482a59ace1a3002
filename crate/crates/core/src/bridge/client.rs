use std::io::{BufReader, BufWriter};
use std::net::{TcpStream, ToSocketAddrs};

use super::protocol::*;
use crate::error::{Error, Result};

/// Minimal lockstep client for the bridge.
pub struct BridgeClient {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    next_id: u64,
}

impl BridgeClient {
    pub fn connect<A: ToSocketAddrs>(addr: A) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(BridgeClient {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
            next_id: 0,
        })
    }

    /// Sends one message and waits for the reply.
    pub fn request(&mut self, message: Message) -> Result<Message> {
        self.send(message)?;
        read_frame(&mut self.reader)?
            .map(|f| f.message)
            .ok_or_else(|| Error::Protocol("server hung up".into()))
    }

    pub fn send(&mut self, message: Message) -> Result<()> {
        self.next_id += 1;
        write_frame(
            &mut self.writer,
            &Frame {
                id: self.next_id,
                message,
            },
        )
    }

    pub fn hello(&mut self) -> Result<SpaceDescriptor> {
        match self.request(Message::Hello(Hello {
            version: PROTOCOL_VERSION.to_owned(),
            spaces: None,
        }))? {
            Message::Hello(Hello {
                spaces: Some(spaces),
                ..
            }) => Ok(spaces),
            other => Err(unexpected(other)),
        }
    }

    pub fn reset(&mut self, seed: Option<u64>) -> Result<ResetAck> {
        match self.request(Message::Reset(Reset { seed }))? {
            Message::ResetAck(ack) => Ok(ack),
            other => Err(unexpected(other)),
        }
    }

    pub fn step(&mut self, ue_id: usize, action: usize) -> Result<StepAck> {
        match self.request(Message::Step(Step { ue_id, action }))? {
            Message::StepAck(ack) => Ok(ack),
            other => Err(unexpected(other)),
        }
    }

    pub fn close(mut self) -> Result<()> {
        self.send(Message::Close)
    }
}

fn unexpected(message: Message) -> Error {
    match message {
        Message::Error(e) => Error::Protocol(e.message),
        other => Error::Protocol(format!("unexpected {} reply", other.kind())),
    }
}
