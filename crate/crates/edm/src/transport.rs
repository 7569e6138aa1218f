//! Message transport between the two parties.
//!
//! Everything on the wire is a [`Frame`]: one tag byte, a little-endian
//! `u32` body length, then the body. The same framing is used by the
//! in-process channel (so byte counts are identical across transports) and
//! by the TCP channel.
//!
//! The TCP channel writes from a background thread. Both parties send
//! large frames at the same point in the protocol, and two blocking
//! `write_all` calls against full kernel buffers would deadlock; decoupling
//! the write side keeps `send` non-blocking at protocol scale.

use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::mpsc;
use std::thread::JoinHandle;
use thiserror::Error;

/// Upper bound on a frame body; anything larger is treated as corruption.
pub const MAX_FRAME_BYTES: u32 = 1 << 30;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("i/o failure on channel: {0}")]
    Io(#[from] std::io::Error),
    #[error("peer closed the channel")]
    Closed,
    #[error("frame of {0} bytes exceeds the {MAX_FRAME_BYTES}-byte limit")]
    FrameTooLarge(u64),
}

/// One protocol message: a tag byte and an opaque body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub tag: u8,
    pub body: Vec<u8>,
}

impl Frame {
    pub fn new(tag: u8, body: Vec<u8>) -> Self {
        Frame { tag, body }
    }

    /// Bytes this frame occupies on the wire, header included.
    pub fn wire_len(&self) -> u64 {
        5 + self.body.len() as u64
    }

    pub fn encode(&self) -> Result<Vec<u8>, TransportError> {
        if self.body.len() as u64 > MAX_FRAME_BYTES as u64 {
            return Err(TransportError::FrameTooLarge(self.body.len() as u64));
        }
        let mut out = Vec::with_capacity(5 + self.body.len());
        out.push(self.tag);
        out.extend_from_slice(&(self.body.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.body);
        Ok(out)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Frame, TransportError> {
        let mut header = [0u8; 5];
        r.read_exact(&mut header).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                TransportError::Closed
            } else {
                TransportError::Io(e)
            }
        })?;
        let len = u32::from_le_bytes(header[1..5].try_into().expect("4 bytes"));
        if len > MAX_FRAME_BYTES {
            return Err(TransportError::FrameTooLarge(len as u64));
        }
        let mut body = vec![0u8; len as usize];
        r.read_exact(&mut body)?;
        Ok(Frame { tag: header[0], body })
    }
}

/// A bidirectional, ordered, reliable frame pipe to the peer.
pub trait Channel {
    fn send(&mut self, frame: Frame) -> Result<(), TransportError>;
    fn recv(&mut self) -> Result<Frame, TransportError>;
}

/// Channel over in-process queues; [`pair`] returns the two endpoints.
pub struct InProcChannel {
    tx: mpsc::Sender<Frame>,
    rx: mpsc::Receiver<Frame>,
}

/// Two connected in-process endpoints.
pub fn pair() -> (InProcChannel, InProcChannel) {
    let (tx_ab, rx_ab) = mpsc::channel();
    let (tx_ba, rx_ba) = mpsc::channel();
    (
        InProcChannel { tx: tx_ab, rx: rx_ba },
        InProcChannel { tx: tx_ba, rx: rx_ab },
    )
}

impl Channel for InProcChannel {
    fn send(&mut self, frame: Frame) -> Result<(), TransportError> {
        // Validate exactly like the wire path, so oversized frames fail on
        // every transport.
        frame.encode()?;
        self.tx.send(frame).map_err(|_| TransportError::Closed)
    }

    fn recv(&mut self) -> Result<Frame, TransportError> {
        self.rx.recv().map_err(|_| TransportError::Closed)
    }
}

/// Channel over a TCP stream. Reads happen on the calling thread; writes are
/// handed to a dedicated writer thread (see the module note on deadlock).
pub struct SocketChannel {
    reader: TcpStream,
    writer_tx: Option<mpsc::Sender<Vec<u8>>>,
    writer: Option<JoinHandle<Result<(), std::io::Error>>>,
}

impl SocketChannel {
    pub fn new(stream: TcpStream) -> Result<Self, TransportError> {
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        let (writer_tx, writer_rx) = mpsc::channel::<Vec<u8>>();
        let mut write_half = stream;
        let writer = std::thread::spawn(move || {
            for bytes in writer_rx {
                write_half.write_all(&bytes)?;
                write_half.flush()?;
            }
            Ok(())
        });
        Ok(SocketChannel { reader, writer_tx: Some(writer_tx), writer: Some(writer) })
    }

    /// Shut down the writer and surface any deferred write error.
    pub fn finish(mut self) -> Result<(), TransportError> {
        self.join_writer()
    }

    fn join_writer(&mut self) -> Result<(), TransportError> {
        drop(self.writer_tx.take());
        if let Some(handle) = self.writer.take() {
            match handle.join() {
                Ok(result) => result.map_err(TransportError::Io)?,
                Err(_) => return Err(TransportError::Closed),
            }
        }
        Ok(())
    }
}

impl Drop for SocketChannel {
    fn drop(&mut self) {
        let _ = self.join_writer();
    }
}

impl Channel for SocketChannel {
    fn send(&mut self, frame: Frame) -> Result<(), TransportError> {
        let bytes = frame.encode()?;
        self.writer_tx
            .as_ref()
            .ok_or(TransportError::Closed)?
            .send(bytes)
            .map_err(|_| TransportError::Closed)
    }

    fn recv(&mut self) -> Result<Frame, TransportError> {
        Frame::read_from(&mut self.reader)
    }
}
