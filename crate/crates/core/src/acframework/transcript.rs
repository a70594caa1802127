//! The observable record of a run: every message crossing the outside
//! boundary, in the order the environment saw it. Events are numbered by
//! that observable order alone — internal relay depth never shows up here,
//! so two systems that present the same boundary behavior produce
//! byte-identical records.

use sha2::{Digest, Sha256};

use super::message::Message;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Environment → system.
    In,
    /// System → environment.
    Out,
}

impl Direction {
    fn arrow(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
        }
    }
}

#[derive(Clone, Debug)]
pub struct TranscriptEvent {
    /// Position in the observable sequence (0-based).
    pub seq: usize,
    /// Export name of the boundary port.
    pub port: String,
    pub direction: Direction,
    pub message: Message,
}

#[derive(Clone, Debug, Default)]
pub struct Transcript {
    pub events: Vec<TranscriptEvent>,
}

impl Transcript {
    pub fn record(&mut self, port: &str, direction: Direction, message: &Message) {
        self.events.push(TranscriptEvent {
            seq: self.events.len(),
            port: port.to_string(),
            direction,
            message: message.clone(),
        });
    }

    /// Canonical line-per-event text form: `seq,direction,port,tag,payload`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.seq,
                e.direction.arrow(),
                e.port,
                e.message.tag(),
                e.message.payload_string()
            ));
        }
        out
    }

    /// Order-sensitive digest of the canonical dump.
    pub fn digest(&self) -> u64 {
        let hash = Sha256::digest(self.dump().as_bytes());
        u64::from_le_bytes(hash[..8].try_into().expect("sha256 yields at least 8 bytes"))
    }

    /// Messages the system emitted on one port, in order.
    pub fn outputs_at(&self, port: &str) -> Vec<&Message> {
        self.events
            .iter()
            .filter(|e| e.direction == Direction::Out && e.port == port)
            .map(|e| &e.message)
            .collect()
    }

    /// All system outputs as (port, message), in observable order.
    pub fn outputs(&self) -> impl Iterator<Item = (&str, &Message)> {
        self.events
            .iter()
            .filter(|e| e.direction == Direction::Out)
            .map(|e| (e.port.as_str(), &e.message))
    }
}
