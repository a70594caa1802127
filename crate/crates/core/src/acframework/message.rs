use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::qstate::{BitString, QuantumState};

/// Handle to one qubit slot in the run-owned register table. Handles are
/// linear: the kernel aborts a run that sends or consumes one twice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitHandle(pub(crate) usize);

impl fmt::Display for QubitHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// The closed message union carried on wires. Classical payloads are cheap
/// to clone; state descriptions are shared behind an `Arc` since channels
/// and leaks copy them freely.
#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    Start,
    Continue,
    Abort,
    Stop,
    Bit(u8),
    Bits(BitString),
    PartyId(usize),
    State(Arc<QuantumState>),
    Qubit(QubitHandle),
}

impl Message {
    pub fn state(s: QuantumState) -> Self {
        Self::State(Arc::new(s))
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Self::Start => "start",
            Self::Continue => "continue",
            Self::Abort => "abort",
            Self::Stop => "stop",
            Self::Bit(_) => "bit",
            Self::Bits(_) => "bits",
            Self::PartyId(_) => "party",
            Self::State(_) => "state",
            Self::Qubit(_) => "qubit",
        }
    }

    /// Payload rendering for transcript dumps. State descriptions are
    /// summarized by a content digest so dumps stay line-sized. Qubit
    /// handles render without their slot number: the numbering reflects
    /// run-internal allocation order, which may differ between two systems
    /// with identical boundary behavior, and dumps compare boundaries.
    pub fn payload_string(&self) -> String {
        match self {
            Self::Start | Self::Continue | Self::Abort | Self::Stop | Self::Qubit(_) => {
                String::new()
            }
            Self::Bit(b) => b.to_string(),
            Self::Bits(x) => x.to_string(),
            Self::PartyId(v) => v.to_string(),
            Self::State(s) => {
                let digest = Sha256::digest(s.to_json_string().as_bytes());
                format!("n{}:{:02x}{:02x}{:02x}{:02x}", s.num_qubits(), digest[0], digest[1], digest[2], digest[3])
            }
        }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let payload = self.payload_string();
        if payload.is_empty() {
            write!(f, "{}", self.tag())
        } else {
            write!(f, "{}({payload})", self.tag())
        }
    }
}

/// A machine-local port, qualified by the machine's wiring name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId {
    pub machine: String,
    pub port: String,
}

impl PortId {
    pub fn new(machine: impl Into<String>, port: impl Into<String>) -> Self {
        Self { machine: machine.into(), port: port.into() }
    }
}

impl<M: Into<String>, P: Into<String>> From<(M, P)> for PortId {
    fn from((machine, port): (M, P)) -> Self {
        PortId::new(machine, port)
    }
}

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.machine, self.port)
    }
}
