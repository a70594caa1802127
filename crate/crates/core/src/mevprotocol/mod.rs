//! The verification protocol itself, in both of its guises.
//!
//! The *concrete* side wires a state-generator resource, per-party
//! converters, pairwise classical channels, and two shared-randomness
//! oracles (the use/verify coin and the verifier draw) into an n-party
//! system: each round the parties either keep the distributed qubits or run
//! the XY parity test against a randomly chosen verifier and broadcast the
//! verdict bit.
//!
//! The *ideal* side is a single resource that delivers qubits or draws the
//! verdict from the trace distance to GHZ, plus the converters that make
//! the two sides comparable: a filter that plays an honest source, a
//! simulator that fabricates the leak traffic a watching source would see,
//! and the multi-round repeaters with their interactive GHZ-sharing
//! counterpart.
//!
//! Builders in [`worlds`] return wirings whose export surfaces match
//! pairwise, so distinguishing advantage between corresponding worlds is
//! directly measurable with the kernel in [`crate::acframework`].

pub mod harness;
pub mod ideal;
pub mod machines;
pub mod probes;
pub mod worlds;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::acframework::Message;
use crate::qstate::{BitString, QuantumState};

pub use harness::{
    extract_round, run_multiround_trial, run_round_trial, MultiRoundOutcome, RoundOutcome,
    RoundRecord,
};
pub use ideal::{
    ghz_sharing_resource, interactive_ghz_filter, mev_resource, round_repeater,
    source_dialogue_simulator, source_simulator,
};
pub use machines::{
    classical_channel, coin_oracle, ghz_filter, honest_source, party_machine, scripted_source,
    state_generator, verifier_oracle,
};
pub use probes::{multiround_probes, open_source_probes, round_probes};
pub use worlds::{
    concrete_honest, concrete_open_source, concrete_with_source, honest_pair, ideal_filtered,
    ideal_simulated, ideal_with_source, multiround_filtered_pair, multiround_open_pair,
    multiround_with_source, open_source_pair,
};

/// Configuration shared by every world builder.
#[derive(Clone, Debug)]
pub struct ProtocolParams {
    /// Number of parties (and qubits per shared state).
    pub n: usize,
    /// Probability that a round is used rather than verified.
    pub p: f64,
    /// Base seed; harness helpers derive per-trial seeds from it.
    pub seed: u64,
}

impl ProtocolParams {
    pub const MAX_PARTIES: usize = 10;

    pub fn new(n: usize, p: f64, seed: u64) -> Result<Self, ProtocolError> {
        let params = Self { n, p, seed };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.n < 2 || self.n > Self::MAX_PARTIES {
            return Err(ProtocolError::InvalidParams(format!(
                "party count {} outside 2..={}",
                self.n,
                Self::MAX_PARTIES
            )));
        }
        if !self.p.is_finite() || self.p <= 0.0 || self.p >= 1.0 {
            return Err(ProtocolError::InvalidParams(format!(
                "use probability {} outside the open interval (0, 1)",
                self.p
            )));
        }
        Ok(())
    }
}

/// How the use/verify coin behaves. `Fixed` pins the coin for experiments
/// that need a deterministic round type (e.g. rejection-rate measurement
/// wants every round tested).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoinMode {
    Random,
    Fixed(u8),
}

/// What the source sends each time it is asked for a state.
#[derive(Clone)]
pub enum SourceBehavior {
    /// A fresh GHZ description every round.
    Honest,
    /// The same fixed state every round.
    Fixed(Arc<QuantumState>),
    /// Cycles through the given list, one entry per round.
    Schedule(Vec<Arc<QuantumState>>),
    /// Callback deciding the next state from the round index and every
    /// message the watch ports have carried so far (read-only leakage).
    Adaptive(Arc<dyn Fn(usize, &[Message]) -> QuantumState + Send + Sync>),
}

impl fmt::Debug for SourceBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Honest => write!(f, "Honest"),
            Self::Fixed(s) => write!(f, "Fixed({} qubits)", s.num_qubits()),
            Self::Schedule(v) => write!(f, "Schedule({} entries)", v.len()),
            Self::Adaptive(_) => write!(f, "Adaptive(..)"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("verdict requires |X| = |Y|, got {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("verdict requires even-parity X, got odd parity")]
    OddParity,
    #[error("boundary transcript has no single round outcome: {0}")]
    Extraction(String),
}

/// The parity test at the heart of the one-round protocol: accept (0) iff
/// the outcome sum matches half the input sum, mod 2.
pub fn verdict(x: &BitString, y: &BitString) -> Result<u8, ProtocolError> {
    if x.len() != y.len() {
        return Err(ProtocolError::LengthMismatch(x.len(), y.len()));
    }
    if x.parity() != 0 {
        return Err(ProtocolError::OddParity);
    }
    let half_x = (x.weight() / 2) % 2;
    let y_sum = y.weight() % 2;
    Ok(u8::from(y_sum != half_x))
}
