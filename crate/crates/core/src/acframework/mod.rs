//! Message-passing execution kernel for resource/converter style security
//! arguments.
//!
//! The pieces: [`Machine`]s exchange [`Message`]s through a [`Wiring`];
//! whatever ports remain open form the surface a [`Distinguisher`] drives.
//! A run is deterministic given a seed; alternatively the whole randomness
//! space of a run can be enumerated exactly, which turns distinguishing
//! advantage into a finite sum (see [`advantage_exact`]).
//!
//! Scheduling is two-level: machine-to-machine deliveries drain in FIFO
//! order, and boundary emissions are staged until the inside is quiet, then
//! flushed sorted by export name. The distinguisher therefore observes
//! *what* each port carries and in what per-port order, but not how many
//! internal hops produced it — the standard black-box interface assumption.
//!
//! Qubits move between machines as opaque handles with enforced ownership:
//! only the current holder may touch or send a handle, and measurement
//! retires it. Entanglement is preserved across transfers because handles
//! point into shared registers.
//!
//! The [`otp`] module carries a complete worked example.

pub mod advantage;
pub mod distinguisher;
pub mod machine;
pub mod message;
pub mod otp;
pub mod registers;
pub mod runtime;
pub mod transcript;
pub mod wiring;

use thiserror::Error;

pub use advantage::{
    advantage_estimate, advantage_exact, advantage_exact_over, guess_zero_probability,
    transcript_distribution, transcript_tv, AdvantageEstimate,
};
pub use distinguisher::{DistAction, Distinguisher, DistinguisherSpec, ScriptedObserver};
pub use machine::{derive_seed, Machine, MachineError, MachineSpec, StepCtx};
pub use message::{Message, PortId, QubitHandle};
pub use registers::{RegisterTable, ENV_ACTOR};
pub use runtime::{
    enumerate_runs, run, run_with_budget, Fault, RunOutput, WeightedRun, DEFAULT_ENUMERATION_BITS,
    DEFAULT_STEP_BUDGET, MAX_ENUMERATION_PATHS,
};
pub use transcript::{Direction, Transcript, TranscriptEvent};
pub use wiring::Wiring;

/// A run-fatal condition: unlike a machine fault, these abort the whole
/// run, because they indicate a broken experiment rather than a misbehaving
/// protocol party.
#[derive(Debug, Error)]
pub enum AcError {
    /// Structural problem: bad links, name collisions, emission on a dead
    /// port, or a qubit-ownership violation.
    #[error("wiring error: {0}")]
    Wiring(String),

    /// The run exceeded its delivery budget without quiescing.
    #[error("step budget of {0} deliveries exhausted")]
    StepBudgetExhausted(u64),

    /// The distinguisher itself misbehaved (addressed a nonexistent port,
    /// or returned an error from one of its callbacks).
    #[error("distinguisher error: {0}")]
    Distinguisher(String),

    /// Exact enumeration cannot finish: the randomness space is too large
    /// or branches never terminate.
    #[error("enumeration diverged: {0}")]
    Divergence(String),
}
