//! Machines of the concrete world: per-party protocol converters, the
//! state-generator resource, the shared-randomness oracles, pairwise
//! authenticated classical channels, and the source converters.
//!
//! Port conventions (all 1-based party ids):
//! - party machine `party.i`: `ext` (environment face), `src` (toward the
//!   state generator), `coin`, `ver` (oracle queries), `chan.j` for each
//!   peer `j != i`.
//! - state generator `sg`: `p.1..p.n` toward the parties, `src` toward the
//!   source.
//! - oracles `coin` / `ver`: `q.1..q.n` plus `leak` when leaky.
//! - channel `chan.i.j` (i < j): `a` toward party i, `b` toward party j,
//!   plus `leak` when leaky.

use std::sync::Arc;

use crate::acframework::{Machine, MachineError, MachineSpec, Message, QubitHandle, StepCtx};
use crate::qstate::{BitString, LocalGate, PureState, QuantumState};

use super::{verdict, CoinMode, SourceBehavior};

pub(crate) fn unexpected(port: &str, msg: &Message, phase: impl Into<String>) -> MachineError {
    MachineError::ProtocolState { port: port.to_string(), tag: msg.tag(), phase: phase.into() }
}

fn internal(err: impl ToString) -> MachineError {
    MachineError::Other(err.to_string())
}

/// Parses `"{prefix}.{i}"` into a 1-based index in `1..=n`.
pub(crate) fn port_index(port: &str, prefix: &str, n: usize) -> Result<usize, MachineError> {
    let idx = port
        .strip_prefix(prefix)
        .and_then(|rest| rest.strip_prefix('.'))
        .and_then(|digits| digits.parse::<usize>().ok())
        .filter(|i| (1..=n).contains(i));
    idx.ok_or_else(|| internal(format!("port {port} is not {prefix}.1..{prefix}.{n}")))
}

/// All-party start gate used by the collective-interface resources: the
/// machine proceeds only once every party slot has checked in.
#[derive(Debug)]
pub(crate) struct Barrier {
    seen: Vec<bool>,
}

impl Barrier {
    pub fn new(n: usize) -> Self {
        Self { seen: vec![false; n] }
    }

    /// Marks slot `i` (0-based); true when this arrival completes the set.
    pub fn arrive(&mut self, i: usize) -> Result<bool, MachineError> {
        if self.seen[i] {
            return Err(internal(format!("duplicate start from slot {}", i + 1)));
        }
        self.seen[i] = true;
        Ok(self.seen.iter().all(|&s| s))
    }

    pub fn reset(&mut self) {
        self.seen.fill(false);
    }
}

// ---------------------------------------------------------------------------
// Party converter
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum PartyPhase {
    Idle,
    AwaitQubit,
    AwaitCoin,
    AwaitVerifier,
    /// Non-verifier: waiting for the verifier's input bit.
    AwaitInput { v: usize },
    /// Non-verifier: input consumed, outcome sent, waiting for the verdict.
    AwaitVerdict { v: usize },
    /// Verifier: waiting for the remaining parties' outcomes.
    Collecting { x: BitString, ys: Vec<Option<u8>> },
}

impl PartyPhase {
    fn name(&self) -> &'static str {
        match self {
            Self::Idle => "idle",
            Self::AwaitQubit => "await-qubit",
            Self::AwaitCoin => "await-coin",
            Self::AwaitVerifier => "await-verifier",
            Self::AwaitInput { .. } => "await-input",
            Self::AwaitVerdict { .. } => "await-verdict",
            Self::Collecting { .. } => "collecting",
        }
    }
}

struct Party {
    id: usize,
    n: usize,
    held: Option<QubitHandle>,
    phase: PartyPhase,
}

impl Party {
    fn take_held(&mut self) -> Result<QubitHandle, MachineError> {
        self.held.take().ok_or_else(|| internal("no qubit held"))
    }

    /// Applies this party's gate (H for input 0, the X square root for 1)
    /// to the held qubit and measures it.
    fn transform_and_measure(
        &mut self,
        input: u8,
        ctx: &mut StepCtx<'_>,
    ) -> Result<u8, MachineError> {
        let gate = LocalGate::for_bit(input).map_err(internal)?;
        let h = self.take_held()?;
        ctx.apply_gate(h, gate)?;
        ctx.measure_qubit(h)
    }
}

impl Machine for Party {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        let phase = std::mem::replace(&mut self.phase, PartyPhase::Idle);
        match (phase, port, msg) {
            (PartyPhase::Idle, "ext", Message::Start) => {
                self.phase = PartyPhase::AwaitQubit;
                Ok(vec![("src".to_string(), Message::Start)])
            }
            (PartyPhase::AwaitQubit, "src", Message::Qubit(h)) => {
                self.held = Some(h);
                self.phase = PartyPhase::AwaitCoin;
                Ok(vec![("coin".to_string(), Message::Start)])
            }
            (PartyPhase::AwaitCoin, "coin", Message::Bit(0)) => {
                // Use round: hand the qubit to the environment.
                let h = self.take_held()?;
                self.phase = PartyPhase::Idle;
                Ok(vec![("ext".to_string(), Message::Qubit(h))])
            }
            (PartyPhase::AwaitCoin, "coin", Message::Bit(1)) => {
                self.phase = PartyPhase::AwaitVerifier;
                Ok(vec![("ver".to_string(), Message::Start)])
            }
            (PartyPhase::AwaitVerifier, "ver", Message::PartyId(v)) if (1..=self.n).contains(&v) => {
                if v != self.id {
                    self.phase = PartyPhase::AwaitInput { v };
                    return Ok(Vec::new());
                }
                // Verifier branch: draw the even-parity inputs, distribute
                // them, and run the local transform on our own share.
                let x = ctx.rand_even_parity_bits(self.n)?;
                let y_own = self.transform_and_measure(x.bit(self.id - 1), ctx)?;
                let out = (1..=self.n)
                    .filter(|&j| j != self.id)
                    .map(|j| (format!("chan.{j}"), Message::Bit(x.bit(j - 1))))
                    .collect();
                let mut ys = vec![None; self.n];
                ys[self.id - 1] = Some(y_own);
                self.phase = PartyPhase::Collecting { x, ys };
                Ok(out)
            }
            (PartyPhase::AwaitInput { v }, p, Message::Bit(xb)) if p == format!("chan.{v}") => {
                let y = self.transform_and_measure(xb, ctx)?;
                self.phase = PartyPhase::AwaitVerdict { v };
                Ok(vec![(format!("chan.{v}"), Message::Bit(y))])
            }
            (PartyPhase::AwaitVerdict { v }, p, Message::Bit(b)) if p == format!("chan.{v}") => {
                self.phase = PartyPhase::Idle;
                Ok(vec![("ext".to_string(), Message::Bit(b))])
            }
            (PartyPhase::Collecting { x, mut ys }, p, Message::Bit(yb)) if p.starts_with("chan.") => {
                let j = port_index(p, "chan", self.n)?;
                if j == self.id || ys[j - 1].is_some() {
                    return Err(internal(format!("unexpected outcome from party {j}")));
                }
                ys[j - 1] = Some(yb);
                if ys.iter().any(Option::is_none) {
                    self.phase = PartyPhase::Collecting { x, ys };
                    return Ok(Vec::new());
                }
                let y = BitString::new(ys.into_iter().map(Option::unwrap).collect())
                    .map_err(internal)?;
                let b = verdict(&x, &y).map_err(internal)?;
                let mut out: Vec<(String, Message)> = (1..=self.n)
                    .filter(|&j| j != self.id)
                    .map(|j| (format!("chan.{j}"), Message::Bit(b)))
                    .collect();
                out.push(("ext".to_string(), Message::Bit(b)));
                self.phase = PartyPhase::Idle;
                Ok(out)
            }
            (phase, port, msg) => Err(unexpected(port, &msg, phase.name())),
        }
    }
}

/// Protocol converter for party `i` of `n` (1-based).
pub fn party_machine(i: usize, n: usize) -> MachineSpec {
    assert!((1..=n).contains(&i), "party id out of range");
    let mut ports = vec!["ext".to_string(), "src".to_string(), "coin".to_string(), "ver".to_string()];
    ports.extend((1..=n).filter(|&j| j != i).map(|j| format!("chan.{j}")));
    MachineSpec::new(format!("party.{i}"), ports, move || Party {
        id: i,
        n,
        held: None,
        phase: PartyPhase::Idle,
    })
}

// ---------------------------------------------------------------------------
// State generator
// ---------------------------------------------------------------------------

struct StateGenerator {
    n: usize,
    barrier: Barrier,
    awaiting_state: bool,
}

impl Machine for StateGenerator {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match (port, msg) {
            (p, Message::Start) if p.starts_with("p.") && !self.awaiting_state => {
                let i = port_index(p, "p", self.n)?;
                if self.barrier.arrive(i - 1)? {
                    self.awaiting_state = true;
                    Ok(vec![("src".to_string(), Message::Start)])
                } else {
                    Ok(Vec::new())
                }
            }
            ("src", Message::State(s)) if self.awaiting_state => {
                if s.num_qubits() != self.n {
                    return Err(MachineError::StateValidation(format!(
                        "expected a {}-qubit state, got {} qubits",
                        self.n,
                        s.num_qubits()
                    )));
                }
                let handles = ctx.alloc_register(s.as_ref());
                self.awaiting_state = false;
                self.barrier.reset();
                Ok((1..=self.n)
                    .map(|i| (format!("p.{i}"), Message::Qubit(handles[i - 1])))
                    .collect())
            }
            (p, m) => {
                let phase = if self.awaiting_state { "await-state" } else { "gathering" };
                Err(unexpected(p, &m, phase))
            }
        }
    }
}

/// The n-qubit state-generator resource: waits for all parties to start,
/// queries its source port for a state description, then materializes the
/// state and sends one qubit to each party.
pub fn state_generator(n: usize) -> MachineSpec {
    let mut ports: Vec<String> = (1..=n).map(|i| format!("p.{i}")).collect();
    ports.push("src".to_string());
    MachineSpec::new("sg", ports, move || StateGenerator {
        n,
        barrier: Barrier::new(n),
        awaiting_state: false,
    })
}

// ---------------------------------------------------------------------------
// Shared-randomness oracles
// ---------------------------------------------------------------------------

struct CoinOracle {
    n: usize,
    p: f64,
    mode: CoinMode,
    leaky: bool,
    barrier: Barrier,
}

impl Machine for CoinOracle {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match msg {
            Message::Start => {
                let i = port_index(port, "q", self.n)?;
                if !self.barrier.arrive(i - 1)? {
                    return Ok(Vec::new());
                }
                self.barrier.reset();
                let c = match self.mode {
                    CoinMode::Random => ctx.rand_choice(&[self.p, 1.0 - self.p])? as u8,
                    CoinMode::Fixed(b) => b,
                };
                let mut out: Vec<(String, Message)> =
                    (1..=self.n).map(|i| (format!("q.{i}"), Message::Bit(c))).collect();
                if self.leaky {
                    out.push(("leak".to_string(), Message::Bit(c)));
                }
                Ok(out)
            }
            m => Err(unexpected(port, &m, "gathering")),
        }
    }
}

/// The use/verify coin: on a query from every party, broadcasts one shared
/// bit (0 = use, drawn with probability `p`). Leaky variants copy the bit
/// to a `leak` port for a watching source.
pub fn coin_oracle(n: usize, p: f64, mode: CoinMode, leaky: bool) -> MachineSpec {
    let mut ports: Vec<String> = (1..=n).map(|i| format!("q.{i}")).collect();
    if leaky {
        ports.push("leak".to_string());
    }
    MachineSpec::new("coin", ports, move || CoinOracle {
        n,
        p,
        mode,
        leaky,
        barrier: Barrier::new(n),
    })
}

struct VerifierOracle {
    n: usize,
    leaky: bool,
    barrier: Barrier,
}

impl Machine for VerifierOracle {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match msg {
            Message::Start => {
                let i = port_index(port, "q", self.n)?;
                if !self.barrier.arrive(i - 1)? {
                    return Ok(Vec::new());
                }
                self.barrier.reset();
                let v = ctx.rand_index(self.n)? + 1;
                let mut out: Vec<(String, Message)> =
                    (1..=self.n).map(|i| (format!("q.{i}"), Message::PartyId(v))).collect();
                if self.leaky {
                    out.push(("leak".to_string(), Message::PartyId(v)));
                }
                Ok(out)
            }
            m => Err(unexpected(port, &m, "gathering")),
        }
    }
}

/// The verifier draw: on a query from every party, broadcasts one party id
/// chosen uniformly from `1..=n`.
pub fn verifier_oracle(n: usize, leaky: bool) -> MachineSpec {
    let mut ports: Vec<String> = (1..=n).map(|i| format!("q.{i}")).collect();
    if leaky {
        ports.push("leak".to_string());
    }
    MachineSpec::new("ver", ports, move || VerifierOracle { n, leaky, barrier: Barrier::new(n) })
}

// ---------------------------------------------------------------------------
// Authenticated classical channels
// ---------------------------------------------------------------------------

struct ClassicalChannel {
    leaky: bool,
}

impl Machine for ClassicalChannel {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        _ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        if matches!(msg, Message::Qubit(_)) {
            return Err(internal("classical channel cannot carry qubits"));
        }
        let dest = match port {
            "a" => "b",
            "b" => "a",
            p => return Err(unexpected(p, &msg, "forwarding")),
        };
        let mut out = vec![(dest.to_string(), msg.clone())];
        if self.leaky {
            out.push(("leak".to_string(), msg));
        }
        Ok(out)
    }
}

/// Authenticated classical channel between parties `i` and `j` (`i < j`):
/// faithfully forwards in both directions; leaky variants copy every
/// message to a `leak` port, in transit order.
pub fn classical_channel(i: usize, j: usize, leaky: bool) -> MachineSpec {
    assert!(i < j, "channel endpoints must be ordered");
    let mut ports = vec!["a".to_string(), "b".to_string()];
    if leaky {
        ports.push("leak".to_string());
    }
    MachineSpec::new(format!("chan.{i}.{j}"), ports, move || ClassicalChannel { leaky })
}

// ---------------------------------------------------------------------------
// Source converters
// ---------------------------------------------------------------------------

struct GhzDescSource {
    ghz: Arc<QuantumState>,
}

impl Machine for GhzDescSource {
    fn step(
        &mut self,
        _port: &str,
        msg: Message,
        _ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match msg {
            Message::Start | Message::Continue => {
                Ok(vec![("inner".to_string(), Message::State(self.ghz.clone()))])
            }
            // Blocks everything else: feedback bits from the resource side
            // are absorbed without reply.
            _ => Ok(Vec::new()),
        }
    }
}

fn ghz_desc_source(name: &str, n: usize) -> MachineSpec {
    let ghz = Arc::new(QuantumState::Pure(
        PureState::ghz(n).expect("party count is validated before wiring"),
    ));
    MachineSpec::new(name, vec!["inner".to_string()], move || GhzDescSource { ghz: ghz.clone() })
}

/// The honest source: answers every query with a GHZ description and
/// ignores everything else.
pub fn honest_source(n: usize) -> MachineSpec {
    ghz_desc_source("source", n)
}

/// Same behavior under the name `filter`: plugged into an ideal resource's
/// source port it hides that face from the environment.
pub fn ghz_filter(n: usize) -> MachineSpec {
    ghz_desc_source("filter", n)
}

struct ScriptedSource {
    n: usize,
    behavior: SourceBehavior,
    with_meter: bool,
    ghz: Arc<QuantumState>,
    served: usize,
    observed: Vec<Message>,
}

impl Machine for ScriptedSource {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        _ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        if port.starts_with("watch") {
            self.observed.push(msg);
            return Ok(Vec::new());
        }
        match msg {
            Message::Start | Message::Continue => {
                let round = self.served;
                let state: Arc<QuantumState> = match &self.behavior {
                    SourceBehavior::Honest => self.ghz.clone(),
                    SourceBehavior::Fixed(s) => s.clone(),
                    SourceBehavior::Schedule(list) => list[round % list.len()].clone(),
                    SourceBehavior::Adaptive(f) => Arc::new(f(round, &self.observed)),
                };
                if state.num_qubits() != self.n {
                    return Err(MachineError::StateValidation(format!(
                        "source produced a {}-qubit state for an n={} protocol",
                        state.num_qubits(),
                        self.n
                    )));
                }
                self.served += 1;
                let mut out = vec![("inner".to_string(), Message::State(state))];
                if self.with_meter {
                    out.push(("meter".to_string(), Message::PartyId(self.served)));
                }
                Ok(out)
            }
            // Resource feedback (coin bits, verdicts, stop/abort signals) is
            // recorded for adaptive behaviors and otherwise absorbed.
            Message::Bit(_) | Message::Bits(_) | Message::PartyId(_) | Message::Abort
            | Message::Stop => {
                self.observed.push(msg);
                Ok(Vec::new())
            }
            m => Err(unexpected(port, &m, "serving")),
        }
    }
}

/// A source that answers state queries per `behavior`. `watch_ports` are
/// extra read-only inputs (leak copies) recorded for adaptive behaviors;
/// with `with_meter`, every query is counted on a `meter` port, so a run's
/// round count can be read off the boundary.
pub fn scripted_source(
    n: usize,
    behavior: SourceBehavior,
    with_meter: bool,
    watch_ports: Vec<String>,
) -> MachineSpec {
    let mut ports = vec!["inner".to_string()];
    if with_meter {
        ports.push("meter".to_string());
    }
    ports.extend(watch_ports);
    let ghz = Arc::new(QuantumState::Pure(
        PureState::ghz(n).expect("party count is validated before wiring"),
    ));
    MachineSpec::new("source", ports, move || ScriptedSource {
        n,
        behavior: behavior.clone(),
        with_meter,
        ghz: ghz.clone(),
        served: 0,
        observed: Vec::new(),
    })
}
