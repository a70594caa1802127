//! Machines of the ideal world: the one-round verification resource, its
//! source-side simulator, the multi-round repeaters, the GHZ-sharing
//! resource, and the interactive filter/simulator pair that close the
//! multi-round comparison.

use std::collections::HashMap;
use std::sync::Arc;

use crate::acframework::{Machine, MachineError, MachineSpec, Message, StepCtx};
use crate::qstate::{BitString, PureState, QuantumState};

use super::machines::{port_index, unexpected, Barrier};
use super::CoinMode;

/// Trace distance to GHZ, memoized by state identity: sources typically
/// re-send the same shared description every round, and the density-matrix
/// distance costs an eigendecomposition.
struct TauCache {
    by_ptr: HashMap<usize, f64>,
}

impl TauCache {
    fn new() -> Self {
        Self { by_ptr: HashMap::new() }
    }

    fn tau(&mut self, state: &Arc<QuantumState>) -> Result<f64, MachineError> {
        let key = Arc::as_ptr(state) as usize;
        if let Some(&t) = self.by_ptr.get(&key) {
            return Ok(t);
        }
        let t = state
            .distance_to_ghz()
            .map_err(|e| MachineError::StateValidation(e.to_string()))?;
        self.by_ptr.insert(key, t);
        Ok(t)
    }
}

// ---------------------------------------------------------------------------
// One-round verification resource
// ---------------------------------------------------------------------------

struct MevResource {
    n: usize,
    p: f64,
    mode: CoinMode,
    barrier: Barrier,
    awaiting_state: bool,
    tau: TauCache,
}

impl Machine for MevResource {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match (port, msg) {
            (p, Message::Start) if p.starts_with("party.") && !self.awaiting_state => {
                let i = port_index(p, "party", self.n)?;
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
                self.awaiting_state = false;
                self.barrier.reset();
                let c = match self.mode {
                    CoinMode::Random => ctx.rand_choice(&[self.p, 1.0 - self.p])? as u8,
                    CoinMode::Fixed(b) => b,
                };
                if c == 0 {
                    // Use round: materialize the description and hand one
                    // qubit to each party; the source face just learns C.
                    let handles = ctx.alloc_register(s.as_ref());
                    let mut out = vec![("src".to_string(), Message::Bit(0))];
                    out.extend(
                        (1..=self.n).map(|i| (format!("party.{i}"), Message::Qubit(handles[i - 1]))),
                    );
                    Ok(out)
                } else {
                    // Test round: the verdict depends on the state only
                    // through its distance to GHZ.
                    let tau = self.tau.tau(&s)?;
                    let r = tau * tau / 2.0;
                    let b = ctx.rand_choice(&[1.0 - r, r])? as u8;
                    let mut out =
                        vec![("src".to_string(), Message::Bit(1)), ("src".to_string(), Message::Bit(b))];
                    out.extend((1..=self.n).map(|i| (format!("party.{i}"), Message::Bit(b))));
                    Ok(out)
                }
            }
            (p, m) => {
                let phase = if self.awaiting_state { "await-state" } else { "gathering" };
                Err(unexpected(p, &m, phase))
            }
        }
    }
}

/// The one-round ideal verification resource: waits for all parties, asks
/// the source for a state, then either delivers the state's qubits (coin 0,
/// probability `p`) or broadcasts a verdict bit that rejects with
/// probability tau^2/2, where tau is the state's trace distance to GHZ.
/// The source face sees the coin and, on test rounds, the verdict.
pub fn mev_resource(n: usize, p: f64, mode: CoinMode) -> MachineSpec {
    let mut ports: Vec<String> = (1..=n).map(|i| format!("party.{i}")).collect();
    ports.push("src".to_string());
    MachineSpec::new("mev", ports, move || MevResource {
        n,
        p,
        mode,
        barrier: Barrier::new(n),
        awaiting_state: false,
        tau: TauCache::new(),
    })
}

// ---------------------------------------------------------------------------
// Source-side simulator for the one-round comparison
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum SimPhase {
    AwaitQuery,
    AwaitState,
    AwaitCoin,
    AwaitVerdict,
}

struct SourceSimulator {
    n: usize,
    phase: SimPhase,
    stash: Option<Arc<QuantumState>>,
}

impl SourceSimulator {
    /// Fabricates the classical traffic a watching source would have seen
    /// in the concrete world's test round: verifier id, the other parties'
    /// inputs, their outcomes (drawn from the real measurement statistics
    /// of the stashed state), and per-channel verdict copies.
    fn fabricate_leaks(
        &mut self,
        b: u8,
        ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        let state = self
            .stash
            .as_ref()
            .ok_or_else(|| MachineError::Other("no stashed state for leak synthesis".into()))?;
        let v = ctx.rand_index(self.n)? + 1;
        let x = ctx.rand_even_parity_bits(self.n)?;
        let gated = state
            .apply_local_gates(&x)
            .map_err(|e| MachineError::StateValidation(e.to_string()))?;
        let weights = gated
            .outcome_distribution()
            .map_err(|e| MachineError::StateValidation(e.to_string()))?;
        let y = BitString::from_index(ctx.rand_choice(&weights)?, self.n);

        let chan = |j: usize| format!("leak.chan.{}.{}", v.min(j), v.max(j));
        let mut out = vec![("leak.v".to_string(), Message::PartyId(v))];
        // Per-channel order matters: a real channel between the verifier
        // and party j carries x_j, then y_j, then the verdict.
        for j in (1..=self.n).filter(|&j| j != v) {
            out.push((chan(j), Message::Bit(x.bit(j - 1))));
        }
        for j in (1..=self.n).filter(|&j| j != v) {
            out.push((chan(j), Message::Bit(y.bit(j - 1))));
        }
        for j in (1..=self.n).filter(|&j| j != v) {
            out.push((chan(j), Message::Bit(b)));
        }
        Ok(out)
    }
}

impl Machine for SourceSimulator {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match (self.phase, port, msg) {
            (SimPhase::AwaitQuery, "res", Message::Start) => {
                self.phase = SimPhase::AwaitState;
                Ok(vec![("source".to_string(), Message::Start)])
            }
            (SimPhase::AwaitState, "source", Message::State(s)) => {
                self.stash = Some(s.clone());
                self.phase = SimPhase::AwaitCoin;
                Ok(vec![("res".to_string(), Message::State(s))])
            }
            (SimPhase::AwaitCoin, "res", Message::Bit(c)) => {
                self.phase = if c == 0 { SimPhase::AwaitQuery } else { SimPhase::AwaitVerdict };
                Ok(vec![("leak.c".to_string(), Message::Bit(c))])
            }
            (SimPhase::AwaitVerdict, "res", Message::Bit(b)) => {
                self.phase = SimPhase::AwaitQuery;
                self.fabricate_leaks(b, ctx)
            }
            (phase, p, m) => Err(unexpected(p, &m, format!("{phase:?}"))),
        }
    }
}

/// Converts the ideal resource's source face into the concrete world's
/// dishonest-source surface: forwards the state query/answer unchanged and
/// synthesizes the leak traffic (coin, verifier, inputs, outcomes,
/// verdicts) that the concrete channels and oracles would have shown.
pub fn source_simulator(n: usize) -> MachineSpec {
    let mut ports = vec![
        "res".to_string(),
        "source".to_string(),
        "leak.c".to_string(),
        "leak.v".to_string(),
    ];
    for i in 1..=n {
        for j in (i + 1)..=n {
            ports.push(format!("leak.chan.{i}.{j}"));
        }
    }
    MachineSpec::new("sim", ports, move || SourceSimulator {
        n,
        phase: SimPhase::AwaitQuery,
        stash: None,
    })
}

// ---------------------------------------------------------------------------
// Multi-round repeater
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum RepeaterPhase {
    Idle,
    Running,
    Done,
}

struct RoundRepeater {
    max_rounds: usize,
    rounds: usize,
    phase: RepeaterPhase,
}

impl Machine for RoundRepeater {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        _ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match (self.phase, port, msg) {
            (RepeaterPhase::Idle, "ext", Message::Start) => {
                self.rounds = 1;
                self.phase = RepeaterPhase::Running;
                Ok(vec![("inner".to_string(), Message::Start)])
            }
            (RepeaterPhase::Running, "inner", Message::Qubit(h)) => {
                self.phase = RepeaterPhase::Done;
                Ok(vec![("ext".to_string(), Message::Qubit(h))])
            }
            (RepeaterPhase::Running, "inner", Message::Bit(1)) => {
                self.phase = RepeaterPhase::Done;
                Ok(vec![("ext".to_string(), Message::Abort)])
            }
            (RepeaterPhase::Running, "inner", Message::Bit(0)) => {
                if self.rounds + 1 > self.max_rounds {
                    return Err(MachineError::RoundBudget(self.max_rounds));
                }
                self.rounds += 1;
                Ok(vec![("inner".to_string(), Message::Start)])
            }
            (phase, p, m) => Err(unexpected(p, &m, format!("{phase:?}"))),
        }
    }
}

/// Per-party repeater: restarts the wrapped one-round interface after
/// every accepted test round, forwards a delivered qubit, turns a rejected
/// verdict into an abort signal, and fails with a round-budget error when
/// `max_rounds` accepted test rounds pass without a delivery.
pub fn round_repeater(i: usize, max_rounds: usize) -> MachineSpec {
    assert!(max_rounds >= 1, "round budget must be at least 1");
    MachineSpec::new(
        format!("pi.{i}"),
        vec!["ext".to_string(), "inner".to_string()],
        move || RoundRepeater { max_rounds, rounds: 0, phase: RepeaterPhase::Idle },
    )
}

// ---------------------------------------------------------------------------
// GHZ-sharing resource (multi-round ideal)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum SharingPhase {
    Gathering,
    AwaitState,
    Done,
}

struct GhzSharing {
    n: usize,
    p: f64,
    barrier: Barrier,
    phase: SharingPhase,
    tau: TauCache,
}

impl Machine for GhzSharing {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match (self.phase, port, msg) {
            (SharingPhase::Gathering, p, Message::Start) if p.starts_with("party.") => {
                let i = port_index(p, "party", self.n)?;
                if self.barrier.arrive(i - 1)? {
                    self.phase = SharingPhase::AwaitState;
                    Ok(vec![("src".to_string(), Message::Start)])
                } else {
                    Ok(Vec::new())
                }
            }
            (SharingPhase::AwaitState, "src", Message::State(s)) => {
                if s.num_qubits() != self.n {
                    return Err(MachineError::StateValidation(format!(
                        "expected a {}-qubit state, got {} qubits",
                        self.n,
                        s.num_qubits()
                    )));
                }
                let tau = self.tau.tau(&s)?;
                let r = tau * tau / 2.0;
                // One compound draw per offered state: deliver now, reject
                // for good, or ask for another state.
                let branch = ctx.rand_choice(&[
                    self.p,
                    (1.0 - self.p) * r,
                    (1.0 - self.p) * (1.0 - r),
                ])?;
                match branch {
                    0 => {
                        let handles = ctx.alloc_register(s.as_ref());
                        self.phase = SharingPhase::Done;
                        let mut out: Vec<(String, Message)> = (1..=self.n)
                            .map(|i| (format!("party.{i}"), Message::Qubit(handles[i - 1])))
                            .collect();
                        out.push(("src".to_string(), Message::Stop));
                        Ok(out)
                    }
                    1 => {
                        self.phase = SharingPhase::Done;
                        let mut out: Vec<(String, Message)> = (1..=self.n)
                            .map(|i| (format!("party.{i}"), Message::Abort))
                            .collect();
                        out.push(("src".to_string(), Message::Abort));
                        Ok(out)
                    }
                    _ => Ok(vec![("src".to_string(), Message::Continue)]),
                }
            }
            (phase, p, m) => Err(unexpected(p, &m, format!("{phase:?}"))),
        }
    }
}

/// The multi-round ideal resource: keeps asking its source for states
/// until it either delivers one (probability `p` per offer) or aborts
/// (probability (1-p) tau^2/2 per offer). Terminal after delivery or abort.
/// `epsilon` is the closeness the delivered state is advertised to have;
/// it parameterizes reporting, not the machine's dynamics.
pub fn ghz_sharing_resource(n: usize, p: f64, epsilon: f64) -> MachineSpec {
    assert!(epsilon > 0.0 && epsilon <= 1.0, "epsilon must lie in (0, 1]");
    let mut ports: Vec<String> = (1..=n).map(|i| format!("party.{i}")).collect();
    ports.push("src".to_string());
    MachineSpec::new("ghzres", ports, move || GhzSharing {
        n,
        p,
        barrier: Barrier::new(n),
        phase: SharingPhase::Gathering,
        tau: TauCache::new(),
    })
}

// ---------------------------------------------------------------------------
// Interactive filter and dialogue simulator for the multi-round pair
// ---------------------------------------------------------------------------

struct InteractiveGhzFilter {
    ghz: Arc<QuantumState>,
    max_rounds: usize,
    served: usize,
}

impl Machine for InteractiveGhzFilter {
    fn step(
        &mut self,
        _port: &str,
        msg: Message,
        _ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match msg {
            Message::Start | Message::Continue => {
                if self.served >= self.max_rounds {
                    // Out of budget: go silent, mirroring the repeaters'
                    // round budget on the concrete side.
                    return Ok(Vec::new());
                }
                self.served += 1;
                Ok(vec![("inner".to_string(), Message::State(self.ghz.clone()))])
            }
            Message::Abort | Message::Stop => Ok(Vec::new()),
            m => Err(unexpected("inner", &m, "serving")),
        }
    }
}

/// Honest filter for the multi-round resource: answers the initial query
/// and every `Continue` with a fresh GHZ description, up to `max_rounds`
/// servings, then goes silent. Terminal signals are absorbed.
pub fn interactive_ghz_filter(n: usize, max_rounds: usize) -> MachineSpec {
    assert!(max_rounds >= 1, "round budget must be at least 1");
    let ghz = Arc::new(QuantumState::Pure(
        PureState::ghz(n).expect("party count is validated before wiring"),
    ));
    MachineSpec::new("filter", vec!["inner".to_string()], move || InteractiveGhzFilter {
        ghz: ghz.clone(),
        max_rounds,
        served: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum DialoguePhase {
    Idle,
    AwaitState,
    AwaitDecision,
    Done,
}

struct SourceDialogueSimulator {
    max_rounds: usize,
    rounds: usize,
    phase: DialoguePhase,
}

impl Machine for SourceDialogueSimulator {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        _ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match (self.phase, port, msg) {
            (DialoguePhase::Idle, "res", Message::Start) => {
                self.rounds = 1;
                self.phase = DialoguePhase::AwaitState;
                Ok(vec![("source".to_string(), Message::Start)])
            }
            (DialoguePhase::AwaitState, "source", Message::State(s)) => {
                self.phase = DialoguePhase::AwaitDecision;
                Ok(vec![("res".to_string(), Message::State(s))])
            }
            (DialoguePhase::AwaitDecision, "res", Message::Continue) => {
                // An accepted test round: the watching source would have
                // seen coin 1, verdict 0, then the next round's query —
                // unless the repeaters' budget just ran out.
                let mut out = vec![
                    ("source".to_string(), Message::Bit(1)),
                    ("source".to_string(), Message::Bit(0)),
                ];
                if self.rounds + 1 > self.max_rounds {
                    self.phase = DialoguePhase::Done;
                } else {
                    self.rounds += 1;
                    self.phase = DialoguePhase::AwaitState;
                    out.push(("source".to_string(), Message::Start));
                }
                Ok(out)
            }
            (DialoguePhase::AwaitDecision, "res", Message::Abort) => {
                self.phase = DialoguePhase::Done;
                Ok(vec![
                    ("source".to_string(), Message::Bit(1)),
                    ("source".to_string(), Message::Bit(1)),
                ])
            }
            (DialoguePhase::AwaitDecision, "res", Message::Stop) => {
                self.phase = DialoguePhase::Done;
                Ok(vec![("source".to_string(), Message::Bit(0))])
            }
            (phase, p, m) => Err(unexpected(p, &m, format!("{phase:?}"))),
        }
    }
}

/// Simulator closing the multi-round comparison with an open source port:
/// translates the sharing resource's interactive dialogue (state offers
/// answered by Continue/Abort/Stop) into the per-round coin-and-verdict
/// traffic the repeated one-round resource shows a dishonest source, with
/// the same round budget as the repeaters.
pub fn source_dialogue_simulator(max_rounds: usize) -> MachineSpec {
    assert!(max_rounds >= 1, "round budget must be at least 1");
    MachineSpec::new(
        "sim",
        vec!["res".to_string(), "source".to_string()],
        move || SourceDialogueSimulator { max_rounds, rounds: 0, phase: DialoguePhase::Idle },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acframework::{
        enumerate_runs, run, DistAction, Distinguisher, DistinguisherSpec, Wiring,
    };
    use crate::mevprotocol::machines::ghz_filter;
    use crate::qstate::DensityMatrix;

    fn feed_state_driver(n: usize, state: Arc<QuantumState>) -> DistinguisherSpec {
        struct Driver {
            n: usize,
            state: Arc<QuantumState>,
        }
        impl Distinguisher for Driver {
            fn begin(
                &mut self,
                _ctx: &mut StepCtx<'_>,
            ) -> Result<Vec<(String, Message)>, MachineError> {
                Ok((1..=self.n).map(|i| (format!("party.{i}"), Message::Start)).collect())
            }
            fn observe(
                &mut self,
                port: &str,
                msg: &Message,
                _ctx: &mut StepCtx<'_>,
            ) -> Result<DistAction, MachineError> {
                if port == "source" && matches!(msg, Message::Start) {
                    Ok(DistAction::Send(vec![(
                        "source".to_string(),
                        Message::State(self.state.clone()),
                    )]))
                } else {
                    Ok(DistAction::Continue)
                }
            }
            fn finish(&mut self, _ctx: &mut StepCtx<'_>) -> Result<u8, MachineError> {
                Ok(0)
            }
        }
        let state_for_factory = state;
        DistinguisherSpec::new("feeder", move || Driver {
            n,
            state: state_for_factory.clone(),
        })
    }

    fn open_mev(n: usize, p: f64, mode: CoinMode) -> Wiring {
        let mut w = Wiring::new();
        w.add_machine(mev_resource(n, p, mode)).unwrap();
        for i in 1..=n {
            w.export_as(("mev", format!("party.{i}")), format!("party.{i}")).unwrap();
        }
        w.export_as(("mev", "src"), "source").unwrap();
        w
    }

    #[test]
    fn ghz_never_rejects_in_ideal_resource() {
        let ghz = Arc::new(QuantumState::Pure(PureState::ghz(3).unwrap()));
        let w = open_mev(3, 0.5, CoinMode::Fixed(1));
        for seed in 0..64 {
            let out = run(&w, &feed_state_driver(3, ghz.clone()), seed).unwrap();
            for i in 1..=3 {
                assert_eq!(
                    out.transcript.outputs_at(&format!("party.{i}")),
                    vec![&Message::Bit(0)],
                    "seed {seed}"
                );
            }
        }
    }

    #[test]
    fn orthogonal_state_rejects_half_the_time_exactly() {
        // |100> is orthogonal to GHZ, so tau = 1 and the test round rejects
        // with probability exactly 1/2; enumeration confirms it.
        let bits = BitString::new(vec![1, 0, 0]).unwrap();
        let state = Arc::new(QuantumState::Pure(PureState::basis(&bits).unwrap()));
        let w = open_mev(3, 0.5, CoinMode::Fixed(1));
        let runs = enumerate_runs(&w, &feed_state_driver(3, state), 16.0).unwrap();
        let mut reject = 0.0;
        let mut total = 0.0;
        for r in &runs {
            total += r.probability;
            if r.output.transcript.outputs_at("party.1") == vec![&Message::Bit(1)] {
                reject += r.probability;
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
        assert!((reject - 0.5).abs() < 1e-12, "reject mass {reject}");
    }

    #[test]
    fn mixed_state_rejection_matches_tau_squared_over_two() {
        // Half-depolarized GHZ on 3 qubits has tau = 0.5 * (1 - 1/8) =
        // 0.4375, so the test round rejects with tau^2/2 ~ 0.095703125.
        let rho = DensityMatrix::depolarized_ghz(3, 0.5).unwrap();
        let state = Arc::new(QuantumState::Density(rho));
        let tau = state.distance_to_ghz().unwrap();
        assert!((tau - 0.4375).abs() < 1e-12);
        let w = open_mev(3, 0.5, CoinMode::Fixed(1));
        let runs = enumerate_runs(&w, &feed_state_driver(3, state), 16.0).unwrap();
        let reject: f64 = runs
            .iter()
            .filter(|r| r.output.transcript.outputs_at("party.1") == vec![&Message::Bit(1)])
            .map(|r| r.probability)
            .sum();
        assert!((reject - tau * tau / 2.0).abs() < 1e-12, "reject mass {reject}");
    }

    #[test]
    fn coin_splits_use_and_test_with_probability_p() {
        let ghz = Arc::new(QuantumState::Pure(PureState::ghz(2).unwrap()));
        let w = open_mev(2, 0.25, CoinMode::Random);
        let runs = enumerate_runs(&w, &feed_state_driver(2, ghz), 16.0).unwrap();
        let used: f64 = runs
            .iter()
            .filter(|r| {
                r.output
                    .transcript
                    .outputs_at("party.1")
                    .iter()
                    .any(|m| matches!(m, Message::Qubit(_)))
            })
            .map(|r| r.probability)
            .sum();
        assert!((used - 0.25).abs() < 1e-12, "used mass {used}");
    }

    #[test]
    fn repeater_budget_is_a_recorded_fault() {
        // A repeater wrapping one ideal-resource party port, GHZ filter on
        // the source, coin pinned to "test": verdicts are always 0, so the
        // repeater burns through its budget and faults.
        let n = 2;
        let max_rounds = 3;
        let mut w = Wiring::new();
        w.add_machine(mev_resource(n, 0.5, CoinMode::Fixed(1))).unwrap();
        w.add_machine(ghz_filter(n)).unwrap();
        w.link(("filter", "inner"), ("mev", "src")).unwrap();
        for i in 1..=n {
            w.add_machine(round_repeater(i, max_rounds)).unwrap();
            w.link((format!("pi.{i}"), "inner".to_string()), ("mev", format!("party.{i}"))).unwrap();
            w.export_as((format!("pi.{i}"), "ext".to_string()), format!("party.{i}")).unwrap();
        }
        let driver = DistinguisherSpec::new("starter", move || StartAll { n });
        let out = run(&w, &driver, 5).unwrap();
        assert_eq!(out.transcript.outputs().count(), 0);
        let budget_faults = out
            .faults
            .iter()
            .filter(|f| matches!(f.error, MachineError::RoundBudget(m) if m == max_rounds))
            .count();
        assert_eq!(budget_faults, n);
    }

    struct StartAll {
        n: usize,
    }

    impl Distinguisher for StartAll {
        fn begin(&mut self, _ctx: &mut StepCtx<'_>) -> Result<Vec<(String, Message)>, MachineError> {
            Ok((1..=self.n).map(|i| (format!("party.{i}"), Message::Start)).collect())
        }
        fn observe(
            &mut self,
            _port: &str,
            _msg: &Message,
            _ctx: &mut StepCtx<'_>,
        ) -> Result<DistAction, MachineError> {
            Ok(DistAction::Continue)
        }
        fn finish(&mut self, _ctx: &mut StepCtx<'_>) -> Result<u8, MachineError> {
            Ok(0)
        }
    }

    #[test]
    fn sharing_resource_outcome_mass_is_correct() {
        // tau = 1 source: per offer, deliver w.p. p, abort w.p. (1-p)/2,
        // continue otherwise. The dialogue simulator's round cap makes the
        // enumeration finite: after max_rounds offers it stops querying.
        let n = 2;
        let p = 0.25;
        let max_rounds = 8;
        let state = Arc::new(QuantumState::Pure(
            PureState::basis(&BitString::new(vec![1, 0]).unwrap()).unwrap(),
        ));
        let mut w = Wiring::new();
        w.add_machine(ghz_sharing_resource(n, p, 0.5)).unwrap();
        w.add_machine(source_dialogue_simulator(max_rounds)).unwrap();
        w.link(("sim", "res"), ("ghzres", "src")).unwrap();
        for i in 1..=n {
            w.export_as(("ghzres", format!("party.{i}")), format!("party.{i}")).unwrap();
        }
        w.export_as(("sim", "source"), "source").unwrap();
        let runs = enumerate_runs(&w, &feed_state_driver(n, state), 24.0).unwrap();
        let mut shared = 0.0;
        let mut aborted = 0.0;
        let mut silent = 0.0;
        for r in &runs {
            let first = r.output.transcript.outputs_at("party.1");
            match first.first() {
                Some(Message::Qubit(_)) => shared += r.probability,
                Some(Message::Abort) => aborted += r.probability,
                _ => silent += r.probability,
            }
        }
        // Within the round cap, the absorbing-chain identity holds exactly:
        // the shared mass is the unbounded-chain absorption probability
        // scaled by the mass that resolved before the cap.
        let r = 0.5;
        let absorb = p / (p + (1.0 - p) * r);
        let q: f64 = (1.0 - p) * (1.0 - r);
        let total = shared + aborted + silent;
        assert!((total - 1.0).abs() < 1e-9, "total {total}");
        assert!((silent - q.powi(max_rounds as i32)).abs() < 1e-9, "silent {silent}");
        assert!(
            (shared - absorb * (1.0 - silent)).abs() < 1e-9,
            "shared {shared}, absorb {absorb}, silent {silent}"
        );
    }

    #[test]
    fn dialogue_simulator_speaks_the_open_source_protocol() {
        // Wire sim <-> sharing resource; drive the source port by hand and
        // check the translated dialogue has the [coin, verdict?] shape.
        let n = 2;
        let mut w = Wiring::new();
        w.add_machine(ghz_sharing_resource(n, 0.5, 0.5)).unwrap();
        w.add_machine(source_dialogue_simulator(4)).unwrap();
        w.link(("sim", "res"), ("ghzres", "src")).unwrap();
        for i in 1..=n {
            w.export_as(("ghzres", format!("party.{i}")), format!("party.{i}")).unwrap();
        }
        w.export_as(("sim", "source"), "source").unwrap();
        let ghz = Arc::new(QuantumState::Pure(PureState::ghz(n).unwrap()));
        let runs = enumerate_runs(&w, &feed_state_driver(n, ghz), 24.0).unwrap();
        for r in &runs {
            let source_events = r.output.transcript.outputs_at("source");
            // GHZ never aborts: every test round shows [1, 0], delivery
            // shows a bare [0], and rounds are separated by fresh queries.
            let mut k = 0;
            while k < source_events.len() {
                match source_events[k] {
                    Message::Start => k += 1,
                    Message::Bit(1) => {
                        assert_eq!(source_events[k + 1], &Message::Bit(0));
                        k += 2;
                    }
                    Message::Bit(0) => {
                        assert_eq!(k + 1, source_events.len(), "verdict 0 must be terminal");
                        k += 1;
                    }
                    m => panic!("unexpected source event {m}"),
                }
            }
        }
    }
}
