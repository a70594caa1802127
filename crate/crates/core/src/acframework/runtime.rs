//! The run kernel. Internal deliveries drain through a single FIFO queue;
//! messages bound for open ports are staged and flushed only when the
//! inside is quiet, in stable per-port-name order. The flush discipline
//! makes the observable event order a function of *what* each port carries,
//! not of relay depth inside the wiring — so two worlds whose per-port
//! message sequences agree are observationally identical, which is exactly
//! the equivalence the simulator constructions are meant to realize.

use std::collections::{BTreeMap, VecDeque};

use super::distinguisher::{DistAction, Distinguisher, DistinguisherSpec};
use super::machine::{Choice, Machine, MachineError, RunRand, StepCtx};
use super::message::{Message, PortId};
use super::registers::{RegisterTable, ENV_ACTOR};
use super::transcript::{Direction, Transcript};
use super::wiring::Wiring;
use super::AcError;

/// Default per-run delivery budget; exceeding it is a divergence error.
pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

/// Default enumeration budget in bits (log2 of the randomness space).
pub const DEFAULT_ENUMERATION_BITS: f64 = 24.0;

/// A machine-local failure recorded during a run. The machine halts; the
/// run continues.
#[derive(Clone, Debug)]
pub struct Fault {
    pub machine: String,
    pub error: MachineError,
}

#[derive(Debug)]
pub struct RunOutput {
    pub guess: u8,
    pub transcript: Transcript,
    pub faults: Vec<Fault>,
}

impl RunOutput {
    pub fn fault_of(&self, machine: &str) -> Option<&MachineError> {
        self.faults.iter().find(|f| f.machine == machine).map(|f| &f.error)
    }
}

struct Envelope {
    to: PortId,
    msg: Message,
}

/// Execute one run with the given randomness mode. Returns the output and
/// the (possibly extended) enumeration tape.
fn run_with_rand(
    wiring: &Wiring,
    d: &mut dyn Distinguisher,
    mut rand: RunRand,
    step_budget: u64,
) -> Result<(RunOutput, RunRand), AcError> {
    wiring.validate()?;
    let exports = wiring.exports();
    let export_names = wiring.export_names_by_port();

    let mut instances: BTreeMap<String, Box<dyn Machine>> = wiring
        .machines()
        .iter()
        .map(|m| (m.name().to_string(), m.instantiate()))
        .collect();
    let mut halted: BTreeMap<String, bool> =
        wiring.machines().iter().map(|m| (m.name().to_string(), false)).collect();
    let declared: BTreeMap<String, Vec<String>> = wiring
        .machines()
        .iter()
        .map(|m| (m.name().to_string(), m.ports().to_vec()))
        .collect();

    let mut registers = RegisterTable::new();
    let mut queue: VecDeque<Envelope> = VecDeque::new();
    let mut staged: Vec<(String, Message)> = Vec::new();
    let mut transcript = Transcript::default();
    let mut faults: Vec<Fault> = Vec::new();
    let mut steps: u64 = 0;

    // Route one machine emission: to a linked peer, to the staging area for
    // an exported port, or fail for sealed/undeclared ports.
    let route = |from: PortId,
                 msg: Message,
                 queue: &mut VecDeque<Envelope>,
                 staged: &mut Vec<(String, Message)>,
                 registers: &mut RegisterTable|
     -> Result<(), AcError> {
        if !declared.get(&from.machine).is_some_and(|ps| ps.iter().any(|p| *p == from.port)) {
            return Err(AcError::Wiring(format!("emission on undeclared port {from}")));
        }
        if let Message::Qubit(h) = &msg {
            registers.begin_send(*h, &from.machine).map_err(|e| AcError::Wiring(e.to_string()))?;
        }
        if let Some(peer) = wiring.peer_of(&from) {
            queue.push_back(Envelope { to: peer.clone(), msg });
            Ok(())
        } else if let Some(export) = export_names.get(&from) {
            staged.push((export.clone(), msg));
            Ok(())
        } else if wiring.is_sealed(&from) {
            Err(AcError::Wiring(format!("emission on sealed port {from}")))
        } else {
            Err(AcError::Wiring(format!("emission on unresolvable port {from}")))
        }
    };

    // Accept distinguisher inputs addressed by export name.
    let accept_inputs = |inputs: Vec<(String, Message)>,
                         queue: &mut VecDeque<Envelope>,
                         transcript: &mut Transcript,
                         registers: &mut RegisterTable|
     -> Result<(), AcError> {
        for (name, msg) in inputs {
            let Some(target) = exports.get(&name) else {
                return Err(AcError::Distinguisher(format!("input to unknown export {name:?}")));
            };
            if let Message::Qubit(h) = &msg {
                registers
                    .begin_send(*h, ENV_ACTOR)
                    .map_err(|e| AcError::Wiring(e.to_string()))?;
            }
            transcript.record(&name, Direction::In, &msg);
            queue.push_back(Envelope { to: target.clone(), msg });
        }
        Ok(())
    };

    // Opening inputs.
    {
        let mut ctx = StepCtx::new(ENV_ACTOR, &mut rand, &mut registers);
        let opening = d.begin(&mut ctx).map_err(|e| AcError::Distinguisher(e.to_string()))?;
        if let Some(fatal) = ctx.fatal.take() {
            return Err(AcError::Divergence(fatal));
        }
        accept_inputs(opening, &mut queue, &mut transcript, &mut registers)?;
    }

    loop {
        if let Some(envelope) = queue.pop_front() {
            steps += 1;
            if steps > step_budget {
                return Err(AcError::StepBudgetExhausted(step_budget));
            }
            let machine_name = envelope.to.machine.clone();
            if *halted.get(&machine_name).unwrap_or(&true) {
                // A halted machine swallows everything addressed to it.
                continue;
            }
            if let Message::Qubit(h) = &envelope.msg {
                registers
                    .deliver(*h, &machine_name)
                    .map_err(|e| AcError::Wiring(e.to_string()))?;
            }
            let instance = instances
                .get_mut(&machine_name)
                .ok_or_else(|| AcError::Wiring(format!("no machine {machine_name:?}")))?;
            let mut ctx = StepCtx::new(&machine_name, &mut rand, &mut registers);
            let result = instance.step(&envelope.to.port, envelope.msg, &mut ctx);
            let fatal = ctx.fatal.take();
            if let Some(fatal) = fatal {
                return Err(AcError::Divergence(fatal));
            }
            match result {
                Ok(outputs) => {
                    for (port, msg) in outputs {
                        route(
                            PortId::new(machine_name.clone(), port),
                            msg,
                            &mut queue,
                            &mut staged,
                            &mut registers,
                        )?;
                    }
                }
                Err(e) => {
                    faults.push(Fault { machine: machine_name.clone(), error: e });
                    halted.insert(machine_name, true);
                }
            }
        } else if !staged.is_empty() {
            // Canonical flush: stable order by export name, so observable
            // order depends only on per-port content.
            let mut batch = std::mem::take(&mut staged);
            batch.sort_by(|a, b| a.0.cmp(&b.0));
            for (name, msg) in batch {
                steps += 1;
                if steps > step_budget {
                    return Err(AcError::StepBudgetExhausted(step_budget));
                }
                if let Message::Qubit(h) = &msg {
                    registers
                        .deliver(*h, ENV_ACTOR)
                        .map_err(|e| AcError::Wiring(e.to_string()))?;
                }
                transcript.record(&name, Direction::Out, &msg);
                let mut ctx = StepCtx::new(ENV_ACTOR, &mut rand, &mut registers);
                let action =
                    d.observe(&name, &msg, &mut ctx).map_err(|e| AcError::Distinguisher(e.to_string()))?;
                if let Some(fatal) = ctx.fatal.take() {
                    return Err(AcError::Divergence(fatal));
                }
                match action {
                    DistAction::Continue => {}
                    DistAction::Send(inputs) => {
                        accept_inputs(inputs, &mut queue, &mut transcript, &mut registers)?;
                    }
                    DistAction::Guess(guess) => {
                        return Ok((RunOutput { guess, transcript, faults }, rand));
                    }
                }
            }
        } else {
            let mut ctx = StepCtx::new(ENV_ACTOR, &mut rand, &mut registers);
            let guess = d.finish(&mut ctx).map_err(|e| AcError::Distinguisher(e.to_string()))?;
            if let Some(fatal) = ctx.fatal.take() {
                return Err(AcError::Divergence(fatal));
            }
            return Ok((RunOutput { guess, transcript, faults }, rand));
        }
    }
}

/// Execute one seeded run.
pub fn run(wiring: &Wiring, d: &DistinguisherSpec, seed: u64) -> Result<RunOutput, AcError> {
    run_with_budget(wiring, d, seed, DEFAULT_STEP_BUDGET)
}

pub fn run_with_budget(
    wiring: &Wiring,
    d: &DistinguisherSpec,
    seed: u64,
    step_budget: u64,
) -> Result<RunOutput, AcError> {
    let mut instance = d.instantiate();
    run_with_rand(wiring, instance.as_mut(), RunRand::seeded(seed), step_budget)
        .map(|(output, _)| output)
}

/// One leaf of the exhaustive enumeration: a complete run plus the
/// probability of the randomness path that produced it.
pub struct WeightedRun {
    pub output: RunOutput,
    pub probability: f64,
}

/// Run the system once for every path through its randomness space,
/// depth-first. Fails with a divergence error when the space exceeds
/// `budget_bits` (per path) or [`MAX_ENUMERATION_PATHS`] (in total).
pub fn enumerate_runs(
    wiring: &Wiring,
    d: &DistinguisherSpec,
    budget_bits: f64,
) -> Result<Vec<WeightedRun>, AcError> {
    let mut results = Vec::new();
    let mut prefix: Vec<Choice> = Vec::new();
    loop {
        let mut instance = d.instantiate();
        let rand = RunRand::enumerate(prefix, budget_bits);
        let (output, rand) = run_with_rand(wiring, instance.as_mut(), rand, DEFAULT_STEP_BUDGET)?;
        let tape = rand.into_tape();
        let probability: f64 = tape.iter().map(Choice::probability).product();
        results.push(WeightedRun { output, probability });
        if results.len() > MAX_ENUMERATION_PATHS {
            return Err(AcError::Divergence(format!(
                "more than {MAX_ENUMERATION_PATHS} randomness paths"
            )));
        }
        // Odometer: advance the deepest choice that still has a branch left.
        let mut stack = tape;
        loop {
            let Some(mut last) = stack.pop() else {
                return Ok(results);
            };
            if let Some(next) = last.next_branch() {
                last.index = next;
                stack.push(last);
                break;
            }
        }
        prefix = stack;
    }
}

/// Cap on the number of enumerated paths (2^24, matching the advertised
/// "24 bits of randomness" budget).
pub const MAX_ENUMERATION_PATHS: usize = 1 << 24;

#[cfg(test)]
mod tests {
    use super::super::machine::MachineSpec;
    use super::super::message::QubitHandle;
    use super::*;
    use crate::qstate::{PureState, QuantumState};

    /// Echoes any bit it receives on "in" back out on "out".
    struct Echo;
    impl Machine for Echo {
        fn step(
            &mut self,
            port: &str,
            msg: Message,
            _ctx: &mut StepCtx<'_>,
        ) -> Result<Vec<(String, Message)>, MachineError> {
            if port == "in" {
                Ok(vec![("out".to_string(), msg)])
            } else {
                Err(MachineError::ProtocolState {
                    port: port.to_string(),
                    tag: msg.tag(),
                    phase: "echo".to_string(),
                })
            }
        }
    }

    fn echo_wiring() -> Wiring {
        let mut w = Wiring::new();
        w.add_machine(MachineSpec::new("echo", vec!["in".into(), "out".into()], || Echo))
            .unwrap();
        w
    }

    /// Emits one coin toss on "out" when poked.
    struct Coin;
    impl Machine for Coin {
        fn step(
            &mut self,
            _port: &str,
            _msg: Message,
            ctx: &mut StepCtx<'_>,
        ) -> Result<Vec<(String, Message)>, MachineError> {
            Ok(vec![("out".to_string(), Message::Bit(ctx.rand_bit()?))])
        }
    }

    use super::super::distinguisher::ScriptedObserver;

    #[test]
    fn echo_run_produces_expected_transcript() {
        let w = echo_wiring();
        let d = ScriptedObserver::spec(
            "probe",
            vec![("echo.in".to_string(), Message::Bit(1))],
            |seen| match seen.first() {
                Some((port, Message::Bit(1))) if port == "echo.out" => 0,
                _ => 1,
            },
        );
        let out = run(&w, &d, 5).unwrap();
        assert_eq!(out.guess, 0);
        assert!(out.faults.is_empty());
        let dump = out.transcript.dump();
        assert_eq!(dump, "0,in,echo.in,bit,1\n1,out,echo.out,bit,1\n");
    }

    #[test]
    fn identical_seeds_identical_transcripts() {
        let mut w = Wiring::new();
        w.add_machine(MachineSpec::new("coin", vec!["poke".into(), "out".into()], || Coin))
            .unwrap();
        let d = ScriptedObserver::spec(
            "poker",
            vec![("coin.poke".to_string(), Message::Start)],
            |_| 0,
        );
        let a = run(&w, &d, 77).unwrap();
        let b = run(&w, &d, 77).unwrap();
        assert_eq!(a.transcript.dump(), b.transcript.dump());
        // And some seed flips the coin the other way.
        let flipped = (0..64u64)
            .map(|s| run(&w, &d, s).unwrap().transcript.dump())
            .any(|dump| dump != a.transcript.dump());
        assert!(flipped, "coin never flipped across 64 seeds");
    }

    #[test]
    fn protocol_fault_is_recorded_and_machine_halts() {
        let w = echo_wiring();
        let d = ScriptedObserver::spec(
            "bad",
            vec![
                ("echo.out".to_string(), Message::Bit(0)), // wrong port
                ("echo.in".to_string(), Message::Bit(1)),  // swallowed after halt
            ],
            |seen| u8::from(!seen.is_empty()),
        );
        let out = run(&w, &d, 0).unwrap();
        assert_eq!(out.faults.len(), 1);
        assert!(matches!(out.faults[0].error, MachineError::ProtocolState { .. }));
        // Halted machine swallowed the second input: nothing observed.
        assert_eq!(out.guess, 0);
    }

    #[test]
    fn unknown_export_is_a_distinguisher_error() {
        let w = echo_wiring();
        let d = ScriptedObserver::spec(
            "lost",
            vec![("nowhere".to_string(), Message::Start)],
            |_| 0,
        );
        assert!(matches!(run(&w, &d, 0), Err(AcError::Distinguisher(_))));
    }

    /// Sends the same qubit handle out twice — a linearity violation.
    struct Cloner;
    impl Machine for Cloner {
        fn step(
            &mut self,
            _port: &str,
            _msg: Message,
            ctx: &mut StepCtx<'_>,
        ) -> Result<Vec<(String, Message)>, MachineError> {
            let state = QuantumState::Pure(PureState::ghz(1).unwrap());
            let handles = ctx.alloc_register(&state);
            Ok(vec![
                ("out".to_string(), Message::Qubit(handles[0])),
                ("out".to_string(), Message::Qubit(handles[0])),
            ])
        }
    }

    #[test]
    fn double_send_of_a_qubit_aborts_the_run() {
        let mut w = Wiring::new();
        w.add_machine(MachineSpec::new("cloner", vec!["poke".into(), "out".into()], || Cloner))
            .unwrap();
        let d = ScriptedObserver::spec(
            "probe",
            vec![("cloner.poke".to_string(), Message::Start)],
            |_| 0,
        );
        assert!(matches!(run(&w, &d, 0), Err(AcError::Wiring(_))));
    }

    #[test]
    fn spent_handles_cannot_be_resent() {
        struct MeasureThenSend;
        impl Machine for MeasureThenSend {
            fn step(
                &mut self,
                _port: &str,
                _msg: Message,
                ctx: &mut StepCtx<'_>,
            ) -> Result<Vec<(String, Message)>, MachineError> {
                let state = QuantumState::Pure(PureState::ghz(1).unwrap());
                let handles = ctx.alloc_register(&state);
                let _ = ctx.measure_qubit(handles[0])?;
                Ok(vec![("out".to_string(), Message::Qubit(handles[0]))])
            }
        }
        let mut w = Wiring::new();
        w.add_machine(MachineSpec::new(
            "sp",
            vec!["poke".into(), "out".into()],
            || MeasureThenSend,
        ))
        .unwrap();
        let d = ScriptedObserver::spec("probe", vec![("sp.poke".to_string(), Message::Start)], |_| 0);
        assert!(matches!(run(&w, &d, 0), Err(AcError::Wiring(_))));
    }

    /// Ping-pong pair that never quiesces.
    struct Forever;
    impl Machine for Forever {
        fn step(
            &mut self,
            _port: &str,
            msg: Message,
            _ctx: &mut StepCtx<'_>,
        ) -> Result<Vec<(String, Message)>, MachineError> {
            Ok(vec![("peer".to_string(), msg)])
        }
    }

    #[test]
    fn runaway_exchange_hits_the_step_budget() {
        let mut w = Wiring::new();
        w.add_machine(MachineSpec::new("a", vec!["peer".into(), "poke".into()], || Forever))
            .unwrap();
        w.add_machine(MachineSpec::new("b", vec!["peer".into()], || Forever)).unwrap();
        w.link(PortId::new("a", "peer"), PortId::new("b", "peer")).unwrap();
        let d =
            ScriptedObserver::spec("probe", vec![("a.poke".to_string(), Message::Start)], |_| 0);
        assert!(matches!(
            run_with_budget(&w, &d, 0, 10_000),
            Err(AcError::StepBudgetExhausted(10_000))
        ));
    }

    #[test]
    fn enumeration_covers_the_whole_space_with_correct_weights() {
        let mut w = Wiring::new();
        w.add_machine(MachineSpec::new("coin", vec!["poke".into(), "out".into()], || Coin))
            .unwrap();
        // Distinguisher draws one extra bit itself and guesses the XOR.
        struct XorProbe {
            seen: Option<u8>,
        }
        impl Distinguisher for XorProbe {
            fn begin(
                &mut self,
                _ctx: &mut StepCtx<'_>,
            ) -> Result<Vec<(String, Message)>, MachineError> {
                Ok(vec![("coin.poke".to_string(), Message::Start)])
            }
            fn observe(
                &mut self,
                _port: &str,
                msg: &Message,
                _ctx: &mut StepCtx<'_>,
            ) -> Result<DistAction, MachineError> {
                if let Message::Bit(b) = msg {
                    self.seen = Some(*b);
                }
                Ok(DistAction::Continue)
            }
            fn finish(&mut self, ctx: &mut StepCtx<'_>) -> Result<u8, MachineError> {
                Ok(self.seen.unwrap_or(0) ^ ctx.rand_bit()?)
            }
        }
        let d = DistinguisherSpec::new("xor", || XorProbe { seen: None });
        let runs = enumerate_runs(&w, &d, 24.0).unwrap();
        assert_eq!(runs.len(), 4);
        let total: f64 = runs.iter().map(|r| r.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let p_zero: f64 = runs
            .iter()
            .filter(|r| r.output.guess == 0)
            .map(|r| r.probability)
            .sum();
        assert!((p_zero - 0.5).abs() < 1e-12);
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        struct ManyBits;
        impl Machine for ManyBits {
            fn step(
                &mut self,
                _port: &str,
                _msg: Message,
                ctx: &mut StepCtx<'_>,
            ) -> Result<Vec<(String, Message)>, MachineError> {
                let mut acc = 0;
                for _ in 0..40 {
                    acc ^= ctx.rand_bit()?;
                }
                Ok(vec![("out".to_string(), Message::Bit(acc))])
            }
        }
        let mut w = Wiring::new();
        w.add_machine(MachineSpec::new("m", vec!["poke".into(), "out".into()], || ManyBits))
            .unwrap();
        let d = ScriptedObserver::spec("probe", vec![("m.poke".to_string(), Message::Start)], |_| 0);
        assert!(matches!(enumerate_runs(&w, &d, 24.0), Err(AcError::Divergence(_))));
    }

    #[test]
    fn qubits_flushed_to_the_environment_are_measurable() {
        struct GhzDealer;
        impl Machine for GhzDealer {
            fn step(
                &mut self,
                _port: &str,
                _msg: Message,
                ctx: &mut StepCtx<'_>,
            ) -> Result<Vec<(String, Message)>, MachineError> {
                let state = QuantumState::Pure(PureState::ghz(2).unwrap());
                let hs = ctx.alloc_register(&state);
                Ok(vec![
                    ("out1".to_string(), Message::Qubit(hs[0])),
                    ("out2".to_string(), Message::Qubit(hs[1])),
                ])
            }
        }
        struct Correlator {
            handles: Vec<QubitHandle>,
        }
        impl Distinguisher for Correlator {
            fn begin(
                &mut self,
                _ctx: &mut StepCtx<'_>,
            ) -> Result<Vec<(String, Message)>, MachineError> {
                Ok(vec![("dealer.poke".to_string(), Message::Start)])
            }
            fn observe(
                &mut self,
                _port: &str,
                msg: &Message,
                _ctx: &mut StepCtx<'_>,
            ) -> Result<DistAction, MachineError> {
                if let Message::Qubit(h) = msg {
                    self.handles.push(*h);
                }
                Ok(DistAction::Continue)
            }
            fn finish(&mut self, ctx: &mut StepCtx<'_>) -> Result<u8, MachineError> {
                let bits: Vec<u8> = self
                    .handles
                    .iter()
                    .map(|&h| ctx.measure_qubit(h))
                    .collect::<Result<_, _>>()?;
                // GHZ qubits always agree.
                Ok(u8::from(bits[0] != bits[1]))
            }
        }
        let mut w = Wiring::new();
        w.add_machine(MachineSpec::new(
            "dealer",
            vec!["poke".into(), "out1".into(), "out2".into()],
            || GhzDealer,
        ))
        .unwrap();
        let d = DistinguisherSpec::new("corr", || Correlator { handles: Vec::new() });
        for seed in 0..32 {
            assert_eq!(run(&w, &d, seed).unwrap().guess, 0, "GHZ correlation broke at seed {seed}");
        }
    }
}
