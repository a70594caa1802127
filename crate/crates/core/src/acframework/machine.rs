use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::qstate::{index_from_uniform, BitString, LocalGate, QuantumState};

use super::message::{Message, QubitHandle};
use super::registers::{RegisterError, RegisterTable};

/// Branches lighter than this are pruned during exact enumeration; the mass
/// lost is far below every tolerance used by callers.
pub(crate) const NEGLIGIBLE_BRANCH: f64 = 1e-12;

/// Recoverable, machine-local failures. The kernel records them as faults
/// and halts the offending machine; the rest of the run proceeds.
#[derive(Debug, Clone, thiserror::Error)]
pub enum MachineError {
    #[error("unexpected {tag} at {port} in phase {phase}")]
    ProtocolState { port: String, tag: &'static str, phase: String },
    #[error("state validation failed: {0}")]
    StateValidation(String),
    #[error("round budget of {0} exhausted")]
    RoundBudget(usize),
    #[error("{0}")]
    Other(String),
}

/// One protocol machine. Wiring names and declared ports live in
/// [`MachineSpec`]; the instance only reacts to deliveries.
pub trait Machine {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError>;
}

/// Instantiable description of a machine: its wiring name, declared ports
/// and a factory producing a fresh instance per run.
#[derive(Clone)]
pub struct MachineSpec {
    name: String,
    ports: Vec<String>,
    factory: Arc<dyn Fn() -> Box<dyn Machine> + Send + Sync>,
}

impl MachineSpec {
    pub fn new<M, F>(name: impl Into<String>, ports: Vec<String>, factory: F) -> Self
    where
        M: Machine + 'static,
        F: Fn() -> M + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            ports,
            factory: Arc::new(move || Box::new(factory())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ports(&self) -> &[String] {
        &self.ports
    }

    pub(crate) fn instantiate(&self) -> Box<dyn Machine> {
        (self.factory)()
    }
}

impl std::fmt::Debug for MachineSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MachineSpec")
            .field("name", &self.name)
            .field("ports", &self.ports)
            .finish()
    }
}

/// One recorded draw on the enumeration tape: which branch was taken and
/// the weights the drawing site presented.
#[derive(Clone, Debug)]
pub(crate) struct Choice {
    pub index: usize,
    pub weights: Vec<f64>,
}

impl Choice {
    pub fn probability(&self) -> f64 {
        self.weights[self.index]
    }

    /// Next enumerable branch after `index`, skipping negligible ones.
    pub fn next_branch(&self) -> Option<usize> {
        self.weights
            .iter()
            .enumerate()
            .skip(self.index + 1)
            .find(|(_, &w)| w > NEGLIGIBLE_BRANCH)
            .map(|(i, _)| i)
    }

    fn effective_arity(&self) -> usize {
        self.weights.iter().filter(|&&w| w > NEGLIGIBLE_BRANCH).count()
    }
}

/// Randomness for one run. Seeded mode gives every machine its own stream,
/// derived from the run seed and the machine name alone, so adding machines
/// never perturbs the draws of existing ones. Enumerate mode replays a
/// forced prefix of choices and records fresh ones, letting the driver walk
/// the entire (weighted) choice tree.
pub(crate) enum RunRand {
    Seeded { seed: u64, streams: BTreeMap<String, ChaCha8Rng> },
    Enumerate { tape: Vec<Choice>, cursor: usize, used_bits: f64, budget_bits: f64 },
}

fn stream_for(seed: u64, name: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"mevsim.stream.v1");
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Derive an independent sub-seed, e.g. one per Monte-Carlo trial. Stable
/// across platforms and worker counts.
pub fn derive_seed(seed: u64, domain: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(b"mevsim.subseed.v1");
    h.update(seed.to_le_bytes());
    h.update(domain.as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

impl RunRand {
    pub fn seeded(seed: u64) -> Self {
        Self::Seeded { seed, streams: BTreeMap::new() }
    }

    pub fn enumerate(prefix: Vec<Choice>, budget_bits: f64) -> Self {
        Self::Enumerate { tape: prefix, cursor: 0, used_bits: 0.0, budget_bits }
    }

    fn choose(&mut self, actor: &str, weights: &[f64]) -> Result<usize, MachineError> {
        for &w in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(MachineError::Other(format!("invalid choice weight {w}")));
            }
        }
        match self {
            Self::Seeded { seed, streams } => {
                let rng = streams
                    .entry(actor.to_string())
                    .or_insert_with(|| stream_for(*seed, actor));
                let u: f64 = rng.random();
                index_from_uniform(weights, u)
                    .map_err(|e| MachineError::Other(format!("bad choice weights: {e}")))
            }
            Self::Enumerate { tape, cursor, used_bits, budget_bits } => {
                if *cursor < tape.len() {
                    let choice = &tape[*cursor];
                    if choice.weights.len() != weights.len() {
                        return Err(MachineError::Other(
                            "nondeterministic replay: choice arity changed".to_string(),
                        ));
                    }
                    let index = choice.index;
                    *cursor += 1;
                    Ok(index)
                } else {
                    let choice = Choice {
                        index: weights
                            .iter()
                            .position(|&w| w > NEGLIGIBLE_BRANCH)
                            .ok_or_else(|| {
                                MachineError::Other("all-zero choice weights".to_string())
                            })?,
                        weights: weights.to_vec(),
                    };
                    *used_bits += (choice.effective_arity() as f64).log2();
                    if *used_bits > *budget_bits {
                        return Err(MachineError::Other(format!(
                            "randomness budget of {budget_bits} bits exhausted"
                        )));
                    }
                    let index = choice.index;
                    tape.push(choice);
                    *cursor += 1;
                    Ok(index)
                }
            }
        }
    }

    pub(crate) fn budget_exhausted(&self) -> bool {
        matches!(self, Self::Enumerate { used_bits, budget_bits, .. } if used_bits > budget_bits)
    }

    pub(crate) fn into_tape(self) -> Vec<Choice> {
        match self {
            Self::Enumerate { tape, .. } => tape,
            Self::Seeded { .. } => Vec::new(),
        }
    }
}

/// Per-delivery context handed to machines and distinguishers: the actor's
/// randomness and the run's quantum storage.
pub struct StepCtx<'a> {
    pub(crate) actor: &'a str,
    pub(crate) rand: &'a mut RunRand,
    pub(crate) registers: &'a mut RegisterTable,
    /// Set when a kernel-level invariant (linearity, randomness budget)
    /// breaks; the run aborts even if the machine swallows the error.
    pub(crate) fatal: Option<String>,
}

impl<'a> StepCtx<'a> {
    pub(crate) fn new(
        actor: &'a str,
        rand: &'a mut RunRand,
        registers: &'a mut RegisterTable,
    ) -> Self {
        Self { actor, rand, registers, fatal: None }
    }

    /// Draw an index with the given outcome weights (weights must sum to 1
    /// within the shared distribution tolerance).
    pub fn rand_choice(&mut self, weights: &[f64]) -> Result<usize, MachineError> {
        let r = self.rand.choose(self.actor, weights);
        if self.rand.budget_exhausted() {
            self.fatal = Some("randomness space too large for exact enumeration".to_string());
        }
        r
    }

    pub fn rand_bit(&mut self) -> Result<u8, MachineError> {
        Ok(self.rand_choice(&[0.5, 0.5])? as u8)
    }

    /// Uniform index in `0..n`.
    pub fn rand_index(&mut self, n: usize) -> Result<usize, MachineError> {
        if n == 0 {
            return Err(MachineError::Other("rand_index over empty range".to_string()));
        }
        self.rand_choice(&vec![1.0 / n as f64; n])
    }

    /// Uniform even-parity bit string: `len - 1` free bits, last bit fixes
    /// the parity.
    pub fn rand_even_parity_bits(&mut self, len: usize) -> Result<BitString, MachineError> {
        let mut bits = Vec::with_capacity(len);
        for _ in 0..len.saturating_sub(1) {
            bits.push(self.rand_bit()?);
        }
        let parity = bits.iter().fold(0u8, |a, &b| a ^ b);
        bits.push(parity);
        BitString::new(bits).map_err(|e| MachineError::Other(e.to_string()))
    }

    /// Uniform bit string of the given length.
    pub fn rand_bits(&mut self, len: usize) -> Result<BitString, MachineError> {
        let mut bits = Vec::with_capacity(len);
        for _ in 0..len {
            bits.push(self.rand_bit()?);
        }
        BitString::new(bits).map_err(|e| MachineError::Other(e.to_string()))
    }

    fn register_fatal(&mut self, e: RegisterError) -> MachineError {
        let msg = e.to_string();
        self.fatal = Some(msg.clone());
        MachineError::Other(msg)
    }

    /// Put an n-qubit state into the run's register table; the caller holds
    /// the returned handles.
    pub fn alloc_register(&mut self, state: &QuantumState) -> Vec<QubitHandle> {
        self.registers.alloc(state, self.actor)
    }

    pub fn apply_gate(&mut self, handle: QubitHandle, gate: LocalGate) -> Result<(), MachineError> {
        self.registers
            .apply_gate(handle, gate, self.actor)
            .map_err(|e| self.register_fatal(e))
    }

    /// Measure a held qubit in the computational basis, drawing from the
    /// actor's randomness stream.
    pub fn measure_qubit(&mut self, handle: QubitHandle) -> Result<u8, MachineError> {
        let probs = self
            .registers
            .measure_probabilities(handle, self.actor)
            .map_err(|e| self.register_fatal(e))?;
        let outcome = self.rand_choice(&probs)? as u8;
        self.registers
            .collapse(handle, outcome, self.actor)
            .map_err(|e| self.register_fatal(e))?;
        Ok(outcome)
    }
}
