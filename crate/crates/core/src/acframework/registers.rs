//! Run-owned quantum storage. Qubits never cross wires as amplitudes: a
//! message carries a [`QubitHandle`] into this table, and the joint state of
//! each allocated register lives here. The table enforces linearity — a
//! handle is held by exactly one actor, transfers exactly once per send, and
//! is gone once measured.

use crate::qstate::{DensityMatrix, LocalGate, PureState, QStateError, QuantumState};

use super::message::QubitHandle;

/// Holder name used for qubits owned by the environment/distinguisher.
pub const ENV_ACTOR: &str = "__env";

#[derive(Debug, Clone, PartialEq)]
enum Ownership {
    Held(String),
    /// Sitting in the message queue between send and delivery.
    InFlight,
    Measured,
}

#[derive(Debug)]
struct QubitSlot {
    register: usize,
    /// 1-based qubit position inside its register.
    position: usize,
    ownership: Ownership,
}

#[derive(Debug, Clone)]
enum RegisterState {
    Pure(PureState),
    Density(DensityMatrix),
}

impl RegisterState {
    fn measure_probabilities(&self, position: usize) -> Result<[f64; 2], QStateError> {
        match self {
            Self::Pure(p) => p.measure_probabilities(position),
            Self::Density(d) => d.measure_probabilities(position),
        }
    }

    fn collapse(&mut self, position: usize, outcome: u8) -> Result<(), QStateError> {
        match self {
            Self::Pure(p) => p.collapse(position, outcome),
            Self::Density(d) => d.collapse(position, outcome),
        }
    }

    fn apply_gate(&mut self, gate: LocalGate, position: usize) -> Result<(), QStateError> {
        match self {
            Self::Pure(p) => p.apply_gate(gate, position),
            Self::Density(d) => d.apply_gate(gate, position),
        }
    }
}

/// Linearity violations and other misuse of quantum storage. These abort the
/// whole run: a world in which a qubit is cloned is not one the framework
/// models.
#[derive(Debug, thiserror::Error)]
pub enum RegisterError {
    #[error("unknown qubit handle {0}")]
    UnknownHandle(QubitHandle),
    #[error("{actor} does not hold {handle} (held by {holder})")]
    NotHolder { handle: QubitHandle, actor: String, holder: String },
    #[error("{0} was already measured")]
    AlreadyMeasured(QubitHandle),
    #[error("{0} delivered while not in flight")]
    NotInFlight(QubitHandle),
    #[error(transparent)]
    State(#[from] QStateError),
}

#[derive(Debug, Default)]
pub struct RegisterTable {
    registers: Vec<RegisterState>,
    qubits: Vec<QubitSlot>,
}

impl RegisterTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register an n-qubit state and hand all of its qubit handles to
    /// `owner`. Handle numbering is allocation-ordered, so identically
    /// scheduled worlds allocate identical handles.
    pub fn alloc(&mut self, state: &QuantumState, owner: &str) -> Vec<QubitHandle> {
        let n = state.num_qubits();
        let register = self.registers.len();
        self.registers.push(match state {
            QuantumState::Pure(p) => RegisterState::Pure(p.clone()),
            QuantumState::Density(d) => RegisterState::Density(d.clone()),
        });
        (1..=n)
            .map(|position| {
                let handle = QubitHandle(self.qubits.len());
                self.qubits.push(QubitSlot {
                    register,
                    position,
                    ownership: Ownership::Held(owner.to_string()),
                });
                handle
            })
            .collect()
    }

    fn slot(&self, handle: QubitHandle) -> Result<&QubitSlot, RegisterError> {
        self.qubits.get(handle.0).ok_or(RegisterError::UnknownHandle(handle))
    }

    fn held_slot(&self, handle: QubitHandle, actor: &str) -> Result<&QubitSlot, RegisterError> {
        let slot = self.slot(handle)?;
        match &slot.ownership {
            Ownership::Held(h) if h == actor => Ok(slot),
            Ownership::Measured => Err(RegisterError::AlreadyMeasured(handle)),
            Ownership::Held(h) => Err(RegisterError::NotHolder {
                handle,
                actor: actor.to_string(),
                holder: h.clone(),
            }),
            Ownership::InFlight => Err(RegisterError::NotHolder {
                handle,
                actor: actor.to_string(),
                holder: "<in flight>".to_string(),
            }),
        }
    }

    /// Called by the kernel when `actor` emits a message carrying `handle`.
    pub(crate) fn begin_send(&mut self, handle: QubitHandle, actor: &str) -> Result<(), RegisterError> {
        self.held_slot(handle, actor)?;
        self.qubits[handle.0].ownership = Ownership::InFlight;
        Ok(())
    }

    /// Called by the kernel when a queued qubit message reaches `recipient`.
    pub(crate) fn deliver(&mut self, handle: QubitHandle, recipient: &str) -> Result<(), RegisterError> {
        let slot = self.slot(handle)?;
        if slot.ownership != Ownership::InFlight {
            return Err(RegisterError::NotInFlight(handle));
        }
        self.qubits[handle.0].ownership = Ownership::Held(recipient.to_string());
        Ok(())
    }

    pub fn apply_gate(
        &mut self,
        handle: QubitHandle,
        gate: LocalGate,
        actor: &str,
    ) -> Result<(), RegisterError> {
        let (register, position) = {
            let slot = self.held_slot(handle, actor)?;
            (slot.register, slot.position)
        };
        self.registers[register].apply_gate(gate, position)?;
        Ok(())
    }

    /// Probabilities of the two outcomes for the qubit behind `handle`.
    /// The caller draws the outcome from its own randomness stream and then
    /// collapses via [`RegisterTable::collapse`].
    pub fn measure_probabilities(
        &self,
        handle: QubitHandle,
        actor: &str,
    ) -> Result<[f64; 2], RegisterError> {
        let slot = self.held_slot(handle, actor)?;
        Ok(self.registers[slot.register].measure_probabilities(slot.position)?)
    }

    /// Project the qubit onto `outcome` and retire the handle.
    pub fn collapse(
        &mut self,
        handle: QubitHandle,
        outcome: u8,
        actor: &str,
    ) -> Result<(), RegisterError> {
        let (register, position) = {
            let slot = self.held_slot(handle, actor)?;
            (slot.register, slot.position)
        };
        self.registers[register].collapse(position, outcome)?;
        self.qubits[handle.0].ownership = Ownership::Measured;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::BitString;

    fn ghz3() -> QuantumState {
        QuantumState::Pure(PureState::ghz(3).unwrap())
    }

    #[test]
    fn alloc_numbers_handles_in_order() {
        let mut t = RegisterTable::new();
        let a = t.alloc(&ghz3(), "m");
        let b = t.alloc(&ghz3(), "m");
        assert_eq!(a, vec![QubitHandle(0), QubitHandle(1), QubitHandle(2)]);
        assert_eq!(b[0], QubitHandle(3));
    }

    #[test]
    fn send_requires_holding_and_delivery_transfers() {
        let mut t = RegisterTable::new();
        let hs = t.alloc(&ghz3(), "alice");
        assert!(t.begin_send(hs[0], "bob").is_err());
        t.begin_send(hs[0], "alice").unwrap();
        // Double send of an in-flight handle is a linearity violation.
        assert!(t.begin_send(hs[0], "alice").is_err());
        t.deliver(hs[0], "bob").unwrap();
        assert!(t.begin_send(hs[0], "alice").is_err());
        t.begin_send(hs[0], "bob").unwrap();
    }

    #[test]
    fn measurement_retires_the_handle() {
        let mut t = RegisterTable::new();
        let hs = t.alloc(&ghz3(), "m");
        let probs = t.measure_probabilities(hs[0], "m").unwrap();
        assert!((probs[0] - 0.5).abs() < 1e-12);
        t.collapse(hs[0], 0, "m").unwrap();
        assert!(matches!(
            t.collapse(hs[0], 0, "m"),
            Err(RegisterError::AlreadyMeasured(_))
        ));
        assert!(t.begin_send(hs[0], "m").is_err());
        // GHZ correlations: after qubit 1 collapses to 0, the rest follow.
        let probs = t.measure_probabilities(hs[1], "m").unwrap();
        assert!((probs[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gates_act_on_the_shared_register() {
        let mut t = RegisterTable::new();
        let st = QuantumState::Pure(PureState::basis(&BitString::zeros(1)).unwrap());
        let hs = t.alloc(&st, "m");
        t.apply_gate(hs[0], LocalGate::Hadamard, "m").unwrap();
        let probs = t.measure_probabilities(hs[0], "m").unwrap();
        assert!((probs[1] - 0.5).abs() < 1e-12);
    }
}
