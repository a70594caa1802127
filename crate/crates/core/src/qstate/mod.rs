//! Dense n-qubit states and the handful of linear-algebra operations the
//! verification protocol needs.
//!
//! Conventions used throughout:
//!
//! * Basis-state indices are big-endian: qubit 1 is the most significant bit,
//!   so `|x1 x2 .. xn>` has index `x1*2^(n-1) + .. + xn`.
//! * Pure states support up to [`PURE_QUBIT_CAP`] qubits, density matrices up
//!   to [`DENSITY_QUBIT_CAP`].
//! * All validation tolerances are fixed constants, not caller-tunable.

mod bits;
mod format;
mod jacobi;
mod state;

pub use bits::BitString;
pub use jacobi::{hermitian_eigenvalues_doubled, symmetric_eigenvalues};
/// Re-exported so callers can build amplitude vectors without naming the
/// numerics crate themselves.
pub use num_complex::Complex64;
pub use state::{
    index_from_uniform, pure_trace_distance, sample_outcome, trace_distance, DensityMatrix,
    LocalGate, PureState, QuantumState, DENSITY_QUBIT_CAP, PURE_QUBIT_CAP,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QStateError {
    #[error("qubit count {got} outside supported range 1..={cap}")]
    QubitCountOutOfRange { got: usize, cap: usize },
    #[error("data has length {got}, expected {want}")]
    BadDataLength { got: usize, want: usize },
    #[error("non-finite entry at flat index {0}")]
    NonFinite(usize),
    #[error("state vector norm^2 is {0}, expected 1")]
    NotNormalized(f64),
    #[error("matrix not Hermitian: deviation {dev:.3e} at ({row},{col})")]
    NotHermitian { row: usize, col: usize, dev: f64 },
    #[error("trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("matrix has eigenvalue {0:.3e} below the positivity tolerance")]
    NotPositive(f64),
    #[error("bit value {0} is not 0 or 1")]
    BadBit(u8),
    #[error("bit string has length {got}, expected {want}")]
    BadBitLength { got: usize, want: usize },
    #[error("probability {0:.3e} at index {1} is negative")]
    NegativeProbability(f64, usize),
    #[error("probabilities sum to {0}, outside the renormalization tolerance")]
    BadDistribution(f64),
    #[error("empty distribution")]
    EmptyDistribution,
    #[error("qubit position {got} outside 1..={n}")]
    BadQubitPosition { got: usize, n: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("cannot collapse onto outcome of probability {0:.3e}")]
    ImpossibleOutcome(f64),
    #[error("depolarizing weight {0} outside [0, 1]")]
    BadMixingWeight(f64),
    #[error("unknown state kind {0:?} (expected \"pure\" or \"density\")")]
    BadStateKind(String),
    #[error("malformed state document: {0}")]
    BadStateDocument(String),
}
