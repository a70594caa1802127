//! Exact brute-force oracles and statistical machinery.
//!
//! Everything here exists to give the Monte Carlo side of the toolkit an
//! enumerated ground truth at small `n`: closed-form rejection
//! probabilities, exhaustive round-transcript distributions for the
//! concrete-vs-simulated comparison, the multi-round absorption formula,
//! and the parameter bounds used to pick the test/use coin bias. The
//! reporting convention is that every statistical comparison carries its
//! exact counterpart when one is computable.

pub mod oracles;
pub mod report;
pub mod stats;

pub use oracles::{
    depolarized_bound_grid, exact_rejection_probability, exact_round_distribution, BoundGridRow,
    ExactRoundDistribution, RoundCell, RoundComponentTv, RoundDistributionPair, ORACLE_QUBIT_CAP,
    ROUND_ORACLE_CAP,
};
pub use report::{bound_grid_csv, summary_csv, SummaryRow, SUMMARY_HEADER};
pub use stats::{
    binomial_ci95, binomial_sigma, dishonest_test_bound, multiround_absorption,
    usage_failure_bound, DishonestBound, SecurityParams,
};

use thiserror::Error;

use crate::acframework::AcError;
use crate::qstate::QStateError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("exact oracle supports at most {cap} qubits, got {got}")]
    TooLarge { got: usize, cap: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    State(#[from] QStateError),
    #[error(transparent)]
    Framework(#[from] AcError),
    #[error("enumeration produced an inconsistent record: {0}")]
    Extraction(String),
}
