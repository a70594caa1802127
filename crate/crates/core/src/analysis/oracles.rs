//! Exact oracles: everything in this file is computed by exhaustive
//! enumeration (over inputs, outcomes, or whole scheduler runs), never by
//! sampling, so the results are deterministic reference values.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::acframework::{enumerate_runs, DistinguisherSpec, Message, Transcript, Wiring};
use crate::mevprotocol::{probes, verdict, worlds, CoinMode};
use crate::qstate::{BitString, DensityMatrix, QuantumState};

use super::AnalysisError;

/// Largest register the rejection oracle will enumerate.
pub const ORACLE_QUBIT_CAP: usize = 6;
/// Largest register the full round-distribution oracle will enumerate.
pub const ROUND_ORACLE_CAP: usize = 4;

/// Randomness budget for the round-distribution enumerations; one round
/// consumes well under 20 bits even at the cap.
const ROUND_ENUM_BITS: f64 = 24.0;

/// Probability that a tested round of the one-round protocol rejects the
/// given state: the average over all even-parity inputs X of the total
/// outcome mass with odd parity relative to X.
///
/// Exact via full enumeration; capped at [`ORACLE_QUBIT_CAP`] qubits
/// (use the Monte Carlo path beyond that).
pub fn exact_rejection_probability(state: &QuantumState) -> Result<f64, AnalysisError> {
    let n = state.num_qubits();
    if n > ORACLE_QUBIT_CAP {
        return Err(AnalysisError::TooLarge { got: n, cap: ORACLE_QUBIT_CAP });
    }
    let mut total = 0.0;
    let mut inputs = 0usize;
    for x in BitString::all_even_parity(n) {
        let gated = state.apply_local_gates(&x)?;
        let dist = gated.outcome_distribution()?;
        let mut reject = 0.0;
        for (idx, pr) in dist.iter().enumerate() {
            let y = BitString::from_index(idx, n);
            let b = verdict(&x, &y)
                .map_err(|e| AnalysisError::InvalidParameter(e.to_string()))?;
            if b == 1 {
                reject += pr;
            }
        }
        total += reject;
        inputs += 1;
    }
    Ok(total / inputs as f64)
}

/// One row of the depolarized-GHZ bound table.
#[derive(Clone, Copy, Debug)]
pub struct BoundGridRow {
    pub lambda: f64,
    /// Trace distance of the depolarized state to GHZ.
    pub tau: f64,
    /// The ideal resource's rejection rate for that distance.
    pub tau2_over_2: f64,
    /// The concrete protocol's exact rejection probability.
    pub exact_reject: f64,
}

/// Evaluates both rejection oracles — the concrete protocol's exact rate
/// and the ideal resource's tau^2/2 rate — on depolarized GHZ states at
/// the given mixing weights. The concrete rate is expected to dominate;
/// the table reports both sides so the gap stays visible.
pub fn depolarized_bound_grid(n: usize, lambdas: &[f64]) -> Result<Vec<BoundGridRow>, AnalysisError> {
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let rho = DensityMatrix::depolarized_ghz(n, lambda)?;
        let state = QuantumState::Density(rho);
        let tau = state.distance_to_ghz()?;
        rows.push(BoundGridRow {
            lambda,
            tau,
            tau2_over_2: tau * tau / 2.0,
            exact_reject: exact_rejection_probability(&state)?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Exact round-transcript distribution
// ---------------------------------------------------------------------------

/// The classical tuple a watching source sees in one tested round: the
/// verifier's identity, the other parties' inputs and outcomes (ascending
/// party order, verifier excluded), and the broadcast verdict.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RoundCell {
    pub v: usize,
    pub x_others: Vec<u8>,
    pub y_others: Vec<u8>,
    pub b: u8,
}

/// Exact distribution of one round's observable classical record for a
/// fixed source state: the mass of use rounds (nothing leaks but the coin)
/// plus a map over tested-round tuples. Masses sum to 1.
#[derive(Clone, Debug)]
pub struct ExactRoundDistribution {
    pub n: usize,
    /// Probability of a use round (coin 0).
    pub used_mass: f64,
    /// Joint probability of each tested-round tuple; sums to 1 − used_mass.
    pub cells: BTreeMap<RoundCell, f64>,
}

impl ExactRoundDistribution {
    fn tested_mass(&self) -> f64 {
        self.cells.values().sum()
    }

    /// Marginal of the verifier id, conditioned on the round being tested.
    pub fn verifier_marginal(&self) -> BTreeMap<usize, f64> {
        self.conditional(|cell| cell.v)
    }

    /// Marginal of (verifier, leaked inputs), conditioned on tested.
    pub fn input_marginal(&self) -> BTreeMap<(usize, Vec<u8>), f64> {
        self.conditional(|cell| (cell.v, cell.x_others.clone()))
    }

    /// Marginal of the full input string X, conditioned on tested. The
    /// verifier's own bit never leaks, but the even-parity constraint
    /// determines it from the others.
    pub fn reconstructed_input_marginal(&self) -> BTreeMap<Vec<u8>, f64> {
        self.conditional(|cell| {
            let parity = cell.x_others.iter().fold(0u8, |a, &b| a ^ b);
            let mut x = Vec::with_capacity(self.n);
            let mut others = cell.x_others.iter();
            for j in 1..=self.n {
                if j == cell.v {
                    x.push(parity);
                } else {
                    x.push(*others.next().expect("cell has n-1 leaked inputs"));
                }
            }
            x
        })
    }

    /// Marginal of (verifier, inputs, outcomes), conditioned on tested.
    pub fn outcome_marginal(&self) -> BTreeMap<(usize, Vec<u8>, Vec<u8>), f64> {
        self.conditional(|cell| (cell.v, cell.x_others.clone(), cell.y_others.clone()))
    }

    /// Full tuple distribution including the verdict, conditioned on tested.
    pub fn full_marginal(&self) -> BTreeMap<RoundCell, f64> {
        self.conditional(Clone::clone)
    }

    fn conditional<K: Ord>(&self, key: impl Fn(&RoundCell) -> K) -> BTreeMap<K, f64> {
        let tested = self.tested_mass();
        let mut out = BTreeMap::new();
        if tested <= 0.0 {
            return out;
        }
        for (cell, mass) in &self.cells {
            *out.entry(key(cell)).or_insert(0.0) += mass / tested;
        }
        out
    }
}

/// Total-variation distances between the two worlds' round records,
/// broken down by component. The first four compare conditional
/// distributions given a tested round; `full` compares the complete
/// observable record including the use/test split.
#[derive(Clone, Copy, Debug)]
pub struct RoundComponentTv {
    /// |Pr[use round] difference|.
    pub coin: f64,
    /// Verifier-identity marginal.
    pub verifier: f64,
    /// (verifier, leaked inputs) joint.
    pub inputs: f64,
    /// (verifier, leaked inputs, leaked outcomes) joint.
    pub outcomes: f64,
    /// Everything, verdict included.
    pub full: f64,
}

/// The concrete world's and the simulated ideal world's exact round
/// distributions for the same source state, ready for comparison.
#[derive(Clone, Debug)]
pub struct RoundDistributionPair {
    pub concrete: ExactRoundDistribution,
    pub simulated: ExactRoundDistribution,
}

impl RoundDistributionPair {
    pub fn component_tv(&self) -> RoundComponentTv {
        RoundComponentTv {
            coin: (self.concrete.used_mass - self.simulated.used_mass).abs(),
            verifier: tv(&self.concrete.verifier_marginal(), &self.simulated.verifier_marginal()),
            inputs: tv(&self.concrete.input_marginal(), &self.simulated.input_marginal()),
            outcomes: tv(&self.concrete.outcome_marginal(), &self.simulated.outcome_marginal()),
            full: self.full_tv(),
        }
    }

    fn full_tv(&self) -> f64 {
        let mut acc = (self.concrete.used_mass - self.simulated.used_mass).abs();
        let keys: BTreeSet<&RoundCell> =
            self.concrete.cells.keys().chain(self.simulated.cells.keys()).collect();
        for key in keys {
            let a = self.concrete.cells.get(key).copied().unwrap_or(0.0);
            let b = self.simulated.cells.get(key).copied().unwrap_or(0.0);
            acc += (a - b).abs();
        }
        acc / 2.0
    }
}

/// Total variation between two finite distributions over the same key space.
fn tv<K: Ord>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let keys: BTreeSet<&K> = a.keys().chain(b.keys()).collect();
    keys.iter()
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
        / 2.0
}

/// Computes the exact one-round record distribution in the concrete world
/// and in the simulated ideal world for the same dishonestly-chosen state,
/// by exhaustively enumerating every scheduler run of both wirings.
///
/// Capped at [`ROUND_ORACLE_CAP`] qubits.
pub fn exact_round_distribution(
    state: &Arc<QuantumState>,
    p: f64,
    mode: CoinMode,
) -> Result<RoundDistributionPair, AnalysisError> {
    let n = state.num_qubits();
    if n > ROUND_ORACLE_CAP {
        return Err(AnalysisError::TooLarge { got: n, cap: ROUND_ORACLE_CAP });
    }
    let concrete = worlds::concrete_open_source(n, p, mode)?;
    let simulated = worlds::ideal_simulated(n, p, mode)?;
    let feeder = probes::source_probe("round-oracle-feeder", n, state, |_| 0);
    Ok(RoundDistributionPair {
        concrete: distribution_of(&concrete, &feeder, n)?,
        simulated: distribution_of(&simulated, &feeder, n)?,
    })
}

fn distribution_of(
    world: &Wiring,
    feeder: &DistinguisherSpec,
    n: usize,
) -> Result<ExactRoundDistribution, AnalysisError> {
    let runs = enumerate_runs(world, feeder, ROUND_ENUM_BITS)?;
    let mut used_mass = 0.0;
    let mut total = 0.0;
    let mut cells: BTreeMap<RoundCell, f64> = BTreeMap::new();
    for run in &runs {
        if !run.output.faults.is_empty() {
            return Err(AnalysisError::Extraction(format!(
                "enumerated run faulted: {:?}",
                run.output.faults
            )));
        }
        total += run.probability;
        match extract_cell(&run.output.transcript, n)? {
            None => used_mass += run.probability,
            Some(cell) => *cells.entry(cell).or_insert(0.0) += run.probability,
        }
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(AnalysisError::Extraction(format!(
            "enumerated masses sum to {total}, expected 1"
        )));
    }
    Ok(ExactRoundDistribution { n, used_mass, cells })
}

fn leaked_bits(t: &Transcript, port: &str) -> Result<Vec<u8>, AnalysisError> {
    t.outputs_at(port)
        .into_iter()
        .map(|m| match m {
            Message::Bit(b) => Ok(*b),
            other => Err(AnalysisError::Extraction(format!(
                "non-bit message {other} on {port}"
            ))),
        })
        .collect()
}

/// Reads one round's leaked record off a transcript: `None` for a use
/// round, the full tested-round tuple otherwise.
fn extract_cell(t: &Transcript, n: usize) -> Result<Option<RoundCell>, AnalysisError> {
    let coin = leaked_bits(t, "leak.c")?;
    match coin.as_slice() {
        [0] => return Ok(None),
        [1] => {}
        other => {
            return Err(AnalysisError::Extraction(format!(
                "expected one leaked coin bit, got {other:?}"
            )))
        }
    }
    let v = match t.outputs_at("leak.v").as_slice() {
        [Message::PartyId(v)] if (1..=n).contains(v) => *v,
        other => {
            return Err(AnalysisError::Extraction(format!(
                "expected one leaked verifier id, got {} events",
                other.len()
            )))
        }
    };
    let mut x_others = Vec::with_capacity(n - 1);
    let mut y_others = Vec::with_capacity(n - 1);
    let mut b: Option<u8> = None;
    for i in 1..=n {
        for j in (i + 1)..=n {
            let port = format!("leak.chan.{i}.{j}");
            let bits = leaked_bits(t, &port)?;
            if i != v && j != v {
                if !bits.is_empty() {
                    return Err(AnalysisError::Extraction(format!(
                        "channel {port} carried traffic in a round verified by {v}"
                    )));
                }
                continue;
            }
            match bits.as_slice() {
                &[x, y, vb] => {
                    x_others.push(x);
                    y_others.push(y);
                    if *b.get_or_insert(vb) != vb {
                        return Err(AnalysisError::Extraction(
                            "inconsistent verdict copies across channels".to_string(),
                        ));
                    }
                }
                other => {
                    return Err(AnalysisError::Extraction(format!(
                        "channel {port} carried {} bits, expected x, y, verdict",
                        other.len()
                    )))
                }
            }
        }
    }
    let b = b.ok_or_else(|| {
        AnalysisError::Extraction("tested round leaked no verdict".to_string())
    })?;
    Ok(Some(RoundCell { v, x_others, y_others, b }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::PureState;

    fn pure(bits: &[u8]) -> QuantumState {
        QuantumState::Pure(PureState::basis(&BitString::new(bits.to_vec()).unwrap()).unwrap())
    }

    #[test]
    fn ghz_is_never_rejected() {
        for n in 2..=5 {
            let ghz = QuantumState::Pure(PureState::ghz(n).unwrap());
            let r = exact_rejection_probability(&ghz).unwrap();
            assert!(r.abs() < 1e-9, "n={n}: rejection {r}");
        }
    }

    #[test]
    fn all_zeros_is_rejected_half_the_time() {
        let r = exact_rejection_probability(&pure(&[0, 0, 0])).unwrap();
        assert!((r - 0.5).abs() < 1e-9, "rejection {r}");
    }

    #[test]
    fn fully_mixed_is_rejected_half_the_time() {
        let rho = DensityMatrix::depolarized_ghz(3, 1.0).unwrap();
        let r = exact_rejection_probability(&QuantumState::Density(rho)).unwrap();
        assert!((r - 0.5).abs() < 1e-9, "rejection {r}");
    }

    #[test]
    fn oracle_refuses_large_registers() {
        let ghz = QuantumState::Pure(PureState::ghz(7).unwrap());
        assert!(matches!(
            exact_rejection_probability(&ghz),
            Err(AnalysisError::TooLarge { got: 7, cap: ORACLE_QUBIT_CAP })
        ));
    }

    #[test]
    fn depolarized_grid_respects_the_ideal_rate() {
        let lambdas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let rows = depolarized_bound_grid(3, &lambdas).unwrap();
        assert_eq!(rows.len(), 11);
        for row in &rows {
            // Closed form for the depolarized-GHZ distance.
            let expect_tau = row.lambda * (1.0 - 1.0 / 8.0);
            assert!((row.tau - expect_tau).abs() < 1e-9, "lambda {}", row.lambda);
            assert!(
                row.exact_reject >= row.tau2_over_2 - 1e-9,
                "lambda {}: exact {} vs bound {}",
                row.lambda,
                row.exact_reject,
                row.tau2_over_2
            );
        }
        // Depolarizing mixes toward uniform outcomes: exact rate is lambda/2.
        for row in &rows {
            assert!((row.exact_reject - row.lambda / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn round_distribution_components_match_across_worlds() {
        let state = Arc::new(pure(&[0, 0, 0]));
        let pair = exact_round_distribution(&state, 0.5, CoinMode::Random).unwrap();
        let tv = pair.component_tv();
        assert!(tv.coin < 1e-9, "coin tv {}", tv.coin);
        assert!(tv.verifier < 1e-9, "verifier tv {}", tv.verifier);
        assert!(tv.inputs < 1e-9, "inputs tv {}", tv.inputs);
        assert!(tv.outcomes < 1e-9, "outcomes tv {}", tv.outcomes);
        // The verdict coupling differs on this state: the concrete verdict
        // is a function of (X, Y); the ideal one is an independent draw.
        assert!(tv.full > 0.01, "full tv {}", tv.full);
    }

    #[test]
    fn round_distribution_is_fully_identical_on_ghz() {
        let state = Arc::new(QuantumState::Pure(PureState::ghz(3).unwrap()));
        let pair = exact_round_distribution(&state, 0.5, CoinMode::Random).unwrap();
        let tv = pair.component_tv();
        assert!(tv.full < 1e-9, "full tv {}", tv.full);
    }

    #[test]
    fn round_marginals_match_their_closed_forms() {
        let state = Arc::new(pure(&[0, 0, 0]));
        let pair = exact_round_distribution(&state, 0.25, CoinMode::Random).unwrap();
        for dist in [&pair.concrete, &pair.simulated] {
            assert!((dist.used_mass - 0.25).abs() < 1e-9);
            let v = dist.verifier_marginal();
            assert_eq!(v.len(), 3);
            for (&id, &mass) in &v {
                assert!((mass - 1.0 / 3.0).abs() < 1e-12, "v={id} mass {mass}");
            }
            let xs = dist.reconstructed_input_marginal();
            assert_eq!(xs.len(), 4, "even-parity inputs on 3 bits");
            for (x, &mass) in &xs {
                assert_eq!(x.iter().fold(0u8, |a, &b| a ^ b), 0, "odd-parity X {x:?}");
                assert!((mass - 0.25).abs() < 1e-12);
            }
        }
    }
}
