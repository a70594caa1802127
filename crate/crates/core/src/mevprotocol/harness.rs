//! Trial harness: passive drivers, boundary-transcript extraction, and
//! single-trial runners for Monte Carlo batches. One trial = one seeded
//! run of a self-driven world; callers derive per-trial seeds and loop (or
//! parallelize — everything here is `Send + Sync`).

use crate::acframework::{
    run, AcError, DistAction, Distinguisher, DistinguisherSpec, MachineError, Message, RunOutput,
    StepCtx, Transcript, Wiring,
};

use super::ProtocolError;

/// What one round of the one-round protocol produced at the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundOutcome {
    /// Coin 0: every party handed its qubit to the environment.
    Used,
    /// Coin 1: every party reported this verdict bit.
    Verdict(u8),
    /// No party produced output (a machine faulted mid-round).
    Silent,
}

/// One round's boundary record plus any recorded machine faults.
#[derive(Clone, Debug)]
pub struct RoundRecord {
    pub outcome: RoundOutcome,
    pub faults: Vec<String>,
    /// Content fingerprint of the full boundary transcript.
    pub transcript_digest: u64,
}

/// Terminal state of one multi-round trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MultiRoundOutcome {
    /// A state was delivered after this many rounds.
    Shared { rounds: usize },
    /// A tested round rejected after this many rounds.
    Aborted { rounds: usize },
    /// The round budget ran out with neither delivery nor abort.
    BudgetExhausted { rounds: usize },
}

impl MultiRoundOutcome {
    pub fn rounds(&self) -> usize {
        match *self {
            Self::Shared { rounds } | Self::Aborted { rounds } | Self::BudgetExhausted { rounds } => {
                rounds
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Shared { .. } => "shared",
            Self::Aborted { .. } => "aborted",
            Self::BudgetExhausted { .. } => "budget",
        }
    }
}

struct StartAllDriver {
    n: usize,
}

impl Distinguisher for StartAllDriver {
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

/// Passive driver: starts all `n` parties, then only watches.
pub fn start_all_driver(n: usize) -> DistinguisherSpec {
    DistinguisherSpec::new("start-all", move || StartAllDriver { n })
}

/// Reads one round's outcome off a boundary transcript, insisting that
/// all `n` party ports agree on it.
pub fn extract_round(transcript: &Transcript, n: usize) -> Result<RoundOutcome, ProtocolError> {
    let mut outcome: Option<RoundOutcome> = None;
    for i in 1..=n {
        let events = transcript.outputs_at(&format!("party.{i}"));
        let this = match events.as_slice() {
            [] => RoundOutcome::Silent,
            [Message::Qubit(_)] => RoundOutcome::Used,
            [Message::Bit(b)] => RoundOutcome::Verdict(*b),
            other => {
                return Err(ProtocolError::Extraction(format!(
                    "party.{i} produced {} events in a single round",
                    other.len()
                )))
            }
        };
        match outcome {
            None => outcome = Some(this),
            Some(prev) if prev == this => {}
            Some(prev) => {
                return Err(ProtocolError::Extraction(format!(
                    "parties disagree: party.{i} says {this:?}, earlier ports said {prev:?}"
                )))
            }
        }
    }
    Ok(outcome.unwrap_or(RoundOutcome::Silent))
}

/// Runs one round of a self-driven world (a `*_with_source` or honest
/// wiring whose only exports are the party ports) under the given seed.
pub fn run_round_trial(world: &Wiring, n: usize, seed: u64) -> Result<RoundRecord, AcError> {
    let out = run(world, &start_all_driver(n), seed)?;
    let outcome = extract_round(&out.transcript, n)
        .map_err(|e| AcError::Distinguisher(e.to_string()))?;
    Ok(RoundRecord {
        outcome,
        faults: out.faults.iter().map(|f| format!("{}: {}", f.machine, f.error)).collect(),
        transcript_digest: out.transcript.digest(),
    })
}

fn classify_multiround(out: &RunOutput, n: usize) -> Result<MultiRoundOutcome, AcError> {
    // The scripted source's meter port reports the query count; the last
    // reading is the number of rounds that started.
    let rounds = out
        .transcript
        .outputs_at("rounds")
        .iter()
        .filter_map(|m| match m {
            Message::PartyId(k) => Some(*k),
            _ => None,
        })
        .last()
        .unwrap_or(0);
    if rounds == 0 {
        return Err(AcError::Distinguisher(
            "multi-round trial never queried the source".to_string(),
        ));
    }
    let first_party = out.transcript.outputs_at(&format!("party.{}", 1));
    match first_party.first() {
        Some(Message::Qubit(_)) => Ok(MultiRoundOutcome::Shared { rounds }),
        Some(Message::Abort) => Ok(MultiRoundOutcome::Aborted { rounds }),
        None if out
            .faults
            .iter()
            .any(|f| matches!(f.error, MachineError::RoundBudget(_))) =>
        {
            Ok(MultiRoundOutcome::BudgetExhausted { rounds })
        }
        other => Err(AcError::Distinguisher(format!(
            "multi-round trial ended unclassifiably: first party event {other:?}, faults {:?}",
            out.faults
        ))),
    }
    .and_then(|outcome| {
        // Every party port must tell the same story.
        for i in 2..=n {
            let events = out.transcript.outputs_at(&format!("party.{i}"));
            let agrees = match outcome {
                MultiRoundOutcome::Shared { .. } => {
                    matches!(events.first(), Some(Message::Qubit(_)))
                }
                MultiRoundOutcome::Aborted { .. } => {
                    matches!(events.first(), Some(Message::Abort))
                }
                MultiRoundOutcome::BudgetExhausted { .. } => events.is_empty(),
            };
            if !agrees {
                return Err(AcError::Distinguisher(format!(
                    "party.{i} disagrees with the {} outcome",
                    outcome.label()
                )));
            }
        }
        Ok(outcome)
    })
}

/// Runs one multi-round trial of a world built by
/// [`super::worlds::multiround_with_source`] under the given seed.
pub fn run_multiround_trial(
    world: &Wiring,
    n: usize,
    seed: u64,
) -> Result<MultiRoundOutcome, AcError> {
    let out = run(world, &start_all_driver(n), seed)?;
    classify_multiround(&out, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acframework::derive_seed;
    use crate::mevprotocol::{worlds, CoinMode, SourceBehavior};
    use crate::qstate::{BitString, PureState, QuantumState};
    use std::sync::Arc;

    #[test]
    fn honest_round_trials_never_reject() {
        let w = worlds::concrete_with_source(3, 0.5, CoinMode::Random, SourceBehavior::Honest)
            .unwrap();
        let mut used = 0;
        for t in 0..200 {
            let rec = run_round_trial(&w, 3, derive_seed(42, "harness.honest", t)).unwrap();
            assert!(rec.faults.is_empty(), "trial {t}: {:?}", rec.faults);
            match rec.outcome {
                RoundOutcome::Used => used += 1,
                RoundOutcome::Verdict(0) => {}
                other => panic!("trial {t}: unexpected outcome {other:?}"),
            }
        }
        assert!(used > 50 && used < 150, "coin badly skewed: {used}/200 used");
    }

    #[test]
    fn multiround_honest_trials_share_or_exhaust() {
        let w =
            worlds::multiround_with_source(3, 0.5, 12, SourceBehavior::Honest).unwrap();
        let mut rounds_total = 0usize;
        let trials = 300;
        for t in 0..trials {
            let outcome =
                run_multiround_trial(&w, 3, derive_seed(7, "harness.multi", t)).unwrap();
            match outcome {
                MultiRoundOutcome::Shared { rounds } => {
                    assert!((1..=12).contains(&rounds));
                    rounds_total += rounds;
                }
                MultiRoundOutcome::BudgetExhausted { rounds } => assert_eq!(rounds, 12),
                MultiRoundOutcome::Aborted { .. } => {
                    panic!("honest multi-round trial aborted")
                }
            }
        }
        // Geometric with p = 1/2: mean 2; 300 trials stay within a lax band.
        let mean = rounds_total as f64 / trials as f64;
        assert!((1.5..=2.5).contains(&mean), "mean rounds {mean}");
    }

    #[test]
    fn multiround_tau_one_trials_match_absorption_odds() {
        // tau = 1 source: absorption probability p / (p + (1-p)/2).
        let state = Arc::new(QuantumState::Pure(
            PureState::basis(&BitString::new(vec![1, 0, 0]).unwrap()).unwrap(),
        ));
        let w = worlds::multiround_with_source(3, 0.25, 64, SourceBehavior::Fixed(state))
            .unwrap();
        let mut shared = 0;
        let trials = 400;
        for t in 0..trials {
            match run_multiround_trial(&w, 3, derive_seed(13, "harness.tau1", t)).unwrap() {
                MultiRoundOutcome::Shared { .. } => shared += 1,
                MultiRoundOutcome::Aborted { .. } | MultiRoundOutcome::BudgetExhausted { .. } => {}
            }
        }
        let expect = 0.25 / (0.25 + 0.75 * 0.5);
        let got = shared as f64 / trials as f64;
        assert!((got - expect).abs() < 0.08, "share rate {got}, expected ~{expect}");
    }

    #[test]
    fn extraction_rejects_disagreeing_ports() {
        // Build a transcript by hand: two party ports with different bits.
        use crate::acframework::Direction;
        let mut t = Transcript::default();
        t.record("party.1", Direction::Out, &Message::Bit(0));
        t.record("party.2", Direction::Out, &Message::Bit(1));
        assert!(extract_round(&t, 2).is_err());
    }
}
