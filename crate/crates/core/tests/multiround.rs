//! Multi-round behavior against the closed-form absorption law: a source
//! that serves the same state every round shares before any test rejects
//! with probability p / (p + (1 - p) r), where r = tau^2 / 2 is the
//! per-test rejection rate. The identity conditions on the run deciding
//! (sharing or aborting), so it holds at any round budget.

use std::sync::Arc;

use mevsim::acframework::derive_seed;
use mevsim::analysis::{binomial_sigma, multiround_absorption};
use mevsim::mevprotocol::{
    multiround_with_source, run_multiround_trial, MultiRoundOutcome, SourceBehavior,
};
use mevsim::qstate::{BitString, DensityMatrix, PureState, QuantumState};

struct Tally {
    shared: u64,
    aborted: u64,
    budget: u64,
}

fn run_trials(world_p: f64, behavior: SourceBehavior, max_rounds: usize, trials: u64) -> Tally {
    let world = multiround_with_source(3, world_p, max_rounds, behavior).unwrap();
    let mut tally = Tally { shared: 0, aborted: 0, budget: 0 };
    for t in 0..trials {
        let seed = derive_seed(0xa11ce, "multiround.itest", t);
        match run_multiround_trial(&world, 3, seed).unwrap() {
            MultiRoundOutcome::Shared { .. } => tally.shared += 1,
            MultiRoundOutcome::Aborted { .. } => tally.aborted += 1,
            MultiRoundOutcome::BudgetExhausted { .. } => tally.budget += 1,
        }
    }
    assert_eq!(tally.shared + tally.aborted + tally.budget, trials);
    tally
}

#[test]
fn share_rates_match_the_absorption_law_across_sources_and_biases() {
    let ghz = Arc::new(QuantumState::Pure(PureState::ghz(3).unwrap()));
    let zeros = Arc::new(QuantumState::Pure(PureState::basis(&BitString::zeros(3)).unwrap()));
    let flipped =
        Arc::new(QuantumState::Pure(PureState::basis(&BitString::new(vec![1, 0, 0]).unwrap()).unwrap()));
    let mixed = Arc::new(QuantumState::Density(DensityMatrix::depolarized_ghz(3, 1.0).unwrap()));

    let cases: Vec<(&str, f64, SourceBehavior, &Arc<QuantumState>)> = vec![
        ("honest", 0.3, SourceBehavior::Honest, &ghz),
        ("ghz-fixed", 0.6, SourceBehavior::Fixed(ghz.clone()), &ghz),
        ("zeros-quarter", 0.25, SourceBehavior::Fixed(zeros.clone()), &zeros),
        ("zeros-half", 0.5, SourceBehavior::Fixed(zeros.clone()), &zeros),
        ("orthogonal", 0.5, SourceBehavior::Fixed(flipped.clone()), &flipped),
        ("fully-mixed", 0.4, SourceBehavior::Fixed(mixed.clone()), &mixed),
    ];

    let trials = 400u64;
    for (label, p, behavior, state) in cases {
        let tau = state.distance_to_ghz().unwrap();
        let predicted = multiround_absorption(p, tau * tau / 2.0).unwrap();
        let tally = run_trials(p, behavior, 64, trials);
        let decided = tally.shared + tally.aborted;
        assert!(decided > 0, "{label}: no trial decided");
        let conditional = tally.shared as f64 / decided as f64;
        let gate = 4.0 * binomial_sigma(predicted, decided) + 1e-12;
        assert!(
            (conditional - predicted).abs() <= gate,
            "{label}: Pr[shared | decided] = {conditional:.4} vs predicted {predicted:.4} \
             (allowed ±{gate:.4}, {decided} decided)"
        );
    }
}

#[test]
fn one_round_budget_splits_between_sharing_and_exhaustion() {
    // With a single allowed round and an honest source, the run either
    // uses that round (sharing) or tests it, accepts, and hits the budget;
    // nothing can abort.
    let tally = run_trials(0.5, SourceBehavior::Honest, 1, 300);
    assert_eq!(tally.aborted, 0);
    assert!(tally.shared > 100 && tally.shared < 200, "shared {}", tally.shared);
    assert_eq!(tally.budget, 300 - tally.shared);
}
