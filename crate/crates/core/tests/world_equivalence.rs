//! End-to-end indistinguishability statements, driven purely through the
//! public API: the honest pair is exactly indistinguishable, the simulated
//! open pair matches the concrete one on every component the simulator
//! promises, and the repeated resource behind its filter is exactly the
//! filtered sharing resource.

use std::sync::Arc;

use mevsim::acframework::{
    advantage_exact_over, transcript_distribution, transcript_tv, DistAction, Distinguisher,
    DistinguisherSpec, MachineError, Message, StepCtx,
};
use mevsim::analysis::exact_round_distribution;
use mevsim::mevprotocol::{
    honest_pair, multiround_filtered_pair, multiround_open_pair, multiround_probes, round_probes,
    CoinMode,
};
use mevsim::qstate::{BitString, DensityMatrix, PureState, QuantumState};

#[test]
fn honest_pair_has_zero_advantage_for_three_and_four_parties() {
    for n in [3, 4] {
        let (real, ideal) = honest_pair(n, 0.5, CoinMode::Random).unwrap();
        for (name, adv) in advantage_exact_over(&real, &ideal, &round_probes(n)).unwrap() {
            assert!(adv.abs() < 1e-9, "n={n}: probe {name} achieved advantage {adv}");
        }
    }
}

#[test]
fn simulated_leaks_match_concrete_on_every_promised_component() {
    let states: Vec<(&str, Arc<QuantumState>)> = vec![
        ("ghz", Arc::new(QuantumState::Pure(PureState::ghz(3).unwrap()))),
        (
            "zeros",
            Arc::new(QuantumState::Pure(PureState::basis(&BitString::zeros(3)).unwrap())),
        ),
        (
            "depolarized",
            Arc::new(QuantumState::Density(DensityMatrix::depolarized_ghz(3, 0.5).unwrap())),
        ),
    ];
    for (label, state) in &states {
        let pair = exact_round_distribution(state, 0.5, CoinMode::Random).unwrap();
        let tv = pair.component_tv();
        for (component, value) in [
            ("coin", tv.coin),
            ("verifier", tv.verifier),
            ("inputs", tv.inputs),
            ("outcomes", tv.outcomes),
        ] {
            assert!(value <= 1e-9, "{label}: component {component} drifted by {value}");
        }
    }
}

#[test]
fn ghz_full_round_distribution_is_exactly_simulated() {
    let ghz = Arc::new(QuantumState::Pure(PureState::ghz(3).unwrap()));
    let pair = exact_round_distribution(&ghz, 0.5, CoinMode::Random).unwrap();
    assert!(pair.component_tv().full <= 1e-9);
}

#[test]
fn filtered_multiround_pair_has_identical_transcript_distributions() {
    let (real, ideal) = multiround_filtered_pair(3, 0.5, 4).unwrap();
    let driver = &multiround_probes(3)[0];
    let da = transcript_distribution(&real, driver, 24.0).unwrap();
    let db = transcript_distribution(&ideal, driver, 24.0).unwrap();
    let mass: f64 = da.values().sum();
    assert!((mass - 1.0).abs() < 1e-9, "real-world mass {mass}");
    assert!(da.len() > 1, "expected round-count variation at the boundary");
    assert!(transcript_tv(&da, &db) < 1e-12);
}

/// Starts every party, then answers each query on the open source port
/// with a fresh copy of one fixed state.
struct SourceFeeder {
    n: usize,
    state: Arc<QuantumState>,
}

impl Distinguisher for SourceFeeder {
    fn begin(&mut self, _ctx: &mut StepCtx<'_>) -> Result<Vec<(String, Message)>, MachineError> {
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

#[test]
fn open_multiround_dialogue_is_exactly_simulated_for_ghz() {
    let (real, ideal) = multiround_open_pair(3, 0.5, 3).unwrap();
    let ghz = Arc::new(QuantumState::Pure(PureState::ghz(3).unwrap()));
    let driver =
        DistinguisherSpec::new("ghz-feeder", move || SourceFeeder { n: 3, state: ghz.clone() });
    let da = transcript_distribution(&real, &driver, 24.0).unwrap();
    let db = transcript_distribution(&ideal, &driver, 24.0).unwrap();
    assert!(da.len() > 1, "expected round-count variation at the boundary");
    assert!(transcript_tv(&da, &db) < 1e-12);
}
