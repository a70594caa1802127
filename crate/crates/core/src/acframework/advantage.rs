//! Distinguishing advantage between two wired systems.
//!
//! The exact path enumerates every branch of the randomness space of both
//! runs and compares `Pr[guess = 0]`; the sampled path runs seeded trials
//! and reports a binomial confidence radius alongside the point estimate.

use std::collections::BTreeMap;

use super::distinguisher::DistinguisherSpec;
use super::machine::derive_seed;
use super::runtime::{enumerate_runs, run, DEFAULT_ENUMERATION_BITS};
use super::wiring::Wiring;
use super::AcError;

/// Exact `Pr[D outputs 0]` against one system, by exhaustive enumeration.
pub fn guess_zero_probability(
    wiring: &Wiring,
    d: &DistinguisherSpec,
    budget_bits: f64,
) -> Result<f64, AcError> {
    let runs = enumerate_runs(wiring, d, budget_bits)?;
    Ok(runs
        .iter()
        .filter(|r| r.output.guess == 0)
        .map(|r| r.probability)
        .sum())
}

/// Exact advantage |Pr[D(A)=0] - Pr[D(B)=0]| of one distinguisher.
pub fn advantage_exact(
    a: &Wiring,
    b: &Wiring,
    d: &DistinguisherSpec,
    budget_bits: f64,
) -> Result<f64, AcError> {
    check_same_surface(a, b)?;
    let pa = guess_zero_probability(a, d, budget_bits)?;
    let pb = guess_zero_probability(b, d, budget_bits)?;
    Ok((pa - pb).abs())
}

/// Exact advantage maximized over a family of distinguishers.
pub fn advantage_exact_over(
    a: &Wiring,
    b: &Wiring,
    family: &[DistinguisherSpec],
) -> Result<Vec<(String, f64)>, AcError> {
    family
        .iter()
        .map(|d| Ok((d.name().to_string(), advantage_exact(a, b, d, DEFAULT_ENUMERATION_BITS)?)))
        .collect()
}

/// Point estimate with a 95% confidence radius, from seeded trials.
#[derive(Clone, Copy, Debug)]
pub struct AdvantageEstimate {
    pub p_zero_a: f64,
    pub p_zero_b: f64,
    pub advantage: f64,
    /// Half-width of the 95% normal-approximation interval on the gap.
    pub ci95: f64,
    pub trials: u64,
}

pub fn advantage_estimate(
    a: &Wiring,
    b: &Wiring,
    d: &DistinguisherSpec,
    seed: u64,
    trials: u64,
) -> Result<AdvantageEstimate, AcError> {
    check_same_surface(a, b)?;
    let mut zeros_a = 0u64;
    let mut zeros_b = 0u64;
    for t in 0..trials {
        let sa = derive_seed(seed, "advantage.a", t);
        let sb = derive_seed(seed, "advantage.b", t);
        if run(a, d, sa)?.guess == 0 {
            zeros_a += 1;
        }
        if run(b, d, sb)?.guess == 0 {
            zeros_b += 1;
        }
    }
    let n = trials as f64;
    let pa = zeros_a as f64 / n;
    let pb = zeros_b as f64 / n;
    let ci95 = 1.96 * (pa * (1.0 - pa) / n + pb * (1.0 - pb) / n).sqrt();
    Ok(AdvantageEstimate { p_zero_a: pa, p_zero_b: pb, advantage: (pa - pb).abs(), ci95, trials })
}

/// Exact distribution over transcript dumps, by enumeration. Keys are the
/// full observable transcript; values are path probabilities summed over
/// all randomness paths yielding that transcript.
pub fn transcript_distribution(
    wiring: &Wiring,
    d: &DistinguisherSpec,
    budget_bits: f64,
) -> Result<BTreeMap<String, f64>, AcError> {
    let runs = enumerate_runs(wiring, d, budget_bits)?;
    let mut dist: BTreeMap<String, f64> = BTreeMap::new();
    for r in runs {
        *dist.entry(r.output.transcript.dump()).or_insert(0.0) += r.probability;
    }
    Ok(dist)
}

/// Total-variation distance between two transcript distributions.
pub fn transcript_tv(
    a: &BTreeMap<String, f64>,
    b: &BTreeMap<String, f64>,
) -> f64 {
    let mut keys: Vec<&String> = a.keys().collect();
    for k in b.keys() {
        if !a.contains_key(k) {
            keys.push(k);
        }
    }
    0.5 * keys
        .iter()
        .map(|k| (a.get(*k).copied().unwrap_or(0.0) - b.get(*k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Two systems are comparable only when they present the same outside face.
fn check_same_surface(a: &Wiring, b: &Wiring) -> Result<(), AcError> {
    let ea = a.export_names();
    let eb = b.export_names();
    if ea != eb {
        return Err(AcError::Wiring(format!(
            "systems expose different surfaces: {ea:?} vs {eb:?}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::machine::{Machine, MachineError, MachineSpec, StepCtx};
    use super::super::message::Message;
    use super::super::distinguisher::ScriptedObserver;
    use super::*;

    /// Answers any poke with a fixed bit.
    struct Constant(u8);
    impl Machine for Constant {
        fn step(
            &mut self,
            _port: &str,
            _msg: Message,
            _ctx: &mut StepCtx<'_>,
        ) -> Result<Vec<(String, Message)>, MachineError> {
            Ok(vec![("out".to_string(), Message::Bit(self.0))])
        }
    }

    /// Answers any poke with a fair coin.
    struct Fair;
    impl Machine for Fair {
        fn step(
            &mut self,
            _port: &str,
            _msg: Message,
            ctx: &mut StepCtx<'_>,
        ) -> Result<Vec<(String, Message)>, MachineError> {
            Ok(vec![("out".to_string(), Message::Bit(ctx.rand_bit()?))])
        }
    }

    fn single_machine<M: Machine + 'static>(
        name: &str,
        f: impl Fn() -> M + Send + Sync + 'static,
    ) -> Wiring {
        let mut w = Wiring::new();
        let mut w2 = Wiring::new();
        let _ = &mut w2;
        w.add_machine(MachineSpec::new(name, vec!["poke".into(), "out".into()], f)).unwrap();
        w
    }

    fn first_bit_probe() -> DistinguisherSpec {
        ScriptedObserver::spec(
            "first-bit",
            vec![("m.poke".to_string(), Message::Start)],
            |seen| match seen.first() {
                Some((_, Message::Bit(b))) => *b,
                _ => 1,
            },
        )
    }

    #[test]
    fn constant_vs_flipped_constant_has_full_advantage() {
        let zero = single_machine("m", || Constant(0));
        let one = single_machine("m", || Constant(1));
        let adv = advantage_exact(&zero, &one, &first_bit_probe(), 24.0).unwrap();
        assert!((adv - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fair_coin_vs_fair_coin_has_zero_advantage() {
        let a = single_machine("m", || Fair);
        let b = single_machine("m", || Fair);
        let adv = advantage_exact(&a, &b, &first_bit_probe(), 24.0).unwrap();
        assert!(adv.abs() < 1e-12);
    }

    #[test]
    fn constant_vs_fair_coin_has_half_advantage() {
        let a = single_machine("m", || Constant(0));
        let b = single_machine("m", || Fair);
        let adv = advantage_exact(&a, &b, &first_bit_probe(), 24.0).unwrap();
        assert!((adv - 0.5).abs() < 1e-12);
    }

    #[test]
    fn estimate_brackets_the_exact_value() {
        let a = single_machine("m", || Constant(0));
        let b = single_machine("m", || Fair);
        let est = advantage_estimate(&a, &b, &first_bit_probe(), 99, 4000).unwrap();
        assert!(
            (est.advantage - 0.5).abs() <= est.ci95 + 0.02,
            "estimate {} ± {} missed 0.5",
            est.advantage,
            est.ci95
        );
    }

    #[test]
    fn mismatched_surfaces_are_rejected() {
        let a = single_machine("m", || Constant(0));
        let b = single_machine("other", || Constant(0));
        assert!(matches!(
            advantage_exact(&a, &b, &first_bit_probe(), 24.0),
            Err(AcError::Wiring(_))
        ));
    }

    #[test]
    fn transcript_distribution_of_a_fair_coin() {
        let a = single_machine("m", || Fair);
        let d = first_bit_probe();
        let dist = transcript_distribution(&a, &d, 24.0).unwrap();
        assert_eq!(dist.len(), 2);
        for p in dist.values() {
            assert!((p - 0.5).abs() < 1e-12);
        }
        let b = single_machine("m", || Constant(0));
        let dist_b = transcript_distribution(&b, &d, 24.0).unwrap();
        assert!((transcript_tv(&dist, &dist_b) - 0.5).abs() < 1e-12);
        assert!(transcript_tv(&dist, &dist) < 1e-15);
    }
}
