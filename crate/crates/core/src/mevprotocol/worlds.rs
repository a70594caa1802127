//! Wiring builders for every world the toolkit compares.
//!
//! Builders come in matched pairs with byte-identical export surfaces, so
//! the distinguishing machinery can be pointed at any pair directly:
//!
//! - [`honest_pair`]: the all-honest concrete protocol vs the filtered
//!   one-round ideal resource (party ports only).
//! - [`open_source_pair`]: the concrete protocol with an open source port
//!   and leaky oracles/channels vs the ideal resource behind the
//!   source-side simulator (party ports, `source`, and `leak.*`).
//! - [`multiround_filtered_pair`]: repeaters around the ideal one-round
//!   resource with a GHZ filter vs the GHZ-sharing resource behind the
//!   interactive filter (party ports only).
//! - [`multiround_open_pair`]: the same repeated resource with its source
//!   port open vs the sharing resource behind the dialogue simulator
//!   (party ports plus `source`).
//!
//! `*_with_source` builders wire a scripted source in for self-driven
//! Monte Carlo runs.

use crate::acframework::{AcError, Wiring};

use super::ideal::{
    ghz_sharing_resource, interactive_ghz_filter, mev_resource, round_repeater,
    source_dialogue_simulator, source_simulator,
};
use super::machines::{
    classical_channel, coin_oracle, ghz_filter, honest_source, party_machine, scripted_source,
    state_generator, verifier_oracle,
};
use super::{CoinMode, ProtocolParams, SourceBehavior};

fn check(n: usize, p: f64, mode: CoinMode) -> Result<(), AcError> {
    ProtocolParams::new(n, p, 0).map_err(|e| AcError::Wiring(e.to_string()))?;
    if let CoinMode::Fixed(b) = mode {
        if b > 1 {
            return Err(AcError::Wiring(format!("fixed coin value {b} is not a bit")));
        }
    }
    Ok(())
}

/// Parties, state generator, oracles and channels, fully linked; exports
/// each party's environment face as `party.i`. Leaky mode adds `leak`
/// ports on the oracles and channels but does not yet route them.
fn concrete_core(n: usize, p: f64, mode: CoinMode, leaky: bool) -> Result<Wiring, AcError> {
    let mut w = Wiring::new();
    w.add_machine(state_generator(n))?;
    w.add_machine(coin_oracle(n, p, mode, leaky))?;
    w.add_machine(verifier_oracle(n, leaky))?;
    for i in 1..=n {
        w.add_machine(party_machine(i, n))?;
    }
    for i in 1..=n {
        for j in (i + 1)..=n {
            w.add_machine(classical_channel(i, j, leaky))?;
        }
    }
    for i in 1..=n {
        let party = format!("party.{i}");
        w.link((party.clone(), "src".to_string()), ("sg", format!("p.{i}")))?;
        w.link((party.clone(), "coin".to_string()), ("coin", format!("q.{i}")))?;
        w.link((party.clone(), "ver".to_string()), ("ver", format!("q.{i}")))?;
        for j in (i + 1)..=n {
            let chan = format!("chan.{i}.{j}");
            w.link((format!("party.{i}"), format!("chan.{j}")), (chan.clone(), "a".to_string()))?;
            w.link((format!("party.{j}"), format!("chan.{i}")), (chan, "b".to_string()))?;
        }
        w.export_as((party.clone(), "ext".to_string()), party)?;
    }
    Ok(w)
}

fn export_leaks(w: &mut Wiring, n: usize) -> Result<(), AcError> {
    w.export_as(("coin", "leak"), "leak.c")?;
    w.export_as(("ver", "leak"), "leak.v")?;
    for i in 1..=n {
        for j in (i + 1)..=n {
            w.export_as((format!("chan.{i}.{j}"), "leak".to_string()), format!("leak.chan.{i}.{j}"))?;
        }
    }
    Ok(())
}

/// The all-honest concrete world: the full protocol with a GHZ-serving
/// source wired in. Open ports are exactly the n party faces.
pub fn concrete_honest(n: usize, p: f64, mode: CoinMode) -> Result<Wiring, AcError> {
    check(n, p, mode)?;
    let mut w = concrete_core(n, p, mode, false)?;
    w.add_machine(honest_source(n))?;
    w.link(("source", "inner"), ("sg", "src"))?;
    Ok(w)
}

/// The concrete world with a scripted source wired in, for self-driven
/// runs. Adaptive behaviors additionally get read-only copies of the coin,
/// verifier, and channel traffic, which only then becomes leaky.
pub fn concrete_with_source(
    n: usize,
    p: f64,
    mode: CoinMode,
    behavior: SourceBehavior,
) -> Result<Wiring, AcError> {
    check(n, p, mode)?;
    let adaptive = matches!(behavior, SourceBehavior::Adaptive(_));
    let mut w = concrete_core(n, p, mode, adaptive)?;
    let mut watch_ports = Vec::new();
    if adaptive {
        watch_ports.push("watch.c".to_string());
        watch_ports.push("watch.v".to_string());
        for i in 1..=n {
            for j in (i + 1)..=n {
                watch_ports.push(format!("watch.chan.{i}.{j}"));
            }
        }
    }
    w.add_machine(scripted_source(n, behavior, false, watch_ports))?;
    w.link(("source", "inner"), ("sg", "src"))?;
    if adaptive {
        w.link(("source", "watch.c"), ("coin", "leak"))?;
        w.link(("source", "watch.v"), ("ver", "leak"))?;
        for i in 1..=n {
            for j in (i + 1)..=n {
                w.link(
                    ("source".to_string(), format!("watch.chan.{i}.{j}")),
                    (format!("chan.{i}.{j}"), "leak".to_string()),
                )?;
            }
        }
    }
    Ok(w)
}

/// The concrete world as a dishonest source sees it: the state query port
/// is exported as `source`, and the oracle and channel traffic is copied
/// out on `leak.*` ports.
pub fn concrete_open_source(n: usize, p: f64, mode: CoinMode) -> Result<Wiring, AcError> {
    check(n, p, mode)?;
    let mut w = concrete_core(n, p, mode, true)?;
    w.export_as(("sg", "src"), "source")?;
    export_leaks(&mut w, n)?;
    Ok(w)
}

/// The filtered one-round ideal world: the verification resource with a
/// GHZ filter on its source face. Open ports are exactly the party faces.
pub fn ideal_filtered(n: usize, p: f64, mode: CoinMode) -> Result<Wiring, AcError> {
    check(n, p, mode)?;
    let mut w = Wiring::new();
    w.add_machine(mev_resource(n, p, mode))?;
    w.add_machine(ghz_filter(n))?;
    w.link(("filter", "inner"), ("mev", "src"))?;
    for i in 1..=n {
        w.export_as(("mev", format!("party.{i}")), format!("party.{i}"))?;
    }
    Ok(w)
}

/// The simulated one-round ideal world: the verification resource behind
/// the source-side simulator, presenting the same surface as
/// [`concrete_open_source`].
pub fn ideal_simulated(n: usize, p: f64, mode: CoinMode) -> Result<Wiring, AcError> {
    check(n, p, mode)?;
    let mut w = Wiring::new();
    w.add_machine(mev_resource(n, p, mode))?;
    w.add_machine(source_simulator(n))?;
    w.link(("sim", "res"), ("mev", "src"))?;
    for i in 1..=n {
        w.export_as(("mev", format!("party.{i}")), format!("party.{i}"))?;
    }
    w.export_as(("sim", "source"), "source")?;
    w.export_as(("sim", "leak.c"), "leak.c")?;
    w.export_as(("sim", "leak.v"), "leak.v")?;
    for i in 1..=n {
        for j in (i + 1)..=n {
            w.export_as(
                ("sim".to_string(), format!("leak.chan.{i}.{j}")),
                format!("leak.chan.{i}.{j}"),
            )?;
        }
    }
    Ok(w)
}

/// The one-round ideal world with a scripted source wired in, for
/// self-driven Monte Carlo runs.
pub fn ideal_with_source(
    n: usize,
    p: f64,
    mode: CoinMode,
    behavior: SourceBehavior,
) -> Result<Wiring, AcError> {
    check(n, p, mode)?;
    let mut w = Wiring::new();
    w.add_machine(mev_resource(n, p, mode))?;
    w.add_machine(scripted_source(n, behavior, false, Vec::new()))?;
    w.link(("source", "inner"), ("mev", "src"))?;
    for i in 1..=n {
        w.export_as(("mev", format!("party.{i}")), format!("party.{i}"))?;
    }
    Ok(w)
}

/// Concrete honest world and filtered ideal world, same surface.
pub fn honest_pair(n: usize, p: f64, mode: CoinMode) -> Result<(Wiring, Wiring), AcError> {
    Ok((concrete_honest(n, p, mode)?, ideal_filtered(n, p, mode)?))
}

/// Open-source concrete world and simulated ideal world, same surface.
pub fn open_source_pair(n: usize, p: f64, mode: CoinMode) -> Result<(Wiring, Wiring), AcError> {
    Ok((concrete_open_source(n, p, mode)?, ideal_simulated(n, p, mode)?))
}

/// Repeaters around the one-round ideal resource.
fn repeated_mev(n: usize, p: f64, max_rounds: usize) -> Result<Wiring, AcError> {
    let mut w = Wiring::new();
    w.add_machine(mev_resource(n, p, CoinMode::Random))?;
    for i in 1..=n {
        w.add_machine(round_repeater(i, max_rounds))?;
        w.link((format!("pi.{i}"), "inner".to_string()), ("mev", format!("party.{i}")))?;
        w.export_as((format!("pi.{i}"), "ext".to_string()), format!("party.{i}"))?;
    }
    Ok(w)
}

/// The GHZ-sharing resource with its party faces exported.
fn sharing_core(n: usize, p: f64) -> Result<Wiring, AcError> {
    let mut w = Wiring::new();
    w.add_machine(ghz_sharing_resource(n, p, 1.0))?;
    for i in 1..=n {
        w.export_as(("ghzres", format!("party.{i}")), format!("party.{i}"))?;
    }
    Ok(w)
}

/// Multi-round honest comparison: repeaters around the filtered one-round
/// resource vs the GHZ-sharing resource behind the interactive filter.
/// Both sides go silent when `max_rounds` accepted test rounds pass.
pub fn multiround_filtered_pair(
    n: usize,
    p: f64,
    max_rounds: usize,
) -> Result<(Wiring, Wiring), AcError> {
    check(n, p, CoinMode::Random)?;
    let mut left = repeated_mev(n, p, max_rounds)?;
    left.add_machine(ghz_filter(n))?;
    left.link(("filter", "inner"), ("mev", "src"))?;
    let mut right = sharing_core(n, p)?;
    right.add_machine(interactive_ghz_filter(n, max_rounds))?;
    right.link(("filter", "inner"), ("ghzres", "src"))?;
    Ok((left, right))
}

/// Multi-round open-source comparison: repeaters around the one-round
/// resource with its source face exported vs the GHZ-sharing resource
/// behind the dialogue simulator.
pub fn multiround_open_pair(
    n: usize,
    p: f64,
    max_rounds: usize,
) -> Result<(Wiring, Wiring), AcError> {
    check(n, p, CoinMode::Random)?;
    let mut left = repeated_mev(n, p, max_rounds)?;
    left.export_as(("mev", "src"), "source")?;
    let mut right = sharing_core(n, p)?;
    right.add_machine(source_dialogue_simulator(max_rounds))?;
    right.link(("sim", "res"), ("ghzres", "src"))?;
    right.export_as(("sim", "source"), "source")?;
    Ok((left, right))
}

/// Multi-round world with a scripted source wired in; every state query is
/// also counted on the exported `rounds` port, so a trial's round count
/// can be read off the boundary.
pub fn multiround_with_source(
    n: usize,
    p: f64,
    max_rounds: usize,
    behavior: SourceBehavior,
) -> Result<Wiring, AcError> {
    check(n, p, CoinMode::Random)?;
    let mut w = repeated_mev(n, p, max_rounds)?;
    w.add_machine(scripted_source(n, behavior, true, Vec::new()))?;
    w.link(("source", "inner"), ("mev", "src"))?;
    w.export_as(("source", "meter"), "rounds")?;
    Ok(w)
}
