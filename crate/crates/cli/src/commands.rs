//! The four subcommands. Run-style commands share one shape: resolve the
//! config, run seeded trials in parallel with per-trial derived seeds (so
//! the worker count never changes the numbers), write `records.jsonl` and
//! `summary.csv`, and where an exact oracle exists, gate the Monte Carlo
//! result against it.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use mevsim::acframework::otp::{otp_distinguishers, otp_pair};
use mevsim::acframework::{
    advantage_estimate, advantage_exact, derive_seed, AcError, DistinguisherSpec,
    DEFAULT_ENUMERATION_BITS,
};
use mevsim::analysis::{
    binomial_ci95, binomial_sigma, dishonest_test_bound, exact_rejection_probability,
    multiround_absorption, usage_failure_bound, SecurityParams, SummaryRow, ORACLE_QUBIT_CAP,
    SUMMARY_HEADER,
};
use mevsim::mevprotocol::{
    concrete_with_source, honest_pair, multiround_filtered_pair, multiround_probes,
    multiround_with_source, open_source_pair, open_source_probes, round_probes,
    run_multiround_trial, run_round_trial, MultiRoundOutcome, RoundOutcome, RoundRecord,
};

use crate::config::{ExperimentConfig, SourceConfig};
use crate::{CliError, ParamsArgs, RunArgs, BUILD_ID};

/// Bad wiring parameters are config problems; anything else that breaks
/// while building or running a world is a runtime failure.
fn build_error(e: AcError) -> CliError {
    match e {
        AcError::Wiring(msg) => CliError::Config(msg),
        other => CliError::Runtime(other.to_string()),
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Write the two run artifacts and mirror the summary to stdout.
fn write_outputs(out: &Path, records: &[String], summary: &str) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(runtime)?;
    let mut jsonl = records.join("\n");
    if !jsonl.is_empty() {
        jsonl.push('\n');
    }
    fs::write(out.join("records.jsonl"), jsonl).map_err(runtime)?;
    fs::write(out.join("summary.csv"), summary).map_err(runtime)?;
    print!("{summary}");
    Ok(())
}

#[derive(Serialize)]
struct RoundTrialRecord<'a> {
    trial: u64,
    outcome: &'a str,
    b: Option<u8>,
    digest: String,
}

pub fn verify_round(args: &RunArgs) -> Result<(), CliError> {
    let config = ExperimentConfig::load(&args.config)?;
    let seed = config.resolve_seed(args.seed)?;
    let trials = config.resolve_trials(args.trials)?;
    let mode = config.coin.to_mode()?;
    if matches!(config.source, SourceConfig::Schedule { .. }) {
        return Err(CliError::Config(
            "verify-round needs a source serving one fixed state; \"schedule\" belongs to the \
             multiround scenario"
                .to_string(),
        ));
    }
    let source = config.resolve_source()?;
    let state = source
        .single_state()
        .ok_or_else(|| CliError::Config("verify-round needs a single-state source".to_string()))?
        .clone();
    let world = concrete_with_source(config.n, config.p, mode, source.behavior.clone())
        .map_err(build_error)?;

    let outcomes: Vec<RoundRecord> = (0..trials)
        .into_par_iter()
        .map(|t| run_round_trial(&world, config.n, derive_seed(seed, "cli.verify.trial", t)))
        .collect::<Result<_, _>>()
        .map_err(runtime)?;

    let mut records = Vec::with_capacity(outcomes.len());
    let mut tested = 0u64;
    let mut rejects = 0u64;
    for (t, rec) in outcomes.iter().enumerate() {
        if let Some(fault) = rec.faults.first() {
            return Err(CliError::Runtime(format!("trial {t} faulted: {fault}")));
        }
        let (outcome, b) = match rec.outcome {
            RoundOutcome::Used => ("used", None),
            RoundOutcome::Verdict(b) => {
                tested += 1;
                rejects += u64::from(b);
                ("tested", Some(b))
            }
            RoundOutcome::Silent => {
                return Err(CliError::Runtime(format!("trial {t} produced no boundary output")));
            }
        };
        let line = serde_json::to_string(&RoundTrialRecord {
            trial: t as u64,
            outcome,
            b,
            digest: format!("{:016x}", rec.transcript_digest),
        })
        .map_err(runtime)?;
        records.push(line);
    }

    let mc_reject = if tested > 0 { rejects as f64 / tested as f64 } else { 0.0 };
    let ci95 = binomial_ci95(mc_reject, tested);
    let tau = state.distance_to_ghz().map_err(|e| CliError::Config(e.to_string()))?;
    let exact = if config.n <= ORACLE_QUBIT_CAP {
        Some(exact_rejection_probability(&state).map_err(runtime)?)
    } else {
        None
    };

    let row = SummaryRow {
        state: source.label.clone(),
        n: config.n,
        tau,
        tau2_over_2: tau * tau / 2.0,
        exact_reject: exact,
        mc_reject,
        ci95,
        n_trials: tested,
    };
    let summary =
        format!("{SUMMARY_HEADER},seed,build\n{},{seed},{BUILD_ID}\n", row.csv_line());
    write_outputs(&args.out, &records, &summary)?;

    if let Some(exact) = exact {
        if tested > 0 {
            let gate = 4.0 * binomial_sigma(exact, tested);
            if (mc_reject - exact).abs() > gate {
                return Err(CliError::CheckFailed(format!(
                    "measured rejection rate {mc_reject:.6} sits more than 4 sigma from the \
                     exact value {exact:.6} (allowed ±{gate:.6} over {tested} tested rounds)"
                )));
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MultiroundTrialRecord<'a> {
    trial: u64,
    outcome: &'a str,
    rounds: usize,
    b_history: Vec<u8>,
}

pub fn multiround(args: &RunArgs) -> Result<(), CliError> {
    let config = ExperimentConfig::load(&args.config)?;
    let seed = config.resolve_seed(args.seed)?;
    let trials = config.resolve_trials(args.trials)?;
    let max_rounds = config.resolve_max_rounds()?;
    let source = config.resolve_source()?;
    let world = multiround_with_source(config.n, config.p, max_rounds, source.behavior.clone())
        .map_err(build_error)?;

    let outcomes: Vec<MultiRoundOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| {
            run_multiround_trial(&world, config.n, derive_seed(seed, "cli.multiround.trial", t))
        })
        .collect::<Result<_, _>>()
        .map_err(runtime)?;

    let mut records = Vec::with_capacity(outcomes.len());
    let mut shared = 0u64;
    let mut aborted = 0u64;
    let mut budget = 0u64;
    let mut total_rounds = 0u64;
    for (t, out) in outcomes.iter().enumerate() {
        let rounds = out.rounds();
        total_rounds += rounds as u64;
        // Every round before the last was tested and accepted; the verdict
        // stream is determined by how the run ended.
        let b_history = match out {
            MultiRoundOutcome::Shared { .. } => {
                shared += 1;
                vec![0u8; rounds.saturating_sub(1)]
            }
            MultiRoundOutcome::Aborted { .. } => {
                aborted += 1;
                let mut h = vec![0u8; rounds.saturating_sub(1)];
                h.push(1);
                h
            }
            MultiRoundOutcome::BudgetExhausted { .. } => {
                budget += 1;
                vec![0u8; rounds]
            }
        };
        let line = serde_json::to_string(&MultiroundTrialRecord {
            trial: t as u64,
            outcome: out.label(),
            rounds,
            b_history,
        })
        .map_err(runtime)?;
        records.push(line);
    }

    let pr_shared = shared as f64 / trials as f64;
    let pr_aborted = aborted as f64 / trials as f64;
    let pr_budget = budget as f64 / trials as f64;
    let mean_rounds = total_rounds as f64 / trials as f64;
    let prediction = match source.single_state() {
        Some(state) => {
            let tau = state.distance_to_ghz().map_err(|e| CliError::Config(e.to_string()))?;
            Some(multiround_absorption(config.p, tau * tau / 2.0).map_err(runtime)?)
        }
        None => None,
    };

    let header = "scenario,n,p,max_rounds,trials,pr_shared,pr_aborted,pr_budget,mean_rounds,\
                  absorption_prediction,seed,build";
    let pred_cell = prediction.map(|v| v.to_string()).unwrap_or_default();
    let summary = format!(
        "{header}\n{},{},{},{max_rounds},{trials},{pr_shared},{pr_aborted},{pr_budget},\
         {mean_rounds},{pred_cell},{seed},{BUILD_ID}\n",
        source.label, config.n, config.p,
    );
    write_outputs(&args.out, &records, &summary)?;

    // The absorption identity Pr[shared | run decided] = p / (p + (1-p) r)
    // holds at any horizon, so the gate conditions on decided trials and
    // leaves budget-exhausted ones out.
    if let Some(pred) = prediction {
        let decided = shared + aborted;
        if decided > 0 {
            let conditional = shared as f64 / decided as f64;
            let gate = 4.0 * binomial_sigma(pred, decided);
            if (conditional - pred).abs() > gate {
                return Err(CliError::CheckFailed(format!(
                    "Pr[shared | decided] = {conditional:.6} sits more than 4 sigma from the \
                     absorption prediction {pred:.6} (allowed ±{gate:.6} over {decided} decided \
                     trials)"
                )));
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct DistinguishRecord<'a> {
    pair: &'a str,
    distinguisher: &'a str,
    mode: &'a str,
    advantage: f64,
    ci95: Option<f64>,
    trials: Option<u64>,
}

/// Exact enumeration walks every randomness path, which is affordable for
/// the one-time-pad worlds at any length and for the protocol worlds up to
/// four parties; the multiround pair additionally spends about one branch
/// bit per round on the use/verify coin.
fn exact_is_affordable(pair: &str, n: usize, max_rounds: usize) -> bool {
    match pair {
        "otp" => true,
        "multiround-ghz" => n <= 4 && max_rounds <= 16,
        _ => n <= 4,
    }
}

pub fn distinguish(args: &RunArgs) -> Result<(), CliError> {
    let config = ExperimentConfig::load(&args.config)?;
    let seed = config.resolve_seed(args.seed)?;
    let mode = config.coin.to_mode()?;
    let pair = config
        .pair
        .as_deref()
        .ok_or_else(|| {
            CliError::Config(
                "distinguish needs \"pair\" in the config: one of otp, honest-mev, \
                 dishonest-mev, multiround-ghz"
                    .to_string(),
            )
        })?
        .to_string();

    let mut max_rounds = 0;
    let (real, ideal, family) = match pair.as_str() {
        "otp" => {
            let (a, b) = otp_pair(config.n).map_err(build_error)?;
            (a, b, otp_distinguishers(config.n))
        }
        "honest-mev" => {
            let (a, b) = honest_pair(config.n, config.p, mode).map_err(build_error)?;
            (a, b, round_probes(config.n))
        }
        "dishonest-mev" => {
            let source = config.resolve_source()?;
            let state = source.single_state().ok_or_else(|| {
                CliError::Config("dishonest-mev needs a single-state source".to_string())
            })?;
            let (a, b) = open_source_pair(config.n, config.p, mode).map_err(build_error)?;
            let probes = open_source_probes(config.n, state);
            (a, b, probes)
        }
        "multiround-ghz" => {
            max_rounds = config.resolve_max_rounds()?;
            let (a, b) =
                multiround_filtered_pair(config.n, config.p, max_rounds).map_err(build_error)?;
            (a, b, multiround_probes(config.n))
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown pair {other:?}; expected otp, honest-mev, dishonest-mev, or \
                 multiround-ghz"
            )));
        }
    };

    let family: Vec<DistinguisherSpec> = match &config.distinguisher {
        Some(name) => {
            let names: Vec<String> = family.iter().map(|d| d.name().to_string()).collect();
            let picked: Vec<_> =
                family.into_iter().filter(|d| d.name() == name.as_str()).collect();
            if picked.is_empty() {
                return Err(CliError::Config(format!(
                    "unknown distinguisher {name:?} for pair {pair:?}; available: {}",
                    names.join(", ")
                )));
            }
            picked
        }
        None => family,
    };

    let mut records = Vec::with_capacity(family.len());
    let mut rows = Vec::with_capacity(family.len());
    if exact_is_affordable(&pair, config.n, max_rounds) {
        for d in &family {
            let adv = advantage_exact(&real, &ideal, d, DEFAULT_ENUMERATION_BITS)
                .map_err(runtime)?;
            let line = serde_json::to_string(&DistinguishRecord {
                pair: &pair,
                distinguisher: d.name(),
                mode: "exact",
                advantage: adv,
                ci95: None,
                trials: None,
            })
            .map_err(runtime)?;
            records.push(line);
            rows.push(format!("{pair},{},exact,{adv},,,{seed},{BUILD_ID}", d.name()));
        }
    } else {
        let trials = config.resolve_trials(args.trials)?;
        for (i, d) in family.iter().enumerate() {
            let est = advantage_estimate(
                &real,
                &ideal,
                d,
                derive_seed(seed, "cli.distinguish", i as u64),
                trials,
            )
            .map_err(runtime)?;
            let line = serde_json::to_string(&DistinguishRecord {
                pair: &pair,
                distinguisher: d.name(),
                mode: "estimate",
                advantage: est.advantage,
                ci95: Some(est.ci95),
                trials: Some(est.trials),
            })
            .map_err(runtime)?;
            records.push(line);
            rows.push(format!(
                "{pair},{},estimate,{},{},{},{seed},{BUILD_ID}",
                d.name(),
                est.advantage,
                est.ci95,
                est.trials
            ));
        }
    }

    let summary = format!(
        "pair,distinguisher,mode,advantage,ci95,trials,seed,build\n{}\n",
        rows.join("\n")
    );
    write_outputs(&args.out, &records, &summary)
}

pub fn params(args: &ParamsArgs) -> Result<(), CliError> {
    let sp = SecurityParams::new(args.epsilon, args.delta, args.n, args.k)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let (p_choice, failure) = usage_failure_bound(&sp);
    let per_round = dishonest_test_bound(&sp);
    println!("epsilon = {}, delta = {}, n = {}, k = {}", sp.epsilon, sp.delta, sp.n, sp.k);
    println!("recommended use-coin bias p = epsilon^2 / (4 n delta) = {p_choice}");
    println!("usage failure bound: Pr[some used state is epsilon-far from GHZ] <= 1/delta = {failure}");
    if per_round.vacuous {
        println!(
            "per-round dishonest-test bound 4n / (k epsilon^2) = {} (vacuous: exceeds 1)",
            per_round.value
        );
    } else {
        println!("per-round dishonest-test bound 4n / (k epsilon^2) = {}", per_round.value);
    }
    Ok(())
}
