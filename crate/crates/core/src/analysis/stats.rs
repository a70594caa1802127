//! Statistical helpers: the closed-form multi-round absorption probability,
//! the coin-bias / failure-probability parameter relations, and the
//! binomial interval arithmetic used when Monte Carlo runs are compared
//! against exact oracles.

use super::AnalysisError;

/// Security/usage parameter bundle for the coin-bias helpers.
#[derive(Clone, Copy, Debug)]
pub struct SecurityParams {
    /// Closeness target in (0, 1]: the largest tolerated distance of a
    /// used state from GHZ.
    pub epsilon: f64,
    /// Confidence parameter > 0.
    pub delta: f64,
    /// Number of parties.
    pub n: usize,
    /// Number of dishonest parties assumed by the per-round bound.
    pub k: usize,
}

impl SecurityParams {
    pub fn new(epsilon: f64, delta: f64, n: usize, k: usize) -> Result<Self, AnalysisError> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(AnalysisError::InvalidParameter(format!(
                "epsilon must lie in (0, 1], got {epsilon}"
            )));
        }
        if !(delta > 0.0) {
            return Err(AnalysisError::InvalidParameter(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if n == 0 {
            return Err(AnalysisError::InvalidParameter("n must be at least 1".to_string()));
        }
        if k == 0 {
            return Err(AnalysisError::InvalidParameter("k must be at least 1".to_string()));
        }
        Ok(Self { epsilon, delta, n, k })
    }
}

/// The recommended use-coin bias and the failure bound it buys: choosing
/// Pr[use] = ε²/(4nδ) makes the probability that the protocol ever uses a
/// state at distance ≥ ε from GHZ at most 1/δ.
pub fn usage_failure_bound(sp: &SecurityParams) -> (f64, f64) {
    let p_choice = sp.epsilon * sp.epsilon / (4.0 * sp.n as f64 * sp.delta);
    (p_choice, 1.0 / sp.delta)
}

/// A per-round bound in its raw form; values above 1 carry no information
/// as probabilities, so the flag calls that out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DishonestBound {
    pub value: f64,
    pub vacuous: bool,
}

/// The alternative per-round form 4n/(kε²) of the failure bound, reported
/// separately because it is not algebraically reconcilable with
/// [`usage_failure_bound`]'s choice.
pub fn dishonest_test_bound(sp: &SecurityParams) -> DishonestBound {
    let value = 4.0 * sp.n as f64 / (sp.k as f64 * sp.epsilon * sp.epsilon);
    DishonestBound { value, vacuous: value > 1.0 }
}

/// Probability that a multi-round run delivers a state before any test
/// rejects, for a source that sends the same state every round: each round
/// uses with probability `p`, otherwise tests and rejects with probability
/// `r`. Conditioning on the geometric chain ending gives p/(p + (1−p)r).
pub fn multiround_absorption(p: f64, r: f64) -> Result<f64, AnalysisError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "use probability must lie in (0, 1), got {p}"
        )));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(AnalysisError::InvalidParameter(format!(
            "per-test rejection must lie in [0, 1], got {r}"
        )));
    }
    if r == 0.0 {
        return Ok(1.0);
    }
    Ok(p / (p + (1.0 - p) * r))
}

/// 95% normal-approximation half-width for a binomial proportion.
pub fn binomial_ci95(p_hat: f64, trials: u64) -> f64 {
    1.96 * binomial_sigma(p_hat, trials)
}

/// One standard deviation of a binomial proportion estimate.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_examples() {
        let sp = SecurityParams::new(0.2, 10.0, 5, 1).unwrap();
        let (p_choice, bound) = usage_failure_bound(&sp);
        assert!((p_choice - 2.0e-4).abs() < 1e-12);
        assert!((bound - 0.1).abs() < 1e-12);

        let sp = SecurityParams::new(1.0, 1.0, 2, 1).unwrap();
        assert!((usage_failure_bound(&sp).0 - 0.125).abs() < 1e-12);

        let sp = SecurityParams::new(0.5, 1.0, 4, 1).unwrap();
        let b = dishonest_test_bound(&sp);
        assert!((b.value - 64.0).abs() < 1e-12);
        assert!(b.vacuous);
    }

    #[test]
    fn bounds_are_monotone() {
        let base = SecurityParams::new(0.5, 2.0, 4, 1).unwrap();
        let (p0, b0) = usage_failure_bound(&base);
        // Decreasing in delta and n, increasing in epsilon.
        let more_delta = SecurityParams { delta: 4.0, ..base };
        assert!(usage_failure_bound(&more_delta).0 < p0);
        assert!(usage_failure_bound(&more_delta).1 < b0);
        let more_parties = SecurityParams { n: 8, ..base };
        assert!(usage_failure_bound(&more_parties).0 < p0);
        let tighter_eps = SecurityParams { epsilon: 0.25, ..base };
        assert!(usage_failure_bound(&tighter_eps).0 < p0);
        // The epsilon dependence is quadratic.
        assert!((usage_failure_bound(&tighter_eps).0 - p0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn absorption_closed_form() {
        assert!((multiround_absorption(0.1, 0.5).unwrap() - 0.18182).abs() < 1e-5);
        assert!((multiround_absorption(0.3, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((multiround_absorption(0.5, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(multiround_absorption(0.0, 0.5).is_err());
        assert!(multiround_absorption(0.5, 1.5).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(SecurityParams::new(0.0, 1.0, 3, 1).is_err());
        assert!(SecurityParams::new(1.1, 1.0, 3, 1).is_err());
        assert!(SecurityParams::new(0.5, 0.0, 3, 1).is_err());
        assert!(SecurityParams::new(0.5, 1.0, 0, 1).is_err());
        assert!(SecurityParams::new(0.5, 1.0, 3, 0).is_err());
    }

    #[test]
    fn interval_arithmetic() {
        assert!((binomial_ci95(0.5, 10_000) - 1.96 * 0.005).abs() < 1e-12);
        assert_eq!(binomial_sigma(0.0, 100), 0.0);
        assert!(binomial_sigma(0.5, 0).is_infinite());
    }
}
