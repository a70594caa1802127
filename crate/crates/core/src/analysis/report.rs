//! Plot-ready result tables. Formatting goes through Rust's shortest
//! round-trip float display, so identical inputs always produce identical
//! bytes.

use super::oracles::BoundGridRow;

/// Column order of the per-state summary table.
pub const SUMMARY_HEADER: &str = "state,n,tau,tau2_over_2,exact_reject,mc_reject,ci95,n_trials";

/// One summary line: a state, its distance-derived ideal rejection rate,
/// the exact concrete rate when the oracle could compute it, and the
/// Monte Carlo estimate with its interval.
#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub state: String,
    pub n: usize,
    pub tau: f64,
    pub tau2_over_2: f64,
    /// None when the register is beyond the exact oracle's cap.
    pub exact_reject: Option<f64>,
    pub mc_reject: f64,
    pub ci95: f64,
    pub n_trials: u64,
}

impl SummaryRow {
    /// The row's cells in header order, without a trailing newline. Commas
    /// in the state label are rewritten so the column count stays fixed.
    pub fn csv_line(&self) -> String {
        let exact = self.exact_reject.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.state.replace(',', ";"),
            self.n,
            self.tau,
            self.tau2_over_2,
            exact,
            self.mc_reject,
            self.ci95,
            self.n_trials
        )
    }
}

/// Full summary table, header included.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

/// The depolarized-GHZ bound table emitted by the grid oracle.
pub fn bound_grid_csv(rows: &[BoundGridRow]) -> String {
    let mut out = String::from("lambda,tau,tau2_over_2,exact_reject\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.lambda, row.tau, row.tau2_over_2, row.exact_reject
        ));
    }
    out
}
