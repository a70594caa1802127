//! Experiment configuration: a JSON document shared by all run-style
//! subcommands, plus its resolution into worlds and states.
//!
//! ```json
//! {
//!   "n": 3,
//!   "p": 0.5,
//!   "coin": "random",
//!   "source": {"kind": "ghz"},
//!   "trials": 10000,
//!   "max_rounds": 64,
//!   "seed": 7
//! }
//! ```
//!
//! `coin` may be `"random"` (default), `0`, or `1`. `source.kind` is one of
//! `ghz`, `zeros`, `depolarized` (with `lambda`), `file` (with `path`),
//! `schedule` (with `paths`). `pair` and `distinguisher` select the
//! comparison for the `distinguish` subcommand.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use mevsim::mevprotocol::{CoinMode, SourceBehavior};
use mevsim::qstate::{BitString, PureState, QuantumState};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: f64,
    #[serde(default)]
    pub coin: CoinField,
    pub source: SourceConfig,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub max_rounds: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub pair: Option<String>,
    #[serde(default)]
    pub distinguisher: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum CoinField {
    Fixed(u8),
    Named(String),
}

impl Default for CoinField {
    fn default() -> Self {
        Self::Named("random".to_string())
    }
}

impl CoinField {
    pub fn to_mode(&self) -> Result<CoinMode, CliError> {
        match self {
            Self::Fixed(b @ (0 | 1)) => Ok(CoinMode::Fixed(*b)),
            Self::Fixed(other) => {
                Err(CliError::Config(format!("coin must be \"random\", 0, or 1, got {other}")))
            }
            Self::Named(s) if s == "random" => Ok(CoinMode::Random),
            Self::Named(other) => {
                Err(CliError::Config(format!("coin must be \"random\", 0, or 1, got {other:?}")))
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceConfig {
    Ghz,
    Zeros,
    Depolarized { lambda: f64 },
    File { path: PathBuf },
    Schedule { paths: Vec<PathBuf> },
}

/// A source config turned into runnable pieces: the machine behavior, the
/// states it serves (one unless scheduled), and a summary label.
pub struct ResolvedSource {
    pub label: String,
    pub behavior: SourceBehavior,
    pub states: Vec<Arc<QuantumState>>,
}

impl ResolvedSource {
    /// The single served state, if this source serves exactly one.
    pub fn single_state(&self) -> Option<&Arc<QuantumState>> {
        match self.states.as_slice() {
            [one] => Some(one),
            _ => None,
        }
    }
}

fn load_state(path: &Path, n: usize) -> Result<Arc<QuantumState>, CliError> {
    let state = QuantumState::load(path)
        .map_err(|e| CliError::Config(format!("state file {}: {e}", path.display())))?;
    if state.num_qubits() != n {
        return Err(CliError::Config(format!(
            "state file {} has {} qubits, config says n = {n}",
            path.display(),
            state.num_qubits()
        )));
    }
    Ok(Arc::new(state))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(CliError::Config(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if let Some(0) = self.trials {
            return Err(CliError::Config("trials must be at least 1".to_string()));
        }
        if let Some(0) = self.max_rounds {
            return Err(CliError::Config("max_rounds must be at least 1".to_string()));
        }
        self.coin.to_mode()?;
        Ok(())
    }

    /// Seed resolution: the flag beats the config; one of them is required.
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        flag.or(self.seed).ok_or_else(|| {
            CliError::Config("a seed is required (config \"seed\" or --seed)".to_string())
        })
    }

    /// Trial-count resolution: the flag beats the config; required.
    pub fn resolve_trials(&self, flag: Option<u64>) -> Result<u64, CliError> {
        let trials = flag.or(self.trials).ok_or_else(|| {
            CliError::Config("a trial count is required (config \"trials\" or --trials)".to_string())
        })?;
        if trials == 0 {
            return Err(CliError::Config("trials must be at least 1".to_string()));
        }
        Ok(trials)
    }

    pub fn resolve_max_rounds(&self) -> Result<usize, CliError> {
        self.max_rounds.ok_or_else(|| {
            CliError::Config("this scenario requires \"max_rounds\" in the config".to_string())
        })
    }

    pub fn resolve_source(&self) -> Result<ResolvedSource, CliError> {
        let n = self.n;
        match &self.source {
            SourceConfig::Ghz => {
                let ghz = Arc::new(QuantumState::Pure(
                    PureState::ghz(n)
                        .map_err(|e| CliError::Config(format!("ghz source: {e}")))?,
                ));
                Ok(ResolvedSource {
                    label: "ghz".to_string(),
                    behavior: SourceBehavior::Honest,
                    states: vec![ghz],
                })
            }
            SourceConfig::Zeros => {
                let state = Arc::new(QuantumState::Pure(
                    PureState::basis(&BitString::zeros(n))
                        .map_err(|e| CliError::Config(format!("zeros source: {e}")))?,
                ));
                Ok(ResolvedSource {
                    label: "zeros".to_string(),
                    behavior: SourceBehavior::Fixed(state.clone()),
                    states: vec![state],
                })
            }
            SourceConfig::Depolarized { lambda } => {
                let rho = mevsim::qstate::DensityMatrix::depolarized_ghz(n, *lambda)
                    .map_err(|e| CliError::Config(format!("depolarized source: {e}")))?;
                let state = Arc::new(QuantumState::Density(rho));
                Ok(ResolvedSource {
                    label: format!("depolarized({lambda})"),
                    behavior: SourceBehavior::Fixed(state.clone()),
                    states: vec![state],
                })
            }
            SourceConfig::File { path } => {
                let state = load_state(path, n)?;
                let label = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "file".to_string());
                Ok(ResolvedSource {
                    label,
                    behavior: SourceBehavior::Fixed(state.clone()),
                    states: vec![state],
                })
            }
            SourceConfig::Schedule { paths } => {
                if paths.is_empty() {
                    return Err(CliError::Config("schedule needs at least one state".to_string()));
                }
                let states = paths
                    .iter()
                    .map(|p| load_state(p, n))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ResolvedSource {
                    label: format!("schedule({})", states.len()),
                    behavior: SourceBehavior::Schedule(states.clone()),
                    states,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    #[test]
    fn minimal_config_parses() {
        let c = parse(r#"{"n":3,"p":0.5,"source":{"kind":"ghz"},"seed":1,"trials":10}"#).unwrap();
        assert!(matches!(c.coin.to_mode().unwrap(), CoinMode::Random));
        let src = c.resolve_source().unwrap();
        assert_eq!(src.label, "ghz");
        assert!(src.single_state().is_some());
    }

    #[test]
    fn coin_accepts_named_and_fixed_forms() {
        let c = parse(r#"{"n":3,"p":0.5,"coin":1,"source":{"kind":"zeros"}}"#).unwrap();
        assert!(matches!(c.coin.to_mode().unwrap(), CoinMode::Fixed(1)));
        assert!(parse(r#"{"n":3,"p":0.5,"coin":2,"source":{"kind":"zeros"}}"#).is_err());
        assert!(parse(r#"{"n":3,"p":0.5,"coin":"often","source":{"kind":"zeros"}}"#).is_err());
    }

    #[test]
    fn bad_parameters_are_config_errors() {
        assert!(parse(r#"{"n":3,"p":0.0,"source":{"kind":"ghz"}}"#).is_err());
        assert!(parse(r#"{"n":3,"p":0.5,"source":{"kind":"ghz"},"trials":0}"#).is_err());
        assert!(parse(r#"{"n":3,"p":0.5,"source":{"kind":"warm"}}"#).is_err());
        assert!(parse(r#"{"n":3,"p":0.5,"source":{"kind":"ghz"},"surprise":1}"#).is_err());
    }

    #[test]
    fn seed_is_mandatory() {
        let c = parse(r#"{"n":3,"p":0.5,"source":{"kind":"ghz"}}"#).unwrap();
        assert!(c.resolve_seed(None).is_err());
        assert_eq!(c.resolve_seed(Some(9)).unwrap(), 9);
    }
}
