//! Experiment configuration and its key-value text form.
//!
//! ```text
//! # lower bound at the constant-probability dimension
//! mode = lower_bound
//! k = 4
//! d = 726817
//! algo = all
//! trials = 200
//! seed = 1
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::optimizers::AlgorithmKind;

use super::exec::Execution;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    LowerBound,
    UpperBound,
    CapCheck,
    LemmaSuite,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::LowerBound => "lower_bound",
            Mode::UpperBound => "upper_bound",
            Mode::CapCheck => "cap_check",
            Mode::LemmaSuite => "lemma_suite",
            Mode::Sweep => "sweep",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Mode::LowerBound,
            Mode::UpperBound,
            Mode::CapCheck,
            Mode::LemmaSuite,
            Mode::Sweep,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::arg(format!("unknown mode {s:?}")))
    }
}

/// Which algorithms a cell runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgoSelection {
    One(AlgorithmKind),
    /// Every algorithm in the zoo, one result row each.
    All,
    /// Trial `i` uses the `i mod 5`-th algorithm; one combined row.
    Mixed,
}

impl AlgoSelection {
    pub fn label(self) -> String {
        match self {
            AlgoSelection::One(k) => k.name().to_string(),
            AlgoSelection::All => "all".into(),
            AlgoSelection::Mixed => "mixed".into(),
        }
    }
}

impl fmt::Display for AlgoSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for AlgoSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(AlgoSelection::All),
            "mixed" => Ok(AlgoSelection::Mixed),
            other => other.parse().map(AlgoSelection::One),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub k: usize,
    pub d: usize,
    pub lipschitz: f64,
    pub radius: f64,
    pub algo: AlgoSelection,
    /// Defaults to `k` (lower bound) or `64 k` (upper bound) when unset.
    pub budget: Option<usize>,
    pub trials: usize,
    pub base_seed: u64,
    /// Cap half-width for `cap_check`.
    pub tau: f64,
    pub k_list: Vec<usize>,
    pub d_list: Vec<usize>,
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub execution: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::LowerBound,
            k: 4,
            d: 1024,
            lipschitz: 1.0,
            radius: 1.0,
            algo: AlgoSelection::All,
            budget: None,
            trials: 100,
            base_seed: 0,
            tau: 0.05,
            k_list: Vec::new(),
            d_list: Vec::new(),
            csv: None,
            json: None,
            execution: Execution::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::arg(format!("bad value {value:?} for {key}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl ExperimentConfig {
    pub fn budget_for(&self, k: usize) -> usize {
        self.budget.unwrap_or(match self.mode {
            Mode::UpperBound => 64 * k,
            _ => k,
        })
    }

    pub fn effective_budget(&self) -> usize {
        self.budget_for(self.k)
    }

    /// Sets one key; keys match the CLI flag names.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "mode" => self.mode = value.parse()?,
            "k" => self.k = parse(key, value)?,
            "d" => self.d = parse(key, value)?,
            "L" | "lipschitz" => self.lipschitz = parse(key, value)?,
            "B" | "radius" => self.radius = parse(key, value)?,
            "algo" => self.algo = value.parse()?,
            "budget" => self.budget = Some(parse(key, value)?),
            "trials" => self.trials = parse(key, value)?,
            "seed" => self.base_seed = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "k_list" | "k-list" => self.k_list = parse_list(key, value)?,
            "d_list" | "d-list" => self.d_list = parse_list(key, value)?,
            "csv" => self.csv = Some(PathBuf::from(value)),
            "json" => self.json = Some(PathBuf::from(value)),
            "parallel" => {
                self.execution = if parse::<bool>(key, value)? {
                    Execution::Parallel
                } else {
                    Execution::Sequential
                }
            }
            other => return Err(Error::arg(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.merge_kv_text(text)?;
        Ok(cfg)
    }

    pub fn merge_kv_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::arg(format!("config line {}: expected key = value", lineno + 1))
            })?;
            self.apply(key, value)
                .map_err(|e| Error::arg(format!("config line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::arg("trials must be at least 1"));
        }
        if self.budget == Some(0) {
            return Err(Error::arg("budget must be at least 1"));
        }
        match self.mode {
            Mode::CapCheck => {
                if self.d < 2 {
                    return Err(Error::arg("cap_check needs d >= 2"));
                }
            }
            Mode::Sweep => {
                if self.k_list.is_empty() || self.d_list.is_empty() {
                    return Err(Error::arg("sweep needs non-empty k_list and d_list"));
                }
                if self.k_list.contains(&0) {
                    return Err(Error::arg("k must be positive"));
                }
            }
            Mode::LemmaSuite => {
                if self.k_list.contains(&0) || self.k == 0 {
                    return Err(Error::arg("k must be positive"));
                }
            }
            Mode::LowerBound | Mode::UpperBound => {
                if self.k == 0 {
                    return Err(Error::arg("k must be positive"));
                }
                if self.d < 2 * self.k {
                    return Err(Error::arg(format!(
                        "dimension d={} must be at least 2k={}",
                        self.d,
                        2 * self.k
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_values_with_comments() {
        let cfg = ExperimentConfig::from_kv_text(
            "# header\nmode = upper_bound\nk=16\nd = 4096 # trailing\nalgo=subgradient-avg\n\
             L = 2.5\nB=0.5\ntrials=50\nseed=7\nk_list = 1, 2,4\n",
        )
        .unwrap();
        assert_eq!(cfg.mode, Mode::UpperBound);
        assert_eq!(cfg.k, 16);
        assert_eq!(cfg.d, 4096);
        assert_eq!(cfg.algo, AlgoSelection::One(AlgorithmKind::SubgradientAveraged));
        assert_eq!(cfg.lipschitz, 2.5);
        assert_eq!(cfg.radius, 0.5);
        assert_eq!(cfg.base_seed, 7);
        assert_eq!(cfg.k_list, vec![1, 2, 4]);
        assert_eq!(cfg.effective_budget(), 1024);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_kv_text("k 4").is_err());
        assert!(ExperimentConfig::from_kv_text("colour = red").is_err());
        assert!(ExperimentConfig::from_kv_text("k = four").is_err());
        assert!(ExperimentConfig::from_kv_text("algo = newton").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        cfg.trials = 1;
        cfg.d = 7;
        assert!(cfg.validate().is_err());
        cfg.mode = Mode::Sweep;
        assert!(cfg.validate().is_err());
    }
}
