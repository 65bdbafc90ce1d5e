use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adjust::MatchOrder;
use crate::corpus::{bias_for_correlation, CorpusConfig};
use crate::error::{Error, Result};
use crate::learner::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Logistic regression on text features only.
    Lr,
    /// Back-door adjustment with the true confounder.
    BaObserved,
    /// Back-door adjustment with raw preliminary predictions.
    BaRaw,
    /// Back-door adjustment on the confidently predicted subset.
    BaEpsilon,
    /// Back-door adjustment with correlation-matched predictions.
    BaCorrmatch,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Lr,
        Method::BaObserved,
        Method::BaRaw,
        Method::BaEpsilon,
        Method::BaCorrmatch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lr => "lr",
            Method::BaObserved => "ba_observed",
            Method::BaRaw => "ba_raw",
            Method::BaEpsilon => "ba_epsilon",
            Method::BaCorrmatch => "ba_corrmatch",
        }
    }

    /// Whether the method consumes the preliminary classifier's output.
    pub fn uses_preliminary(self) -> bool {
        matches!(self, Method::BaRaw | Method::BaEpsilon | Method::BaCorrmatch)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config("methods", format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasPair {
    pub b_train: f64,
    pub b_test: f64,
}

impl BiasPair {
    pub fn from_correlations(r_train: f64, r_test: f64) -> Self {
        BiasPair {
            b_train: round12(bias_for_correlation(r_train)),
            b_test: round12(bias_for_correlation(r_test)),
        }
    }

    /// `r_train - r_test` under uniform marginals.
    pub fn delta_yz(&self) -> f64 {
        round12((2.0 * self.b_train - 1.0) - (2.0 * self.b_test - 1.0))
    }
}

/// Rounds away binary-fraction noise so grid coordinates print cleanly.
pub(crate) fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Training correlation fixed at `±r_train`, test correlation swept over
/// `-0.8, -0.6, ..., 0.8` for each sign.
pub fn default_bias_grid(r_train: f64) -> Vec<BiasPair> {
    let mut grid = Vec::new();
    for sign in [1.0, -1.0] {
        for k in -4..=4 {
            grid.push(BiasPair::from_correlations(sign * r_train, 0.2 * k as f64));
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: CorpusConfig,
    pub train: TrainConfig,
    pub bias_grid: Vec<BiasPair>,
    pub noise_grid: Vec<f64>,
    pub epsilon: f64,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub n_train: usize,
    pub n_test: usize,
    /// Size of the preliminary study's training set.
    pub n_prelim: usize,
    /// Fraction of each pool reserved for the preliminary study.
    pub prelim_split: f64,
    pub folds: usize,
    pub match_order: MatchOrder,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            corpus: CorpusConfig {
                vocab_size_y: 8,
                vocab_size_z: 8,
                doc_count: 8000,
                ..CorpusConfig::default()
            },
            train: TrainConfig::default(),
            bias_grid: default_bias_grid(0.6),
            noise_grid: (0..8).map(|k| round12(0.05 * k as f64)).collect(),
            epsilon: 0.75,
            methods: Method::ALL.to_vec(),
            seeds: (0..10).collect(),
            n_train: 1000,
            n_test: 1000,
            n_prelim: 2000,
            prelim_split: 0.5,
            folds: 10,
            match_order: MatchOrder::AscendingConfidence,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.corpus.validate()?;
        self.train.validate()?;
        if self.bias_grid.is_empty() {
            return Err(Error::config("bias_grid", "must not be empty"));
        }
        for p in &self.bias_grid {
            for (name, b) in [("bias_grid.b_train", p.b_train), ("bias_grid.b_test", p.b_test)] {
                if !(0.0..=1.0).contains(&b) {
                    return Err(Error::config(name, format!("= {b} must lie in [0, 1]")));
                }
            }
        }
        if self.noise_grid.is_empty() {
            return Err(Error::config("noise_grid", "must not be empty"));
        }
        if let Some(p) = self.noise_grid.iter().find(|p| !(0.0..=0.5).contains(*p)) {
            return Err(Error::config("noise_grid", format!("value {p} outside [0, 0.5]")));
        }
        if !(0.5..=1.0).contains(&self.epsilon) {
            return Err(Error::config("epsilon", "must lie in [0.5, 1]"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "must not be empty"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must not be empty"));
        }
        if self.n_train < 2 || self.n_test < 1 || self.n_prelim < 2 * self.folds {
            return Err(Error::config(
                "n_train",
                "sample sizes too small (n_prelim must cover both classes in every fold)",
            ));
        }
        if !(self.prelim_split > 0.0 && self.prelim_split < 1.0) {
            return Err(Error::config("prelim_split", "must lie in (0, 1)"));
        }
        if self.folds < 2 {
            return Err(Error::config("folds", "must be >= 2"));
        }
        Ok(())
    }

    pub fn has(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|source| Error::Json {
            path: "<inline>".into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
