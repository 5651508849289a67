//! Pipeline configuration file.

use std::fmt;
use std::path::{Path, PathBuf};

use kgexplain::embedding::{ModelKind, TrainConfig};
use kgexplain::explain::ExplainConfig;
use kgexplain::rules::{MinerConfig, RuleMode};
use kgexplain::scope::{Linkage, LocalConfig, SelectionMetric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Every problem found in a configuration, reported together.
#[derive(Debug, Error)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for p in &self.0 {
            write!(f, "\n  - {p}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScopeKind {
    #[default]
    Global,
    Local,
    Instance,
}

impl fmt::Display for ScopeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScopeKind::Global => "global",
            ScopeKind::Local => "local",
            ScopeKind::Instance => "instance",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data: DataSection,
    pub model: ModelSection,
    pub mining: MiningSection,
    pub explain: ExplainSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub train: Option<PathBuf>,
    pub valid: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub dim: usize,
    /// Norm order of the TransE distance.
    pub norm: u8,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub margin: f64,
    pub negatives: usize,
    pub l2: f64,
    pub seed: Option<u64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            kind: ModelKind::TransE,
            dim: 16,
            norm: 2,
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 32,
            margin: 1.0,
            negatives: 5,
            l2: 1e-4,
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningSection {
    pub mode: RuleMode,
    pub max_atoms: usize,
    pub min_correct: usize,
    pub min_precision: f64,
    pub beam_width: Option<usize>,
}

impl Default for MiningSection {
    fn default() -> Self {
        let m = MinerConfig::default();
        MiningSection {
            mode: m.mode,
            max_atoms: m.max_atoms,
            min_correct: m.min_correct,
            min_precision: m.min_precision,
            beam_width: m.beam_width,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSection {
    pub scope: ScopeKind,
    /// L2 strength of the surrogate.
    pub l2: f64,
    /// Fixed verdict threshold; calibrated per context when absent.
    pub threshold: Option<f64>,
    pub ranking: bool,
    pub k_min: usize,
    pub k_max: usize,
    pub linkage: Linkage,
    pub selection: SelectionMetric,
    /// Targets explained per predicate in the instance scope.
    pub max_instances: usize,
    /// Restrict to these predicate labels; all when empty.
    pub predicates: Vec<String>,
    pub seed: Option<u64>,
}

impl Default for ExplainSection {
    fn default() -> Self {
        let local = LocalConfig::default();
        ExplainSection {
            scope: ScopeKind::Global,
            l2: 1.0,
            threshold: None,
            ranking: true,
            k_min: local.k_min,
            k_max: local.k_max,
            linkage: local.linkage,
            selection: local.metric,
            max_instances: 20,
            predicates: Vec::new(),
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

/// Largest seed a TOML integer can hold.
pub const MAX_SEED: u64 = i64::MAX as u64;

/// Explain seed derived from a single run seed, kept within TOML range.
pub fn explain_seed_for(seed: u64) -> u64 {
    kgexplain::scope::derive_seed(seed, 1) & MAX_SEED
}

/// Command-line settings that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub scope: Option<ScopeKind>,
    pub rule_mode: Option<RuleMode>,
    pub predicates: Vec<String>,
    pub out: Option<PathBuf>,
}

impl Config {
    /// Parses TOML; relative data and output paths are resolved against
    /// `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| ConfigError(vec![e.to_string()]))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut cfg.data.train, &mut cfg.data.valid, &mut cfg.data.test].into_iter().flatten() {
            resolve(p);
        }
        resolve(&mut cfg.output.dir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// The defaults with example seeds, as printed by `print-config`.
    pub fn example() -> Self {
        let mut cfg = Config::default();
        cfg.data.train = Some(PathBuf::from("train.tsv"));
        cfg.data.valid = Some(PathBuf::from("valid.tsv"));
        cfg.data.test = Some(PathBuf::from("test.tsv"));
        cfg.model.seed = Some(1);
        cfg.explain.seed = Some(2);
        cfg
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    /// `--seed` replaces the model seed and derives the explain seed from
    /// it, so one number reproduces the whole run.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.model.seed = Some(seed);
            self.explain.seed = Some(explain_seed_for(seed));
        }
        if let Some(scope) = o.scope {
            self.explain.scope = scope;
        }
        if let Some(mode) = o.rule_mode {
            self.mining.mode = mode;
        }
        if !o.predicates.is_empty() {
            self.explain.predicates = o.predicates.clone();
        }
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
    }

    /// Lists every problem; data paths are checked only when `needs_data`.
    pub fn validate(&self, needs_data: bool) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        if needs_data {
            for (key, path, required) in [
                ("data.train", &self.data.train, true),
                ("data.valid", &self.data.valid, false),
                ("data.test", &self.data.test, true),
            ] {
                match path {
                    None if required => problems.push(format!("{key} is required")),
                    Some(p) if !p.is_file() => problems.push(format!("{key}: {} does not exist", p.display())),
                    _ => {}
                }
            }
        }
        if self.model.seed.is_none() {
            problems.push("model.seed is required".into());
        }
        if self.explain.seed.is_none() {
            problems.push("explain.seed is required".into());
        }
        for (key, seed) in [("model.seed", self.model.seed), ("explain.seed", self.explain.seed)] {
            if seed.is_some_and(|s| s > MAX_SEED) {
                problems.push(format!("{key} must be at most {MAX_SEED}"));
            }
        }
        if self.model.dim == 0 {
            problems.push("model.dim must be positive".into());
        }
        if self.model.norm != 1 && self.model.norm != 2 {
            problems.push(format!("model.norm must be 1 or 2, got {}", self.model.norm));
        }
        if let Err(e) = self.train_config().validate() {
            problems.push(format!("model: {e}"));
        }
        if let Err(e) = self.miner_config().validate() {
            problems.push(format!("mining: {e}"));
        }
        if !(self.explain.l2.is_finite() && self.explain.l2 >= 0.0) {
            problems.push("explain.l2 must be finite and non-negative".into());
        }
        if self.explain.threshold.is_some_and(|t| !t.is_finite()) {
            problems.push("explain.threshold must be finite".into());
        }
        if self.explain.k_min < 2 || self.explain.k_min > self.explain.k_max {
            problems.push(format!(
                "explain.k_min and explain.k_max must satisfy 2 <= k_min <= k_max, got {} and {}",
                self.explain.k_min, self.explain.k_max
            ));
        }
        if self.explain.max_instances == 0 {
            problems.push("explain.max_instances must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(problems))
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let m = &self.model;
        TrainConfig {
            learning_rate: m.learning_rate,
            epochs: m.epochs,
            batch_size: m.batch_size,
            margin: m.margin,
            negatives: m.negatives,
            l2: m.l2,
            seed: m.seed.unwrap_or_default(),
        }
    }

    pub fn miner_config(&self) -> MinerConfig {
        let m = &self.mining;
        MinerConfig {
            mode: m.mode,
            max_atoms: m.max_atoms,
            min_correct: m.min_correct,
            min_precision: m.min_precision,
            beam_width: m.beam_width,
        }
    }

    pub fn explain_config(&self) -> ExplainConfig {
        ExplainConfig {
            miner: self.miner_config(),
            l2: self.explain.l2,
            threshold: self.explain.threshold,
            ranking: self.explain.ranking,
        }
    }

    pub fn local_config(&self) -> LocalConfig {
        LocalConfig {
            k_min: self.explain.k_min,
            k_max: self.explain.k_max,
            linkage: self.explain.linkage,
            metric: self.explain.selection,
        }
    }

    pub fn explain_seed(&self) -> u64 {
        self.explain.seed.unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_roundtrips() {
        let cfg = Config::example();
        let back = Config::from_toml(&cfg.to_toml(), Path::new("")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn problems_are_listed_together() {
        let text = "[model]\ndim = 0\nnorm = 3\n[explain]\nk_min = 5\nk_max = 3\n";
        let cfg = Config::from_toml(text, Path::new("")).unwrap();
        let err = cfg.validate(true).unwrap_err();
        let all = err.0.join("\n");
        for needle in ["data.train", "data.test", "model.seed", "explain.seed", "model.dim", "model.norm", "k_min"] {
            assert!(all.contains(needle), "{needle} missing from {all}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::from_toml("[model]\ndimension = 4\n", Path::new("")).is_err());
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let cfg = Config::from_toml("[data]\ntrain = \"t.tsv\"\n", Path::new("/srv/kg")).unwrap();
        assert_eq!(cfg.data.train.unwrap(), PathBuf::from("/srv/kg/t.tsv"));
        assert_eq!(cfg.output.dir, PathBuf::from("/srv/kg/out"));
    }

    #[test]
    fn seed_override_sets_both_stages() {
        let mut cfg = Config::default();
        cfg.apply(&Overrides { seed: Some(9), ..Default::default() });
        assert_eq!(cfg.model.seed, Some(9));
        assert!(cfg.explain.seed.is_some());
        assert!(cfg.validate(false).is_ok());
        assert!(Config::from_toml(&cfg.to_toml(), Path::new("")).is_ok());
    }
}
