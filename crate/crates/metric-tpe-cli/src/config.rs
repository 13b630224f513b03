//! Experiment configuration: the problem list, optimizer arms, seed list,
//! evaluation budget, and the optional ablation grid, read from a TOML file
//! and validated before anything runs.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use metric_tpe::{ProblemDescriptor, TpeConfig};
use serde::Deserialize;
use thiserror::Error;

/// Errors from reading or validating a configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("budget must be at least 1")]
    ZeroBudget,

    #[error("the seed list must not be empty")]
    NoSeeds,

    #[error("seed {seed} appears twice in the seed list")]
    DuplicateSeed { seed: u64 },

    #[error("at least one problem must be configured")]
    NoProblems,

    #[error("problem `{label}` is configured twice")]
    DuplicateProblem { label: String },

    #[error("at least one optimizer must be configured")]
    NoOptimizers,

    #[error("optimizer `{label}` is configured twice")]
    DuplicateOptimizer { label: String },

    #[error("exploration base must be finite and > 1, got {b}")]
    InvalidBase { b: f64 },

    #[error("candidate count must be at least 1")]
    ZeroCandidates,

    #[error("this command needs an [ablation] section with a non-empty b_grid")]
    MissingAblation,

    #[error("seed {seed} shifted by {offset} leaves the unsigned 64-bit range")]
    SeedOverflow { seed: u64, offset: i64 },
}

/// A full experiment description.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Directory receiving the trial log and summary CSV.
    pub output_dir: PathBuf,
    /// Objective evaluations per study.
    pub budget: usize,
    /// Optimizer seeds; every (problem, optimizer) pair runs once per seed.
    pub seeds: Vec<u64>,
    pub problems: Vec<ProblemConfig>,
    pub optimizers: Vec<OptimizerConfig>,
    #[serde(default)]
    pub ablation: Option<AblationConfig>,
}

/// One benchmark problem instance, identified by family, size parameters,
/// and its own generation seed (shared by every optimizer arm).
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    EmbeddingCosine {
        categories: usize,
        embedding_dim: usize,
        problem_seed: u64,
    },
    PermutationShift {
        p: usize,
        problem_seed: u64,
    },
}

impl ProblemConfig {
    /// The descriptor this entry names.
    pub fn descriptor(&self) -> ProblemDescriptor {
        match *self {
            ProblemConfig::EmbeddingCosine {
                categories,
                embedding_dim,
                problem_seed,
            } => ProblemDescriptor::EmbeddingCosine {
                categories,
                embedding_dim,
                problem_seed,
            },
            ProblemConfig::PermutationShift { p, problem_seed } => {
                ProblemDescriptor::PermutationShift { p, problem_seed }
            }
        }
    }
}

/// The four optimizer arms of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    /// Uniform random search.
    Random,
    /// Plain TPE: metric dimensions treated as unordered categories.
    Tpe,
    /// TPE with the metric kernel and its exploration-scale modification.
    MetricTpe,
    /// TPE with the metric kernel but without the scale modification.
    MetricTpeNomod,
}

impl OptimizerKind {
    pub fn label(self) -> &'static str {
        match self {
            OptimizerKind::Random => "random",
            OptimizerKind::Tpe => "tpe",
            OptimizerKind::MetricTpe => "metric-tpe",
            OptimizerKind::MetricTpeNomod => "metric-tpe-nomod",
        }
    }
}

/// One optimizer arm with optional overrides of the optimizer defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub name: OptimizerKind,
    #[serde(default)]
    pub n_startup: Option<usize>,
    #[serde(default)]
    pub n_candidates: Option<usize>,
    #[serde(default)]
    pub b: Option<f64>,
}

impl OptimizerConfig {
    /// The optimizer configuration for this arm at one seed; `None` means
    /// the arm is random search.
    pub fn tpe_config(&self, seed: u64) -> Option<TpeConfig> {
        let (metric_kernel_enabled, modification_enabled) = match self.name {
            OptimizerKind::Random => return None,
            OptimizerKind::Tpe => (false, false),
            OptimizerKind::MetricTpe => (true, true),
            OptimizerKind::MetricTpeNomod => (true, false),
        };
        let mut config = TpeConfig {
            metric_kernel_enabled,
            modification_enabled,
            seed,
            ..TpeConfig::default()
        };
        if let Some(n) = self.n_startup {
            config.n_startup = n;
        }
        if let Some(n) = self.n_candidates {
            config.n_candidates = n;
        }
        if let Some(b) = self.b {
            config.b = b;
        }
        Some(config)
    }
}

/// Grid of exploration bases for the ablation command.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationConfig {
    pub b_grid: Vec<f64>,
}

impl Config {
    /// Reads and validates a configuration file.
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Config::from_toml(&text)
    }

    /// Parses and validates configuration text.
    pub fn from_toml(text: &str) -> Result<Config, ConfigError> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.budget == 0 {
            return Err(ConfigError::ZeroBudget);
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::NoSeeds);
        }
        let mut seen = BTreeSet::new();
        for &seed in &self.seeds {
            if !seen.insert(seed) {
                return Err(ConfigError::DuplicateSeed { seed });
            }
        }
        if self.problems.is_empty() {
            return Err(ConfigError::NoProblems);
        }
        let mut labels = BTreeSet::new();
        for problem in &self.problems {
            let label = problem.descriptor().label();
            if !labels.insert(label.clone()) {
                return Err(ConfigError::DuplicateProblem { label });
            }
        }
        if self.optimizers.is_empty() {
            return Err(ConfigError::NoOptimizers);
        }
        let mut labels = BTreeSet::new();
        for optimizer in &self.optimizers {
            if !labels.insert(optimizer.name.label()) {
                return Err(ConfigError::DuplicateOptimizer {
                    label: optimizer.name.label().to_string(),
                });
            }
            if optimizer.n_candidates == Some(0) {
                return Err(ConfigError::ZeroCandidates);
            }
            if let Some(b) = optimizer.b {
                if !(b.is_finite() && b > 1.0) {
                    return Err(ConfigError::InvalidBase { b });
                }
            }
        }
        if let Some(ablation) = &self.ablation {
            for &b in &ablation.b_grid {
                if !(b.is_finite() && b > 1.0) {
                    return Err(ConfigError::InvalidBase { b });
                }
            }
        }
        Ok(())
    }

    /// The seed list with the command-line offset applied.
    pub fn effective_seeds(&self, offset: i64) -> Result<Vec<u64>, ConfigError> {
        self.seeds
            .iter()
            .map(|&seed| {
                seed.checked_add_signed(offset)
                    .ok_or(ConfigError::SeedOverflow { seed, offset })
            })
            .collect()
    }

    /// The ablation grid, required to be present and non-empty.
    pub fn ablation_grid(&self) -> Result<&[f64], ConfigError> {
        match &self.ablation {
            Some(a) if !a.b_grid.is_empty() => Ok(&a.b_grid),
            _ => Err(ConfigError::MissingAblation),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        output_dir = "out"
        budget = 100
        seeds = [0, 1, 2]

        [[problems]]
        family = "embedding-cosine"
        categories = 500
        embedding_dim = 8
        problem_seed = 101

        [[problems]]
        family = "permutation-shift"
        p = 6
        problem_seed = 103

        [[optimizers]]
        name = "random"

        [[optimizers]]
        name = "metric-tpe"
        b = 6.0

        [ablation]
        b_grid = [2, 3, 4]
    "#;

    #[test]
    fn parses_a_full_config() {
        let config = Config::from_toml(MINIMAL).unwrap();
        assert_eq!(config.budget, 100);
        assert_eq!(config.seeds, [0, 1, 2]);
        assert_eq!(config.problems.len(), 2);
        assert_eq!(
            config.problems[0].descriptor().label(),
            "embedding_cosine_c500_k8_s101"
        );
        assert_eq!(config.optimizers[0].name, OptimizerKind::Random);
        // Integer TOML values land in the float grid.
        assert_eq!(config.ablation_grid().unwrap(), [2.0, 3.0, 4.0]);
    }

    #[test]
    fn optimizer_arms_map_to_the_right_flags() {
        let arm = |name| OptimizerConfig {
            name,
            n_startup: None,
            n_candidates: None,
            b: None,
        };
        assert!(arm(OptimizerKind::Random).tpe_config(0).is_none());
        let tpe = arm(OptimizerKind::Tpe).tpe_config(5).unwrap();
        assert!(!tpe.metric_kernel_enabled && !tpe.modification_enabled);
        assert_eq!(tpe.seed, 5);
        let metric = arm(OptimizerKind::MetricTpe).tpe_config(0).unwrap();
        assert!(metric.metric_kernel_enabled && metric.modification_enabled);
        let nomod = arm(OptimizerKind::MetricTpeNomod).tpe_config(0).unwrap();
        assert!(nomod.metric_kernel_enabled && !nomod.modification_enabled);
    }

    #[test]
    fn overrides_replace_defaults() {
        let config: Config = Config::from_toml(
            r#"
            output_dir = "out"
            budget = 1
            seeds = [0]
            [[problems]]
            family = "permutation-shift"
            p = 3
            problem_seed = 1
            [[optimizers]]
            name = "metric-tpe"
            n_startup = 3
            n_candidates = 7
            b = 2.5
        "#,
        )
        .unwrap();
        let tpe = config.optimizers[0].tpe_config(9).unwrap();
        assert_eq!(tpe.n_startup, 3);
        assert_eq!(tpe.n_candidates, 7);
        assert_eq!(tpe.b, 2.5);
    }

    #[test]
    fn rejects_invalid_configs() {
        let replace = |from: &str, to: &str| MINIMAL.replace(from, to);
        assert!(matches!(
            Config::from_toml(&replace("budget = 100", "budget = 0")),
            Err(ConfigError::ZeroBudget)
        ));
        assert!(matches!(
            Config::from_toml(&replace("seeds = [0, 1, 2]", "seeds = []")),
            Err(ConfigError::NoSeeds)
        ));
        assert!(matches!(
            Config::from_toml(&replace("seeds = [0, 1, 2]", "seeds = [0, 1, 1]")),
            Err(ConfigError::DuplicateSeed { seed: 1 })
        ));
        assert!(matches!(
            Config::from_toml(&replace("b_grid = [2, 3, 4]", "b_grid = [2, 1]")),
            Err(ConfigError::InvalidBase { .. })
        ));
        assert!(matches!(
            Config::from_toml(&replace("name = \"random\"", "name = \"metric-tpe\"")),
            Err(ConfigError::DuplicateOptimizer { .. })
        ));
        assert!(Config::from_toml(&replace(
            "family = \"permutation-shift\"",
            "family = \"unknown\""
        ))
        .is_err());
    }

    #[test]
    fn missing_ablation_section_is_an_error_only_when_requested() {
        let text = MINIMAL.replace("[ablation]\n        b_grid = [2, 3, 4]", "");
        let config = Config::from_toml(&text).unwrap();
        assert!(matches!(
            config.ablation_grid(),
            Err(ConfigError::MissingAblation)
        ));
    }

    #[test]
    fn seed_offset_shifts_and_checks_bounds() {
        let config = Config::from_toml(MINIMAL).unwrap();
        assert_eq!(config.effective_seeds(0).unwrap(), [0, 1, 2]);
        assert_eq!(config.effective_seeds(10).unwrap(), [10, 11, 12]);
        assert!(matches!(
            config.effective_seeds(-1),
            Err(ConfigError::SeedOverflow {
                seed: 0,
                offset: -1
            })
        ));
    }
}
