//! The optimization loop: ask/tell interface, random startup phase,
//! candidate generation from the good estimator, density-ratio acquisition,
//! and a random-search baseline.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::parzen::{build_estimator, split_observations};
use crate::space::{
    best_observation, validate, Dimension, Observation, ParamValue, ParamVector, SearchSpace,
    SpaceError,
};

/// Errors from the optimization loop.
#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("ask called while a previous suggestion is still awaiting tell")]
    PendingAsk,

    #[error("tell called with no suggestion outstanding")]
    NoPendingAsk,

    #[error("objective value must be finite, got {value}")]
    NonFiniteValue { value: f64 },

    #[error(transparent)]
    Space(#[from] SpaceError),

    #[error("objective returned a non-finite value at trial {trial}")]
    NonFiniteObjective { trial: usize },

    #[error("exploration base must be > 1, got {base}")]
    InvalidBase { base: f64 },

    #[error("candidate count must be at least 1")]
    NoCandidates,
}

/// Tunable knobs of the optimizer.
#[derive(Debug, Clone)]
pub struct TpeConfig {
    /// Trials answered by pure random search before the estimators kick in.
    pub n_startup: usize,
    /// Candidates drawn from the good estimator per suggestion.
    pub n_candidates: usize,
    /// Logarithm base of the exploration modification (smaller leans harder
    /// into exploitation).
    pub b: f64,
    /// Per-dimension overrides of `b`, keyed by dimension index.
    pub b_overrides: BTreeMap<usize, f64>,
    /// Apply the exploration modification to the metric kernel scale.
    pub modification_enabled: bool,
    /// Use the metric combinatorial kernel on metric dimensions; when off,
    /// they are treated as plain categorical.
    pub metric_kernel_enabled: bool,
    /// Seed of the optimizer's RNG stream (the only randomness source).
    pub seed: u64,
}

impl Default for TpeConfig {
    fn default() -> Self {
        TpeConfig {
            n_startup: 10,
            n_candidates: 24,
            b: 6.0,
            b_overrides: BTreeMap::new(),
            modification_enabled: true,
            metric_kernel_enabled: true,
            seed: 0,
        }
    }
}

impl TpeConfig {
    /// The exploration base for one dimension, honoring overrides.
    pub fn base_for(&self, dim: usize) -> f64 {
        self.b_overrides.get(&dim).copied().unwrap_or(self.b)
    }

    fn check(&self) -> Result<(), SamplerError> {
        if self.n_candidates == 0 {
            return Err(SamplerError::NoCandidates);
        }
        for &base in std::iter::once(&self.b).chain(self.b_overrides.values()) {
            if !(base.is_finite() && base > 1.0) {
                return Err(SamplerError::InvalidBase { base });
            }
        }
        Ok(())
    }
}

/// Sequential optimizer interface: request a suggestion, report its value.
/// Implementations enforce strict alternation of the two calls.
pub trait AskTell {
    fn ask(&mut self) -> Result<ParamVector, SamplerError>;
    fn tell(&mut self, params: ParamVector, value: f64) -> Result<(), SamplerError>;
}

/// One completed trial of a study, with the running best.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRecord {
    pub trial: usize,
    pub params: ParamVector,
    pub value: f64,
    pub best_value: f64,
}

/// Draws one uniform point of the space: continuous dimensions uniform on
/// their range, categorical dimensions uniform over their indices.
pub fn random_ask<R: Rng>(space: &SearchSpace, rng: &mut R) -> ParamVector {
    let values = space
        .dims()
        .iter()
        .map(|dim| match dim {
            Dimension::Continuous { low, high } => {
                ParamValue::Real(low + rng.gen::<f64>() * (high - low))
            }
            other => {
                let count = other.category_count().expect("categorical dimension");
                ParamValue::Index(rng.gen_range(0..count))
            }
        })
        .collect();
    ParamVector::new(values)
}

/// Tree-structured Parzen estimator optimizer.
pub struct TpeOptimizer {
    space: SearchSpace,
    config: TpeConfig,
    history: Vec<Observation>,
    rng: ChaCha8Rng,
    pending: Option<ParamVector>,
}

impl TpeOptimizer {
    pub fn new(space: SearchSpace, config: TpeConfig) -> Result<Self, SamplerError> {
        config.check()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(TpeOptimizer {
            space,
            config,
            history: Vec::new(),
            rng,
            pending: None,
        })
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn history(&self) -> &[Observation] {
        &self.history
    }

    /// Best observation so far (minimal value, earliest tie).
    pub fn best(&self) -> Result<&Observation, SpaceError> {
        best_observation(&self.history)
    }

    fn suggest(&mut self) -> ParamVector {
        if self.history.len() < self.config.n_startup {
            return random_ask(&self.space, &mut self.rng);
        }
        let split = split_observations(&self.history);
        let good = build_estimator(&split.good, &self.space, &self.config);
        let bad = build_estimator(&split.bad, &self.space, &self.config);
        let candidates = good.sample(&mut self.rng, self.config.n_candidates);
        let mut best_ix = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (ix, candidate) in candidates.iter().enumerate() {
            let score = good
                .log_pdf(candidate)
                .expect("sampled candidates validate")
                - bad.log_pdf(candidate).expect("sampled candidates validate");
            // Strict comparison keeps the earliest candidate on ties.
            if score > best_score {
                best_score = score;
                best_ix = ix;
            }
        }
        candidates
            .into_iter()
            .nth(best_ix)
            .expect("n_candidates >= 1")
    }
}

impl AskTell for TpeOptimizer {
    /// Suggests the next point: uniform random during startup, afterwards the
    /// candidate (drawn from the good estimator) with the largest good/bad
    /// log-density difference.
    fn ask(&mut self) -> Result<ParamVector, SamplerError> {
        if self.pending.is_some() {
            return Err(SamplerError::PendingAsk);
        }
        let suggestion = self.suggest();
        self.pending = Some(suggestion.clone());
        Ok(suggestion)
    }

    /// Records the objective value for the outstanding suggestion. On error
    /// (non-finite value, invalid params) the history is unchanged and the
    /// suggestion stays outstanding.
    fn tell(&mut self, params: ParamVector, value: f64) -> Result<(), SamplerError> {
        if self.pending.is_none() {
            return Err(SamplerError::NoPendingAsk);
        }
        if !value.is_finite() {
            return Err(SamplerError::NonFiniteValue { value });
        }
        validate(&self.space, &params)?;
        self.history.push(Observation::new(params, value));
        self.pending = None;
        Ok(())
    }
}

/// Uniform random search under the same ask/tell contract.
pub struct RandomSearch {
    space: SearchSpace,
    history: Vec<Observation>,
    rng: ChaCha8Rng,
    pending: Option<ParamVector>,
}

impl RandomSearch {
    pub fn new(space: SearchSpace, seed: u64) -> Self {
        RandomSearch {
            space,
            history: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: None,
        }
    }

    pub fn history(&self) -> &[Observation] {
        &self.history
    }
}

impl AskTell for RandomSearch {
    fn ask(&mut self) -> Result<ParamVector, SamplerError> {
        if self.pending.is_some() {
            return Err(SamplerError::PendingAsk);
        }
        let suggestion = random_ask(&self.space, &mut self.rng);
        self.pending = Some(suggestion.clone());
        Ok(suggestion)
    }

    fn tell(&mut self, params: ParamVector, value: f64) -> Result<(), SamplerError> {
        if self.pending.is_none() {
            return Err(SamplerError::NoPendingAsk);
        }
        if !value.is_finite() {
            return Err(SamplerError::NonFiniteValue { value });
        }
        validate(&self.space, &params)?;
        self.history.push(Observation::new(params, value));
        self.pending = None;
        Ok(())
    }
}

/// Runs `budget` ask/tell cycles of any optimizer against an objective,
/// recording the running best. Aborts if the objective returns a non-finite
/// value, naming the offending trial.
pub fn drive_study<O, F>(
    optimizer: &mut O,
    mut objective: F,
    budget: usize,
) -> Result<Vec<StudyRecord>, SamplerError>
where
    O: AskTell,
    F: FnMut(&ParamVector) -> f64,
{
    let mut records = Vec::with_capacity(budget);
    let mut best = f64::INFINITY;
    for trial in 0..budget {
        let params = optimizer.ask()?;
        let value = objective(&params);
        if !value.is_finite() {
            return Err(SamplerError::NonFiniteObjective { trial });
        }
        optimizer.tell(params.clone(), value)?;
        best = best.min(value);
        records.push(StudyRecord {
            trial,
            params,
            value,
            best_value: best,
        });
    }
    Ok(records)
}

/// Convenience wrapper: a fresh TPE optimizer driven for `budget` trials.
pub fn run_study<F>(
    space: &SearchSpace,
    objective: F,
    budget: usize,
    config: &TpeConfig,
) -> Result<Vec<StudyRecord>, SamplerError>
where
    F: FnMut(&ParamVector) -> f64,
{
    let mut optimizer = TpeOptimizer::new(space.clone(), config.clone())?;
    drive_study(&mut optimizer, objective, budget)
}
