//! Executes the configured (problem × optimizer × seed) grid: each study is
//! independent and runs in parallel, results are flushed in deterministic
//! grid order as a JSON-lines log plus a CSV summary.

use std::cell::RefCell;
use std::path::{Path, PathBuf};

use metric_tpe::{
    drive_study, ParamVector, Problem, ProblemDescriptor, ProblemError, RandomSearch, SamplerError,
    StudyRecord, TpeConfig, TpeOptimizer,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::record::{to_jsonl, TrialRecord};
use crate::summary::{summarize, to_csv, SummaryError, SummaryRow};

/// Errors from running an experiment grid.
#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("failed to build problem for {run_id}: {source}")]
    Problem {
        run_id: String,
        source: ProblemError,
    },

    #[error("objective failed in {run_id} at trial {trial}: {source}")]
    Objective {
        run_id: String,
        trial: usize,
        source: ProblemError,
    },

    #[error("optimizer failed in {run_id}: {source}")]
    Sampler {
        run_id: String,
        source: SamplerError,
    },

    #[error(transparent)]
    Summary(#[from] SummaryError),

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Everything a run produced: the output paths and the in-memory records.
#[derive(Debug)]
pub struct RunOutput {
    pub trial_log: PathBuf,
    pub summary_csv: PathBuf,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
}

/// One study to execute: a problem instance, an optimizer arm (None = random
/// search), and the effective seed.
struct Task {
    descriptor: ProblemDescriptor,
    optimizer_label: String,
    tpe: Option<TpeConfig>,
    seed: u64,
}

impl Task {
    fn run_id(&self) -> String {
        format!(
            "{}-{}-s{}",
            self.descriptor.label(),
            self.optimizer_label,
            self.seed
        )
    }
}

/// Runs every configured (problem, optimizer, seed) study and writes
/// `trials.jsonl` and `summary.csv` under the configured output directory.
pub fn run_experiment(config: &Config, seed_offset: i64) -> Result<RunOutput, RunnerError> {
    let seeds = config.effective_seeds(seed_offset)?;
    let mut tasks = Vec::new();
    for problem in &config.problems {
        for optimizer in &config.optimizers {
            for &seed in &seeds {
                tasks.push(Task {
                    descriptor: problem.descriptor(),
                    optimizer_label: optimizer.name.label().to_string(),
                    tpe: optimizer.tpe_config(seed),
                    seed,
                });
            }
        }
    }
    run_tasks(config, &tasks, "trials.jsonl", "summary.csv")
}

/// Runs the metric optimizer once per (problem, exploration base, seed) over
/// the configured base grid, labeling each arm with its base, and writes
/// `ablation_trials.jsonl` and `ablation_summary.csv`.
pub fn run_ablation(config: &Config, seed_offset: i64) -> Result<RunOutput, RunnerError> {
    let grid = config.ablation_grid()?;
    let seeds = config.effective_seeds(seed_offset)?;
    let mut tasks = Vec::new();
    for problem in &config.problems {
        for &b in grid {
            for &seed in &seeds {
                tasks.push(Task {
                    descriptor: problem.descriptor(),
                    optimizer_label: ablation_label(b),
                    tpe: Some(TpeConfig {
                        b,
                        seed,
                        ..TpeConfig::default()
                    }),
                    seed,
                });
            }
        }
    }
    run_tasks(
        config,
        &tasks,
        "ablation_trials.jsonl",
        "ablation_summary.csv",
    )
}

/// The optimizer label of one ablation arm; integral bases print without a
/// decimal point ("metric-tpe-b2").
pub fn ablation_label(b: f64) -> String {
    if b.fract() == 0.0 {
        format!("metric-tpe-b{}", b as i64)
    } else {
        format!("metric-tpe-b{b}")
    }
}

fn run_tasks(
    config: &Config,
    tasks: &[Task],
    log_name: &str,
    csv_name: &str,
) -> Result<RunOutput, RunnerError> {
    let per_task: Vec<Vec<TrialRecord>> = tasks
        .par_iter()
        .map(|task| run_one(task, config.budget))
        .collect::<Result<_, _>>()?;
    let records: Vec<TrialRecord> = per_task.into_iter().flatten().collect();
    let summary = summarize(&records)?;

    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|source| RunnerError::Write {
        path: dir.clone(),
        source,
    })?;
    let trial_log = dir.join(log_name);
    write_text(&trial_log, &to_jsonl(&records))?;
    let summary_csv = dir.join(csv_name);
    write_text(&summary_csv, &to_csv(&summary))?;
    Ok(RunOutput {
        trial_log,
        summary_csv,
        records,
        summary,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), RunnerError> {
    std::fs::write(path, text).map_err(|source| RunnerError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn run_one(task: &Task, budget: usize) -> Result<Vec<TrialRecord>, RunnerError> {
    let run_id = task.run_id();
    let problem = task
        .descriptor
        .instantiate()
        .map_err(|source| RunnerError::Problem {
            run_id: run_id.clone(),
            source,
        })?;
    let study = drive(&problem, task, budget, &run_id)?;
    let problem_label = task.descriptor.label();
    Ok(study
        .into_iter()
        .map(|r| TrialRecord {
            run_id: run_id.clone(),
            optimizer: task.optimizer_label.clone(),
            problem: problem_label.clone(),
            seed: task.seed,
            trial: r.trial,
            params: r.params,
            value: r.value,
            best_value: r.best_value,
        })
        .collect())
}

fn drive(
    problem: &Problem,
    task: &Task,
    budget: usize,
    run_id: &str,
) -> Result<Vec<StudyRecord>, RunnerError> {
    // The study loop only passes finite f64 values, so objective errors are
    // smuggled out through a NaN and recovered here with their trial index.
    let failure: RefCell<Option<ProblemError>> = RefCell::new(None);
    let objective = |params: &ParamVector| match problem.eval(params) {
        Ok(value) => value,
        Err(source) => {
            *failure.borrow_mut() = Some(source);
            f64::NAN
        }
    };
    let result =
        match &task.tpe {
            Some(tpe) => {
                let mut optimizer = TpeOptimizer::new(problem.space().clone(), tpe.clone())
                    .map_err(|source| RunnerError::Sampler {
                        run_id: run_id.to_string(),
                        source,
                    })?;
                drive_study(&mut optimizer, objective, budget)
            }
            None => {
                let mut optimizer = RandomSearch::new(problem.space().clone(), task.seed);
                drive_study(&mut optimizer, objective, budget)
            }
        };
    result.map_err(|source| match (failure.into_inner(), &source) {
        (Some(objective_err), SamplerError::NonFiniteObjective { trial }) => {
            RunnerError::Objective {
                run_id: run_id.to_string(),
                trial: *trial,
                source: objective_err,
            }
        }
        _ => RunnerError::Sampler {
            run_id: run_id.to_string(),
            source,
        },
    })
}
