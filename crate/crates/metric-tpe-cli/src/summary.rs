//! Aggregates trial logs into per-trial curves: for every (problem,
//! optimizer, trial index), the mean of best-so-far values over seeds and
//! its standard error.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::record::{fmt_f64, TrialRecord};

/// Errors from aggregating a trial log.
#[derive(Debug, Error)]
pub enum SummaryError {
    #[error("duplicate record: {problem}/{optimizer}, seed {seed}, trial {trial}")]
    DuplicateRecord {
        problem: String,
        optimizer: String,
        seed: u64,
        trial: usize,
    },

    #[error(
        "inconsistent seed sets for {problem}/{optimizer}: seed {seed} has {got} trials, expected {expected}"
    )]
    InconsistentTrials {
        problem: String,
        optimizer: String,
        seed: u64,
        got: usize,
        expected: usize,
    },

    #[error("{problem}/{optimizer}, seed {seed}: trial indices are not 0..n")]
    NonContiguousTrials {
        problem: String,
        optimizer: String,
        seed: u64,
    },
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub optimizer: String,
    pub problem: String,
    pub trial: usize,
    pub mean_best: f64,
    pub std_err: f64,
}

/// Collapses records to per-trial mean and standard error of `best_value`
/// over seeds, per (problem, optimizer). Every seed of a group must cover
/// the same contiguous trial range. Rows come out ordered by (problem,
/// optimizer, trial).
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<SummaryRow>, SummaryError> {
    let mut groups: BTreeMap<(String, String), BTreeMap<u64, BTreeMap<usize, f64>>> =
        BTreeMap::new();
    for record in records {
        let group = groups
            .entry((record.problem.clone(), record.optimizer.clone()))
            .or_default();
        let previous = group
            .entry(record.seed)
            .or_default()
            .insert(record.trial, record.best_value);
        if previous.is_some() {
            return Err(SummaryError::DuplicateRecord {
                problem: record.problem.clone(),
                optimizer: record.optimizer.clone(),
                seed: record.seed,
                trial: record.trial,
            });
        }
    }

    let mut rows = Vec::new();
    for ((problem, optimizer), seeds) in &groups {
        let expected = seeds.values().next().expect("group is non-empty").len();
        for (&seed, trials) in seeds {
            if trials.len() != expected {
                return Err(SummaryError::InconsistentTrials {
                    problem: problem.clone(),
                    optimizer: optimizer.clone(),
                    seed,
                    got: trials.len(),
                    expected,
                });
            }
            if trials.keys().copied().ne(0..expected) {
                return Err(SummaryError::NonContiguousTrials {
                    problem: problem.clone(),
                    optimizer: optimizer.clone(),
                    seed,
                });
            }
        }
        let n = seeds.len() as f64;
        for trial in 0..expected {
            let bests: Vec<f64> = seeds.values().map(|trials| trials[&trial]).collect();
            let mean = bests.iter().sum::<f64>() / n;
            let std_err = if bests.len() < 2 {
                0.0
            } else {
                let var = bests.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
                var.sqrt() / n.sqrt()
            };
            rows.push(SummaryRow {
                optimizer: optimizer.clone(),
                problem: problem.clone(),
                trial,
                mean_best: mean,
                std_err,
            });
        }
    }
    Ok(rows)
}

/// Renders the summary table as CSV.
pub fn to_csv(rows: &[SummaryRow]) -> String {
    let mut text = String::from("optimizer,problem,trial,mean_best,std_err\n");
    for row in rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            row.optimizer,
            row.problem,
            row.trial,
            fmt_f64(row.mean_best),
            fmt_f64(row.std_err),
        ));
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use metric_tpe::{ParamValue, ParamVector};

    fn record(optimizer: &str, problem: &str, seed: u64, trial: usize, best: f64) -> TrialRecord {
        TrialRecord {
            run_id: format!("{problem}-{optimizer}-s{seed}"),
            optimizer: optimizer.to_string(),
            problem: problem.to_string(),
            seed,
            trial,
            params: ParamVector::new(vec![ParamValue::Index(0)]),
            value: best,
            best_value: best,
        }
    }

    #[test]
    fn single_seed_has_zero_standard_error() {
        let rows = summarize(&[record("tpe", "prob", 0, 0, 1.5)]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean_best, 1.5);
        assert_eq!(rows[0].std_err, 0.0);
    }

    #[test]
    fn two_seeds_match_the_hand_computed_mean_and_error() {
        // best values {1, 3}: mean 2, sample std √2, standard error √2/√2 = 1.
        let rows = summarize(&[
            record("tpe", "prob", 0, 0, 1.0),
            record("tpe", "prob", 1, 0, 3.0),
        ])
        .unwrap();
        assert_eq!(rows[0].mean_best, 2.0);
        assert_relative_eq!(rows[0].std_err, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn monotone_per_seed_curves_give_a_monotone_mean_curve() {
        let mut records = Vec::new();
        for seed in 0..4 {
            let mut best = f64::INFINITY;
            for trial in 0..20 {
                let value = ((seed * 31 + trial * 17) % 13) as f64;
                best = best.min(value);
                records.push(record("tpe", "prob", seed as u64, trial, best));
            }
        }
        let rows = summarize(&records).unwrap();
        assert_eq!(rows.len(), 20);
        for pair in rows.windows(2) {
            assert!(pair[1].mean_best <= pair[0].mean_best);
        }
    }

    #[test]
    fn rows_are_ordered_by_problem_then_optimizer_then_trial() {
        let records = vec![
            record("tpe", "zeta", 0, 0, 1.0),
            record("random", "zeta", 0, 0, 1.0),
            record("tpe", "alpha", 0, 1, 1.0),
            record("tpe", "alpha", 0, 0, 2.0),
        ];
        let rows = summarize(&records).unwrap();
        let keys: Vec<(&str, &str, usize)> = rows
            .iter()
            .map(|r| (r.problem.as_str(), r.optimizer.as_str(), r.trial))
            .collect();
        assert_eq!(
            keys,
            [
                ("alpha", "tpe", 0),
                ("alpha", "tpe", 1),
                ("zeta", "random", 0),
                ("zeta", "tpe", 0),
            ]
        );
    }

    #[test]
    fn inconsistent_seed_sets_are_rejected() {
        let records = vec![
            record("tpe", "prob", 0, 0, 1.0),
            record("tpe", "prob", 0, 1, 1.0),
            record("tpe", "prob", 1, 0, 2.0),
        ];
        assert!(matches!(
            summarize(&records),
            Err(SummaryError::InconsistentTrials {
                seed: 1,
                got: 1,
                expected: 2,
                ..
            })
        ));
    }

    #[test]
    fn duplicate_records_are_rejected() {
        let records = vec![
            record("tpe", "prob", 0, 0, 1.0),
            record("tpe", "prob", 0, 0, 1.0),
        ];
        assert!(matches!(
            summarize(&records),
            Err(SummaryError::DuplicateRecord {
                seed: 0,
                trial: 0,
                ..
            })
        ));
    }

    #[test]
    fn gapped_trial_indices_are_rejected() {
        let records = vec![
            record("tpe", "prob", 0, 0, 1.0),
            record("tpe", "prob", 0, 2, 1.0),
        ];
        assert!(matches!(
            summarize(&records),
            Err(SummaryError::NonContiguousTrials { seed: 0, .. })
        ));
    }

    #[test]
    fn summarize_is_idempotent_over_replays() {
        let records = vec![
            record("tpe", "prob", 0, 0, 3.0),
            record("tpe", "prob", 1, 0, 1.0),
        ];
        assert_eq!(summarize(&records).unwrap(), summarize(&records).unwrap());
    }

    #[test]
    fn csv_has_the_mandated_header_and_shape() {
        let rows = summarize(&[record("tpe", "prob", 0, 0, 0.5)]).unwrap();
        let csv = to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("optimizer,problem,trial,mean_best,std_err")
        );
        assert_eq!(
            lines.next(),
            Some("tpe,prob,0,5.0000000000000000e-1,0.0000000000000000e0")
        );
        assert_eq!(lines.next(), None);
    }
}
