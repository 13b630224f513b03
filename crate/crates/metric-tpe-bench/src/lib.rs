//! Shared fixtures for the criterion benchmarks: seeded benchmark problems
//! and optimizers pre-loaded with evaluation history.

use metric_tpe::{AskTell, Observation, Problem, ProblemDescriptor, TpeConfig, TpeOptimizer};

/// The large embedding benchmark instance used across benchmarks.
pub fn embedding_problem(categories: usize, embedding_dim: usize) -> Problem {
    ProblemDescriptor::EmbeddingCosine {
        categories,
        embedding_dim,
        problem_seed: 42,
    }
    .instantiate()
    .expect("valid descriptor")
}

/// A permutation benchmark instance of the given size.
pub fn permutation_problem(p: usize) -> Problem {
    ProblemDescriptor::PermutationShift {
        p,
        problem_seed: 42,
    }
    .instantiate()
    .expect("valid descriptor")
}

/// Drives `n` ask/tell rounds against the problem and returns the optimizer
/// with that history in place, ready to time the next suggestion.
pub fn optimizer_with_history(problem: &Problem, n: usize) -> TpeOptimizer {
    let config = TpeConfig {
        seed: 7,
        ..TpeConfig::default()
    };
    let mut optimizer = TpeOptimizer::new(problem.space().clone(), config).expect("valid config");
    for _ in 0..n {
        let params = optimizer.ask().expect("ask succeeds");
        let value = problem.eval(&params).expect("in-space params");
        optimizer.tell(params, value).expect("tell succeeds");
    }
    optimizer
}

/// The same history as `optimizer_with_history`, exposed as raw observations.
pub fn history_for(problem: &Problem, n: usize) -> Vec<Observation> {
    optimizer_with_history(problem, n).history().to_vec()
}
