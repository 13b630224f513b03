//! Black-box optimization of mixed continuous/categorical spaces with a
//! tree-structured Parzen estimator whose categorical kernel can exploit a
//! user-supplied distance between categories, so that structurally similar
//! choices (bit strings, permutations, embedded items) share probability
//! mass instead of being treated as interchangeable symbols.

pub mod kernel;
pub mod metric;
pub mod parzen;
pub mod problems;
pub mod sampler;
pub mod space;

pub use kernel::{
    aitchison_aitken_kernel, combinatorial_kernel, compute_beta, gaussian_kernel, modified_beta,
    KernelError, KernelParams,
};
pub use metric::{
    delta_metric, embedding_cosine_metric, factorial, hamming_metric, permutation_l1_metric,
    permutation_rank, permutation_unrank, CachePolicy, MaxDistanceEstimate, MetricError,
    MetricHandle, MAX_PERMUTATION_SIZE,
};
pub use parzen::{build_estimator, gamma_count, split_observations, Basis, ParzenEstimator};
pub use problems::{
    generate_embedding_problem, generate_permutation_problem, EmbeddingCosineProblem,
    PermutationShiftProblem, Problem, ProblemDescriptor, ProblemError,
};
pub use sampler::{
    drive_study, random_ask, run_study, AskTell, RandomSearch, SamplerError, StudyRecord,
    TpeConfig, TpeOptimizer,
};
pub use space::{
    best_observation, validate, Dimension, Observation, ParamValue, ParamVector, SearchSpace,
    SpaceError,
};
