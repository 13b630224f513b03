//! Synthetic benchmark problems over combinatorial domains: nearest-embedding
//! search under cosine distance, and shifted-permutation matching under an
//! L1 objective. Both are generated from a seed and evaluate to 0 at their
//! planted optimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::metric::{
    embedding_cosine_metric, factorial, permutation_l1_metric, permutation_unrank, MetricError,
    MetricHandle, MAX_PERMUTATION_SIZE,
};
use crate::space::{Dimension, ParamVector, SearchSpace, SpaceError};

/// Errors from problem generation and evaluation.
#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("embedding problems need at least 2 candidate vectors, got {count}")]
    TooFewVectors { count: usize },

    #[error("embedding vectors need at least 1 component")]
    EmptyEmbedding,

    #[error("category index {index} out of range for {count} categories")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("shift {shift} outside [{low}, {high}]")]
    ShiftOutOfRange { shift: f64, low: f64, high: f64 },

    #[error("expected {expected} parameter values, got {got}")]
    WrongParamCount { expected: usize, got: usize },

    #[error("parameter {dim} has the wrong kind for this problem")]
    WrongParamKind { dim: usize },

    #[error(transparent)]
    Metric(#[from] MetricError),

    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Find the category whose embedding vector is closest, in cosine distance,
/// to a planted optimum vector. The search space is a single
/// metric-categorical dimension carrying that same cosine distance.
#[derive(Debug, Clone)]
pub struct EmbeddingCosineProblem {
    vectors: Vec<Vec<f64>>,
    opt_index: usize,
    metric: MetricHandle,
    space: SearchSpace,
}

impl EmbeddingCosineProblem {
    /// Builds a problem from explicit vectors and a designated optimum index.
    pub fn new(vectors: Vec<Vec<f64>>, opt_index: usize) -> Result<Self, ProblemError> {
        let count = vectors.len();
        if count < 2 {
            return Err(ProblemError::TooFewVectors { count });
        }
        if vectors[0].is_empty() {
            return Err(ProblemError::EmptyEmbedding);
        }
        if opt_index >= count {
            return Err(ProblemError::IndexOutOfRange {
                index: opt_index,
                count,
            });
        }
        let metric = embedding_cosine_metric(vectors.clone())?;
        let space = SearchSpace::new(vec![Dimension::metric_categorical(metric.clone())?])?;
        Ok(EmbeddingCosineProblem {
            vectors,
            opt_index,
            metric,
            space,
        })
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn opt_index(&self) -> usize {
        self.opt_index
    }

    pub fn metric(&self) -> &MetricHandle {
        &self.metric
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    /// Cosine distance from category `x` to the optimum — by construction
    /// identical to the distance the search space's metric reports.
    pub fn eval(&self, x: usize) -> Result<f64, ProblemError> {
        if x >= self.vectors.len() {
            return Err(ProblemError::IndexOutOfRange {
                index: x,
                count: self.vectors.len(),
            });
        }
        Ok(self.metric.distance(x, self.opt_index)?)
    }
}

/// Generates an embedding problem: `c` vectors drawn i.i.d. uniform on
/// `[0,1]^k` (a zero-norm draw is redrawn) and a uniformly drawn optimum.
pub fn generate_embedding_problem<R: Rng>(
    c: usize,
    k: usize,
    rng: &mut R,
) -> Result<EmbeddingCosineProblem, ProblemError> {
    if c < 2 {
        return Err(ProblemError::TooFewVectors { count: c });
    }
    if k == 0 {
        return Err(ProblemError::EmptyEmbedding);
    }
    let mut vectors = Vec::with_capacity(c);
    for _ in 0..c {
        let v = loop {
            let v: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
            if v.iter().map(|x| x * x).sum::<f64>() > 0.0 {
                break v;
            }
        };
        vectors.push(v);
    }
    let opt_index = rng.gen_range(0..c);
    EmbeddingCosineProblem::new(vectors, opt_index)
}

/// Recover a planted permutation and scalar shift: the search space is all
/// `p!` permutations (carrying the elementwise-L1 permutation distance)
/// crossed with a continuous shift in `[−p, p]`, and the objective is the L1
/// distance between the shifted candidate and the shifted optimum.
#[derive(Debug, Clone)]
pub struct PermutationShiftProblem {
    p: usize,
    opt_perm_index: usize,
    opt_perm: Vec<usize>,
    opt_shift: f64,
    space: SearchSpace,
}

impl PermutationShiftProblem {
    /// Builds a problem from an explicit optimum permutation rank and shift.
    pub fn new(p: usize, opt_perm_index: usize, opt_shift: f64) -> Result<Self, ProblemError> {
        let bound = p as f64;
        if !(opt_shift.is_finite() && opt_shift.abs() <= bound) {
            return Err(ProblemError::ShiftOutOfRange {
                shift: opt_shift,
                low: -bound,
                high: bound,
            });
        }
        let opt_perm = permutation_unrank(p, opt_perm_index)?;
        let metric = permutation_l1_metric(p)?;
        let space = SearchSpace::new(vec![
            Dimension::metric_categorical(metric)?,
            Dimension::continuous(-bound, bound)?,
        ])?;
        Ok(PermutationShiftProblem {
            p,
            opt_perm_index,
            opt_perm,
            opt_shift,
            space,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn opt_perm_index(&self) -> usize {
        self.opt_perm_index
    }

    /// The optimum permutation of `{1,…,p}`.
    pub fn opt_perm(&self) -> &[usize] {
        &self.opt_perm
    }

    pub fn opt_shift(&self) -> f64 {
        self.opt_shift
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    /// `Σ_k |s[k] − s_opt[k] + (shift − opt_shift)|` for the permutation of
    /// lexicographic rank `perm_index`.
    pub fn eval(&self, perm_index: usize, shift: f64) -> Result<f64, ProblemError> {
        let bound = self.p as f64;
        if !(shift.is_finite() && shift.abs() <= bound) {
            return Err(ProblemError::ShiftOutOfRange {
                shift,
                low: -bound,
                high: bound,
            });
        }
        let perm = permutation_unrank(self.p, perm_index)?;
        let offset = shift - self.opt_shift;
        Ok(perm
            .iter()
            .zip(&self.opt_perm)
            .map(|(&s, &s_opt)| (s as f64 - s_opt as f64 + offset).abs())
            .sum())
    }
}

/// Generates a permutation-shift problem: optimum rank uniform on `[0, p!)`,
/// optimum shift uniform on `[−p, p]`.
pub fn generate_permutation_problem<R: Rng>(
    p: usize,
    rng: &mut R,
) -> Result<PermutationShiftProblem, ProblemError> {
    if !(2..=MAX_PERMUTATION_SIZE).contains(&p) {
        return Err(MetricError::UnsupportedPermutationSize { p }.into());
    }
    let opt_perm_index = rng.gen_range(0..factorial(p));
    let bound = p as f64;
    let opt_shift = -bound + rng.gen::<f64>() * (2.0 * bound);
    PermutationShiftProblem::new(p, opt_perm_index, opt_shift)
}

/// A benchmark problem of either family, behind one evaluation interface.
#[derive(Debug, Clone)]
pub enum Problem {
    EmbeddingCosine(EmbeddingCosineProblem),
    PermutationShift(PermutationShiftProblem),
}

impl Problem {
    pub fn space(&self) -> &SearchSpace {
        match self {
            Problem::EmbeddingCosine(p) => p.space(),
            Problem::PermutationShift(p) => p.space(),
        }
    }

    /// The analytic minimum of the objective (attained at the planted
    /// optimum).
    pub fn optimum(&self) -> f64 {
        0.0
    }

    /// Evaluates a full parameter vector against this problem's space layout.
    pub fn eval(&self, params: &ParamVector) -> Result<f64, ProblemError> {
        let expected = self.space().len();
        if params.values.len() != expected {
            return Err(ProblemError::WrongParamCount {
                expected,
                got: params.values.len(),
            });
        }
        match self {
            Problem::EmbeddingCosine(p) => {
                let x = params.values[0]
                    .as_index()
                    .ok_or(ProblemError::WrongParamKind { dim: 0 })?;
                p.eval(x)
            }
            Problem::PermutationShift(p) => {
                let perm_index = params.values[0]
                    .as_index()
                    .ok_or(ProblemError::WrongParamKind { dim: 0 })?;
                let shift = params.values[1]
                    .as_real()
                    .ok_or(ProblemError::WrongParamKind { dim: 1 })?;
                p.eval(perm_index, shift)
            }
        }
    }
}

/// Compact, serializable identity of a problem instance: family, size
/// parameters, and the generation seed. Instantiation is pure, so a
/// descriptor fully determines the problem.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ProblemDescriptor {
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

impl ProblemDescriptor {
    /// Stable label used in logs and summaries, encoding the descriptor.
    pub fn label(&self) -> String {
        match self {
            ProblemDescriptor::EmbeddingCosine {
                categories,
                embedding_dim,
                problem_seed,
            } => format!("embedding_cosine_c{categories}_k{embedding_dim}_s{problem_seed}"),
            ProblemDescriptor::PermutationShift { p, problem_seed } => {
                format!("permutation_shift_p{p}_s{problem_seed}")
            }
        }
    }

    /// Regenerates the problem instance this descriptor names.
    pub fn instantiate(&self) -> Result<Problem, ProblemError> {
        match *self {
            ProblemDescriptor::EmbeddingCosine {
                categories,
                embedding_dim,
                problem_seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(problem_seed);
                Ok(Problem::EmbeddingCosine(generate_embedding_problem(
                    categories,
                    embedding_dim,
                    &mut rng,
                )?))
            }
            ProblemDescriptor::PermutationShift { p, problem_seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(problem_seed);
                Ok(Problem::PermutationShift(generate_permutation_problem(
                    p, &mut rng,
                )?))
            }
        }
    }
}
