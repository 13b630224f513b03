//! Distance metrics over category indices: built-in constructors, user-supplied
//! metrics with sampled axiom validation, and the per-basis approximate
//! maximum distance used to scale the combinatorial kernel.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::Deref;
use std::path::Path;
use std::sync::{Arc, RwLock};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Full matrices are only materialized up to this many categories; beyond it,
/// rows are computed on demand.
pub const FULL_MATRIX_LIMIT: usize = 1024;

/// Number of sampled triples used to spot-check metric axioms on
/// user-supplied distance functions.
const VALIDATION_TRIPLES: usize = 1000;

/// Relative slack allowed when checking the triangle inequality, so that
/// float round-off in an honest metric does not trip validation.
const TRIANGLE_SLACK: f64 = 1e-9;

/// Errors from metric construction, lookup, and max-distance estimation.
#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metrics need at least 2 categories, got {count}")]
    TooFewCategories { count: usize },

    #[error("category count {arity}^{length} overflows the supported range")]
    CountOverflow { arity: usize, length: usize },

    #[error("permutation metrics support sizes 2 through 12, got {p}")]
    UnsupportedPermutationSize { p: usize },

    #[error("embedding vector {index} has zero norm")]
    ZeroNormVector { index: usize },

    #[error("embedding vector {index} has {got} components, expected {expected}")]
    MismatchedVectorLength {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("category index {index} out of range for {count} categories")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("no bases supplied for max-distance estimation")]
    EmptyBases,

    #[error("full-matrix caching is limited to {FULL_MATRIX_LIMIT} categories, got {count}")]
    MatrixTooLarge { count: usize },

    #[error("distance({i}, {j}) = {value} is negative or non-finite")]
    InvalidDistance { i: usize, j: usize, value: f64 },

    #[error("distance({i}, {i}) = {value}, expected 0")]
    NonzeroSelfDistance { i: usize, value: f64 },

    #[error("distance({i}, {j}) = {forward} but distance({j}, {i}) = {backward}")]
    AsymmetricDistance {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },

    #[error(
        "triangle inequality violated: distance({i}, {k}) = {direct} exceeds \
         distance({i}, {j}) + distance({j}, {k}) = {via}"
    )]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        direct: f64,
        via: f64,
    },

    #[error("distance matrix row {row} has {got} entries, expected {expected}")]
    BadMatrixRow {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("failed to read distance matrix: {0}")]
    Io(#[from] std::io::Error),

    #[error("distance matrix file, line {line}: {message}")]
    MatrixParse { line: usize, message: String },
}

/// Caching strategy for distance lookups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CachePolicy {
    /// Materialize the full C×C distance matrix up front. Limited to
    /// [`FULL_MATRIX_LIMIT`] categories.
    FullMatrix,
    /// Memoize one row per queried basis; repeated row queries are free.
    PerRow,
    /// No caching; every lookup re-evaluates the distance function.
    None,
}

type DistFn = Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>;

enum Backend {
    /// Row-major C×C matrix.
    Matrix(Vec<f64>),
    /// Distance function, with optional per-row memoization.
    Lazy {
        dist: DistFn,
        rows: RwLock<HashMap<usize, Arc<Vec<f64>>>>,
        cache_rows: bool,
    },
}

struct MetricInner {
    count: usize,
    backend: Backend,
}

/// A distance metric over the category indices `0..count`.
///
/// Handles are cheap to clone and safe to share across threads; distances are
/// immutable after construction and memoization is internally synchronized.
#[derive(Clone)]
pub struct MetricHandle {
    inner: Arc<MetricInner>,
}

/// One row of distances from a fixed basis category, however it is stored.
pub enum DistRow<'a> {
    Borrowed(&'a [f64]),
    Shared(Arc<Vec<f64>>),
    Owned(Vec<f64>),
}

impl Deref for DistRow<'_> {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        match self {
            DistRow::Borrowed(s) => s,
            DistRow::Shared(v) => v,
            DistRow::Owned(v) => v,
        }
    }
}

/// Per-basis approximate maximum distances: for each requested basis `x'`,
/// the exact maximum of `dist(x, x')` over all categories `x`. This never
/// exceeds the global maximum pairwise distance, and for a true metric the
/// global maximum is at most twice it.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxDistanceEstimate {
    per_basis: BTreeMap<usize, f64>,
}

impl MaxDistanceEstimate {
    /// The estimate for one basis, if it was requested.
    pub fn get(&self, basis: usize) -> Option<f64> {
        self.per_basis.get(&basis).copied()
    }

    pub fn per_basis(&self) -> &BTreeMap<usize, f64> {
        &self.per_basis
    }

    /// Largest per-basis estimate; equals the true global maximum when the
    /// bases cover every category.
    pub fn overall(&self) -> f64 {
        self.per_basis.values().fold(0.0, |acc, &v| acc.max(v))
    }
}

impl fmt::Debug for MetricHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let backend = match &self.inner.backend {
            Backend::Matrix(_) => "matrix",
            Backend::Lazy {
                cache_rows: true, ..
            } => "lazy(per-row cache)",
            Backend::Lazy {
                cache_rows: false, ..
            } => "lazy(uncached)",
        };
        f.debug_struct("MetricHandle")
            .field("count", &self.inner.count)
            .field("backend", &backend)
            .finish()
    }
}

impl MetricHandle {
    /// Number of categories.
    pub fn count(&self) -> usize {
        self.inner.count
    }

    /// Distance between two category indices.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64, MetricError> {
        let count = self.inner.count;
        for index in [i, j] {
            if index >= count {
                return Err(MetricError::IndexOutOfRange { index, count });
            }
        }
        Ok(match &self.inner.backend {
            Backend::Matrix(m) => m[i * count + j],
            Backend::Lazy { dist, .. } => dist(i, j),
        })
    }

    /// All distances from one basis category, using whatever cache the
    /// handle's policy provides.
    pub fn row(&self, basis: usize) -> Result<DistRow<'_>, MetricError> {
        let count = self.inner.count;
        if basis >= count {
            return Err(MetricError::IndexOutOfRange {
                index: basis,
                count,
            });
        }
        match &self.inner.backend {
            Backend::Matrix(m) => Ok(DistRow::Borrowed(&m[basis * count..(basis + 1) * count])),
            Backend::Lazy {
                dist,
                rows,
                cache_rows,
            } => {
                if *cache_rows {
                    if let Some(row) = rows.read().expect("metric cache lock").get(&basis) {
                        return Ok(DistRow::Shared(Arc::clone(row)));
                    }
                    let row = Arc::new((0..count).map(|j| dist(j, basis)).collect::<Vec<_>>());
                    rows.write()
                        .expect("metric cache lock")
                        .insert(basis, Arc::clone(&row));
                    Ok(DistRow::Shared(row))
                } else {
                    Ok(DistRow::Owned((0..count).map(|j| dist(j, basis)).collect()))
                }
            }
        }
    }

    /// For each requested basis, the maximum distance from that basis to any
    /// category. Bases are deduplicated, so the work is exactly
    /// `count × |unique bases|` distance evaluations on an uncached handle.
    pub fn approx_max_distance(&self, bases: &[usize]) -> Result<MaxDistanceEstimate, MetricError> {
        if bases.is_empty() {
            return Err(MetricError::EmptyBases);
        }
        let unique: BTreeSet<usize> = bases.iter().copied().collect();
        let mut per_basis = BTreeMap::new();
        for &basis in &unique {
            let row = self.row(basis)?;
            let max = row.iter().fold(0.0_f64, |acc, &d| acc.max(d));
            per_basis.insert(basis, max);
        }
        Ok(MaxDistanceEstimate { per_basis })
    }

    /// Wraps a user-supplied distance function. The metric axioms
    /// (nonnegativity, zero self-distance, symmetry, triangle inequality) are
    /// spot-checked on 1000 sampled index triples before the handle is built.
    pub fn from_fn<F>(count: usize, policy: CachePolicy, dist: F) -> Result<Self, MetricError>
    where
        F: Fn(usize, usize) -> f64 + Send + Sync + 'static,
    {
        if count < 2 {
            return Err(MetricError::TooFewCategories { count });
        }
        validate_sampled(count, &dist)?;
        Self::from_checked_fn(count, policy, Arc::new(dist))
    }

    /// Builds a handle from an already-trusted distance function (built-in
    /// constructors validate by construction instead of by sampling).
    fn from_checked_fn(
        count: usize,
        policy: CachePolicy,
        dist: DistFn,
    ) -> Result<Self, MetricError> {
        let backend = match policy {
            CachePolicy::FullMatrix => {
                if count > FULL_MATRIX_LIMIT {
                    return Err(MetricError::MatrixTooLarge { count });
                }
                let mut m = Vec::with_capacity(count * count);
                for i in 0..count {
                    for j in 0..count {
                        m.push(dist(i, j));
                    }
                }
                Backend::Matrix(m)
            }
            CachePolicy::PerRow => Backend::Lazy {
                dist,
                rows: RwLock::new(HashMap::new()),
                cache_rows: true,
            },
            CachePolicy::None => Backend::Lazy {
                dist,
                rows: RwLock::new(HashMap::new()),
                cache_rows: false,
            },
        };
        Ok(MetricHandle {
            inner: Arc::new(MetricInner { count, backend }),
        })
    }

    /// Built-in constructors materialize the full matrix for small spaces and
    /// fall back to per-row memoization for large ones.
    fn builtin(count: usize, dist: DistFn) -> Result<Self, MetricError> {
        let policy = if count <= FULL_MATRIX_LIMIT {
            CachePolicy::FullMatrix
        } else {
            CachePolicy::PerRow
        };
        Self::from_checked_fn(count, policy, dist)
    }

    /// Builds a handle from an explicit distance matrix. The matrix must be
    /// square with a zero diagonal, exactly symmetric, and nonnegative; the
    /// triangle inequality is spot-checked by sampling.
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let count = rows.len();
        if count < 2 {
            return Err(MetricError::TooFewCategories { count });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != count {
                return Err(MetricError::BadMatrixRow {
                    row: i,
                    expected: count,
                    got: row.len(),
                });
            }
        }
        let mut flat = Vec::with_capacity(count * count);
        for row in &rows {
            flat.extend_from_slice(row);
        }
        for i in 0..count {
            if flat[i * count + i] != 0.0 {
                return Err(MetricError::NonzeroSelfDistance {
                    i,
                    value: flat[i * count + i],
                });
            }
            for j in 0..count {
                let v = flat[i * count + j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(MetricError::InvalidDistance { i, j, value: v });
                }
                if flat[j * count + i] != v {
                    return Err(MetricError::AsymmetricDistance {
                        i,
                        j,
                        forward: v,
                        backward: flat[j * count + i],
                    });
                }
            }
        }
        validate_sampled(count, &|i, j| flat[i * count + j])?;
        Ok(MetricHandle {
            inner: Arc::new(MetricInner {
                count,
                backend: Backend::Matrix(flat),
            }),
        })
    }

    /// Loads a distance matrix from a plain-text file: first line the
    /// category count `C`, then `C` lines of `C` space-separated nonnegative
    /// reals (symmetric, zero diagonal).
    pub fn from_matrix_file(path: impl AsRef<Path>) -> Result<Self, MetricError> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        let (_, first) = lines.next().ok_or(MetricError::MatrixParse {
            line: 1,
            message: "empty file".into(),
        })?;
        let count: usize = first.trim().parse().map_err(|e| MetricError::MatrixParse {
            line: 1,
            message: format!("bad category count {first:?}: {e}"),
        })?;
        let mut rows = Vec::with_capacity(count);
        for _ in 0..count {
            let (ix, line) = lines.next().ok_or(MetricError::MatrixParse {
                line: count + 1,
                message: format!("expected {count} matrix rows"),
            })?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse().map_err(|e| MetricError::MatrixParse {
                        line: ix + 1,
                        message: format!("bad entry {tok:?}: {e}"),
                    })
                })
                .collect::<Result<_, _>>()?;
            rows.push(row);
        }
        Self::from_matrix(rows)
    }
}

/// Spot-checks metric axioms on sampled triples using a fixed internal seed,
/// so validation is deterministic.
fn validate_sampled(count: usize, dist: &dyn Fn(usize, usize) -> f64) -> Result<(), MetricError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d65_7472_6963); // "metric"
    for _ in 0..VALIDATION_TRIPLES {
        let i = rng.gen_range(0..count);
        let j = rng.gen_range(0..count);
        let k = rng.gen_range(0..count);
        let dii = dist(i, i);
        if dii != 0.0 {
            return Err(MetricError::NonzeroSelfDistance { i, value: dii });
        }
        let dij = dist(i, j);
        if !(dij.is_finite() && dij >= 0.0) {
            return Err(MetricError::InvalidDistance { i, j, value: dij });
        }
        let dji = dist(j, i);
        if dji != dij {
            return Err(MetricError::AsymmetricDistance {
                i,
                j,
                forward: dij,
                backward: dji,
            });
        }
        let djk = dist(j, k);
        let dik = dist(i, k);
        let via = dij + djk;
        if dik > via + TRIANGLE_SLACK * (1.0 + via.abs()) {
            return Err(MetricError::TriangleViolation {
                i,
                j,
                k,
                direct: dik,
                via,
            });
        }
    }
    Ok(())
}

/// Hamming distance over length-`length` strings with `arity` symbols per
/// position; category `i` decodes to the base-`arity` digits of `i`.
pub fn hamming_metric(length: usize, arity: usize) -> Result<MetricHandle, MetricError> {
    if length == 0 || arity == 0 {
        return Err(MetricError::TooFewCategories { count: 0 });
    }
    let count = arity
        .checked_pow(
            u32::try_from(length).map_err(|_| MetricError::CountOverflow { arity, length })?,
        )
        .ok_or(MetricError::CountOverflow { arity, length })?;
    if count < 2 {
        return Err(MetricError::TooFewCategories { count });
    }
    let dist = move |i: usize, j: usize| {
        let (mut a, mut b) = (i, j);
        let mut differing = 0u32;
        for _ in 0..length {
            if a % arity != b % arity {
                differing += 1;
            }
            a /= arity;
            b /= arity;
        }
        f64::from(differing)
    };
    MetricHandle::builtin(count, Arc::new(dist))
}

/// L1 distance between permutations of `{1,…,p}`; category `i` is the `i`-th
/// permutation in lexicographic order.
pub fn permutation_l1_metric(p: usize) -> Result<MetricHandle, MetricError> {
    if !(2..=MAX_PERMUTATION_SIZE).contains(&p) {
        return Err(MetricError::UnsupportedPermutationSize { p });
    }
    let count = factorial(p);
    let dist = move |i: usize, j: usize| {
        let a = permutation_unrank(p, i).expect("rank in range");
        let b = permutation_unrank(p, j).expect("rank in range");
        a.iter()
            .zip(&b)
            .map(|(&x, &y)| (x as f64 - y as f64).abs())
            .sum()
    };
    MetricHandle::builtin(count, Arc::new(dist))
}

/// Cosine distance `1 − cos(vectors[i], vectors[j])` between embedding
/// vectors. Note this is a distance *measure*, not a true metric: it can
/// violate the triangle inequality, so the 2× max-distance bound is not
/// guaranteed for it.
pub fn embedding_cosine_metric(vectors: Vec<Vec<f64>>) -> Result<MetricHandle, MetricError> {
    let count = vectors.len();
    if count < 2 {
        return Err(MetricError::TooFewCategories { count });
    }
    let dim = vectors[0].len();
    let mut norms = Vec::with_capacity(count);
    for (index, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(MetricError::MismatchedVectorLength {
                index,
                expected: dim,
                got: v.len(),
            });
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(MetricError::ZeroNormVector { index });
        }
        norms.push(norm);
    }
    let vectors = Arc::new(vectors);
    let norms = Arc::new(norms);
    let dist = move |i: usize, j: usize| {
        if i == j {
            return 0.0;
        }
        let dot: f64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
        // Clamp away the tiny negative values float round-off can produce
        // for near-parallel vectors.
        (1.0 - dot / (norms[i] * norms[j])).max(0.0)
    };
    MetricHandle::builtin(count, Arc::new(dist))
}

/// The discrete metric: 0 on the diagonal, 1 everywhere else.
pub fn delta_metric(count: usize) -> Result<MetricHandle, MetricError> {
    if count < 2 {
        return Err(MetricError::TooFewCategories { count });
    }
    let dist = |i: usize, j: usize| if i == j { 0.0 } else { 1.0 };
    MetricHandle::builtin(count, Arc::new(dist))
}

/// Largest permutation size supported by the factorial enumeration
/// (12! still fits comfortably in a usize; 13! of categories would not be
/// practical to enumerate).
pub const MAX_PERMUTATION_SIZE: usize = 12;

/// `n!` for `n ≤ 12` (fits in a usize without overflow).
pub fn factorial(n: usize) -> usize {
    (2..=n).product()
}

/// The `rank`-th permutation of `{1,…,p}` in lexicographic order
/// (rank 0 is the identity `[1, 2, …, p]`).
pub fn permutation_unrank(p: usize, rank: usize) -> Result<Vec<usize>, MetricError> {
    if !(1..=MAX_PERMUTATION_SIZE).contains(&p) {
        return Err(MetricError::UnsupportedPermutationSize { p });
    }
    let count = factorial(p);
    if rank >= count {
        return Err(MetricError::IndexOutOfRange { index: rank, count });
    }
    let mut available: Vec<usize> = (1..=p).collect();
    let mut remainder = rank;
    let mut perm = Vec::with_capacity(p);
    for k in (0..p).rev() {
        let block = factorial(k);
        perm.push(available.remove(remainder / block));
        remainder %= block;
    }
    Ok(perm)
}

/// Lexicographic rank of a permutation of `{1,…,p}` (inverse of
/// [`permutation_unrank`]).
pub fn permutation_rank(perm: &[usize]) -> Result<usize, MetricError> {
    let p = perm.len();
    if !(1..=MAX_PERMUTATION_SIZE).contains(&p) {
        return Err(MetricError::UnsupportedPermutationSize { p });
    }
    let mut seen = vec![false; p];
    for &v in perm {
        if v < 1 || v > p || seen[v - 1] {
            return Err(MetricError::IndexOutOfRange { index: v, count: p });
        }
        seen[v - 1] = true;
    }
    let mut rank = 0;
    for (pos, &v) in perm.iter().enumerate() {
        let smaller_unused = perm[pos + 1..].iter().filter(|&&w| w < v).count();
        rank += smaller_unused * factorial(p - 1 - pos);
    }
    Ok(rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn brute_force_max(metric: &MetricHandle) -> f64 {
        let c = metric.count();
        let mut max = 0.0_f64;
        for i in 0..c {
            for j in 0..c {
                max = max.max(metric.distance(i, j).unwrap());
            }
        }
        max
    }

    #[test]
    fn hamming_distances() {
        let m = hamming_metric(3, 2).unwrap();
        assert_eq!(m.count(), 8);
        assert_eq!(m.distance(0b000, 0b111).unwrap(), 3.0);
        assert_eq!(m.distance(5, 5).unwrap(), 0.0);
        assert_eq!(m.distance(0b101, 0b100).unwrap(), 1.0);
    }

    #[test]
    fn hamming_rejects_overflow() {
        assert!(matches!(
            hamming_metric(40, 10),
            Err(MetricError::CountOverflow { .. })
        ));
    }

    #[test]
    fn permutation_lexicographic_order() {
        let expected: [&[usize]; 6] = [
            &[1, 2, 3],
            &[1, 3, 2],
            &[2, 1, 3],
            &[2, 3, 1],
            &[3, 1, 2],
            &[3, 2, 1],
        ];
        for (rank, perm) in expected.iter().enumerate() {
            assert_eq!(permutation_unrank(3, rank).unwrap(), *perm);
            assert_eq!(permutation_rank(perm).unwrap(), rank);
        }
    }

    #[test]
    fn permutation_distances() {
        let m = permutation_l1_metric(3).unwrap();
        assert_eq!(m.count(), 6);
        assert_eq!(m.distance(0, 0).unwrap(), 0.0);
        let reversed = permutation_rank(&[3, 2, 1]).unwrap();
        assert_eq!(m.distance(0, reversed).unwrap(), 4.0);
    }

    #[test]
    fn permutation_pair_maximum() {
        let m = permutation_l1_metric(2).unwrap();
        assert_eq!(brute_force_max(&m), 2.0);
    }

    #[test]
    fn permutation_size_bounds() {
        assert!(permutation_l1_metric(1).is_err());
        assert!(permutation_l1_metric(13).is_err());
        assert!(permutation_unrank(3, 6).is_err());
        assert!(permutation_rank(&[1, 1, 3]).is_err());
    }

    #[test]
    fn embedding_cosine_distances() {
        let m = embedding_cosine_metric(vec![
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        assert_eq!(m.distance(0, 1).unwrap(), 0.0); // identical vectors
        assert_eq!(m.distance(0, 2).unwrap(), 1.0); // orthogonal
        approx::assert_relative_eq!(
            m.distance(0, 3).unwrap(),
            0.29289321881345254,
            max_relative = 1e-15
        );
    }

    #[test]
    fn embedding_rejects_zero_norm() {
        assert!(matches!(
            embedding_cosine_metric(vec![vec![1.0, 0.0], vec![0.0, 0.0]]),
            Err(MetricError::ZeroNormVector { index: 1 })
        ));
    }

    #[test]
    fn delta_distances() {
        let m = delta_metric(5).unwrap();
        assert_eq!(m.distance(2, 2).unwrap(), 0.0);
        assert_eq!(m.distance(0, 1).unwrap(), 1.0);
        assert_eq!(brute_force_max(&m), 1.0);
    }

    #[test]
    fn approx_max_distance_examples() {
        let delta = delta_metric(4).unwrap();
        assert_eq!(delta.approx_max_distance(&[2]).unwrap().get(2), Some(1.0));

        let perm = permutation_l1_metric(3).unwrap();
        let identity = permutation_rank(&[1, 2, 3]).unwrap();
        assert_eq!(
            perm.approx_max_distance(&[identity]).unwrap().get(identity),
            Some(4.0)
        );

        let ham = hamming_metric(3, 2).unwrap();
        assert_eq!(ham.approx_max_distance(&[0]).unwrap().get(0), Some(3.0));
    }

    #[test]
    fn approx_max_distance_errors() {
        let m = delta_metric(4).unwrap();
        assert!(matches!(
            m.approx_max_distance(&[]),
            Err(MetricError::EmptyBases)
        ));
        assert!(matches!(
            m.approx_max_distance(&[4]),
            Err(MetricError::IndexOutOfRange { index: 4, count: 4 })
        ));
    }

    #[test]
    fn approx_max_distance_evaluation_count() {
        let calls = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&calls);
        let m = MetricHandle::from_fn(10, CachePolicy::None, move |i, j| {
            counter.fetch_add(1, Ordering::Relaxed);
            (i as f64 - j as f64).abs()
        })
        .unwrap();
        calls.store(0, Ordering::Relaxed); // discard construction-time validation calls
                                           // Duplicated bases count once: 3 unique bases × 10 categories.
        m.approx_max_distance(&[1, 3, 5, 3]).unwrap();
        assert_eq!(calls.load(Ordering::Relaxed), 30);
    }

    #[test]
    fn per_row_cache_avoids_reevaluation() {
        let calls = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&calls);
        let m = MetricHandle::from_fn(10, CachePolicy::PerRow, move |i, j| {
            counter.fetch_add(1, Ordering::Relaxed);
            (i as f64 - j as f64).abs()
        })
        .unwrap();
        calls.store(0, Ordering::Relaxed);
        m.approx_max_distance(&[4]).unwrap();
        assert_eq!(calls.load(Ordering::Relaxed), 10);
        m.approx_max_distance(&[4]).unwrap();
        assert_eq!(calls.load(Ordering::Relaxed), 10); // second query served from cache
    }

    #[test]
    fn from_fn_validates_axioms() {
        // Asymmetric function is rejected.
        assert!(matches!(
            MetricHandle::from_fn(8, CachePolicy::None, |i, j| if i < j {
                1.0
            } else if i > j {
                2.0
            } else {
                0.0
            }),
            Err(MetricError::AsymmetricDistance { .. })
        ));
        // Nonzero self-distance is rejected.
        assert!(matches!(
            MetricHandle::from_fn(8, CachePolicy::None, |_, _| 1.0),
            Err(MetricError::NonzeroSelfDistance { .. })
        ));
        // Full-matrix policy refuses oversized spaces.
        assert!(matches!(
            MetricHandle::from_fn(FULL_MATRIX_LIMIT + 1, CachePolicy::FullMatrix, |i, j| {
                if i == j {
                    0.0
                } else {
                    1.0
                }
            }),
            Err(MetricError::MatrixTooLarge { .. })
        ));
    }

    #[test]
    fn from_matrix_validates_shape_and_values() {
        assert!(matches!(
            MetricHandle::from_matrix(vec![vec![0.0, 1.0], vec![1.0]]),
            Err(MetricError::BadMatrixRow { row: 1, .. })
        ));
        assert!(matches!(
            MetricHandle::from_matrix(vec![vec![0.5, 1.0], vec![1.0, 0.0]]),
            Err(MetricError::NonzeroSelfDistance { i: 0, .. })
        ));
        assert!(matches!(
            MetricHandle::from_matrix(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]),
            Err(MetricError::InvalidDistance { .. })
        ));
        assert!(matches!(
            MetricHandle::from_matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]]),
            Err(MetricError::AsymmetricDistance { .. })
        ));
    }

    #[test]
    fn matrix_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("distances.txt");
        std::fs::write(&path, "3\n0 1 2\n1 0 1.5\n2 1.5 0\n").unwrap();
        let m = MetricHandle::from_matrix_file(&path).unwrap();
        assert_eq!(m.count(), 3);
        assert_eq!(m.distance(0, 2).unwrap(), 2.0);
        assert_eq!(m.distance(2, 1).unwrap(), 1.5);
        assert_eq!(m.distance(1, 1).unwrap(), 0.0);
    }

    #[test]
    fn matrix_file_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "2\n0 x\n1 0\n").unwrap();
        assert!(matches!(
            MetricHandle::from_matrix_file(&path),
            Err(MetricError::MatrixParse { line: 2, .. })
        ));
        std::fs::write(&path, "3\n0 1 1\n1 0 1\n").unwrap();
        assert!(matches!(
            MetricHandle::from_matrix_file(&path),
            Err(MetricError::MatrixParse { .. })
        ));
    }

    /// Max-distance sanity on a space small enough to brute-force: every
    /// per-basis value is bounded by the global maximum, twice the per-basis
    /// value bounds it back (true metrics only), and querying every index as
    /// a basis recovers the global maximum exactly.
    fn assert_approx_bound(metric: &MetricHandle) {
        let c = metric.count();
        let global = brute_force_max(metric);
        let all: Vec<usize> = (0..c).collect();
        let est = metric.approx_max_distance(&all).unwrap();
        for (&basis, &per) in est.per_basis() {
            assert!(per <= global + 1e-12, "basis {basis}: {per} > {global}");
            assert!(
                global <= 2.0 * per + 1e-12,
                "basis {basis}: global {global} > 2×{per}"
            );
        }
        assert_eq!(est.overall(), global);
    }

    #[test]
    fn max_distance_bound_on_builtin_metrics() {
        assert_approx_bound(&hamming_metric(4, 2).unwrap());
        assert_approx_bound(&hamming_metric(2, 5).unwrap());
        assert_approx_bound(&permutation_l1_metric(4).unwrap());
        assert_approx_bound(&delta_metric(50).unwrap());
    }

    #[test]
    fn cosine_per_basis_never_exceeds_global_max() {
        // The cosine distance is not a true metric, so only the one-sided
        // bound (and exact recovery over all bases) is guaranteed for it.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vectors: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..6).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let m = embedding_cosine_metric(vectors).unwrap();
        let global = brute_force_max(&m);
        let all: Vec<usize> = (0..m.count()).collect();
        let est = m.approx_max_distance(&all).unwrap();
        for &per in est.per_basis().values() {
            assert!(per <= global);
        }
        assert_eq!(est.overall(), global);
    }

    proptest! {
        #[test]
        fn hamming_satisfies_metric_axioms(
            length in 1usize..6,
            arity in 2usize..4,
            seed in 0u64..200,
        ) {
            let m = hamming_metric(length, arity).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let (i, j, k) = (
                    rng.gen_range(0..m.count()),
                    rng.gen_range(0..m.count()),
                    rng.gen_range(0..m.count()),
                );
                let (dij, djk, dik) = (
                    m.distance(i, j).unwrap(),
                    m.distance(j, k).unwrap(),
                    m.distance(i, k).unwrap(),
                );
                prop_assert!(dij >= 0.0);
                prop_assert_eq!(m.distance(i, i).unwrap(), 0.0);
                prop_assert_eq!(dij, m.distance(j, i).unwrap());
                prop_assert!(dik <= dij + djk);
            }
        }

        #[test]
        fn permutation_satisfies_metric_axioms(p in 2usize..6, seed in 0u64..200) {
            let m = permutation_l1_metric(p).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let (i, j, k) = (
                    rng.gen_range(0..m.count()),
                    rng.gen_range(0..m.count()),
                    rng.gen_range(0..m.count()),
                );
                let (dij, djk, dik) = (
                    m.distance(i, j).unwrap(),
                    m.distance(j, k).unwrap(),
                    m.distance(i, k).unwrap(),
                );
                prop_assert!(dij >= 0.0);
                prop_assert_eq!(m.distance(i, i).unwrap(), 0.0);
                prop_assert_eq!(dij, m.distance(j, i).unwrap());
                prop_assert!(dik <= dij + djk);
            }
        }

        #[test]
        fn cosine_is_symmetric_nonnegative_zero_on_diagonal(seed in 0u64..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vectors: Vec<Vec<f64>> = (0..12)
                .map(|_| (0..4).map(|_| rng.gen::<f64>() + 1e-3).collect())
                .collect();
            let m = embedding_cosine_metric(vectors).unwrap();
            for _ in 0..20 {
                let (i, j) = (rng.gen_range(0..m.count()), rng.gen_range(0..m.count()));
                let dij = m.distance(i, j).unwrap();
                prop_assert!(dij >= 0.0 && dij.is_finite());
                prop_assert_eq!(dij, m.distance(j, i).unwrap());
                prop_assert_eq!(m.distance(i, i).unwrap(), 0.0);
            }
        }

        #[test]
        fn unrank_rank_round_trip(p in 1usize..8, seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rank = rng.gen_range(0..factorial(p));
            let perm = permutation_unrank(p, rank).unwrap();
            let mut sorted = perm.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (1..=p).collect::<Vec<_>>());
            prop_assert_eq!(permutation_rank(&perm).unwrap(), rank);
        }

        #[test]
        fn unrank_is_lexicographically_monotone(p in 2usize..6, seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = rng.gen_range(0..factorial(p));
            let b = rng.gen_range(0..factorial(p));
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(permutation_unrank(p, lo).unwrap() <= permutation_unrank(p, hi).unwrap());
        }
    }
}
