//! Search-space definition, parameter vectors, and observation storage.

use thiserror::Error;

use crate::metric::MetricHandle;

/// Errors from space construction, parameter validation, and history queries.
#[derive(Debug, Clone, Error)]
pub enum SpaceError {
    #[error("continuous bounds must be finite with low < high, got [{low}, {high}]")]
    InvalidBounds { low: f64, high: f64 },

    #[error("categorical dimensions need at least 2 categories, got {count}")]
    TooFewCategories { count: usize },

    #[error("a search space needs at least one dimension")]
    EmptySpace,

    #[error("parameter vector has {got} values but the space has {expected} dimensions")]
    DimensionCountMismatch { expected: usize, got: usize },

    #[error("dimension {dim}: continuous value {value} outside [{low}, {high}]")]
    ContinuousOutOfRange {
        dim: usize,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("dimension {dim}: category index {index} outside [0, {count})")]
    CategoryOutOfRange {
        dim: usize,
        index: usize,
        count: usize,
    },

    #[error("dimension {dim}: parameter kind does not match the dimension kind")]
    KindMismatch { dim: usize },

    #[error("observation history is empty")]
    EmptyHistory,
}

/// One coordinate of the search space.
///
/// Category values are dense 0-based indices; any user-facing labels are
/// mapped at the boundary so metric lookups and kernel tables can index by
/// integer.
#[derive(Debug, Clone)]
pub enum Dimension {
    /// A bounded real interval `[low, high]`.
    Continuous { low: f64, high: f64 },
    /// An unordered finite choice with no structure between categories.
    Categorical { count: usize },
    /// A finite choice equipped with a distance metric between categories.
    MetricCategorical { metric: MetricHandle },
}

impl Dimension {
    pub fn continuous(low: f64, high: f64) -> Result<Self, SpaceError> {
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(SpaceError::InvalidBounds { low, high });
        }
        Ok(Dimension::Continuous { low, high })
    }

    pub fn categorical(count: usize) -> Result<Self, SpaceError> {
        if count < 2 {
            return Err(SpaceError::TooFewCategories { count });
        }
        Ok(Dimension::Categorical { count })
    }

    /// A categorical dimension whose category count is taken from the metric.
    pub fn metric_categorical(metric: MetricHandle) -> Result<Self, SpaceError> {
        if metric.count() < 2 {
            return Err(SpaceError::TooFewCategories {
                count: metric.count(),
            });
        }
        Ok(Dimension::MetricCategorical { metric })
    }

    /// Number of categories, or `None` for continuous dimensions.
    pub fn category_count(&self) -> Option<usize> {
        match self {
            Dimension::Continuous { .. } => None,
            Dimension::Categorical { count } => Some(*count),
            Dimension::MetricCategorical { metric } => Some(metric.count()),
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Dimension::Continuous { .. })
    }
}

/// An ordered, fixed product of dimensions.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    dims: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self, SpaceError> {
        if dims.is_empty() {
            return Err(SpaceError::EmptySpace);
        }
        Ok(SearchSpace { dims })
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    /// Number of dimensions.
    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }
}

/// One coordinate of a parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamValue {
    /// Value of a continuous dimension.
    Real(f64),
    /// 0-based category index of a categorical dimension.
    Index(usize),
}

impl ParamValue {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            ParamValue::Real(v) => Some(*v),
            ParamValue::Index(_) => None,
        }
    }

    pub fn as_index(&self) -> Option<usize> {
        match self {
            ParamValue::Real(_) => None,
            ParamValue::Index(i) => Some(*i),
        }
    }
}

/// A point of the search space, one value per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub values: Vec<ParamValue>,
}

impl ParamVector {
    pub fn new(values: Vec<ParamValue>) -> Self {
        ParamVector { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl From<Vec<ParamValue>> for ParamVector {
    fn from(values: Vec<ParamValue>) -> Self {
        ParamVector { values }
    }
}

/// A parameter vector paired with its objective value (lower is better).
#[derive(Debug, Clone)]
pub struct Observation {
    pub params: ParamVector,
    pub value: f64,
}

impl Observation {
    pub fn new(params: ParamVector, value: f64) -> Self {
        Observation { params, value }
    }
}

/// Checks a parameter vector against a space. Pure and deterministic; never
/// mutates its inputs.
pub fn validate(space: &SearchSpace, params: &ParamVector) -> Result<(), SpaceError> {
    if params.values.len() != space.len() {
        return Err(SpaceError::DimensionCountMismatch {
            expected: space.len(),
            got: params.values.len(),
        });
    }
    for (dim_ix, (dim, value)) in space.dims().iter().zip(&params.values).enumerate() {
        match (dim, value) {
            (Dimension::Continuous { low, high }, ParamValue::Real(v)) => {
                if !(v.is_finite() && *low <= *v && *v <= *high) {
                    return Err(SpaceError::ContinuousOutOfRange {
                        dim: dim_ix,
                        value: *v,
                        low: *low,
                        high: *high,
                    });
                }
            }
            (Dimension::Continuous { .. }, ParamValue::Index(_)) => {
                return Err(SpaceError::KindMismatch { dim: dim_ix });
            }
            (dim, ParamValue::Index(index)) => {
                let count = dim.category_count().expect("categorical dimension");
                if *index >= count {
                    return Err(SpaceError::CategoryOutOfRange {
                        dim: dim_ix,
                        index: *index,
                        count,
                    });
                }
            }
            (_, ParamValue::Real(_)) => {
                return Err(SpaceError::KindMismatch { dim: dim_ix });
            }
        }
    }
    Ok(())
}

/// Returns the observation with the minimal value; ties break to the earliest
/// trial index.
pub fn best_observation(history: &[Observation]) -> Result<&Observation, SpaceError> {
    let mut best: Option<&Observation> = None;
    for obs in history {
        match best {
            Some(b) if obs.value >= b.value => {}
            _ => best = Some(obs),
        }
    }
    best.ok_or(SpaceError::EmptyHistory)
}
