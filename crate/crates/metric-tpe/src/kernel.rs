//! Per-dimension kernels (Gaussian, Aitchison–Aitken, metric combinatorial),
//! the bandwidth/scale rules connecting them, and normalization constants.

use statrs::function::erf;
use thiserror::Error;

/// Errors from kernel evaluation and scale computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("bandwidth must be > 0, got {h}")]
    NonPositiveBandwidth { h: f64 },

    #[error("bandwidth {h} exceeds the flat-kernel bound count-1 = {max}")]
    BandwidthAboveFlat { h: f64, max: f64 },

    #[error("bandwidth {h} must be strictly below count-1 = {max} for a positive scale")]
    BandwidthNotBelowFlat { h: f64, max: f64 },

    #[error("max distance must be > 0; every category sits at distance 0 from the basis")]
    DegenerateMaxDistance,

    #[error("kernels need at least 2 categories, got {count}")]
    TooFewCategories { count: usize },

    #[error("category index {index} out of range for {count} categories")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("exploration base must be > 1, got {base}")]
    InvalidBase { base: f64 },

    #[error("kernel scale must be > 0, got {beta}")]
    NonPositiveBeta { beta: f64 },

    #[error("distance must be finite and >= 0, got {dist}")]
    NegativeDistance { dist: f64 },

    #[error("invalid interval [{low}, {high}]")]
    InvalidInterval { low: f64, high: f64 },
}

/// Per-dimension kernel parameters attached to one basis of a Parzen
/// estimator.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelParams {
    /// Truncated Gaussian with bandwidth `h`.
    Continuous { h: f64 },
    /// Flat density over the dimension's range (prior basis).
    UniformContinuous,
    /// Aitchison–Aitken kernel with bandwidth `h` (flat when `h = count-1`).
    Categorical { h: f64 },
    /// Metric combinatorial kernel: `beta` is the effective scale (after the
    /// exploration modification, when enabled), `base` the modification's
    /// logarithm base, and `max_dist` the per-basis approximate maximum
    /// distance the scale was derived from.
    MetricCategorical { beta: f64, base: f64, max_dist: f64 },
}

/// Gaussian kernel `exp(-((x-x')/h)^2 / 2)`, in (0, 1].
pub fn gaussian_kernel(x: f64, x_prime: f64, h: f64) -> Result<f64, KernelError> {
    if !(h.is_finite() && h > 0.0) {
        return Err(KernelError::NonPositiveBandwidth { h });
    }
    let z = (x - x_prime) / h;
    Ok((-0.5 * z * z).exp())
}

/// Aitchison–Aitken kernel: 1 when the categories match, `h/(count-1)`
/// otherwise. `h` may be at most `count-1` (the flat kernel).
pub fn aitchison_aitken_kernel(
    x: usize,
    x_prime: usize,
    h: f64,
    count: usize,
) -> Result<f64, KernelError> {
    if count < 2 {
        return Err(KernelError::TooFewCategories { count });
    }
    for index in [x, x_prime] {
        if index >= count {
            return Err(KernelError::IndexOutOfRange { index, count });
        }
    }
    let max = (count - 1) as f64;
    if !(h.is_finite() && h > 0.0) {
        return Err(KernelError::NonPositiveBandwidth { h });
    }
    if h > max {
        return Err(KernelError::BandwidthAboveFlat { h, max });
    }
    Ok(if x == x_prime { 1.0 } else { h / max })
}

/// Scale of the metric combinatorial kernel:
/// `max_dist / sqrt(2·ln((count-1)/h))`. Chosen so that the kernel evaluated
/// at `max_dist` equals the Aitchison–Aitken off-diagonal weight `h/(count-1)`.
pub fn compute_beta(max_dist: f64, count: usize, h: f64) -> Result<f64, KernelError> {
    if count < 2 {
        return Err(KernelError::TooFewCategories { count });
    }
    let max = (count - 1) as f64;
    if !(h.is_finite() && h > 0.0) {
        return Err(KernelError::NonPositiveBandwidth { h });
    }
    if h >= max {
        return Err(KernelError::BandwidthNotBelowFlat { h, max });
    }
    if !(max_dist.is_finite() && max_dist >= 0.0) {
        return Err(KernelError::NegativeDistance { dist: max_dist });
    }
    if max_dist == 0.0 {
        return Err(KernelError::DegenerateMaxDistance);
    }
    Ok(max_dist / (2.0 * (max / h).ln()).sqrt())
}

/// Exploration-controlled scale: `beta / sqrt(log_base(count))`. Bases below
/// the category count shrink the scale (more exploitation).
pub fn modified_beta(beta: f64, count: usize, base: f64) -> Result<f64, KernelError> {
    if count < 2 {
        return Err(KernelError::TooFewCategories { count });
    }
    if !(base.is_finite() && base > 1.0) {
        return Err(KernelError::InvalidBase { base });
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(KernelError::NonPositiveBeta { beta });
    }
    Ok(beta / ((count as f64).ln() / base.ln()).sqrt())
}

/// Metric combinatorial kernel `exp(-(dist/beta)^2 / 2)`, in (0, 1].
pub fn combinatorial_kernel(dist: f64, beta: f64) -> Result<f64, KernelError> {
    if !(dist.is_finite() && dist >= 0.0) {
        return Err(KernelError::NegativeDistance { dist });
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(KernelError::NonPositiveBeta { beta });
    }
    let z = dist / beta;
    Ok((-0.5 * z * z).exp())
}

/// Sum of a kernel row over all categories — the discrete normalization
/// constant turning the row into a probability mass function.
pub fn categorical_normalizer(
    kernel_row: impl Fn(usize) -> f64,
    count: usize,
) -> Result<f64, KernelError> {
    if count < 2 {
        return Err(KernelError::TooFewCategories { count });
    }
    Ok((0..count).map(kernel_row).sum())
}

/// Integral of the Gaussian kernel centered at `center` over `[low, high]`:
/// `h·sqrt(2π)·(Φ((high-center)/h) − Φ((low-center)/h))`.
pub fn continuous_normalizer(center: f64, h: f64, low: f64, high: f64) -> Result<f64, KernelError> {
    if !(h.is_finite() && h > 0.0) {
        return Err(KernelError::NonPositiveBandwidth { h });
    }
    if !(low.is_finite() && high.is_finite() && low < high) {
        return Err(KernelError::InvalidInterval { low, high });
    }
    let mass = normal_cdf((high - center) / h) - normal_cdf((low - center) / h);
    Ok(h * (2.0 * std::f64::consts::PI).sqrt() * mass)
}

/// Standard normal CDF.
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf::erf(z / std::f64::consts::SQRT_2))
}

/// Standard normal quantile function (inverse CDF). Returns ±infinity at the
/// endpoints 0 and 1.
pub(crate) fn normal_quantile(p: f64) -> f64 {
    std::f64::consts::SQRT_2 * erf::erf_inv(2.0 * p - 1.0)
}
