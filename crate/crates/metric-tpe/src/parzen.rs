//! Parzen estimators: the good/bad observation split, weighted kernel
//! mixtures over the search space, log-density evaluation, and candidate
//! sampling.

use rand::Rng;

use crate::kernel::{
    aitchison_aitken_kernel, compute_beta, continuous_normalizer, modified_beta, normal_cdf,
    normal_quantile, KernelParams,
};
use crate::metric::{MaxDistanceEstimate, MetricHandle};
use crate::sampler::TpeConfig;
use crate::space::{
    validate, Dimension, Observation, ParamValue, ParamVector, SearchSpace, SpaceError,
};

/// Number of observations that go into the "good" set: the best tenth of the
/// history (rounded up), capped at 25.
pub fn gamma_count(n: usize) -> usize {
    n.div_ceil(10).min(25)
}

/// The history partitioned into the best observations and the rest.
#[derive(Debug, Clone)]
pub struct SplitResult {
    pub good: Vec<Observation>,
    pub bad: Vec<Observation>,
}

/// Picks the [`gamma_count`] best observations (ties broken by earlier trial
/// index) into `good`; the remainder is `bad`. Both halves keep the original
/// trial order.
pub fn split_observations(history: &[Observation]) -> SplitResult {
    let take = gamma_count(history.len());
    let mut order: Vec<usize> = (0..history.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        history[a]
            .value
            .total_cmp(&history[b].value)
            .then(a.cmp(&b))
    });
    let mut in_good = vec![false; history.len()];
    for &ix in &order[..take] {
        in_good[ix] = true;
    }
    let mut good = Vec::with_capacity(take);
    let mut bad = Vec::with_capacity(history.len() - take);
    for (ix, obs) in history.iter().enumerate() {
        if in_good[ix] {
            good.push(obs.clone());
        } else {
            bad.push(obs.clone());
        }
    }
    SplitResult { good, bad }
}

/// Per-dimension sampling/density state of one basis.
#[derive(Debug, Clone)]
enum DimState {
    /// Truncated Gaussian on `[low, high]`; `normalizer` is its integral over
    /// the range.
    Gaussian {
        center: f64,
        h: f64,
        low: f64,
        high: f64,
        normalizer: f64,
    },
    /// Flat density over `[low, high]` (prior basis).
    UniformContinuous { low: f64, high: f64 },
    /// Normalized kernel row over the categories.
    Discrete { pmf: Vec<f64> },
}

impl DimState {
    fn density(&self, value: &ParamValue) -> f64 {
        match (self, value) {
            (
                DimState::Gaussian {
                    center,
                    h,
                    normalizer,
                    ..
                },
                ParamValue::Real(v),
            ) => {
                let z = (v - center) / h;
                (-0.5 * z * z).exp() / normalizer
            }
            (DimState::UniformContinuous { low, high }, ParamValue::Real(_)) => 1.0 / (high - low),
            (DimState::Discrete { pmf }, ParamValue::Index(ix)) => pmf[*ix],
            _ => unreachable!("parameter kind checked against the space"),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> ParamValue {
        match self {
            DimState::Gaussian {
                center,
                h,
                low,
                high,
                ..
            } => {
                // Inverse-CDF draw from the truncated Gaussian: exactly one
                // uniform consumed, no rejection loop.
                let cdf_low = normal_cdf((low - center) / h);
                let cdf_high = normal_cdf((high - center) / h);
                let u: f64 = rng.gen();
                let p = cdf_low + u * (cdf_high - cdf_low);
                let v = center + h * normal_quantile(p);
                ParamValue::Real(v.clamp(*low, *high))
            }
            DimState::UniformContinuous { low, high } => {
                ParamValue::Real(low + rng.gen::<f64>() * (high - low))
            }
            DimState::Discrete { pmf } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (ix, &p) in pmf.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return ParamValue::Index(ix);
                    }
                }
                ParamValue::Index(pmf.len() - 1)
            }
        }
    }
}

/// One kernel component of a Parzen estimator: centered on an observation,
/// or the flat prior when `center` is `None`.
#[derive(Debug, Clone)]
pub struct Basis {
    center: Option<ParamVector>,
    params: Vec<KernelParams>,
    dims: Vec<DimState>,
}

impl Basis {
    pub fn center(&self) -> Option<&ParamVector> {
        self.center.as_ref()
    }

    pub fn params(&self) -> &[KernelParams] {
        &self.params
    }
}

/// A weighted mixture of per-observation kernels (plus a flat prior basis)
/// over the full search space.
#[derive(Debug, Clone)]
pub struct ParzenEstimator {
    space: SearchSpace,
    bases: Vec<Basis>,
    weights: Vec<f64>,
    includes_prior: bool,
}

/// How one dimension is treated while building an estimator: metric
/// dimensions degrade to plain categorical when the metric kernel is
/// disabled, which keeps the two configurations byte-for-byte identical
/// everywhere else.
enum DimPlan<'a> {
    Continuous {
        low: f64,
        high: f64,
    },
    Categorical {
        count: usize,
    },
    Metric {
        metric: &'a MetricHandle,
        count: usize,
    },
}

fn plan_dims<'a>(space: &'a SearchSpace, config: &TpeConfig) -> Vec<DimPlan<'a>> {
    space
        .dims()
        .iter()
        .map(|dim| match dim {
            Dimension::Continuous { low, high } => DimPlan::Continuous {
                low: *low,
                high: *high,
            },
            Dimension::Categorical { count } => DimPlan::Categorical { count: *count },
            Dimension::MetricCategorical { metric } => {
                if config.metric_kernel_enabled {
                    DimPlan::Metric {
                        metric,
                        count: metric.count(),
                    }
                } else {
                    DimPlan::Categorical {
                        count: metric.count(),
                    }
                }
            }
        })
        .collect()
}

/// Scott's-rule bandwidth on the min-max-normalized coordinate, clipped to
/// [0.01, 1] so the kernel neither spikes nor exceeds the range; falls back
/// to the full range when fewer than two observations exist.
fn normalized_bandwidth(values: &[f64], continuous_dims: usize) -> f64 {
    let n = values.len();
    if n < 2 {
        return 1.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let h = var.sqrt() * (n as f64).powf(-1.0 / (continuous_dims as f64 + 4.0));
    h.clamp(0.01, 1.0)
}

fn uniform_pmf(count: usize) -> Vec<f64> {
    vec![1.0 / count as f64; count]
}

/// Normalized Aitchison–Aitken row centered on one category.
fn aitchison_aitken_pmf(center: usize, h: f64, count: usize) -> Vec<f64> {
    let row: Vec<f64> = (0..count)
        .map(|x| aitchison_aitken_kernel(x, center, h, count).expect("bandwidth within bounds"))
        .collect();
    let z: f64 = row.iter().sum();
    row.into_iter().map(|k| k / z).collect()
}

/// Normalized metric kernel row from precomputed distances, evaluated as
/// `off^((d/max)²·factor)` with `off = h/(count−1)`. This is algebraically
/// `exp(−½(d/β)²)` for the scale `β` derived from the same `h`, but since
/// `powf(x, 0) = 1` and `powf(x, 1) = x` are exact, the row is bit-for-bit
/// the plain categorical kernel row whenever the metric is the discrete one
/// (and the scale modification is off) — so disabling the metric changes
/// nothing it shouldn't.
fn combinatorial_pmf(dists: &[f64], max_dist: f64, off: f64, factor: f64) -> Vec<f64> {
    let row: Vec<f64> = dists
        .iter()
        .map(|&d| {
            let r = d / max_dist;
            off.powf(r * r * factor)
        })
        .collect();
    let z: f64 = row.iter().sum();
    row.into_iter().map(|k| k / z).collect()
}

/// Builds the Parzen estimator for one observation set: one basis per
/// observation plus a flat prior basis, uniform weights. The observations
/// must be valid points of `space` (the optimizer only stores validated
/// ones).
pub fn build_estimator(
    obs: &[Observation],
    space: &SearchSpace,
    config: &TpeConfig,
) -> ParzenEstimator {
    build_parzen(obs, space, config, true)
}

fn build_parzen(
    obs: &[Observation],
    space: &SearchSpace,
    config: &TpeConfig,
    include_prior: bool,
) -> ParzenEstimator {
    let plans = plan_dims(space, config);
    let n = obs.len();
    let continuous_dims = plans
        .iter()
        .filter(|p| matches!(p, DimPlan::Continuous { .. }))
        .count();

    // Shared per-dimension quantities: continuous bandwidths, categorical
    // bandwidths, and per-basis max distances for metric dimensions.
    let mut cont_h: Vec<Option<f64>> = vec![None; plans.len()];
    let mut cat_h: Vec<Option<f64>> = vec![None; plans.len()];
    let mut max_dists: Vec<Option<MaxDistanceEstimate>> = Vec::with_capacity(plans.len());
    for (d, plan) in plans.iter().enumerate() {
        match plan {
            DimPlan::Continuous { low, high } => {
                let normalized: Vec<f64> = obs
                    .iter()
                    .map(|o| {
                        let v = o.params.values[d].as_real().expect("kind checked");
                        (v - low) / (high - low)
                    })
                    .collect();
                cont_h[d] = Some(normalized_bandwidth(&normalized, continuous_dims) * (high - low));
                max_dists.push(None);
            }
            DimPlan::Categorical { count } => {
                cat_h[d] = Some((*count - 1) as f64 / (n as f64 + 1.0));
                max_dists.push(None);
            }
            DimPlan::Metric { metric, count } => {
                cat_h[d] = Some((*count - 1) as f64 / (n as f64 + 1.0));
                if n == 0 {
                    max_dists.push(None);
                } else {
                    let observed: Vec<usize> = obs
                        .iter()
                        .map(|o| o.params.values[d].as_index().expect("kind checked"))
                        .collect();
                    max_dists.push(Some(
                        metric
                            .approx_max_distance(&observed)
                            .expect("observed categories are in range"),
                    ));
                }
            }
        }
    }

    let mut bases = Vec::with_capacity(n + 1);
    for ob in obs {
        let mut params = Vec::with_capacity(plans.len());
        let mut dims = Vec::with_capacity(plans.len());
        for (d, plan) in plans.iter().enumerate() {
            match plan {
                DimPlan::Continuous { low, high } => {
                    let center = ob.params.values[d].as_real().expect("kind checked");
                    let h = cont_h[d].expect("computed above");
                    let normalizer = continuous_normalizer(center, h, *low, *high)
                        .expect("valid interval and positive bandwidth");
                    params.push(KernelParams::Continuous { h });
                    dims.push(DimState::Gaussian {
                        center,
                        h,
                        low: *low,
                        high: *high,
                        normalizer,
                    });
                }
                DimPlan::Categorical { count } => {
                    let center = ob.params.values[d].as_index().expect("kind checked");
                    let h = cat_h[d].expect("computed above");
                    params.push(KernelParams::Categorical { h });
                    dims.push(DimState::Discrete {
                        pmf: aitchison_aitken_pmf(center, h, *count),
                    });
                }
                DimPlan::Metric { metric, count } => {
                    let center = ob.params.values[d].as_index().expect("kind checked");
                    let h = cat_h[d].expect("computed above");
                    let max_dist = max_dists[d]
                        .as_ref()
                        .and_then(|est| est.get(center))
                        .expect("every observed category was a basis");
                    if max_dist == 0.0 {
                        // Every category sits at distance zero from this
                        // basis, so the kernel is constant: exactly the flat
                        // categorical kernel.
                        params.push(KernelParams::Categorical {
                            h: (*count - 1) as f64,
                        });
                        dims.push(DimState::Discrete {
                            pmf: uniform_pmf(*count),
                        });
                    } else {
                        let raw = compute_beta(max_dist, *count, h)
                            .expect("bandwidth rule keeps h strictly below count-1");
                        let base = config.base_for(d);
                        let (beta, factor) = if config.modification_enabled {
                            (
                                modified_beta(raw, *count, base)
                                    .expect("config validated base > 1"),
                                (*count as f64).ln() / base.ln(),
                            )
                        } else {
                            (raw, 1.0)
                        };
                        let row = metric.row(center).expect("center in range");
                        let off = h / (*count - 1) as f64;
                        params.push(KernelParams::MetricCategorical {
                            beta,
                            base,
                            max_dist,
                        });
                        dims.push(DimState::Discrete {
                            pmf: combinatorial_pmf(&row, max_dist, off, factor),
                        });
                    }
                }
            }
        }
        bases.push(Basis {
            center: Some(ob.params.clone()),
            params,
            dims,
        });
    }

    if include_prior {
        let mut params = Vec::with_capacity(plans.len());
        let mut dims = Vec::with_capacity(plans.len());
        for plan in &plans {
            match plan {
                DimPlan::Continuous { low, high } => {
                    params.push(KernelParams::UniformContinuous);
                    dims.push(DimState::UniformContinuous {
                        low: *low,
                        high: *high,
                    });
                }
                DimPlan::Categorical { count } | DimPlan::Metric { count, .. } => {
                    params.push(KernelParams::Categorical {
                        h: (*count - 1) as f64,
                    });
                    dims.push(DimState::Discrete {
                        pmf: uniform_pmf(*count),
                    });
                }
            }
        }
        bases.push(Basis {
            center: None,
            params,
            dims,
        });
    }

    let weight = 1.0 / bases.len() as f64;
    let weights = vec![weight; bases.len()];
    ParzenEstimator {
        space: space.clone(),
        bases,
        weights,
        includes_prior: include_prior,
    }
}

fn pick_weighted<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (ix, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return ix;
        }
    }
    weights.len() - 1
}

impl ParzenEstimator {
    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn bases(&self) -> &[Basis] {
        &self.bases
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn includes_prior(&self) -> bool {
        self.includes_prior
    }

    /// Log of the mixture density at `x`. Finite whenever the estimator
    /// includes the prior basis, which keeps the density strictly positive
    /// everywhere on the space.
    pub fn log_pdf(&self, x: &ParamVector) -> Result<f64, SpaceError> {
        validate(&self.space, x)?;
        let mut mixture = 0.0;
        for (basis, w) in self.bases.iter().zip(&self.weights) {
            let mut component = *w;
            for (state, value) in basis.dims.iter().zip(&x.values) {
                component *= state.density(value);
            }
            mixture += component;
        }
        Ok(mixture.ln())
    }

    /// Draws `n` parameter vectors: basis chosen proportional to weight, then
    /// one value per dimension (truncated Gaussian for continuous, kernel pmf
    /// for categorical). Consumes exactly `1 + D` uniforms per vector.
    pub fn sample<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<ParamVector> {
        (0..n)
            .map(|_| {
                let basis = &self.bases[pick_weighted(rng, &self.weights)];
                ParamVector::new(basis.dims.iter().map(|state| state.draw(rng)).collect())
            })
            .collect()
    }
}
