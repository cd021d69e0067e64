//! Golden-ratio decomposition: greedy approximation of a target value by a
//! signed subset sum of sampled magnitudes, plus the interval bucketing and
//! the category-fill sample counts that make batch pruning work.
//!
//! A value w in [0, 1] is decomposed over magnitude intervals
//! `I_i = (γ^{i+1}, γ^i]` for i = 1..k: walking i upward, subtract the first
//! available sample from `I_i` whenever the running remainder is at least γ^i.
//! With γ in [1/φ, 1) the remainder after step i stays in [0, γ^i], so the
//! final residual is one-sided: 0 ≤ w − ŵ ≤ γ^k. The base γ = 2/3 is used
//! everywhere downstream; γ below 1/φ breaks the induction and is rejected.

use crate::error::{param_err, Error, Result};
use crate::num::{ceil_guarded, ceil_guarded_u64, log_base, INV_PHI};

/// Parameters of one decomposition problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrdParams {
    gamma: f64,
    eps: f64,
    w_max: f64,
    /// Interval count: ⌈log_γ(eps / w_max)⌉, at least 0.
    k: usize,
    /// Real-valued interval budget log_γ(γ · eps / w_max); for γ = 2/3 this is
    /// log_{3/2}(3 w_max / (2 eps)).
    k_prime: f64,
}

impl GrdParams {
    pub fn new(gamma: f64, eps: f64, w_max: f64) -> Result<Self> {
        if !(INV_PHI..1.0).contains(&gamma) {
            return param_err(
                "gamma",
                format!("must lie in [1/phi, 1) = [{INV_PHI}, 1), got {gamma}"),
            );
        }
        if !(w_max > 0.0 && w_max.is_finite()) {
            return param_err("w_max", "must be positive and finite");
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return param_err("eps", "must be positive and finite");
        }
        let scaled = eps / w_max;
        if gamma * scaled >= 1.0 {
            return param_err("eps", "accuracy too coarse: gamma * eps / w_max >= 1");
        }
        let k = ceil_guarded(log_base(gamma, scaled)).max(0.0) as usize;
        let k_prime = log_base(gamma, gamma * scaled);
        Ok(GrdParams {
            gamma,
            eps,
            w_max,
            k,
            k_prime,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn k_prime(&self) -> f64 {
        self.k_prime
    }

    /// Samples needed so that, with probability at least 1 − delta, every
    /// w in [0, w_max] admits a decomposition: ⌈k' ln(k'/delta)⌉.
    pub fn sample_count(&self, delta: f64) -> Result<u64> {
        if !(delta > 0.0 && delta < 1.0) {
            return param_err("delta", "must lie in (0, 1)");
        }
        Ok(ceil_guarded_u64(self.k_prime * (self.k_prime / delta).ln()))
    }
}

/// Outcome of one greedy decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    /// One bit per supplied sample; set bits participate in the sum.
    pub mask: Vec<bool>,
    /// ŵ = Σ selected samples.
    pub approx: f64,
    /// w − ŵ, always in [0, γ^k · w_max] up to rounding.
    pub residual: f64,
}

impl DecompositionResult {
    pub fn popcount(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

/// Index i in 1..=k with `γ^{i+1} < v ≤ γ^i`, or `None` when v falls outside
/// `(γ^{k+1}, γ]`. Intervals are left-open, right-closed: `v = γ^i` maps to i.
pub fn interval_index(v: f64, gamma: f64, k: usize) -> Result<Option<usize>> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return param_err("gamma", "must lie in (0, 1)");
    }
    if !(v > 0.0) {
        return param_err("v", "must be positive");
    }
    if k == 0 {
        return Ok(None);
    }
    // Float log gives a candidate; exact power comparisons settle boundaries.
    let guess = log_base(gamma, v).ceil() as i64;
    for i in (guess - 2)..=(guess + 2) {
        if i < 1 || i > k as i64 {
            continue;
        }
        let idx = i as i32;
        if gamma.powi(idx + 1) < v && v <= gamma.powi(idx) {
            return Ok(Some(i as usize));
        }
    }
    Ok(None)
}

/// Precomputed sample-to-interval map.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketIndex {
    /// `interval_of_sample[s]` is the interval of sample s, or `None` when the
    /// sample lies outside `(γ^{k+1}, γ]`.
    pub interval_of_sample: Vec<Option<usize>>,
}

impl BucketIndex {
    pub fn new(samples: &[f64], gamma: f64, k: usize) -> Result<Self> {
        let interval_of_sample = samples
            .iter()
            .map(|&v| interval_index(v, gamma, k))
            .collect::<Result<_>>()?;
        Ok(BucketIndex { interval_of_sample })
    }
}

/// Greedy decomposition of `w` in [0, 1] over samples already rescaled to
/// (0, γ]. Samples are claimed first-by-index inside each interval; an
/// interval the greedy pass needs but cannot serve yields a coverage error
/// naming that interval. `w = 0` always succeeds with an empty mask.
pub fn grd_decompose(
    w: f64,
    samples: &[f64],
    params: &GrdParams,
) -> Result<DecompositionResult> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::OutOfRange {
            name: "w",
            value: w,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let gamma = params.gamma;
    let k = params.k;
    let buckets = BucketIndex::new(samples, gamma, k)?;

    let mut mask = vec![false; samples.len()];
    let mut remainder = w;
    for i in 1..=k {
        let threshold = gamma.powi(i as i32);
        if remainder < threshold {
            continue;
        }
        let mut chosen = None;
        for (s, &b) in buckets.interval_of_sample.iter().enumerate() {
            if b == Some(i) && !mask[s] {
                chosen = Some(s);
                break;
            }
        }
        let s = chosen.ok_or(Error::Coverage {
            interval: i,
            total: k,
        })?;
        mask[s] = true;
        remainder -= samples[s];
        // Induction invariant: 0 ≤ remainder ≤ γ^i after step i.
        debug_assert!(
            remainder >= -1e-9 && remainder <= threshold + 1e-9,
            "greedy invariant violated at step {i}: remainder = {remainder}"
        );
    }

    let approx: f64 = samples
        .iter()
        .zip(&mask)
        .filter(|(_, &b)| b)
        .map(|(v, _)| v)
        .sum();
    let residual = w - approx;
    debug_assert!(residual >= -1e-9 && residual <= gamma.powi(k as i32) + 1e-9);
    Ok(DecompositionResult {
        mask,
        approx,
        residual,
    })
}

/// Decomposition of `w` in [0, w_max] over samples on the original scale:
/// rescales by `w_max`, runs [`grd_decompose`], and maps the result back, so
/// `w − eps ≤ ŵ ≤ w` holds on the original scale.
pub fn grd_decompose_scaled(
    w: f64,
    samples: &[f64],
    params: &GrdParams,
) -> Result<DecompositionResult> {
    let w_max = params.w_max;
    if !(0.0..=w_max * (1.0 + 1e-12)).contains(&w) {
        return Err(Error::OutOfRange {
            name: "w",
            value: w,
            lo: 0.0,
            hi: w_max,
        });
    }
    let scaled: Vec<f64> = samples.iter().map(|v| v / w_max).collect();
    let res = grd_decompose((w / w_max).min(1.0), &scaled, params)?;
    let approx: f64 = samples
        .iter()
        .zip(&res.mask)
        .filter(|(_, &b)| b)
        .map(|(v, _)| v)
        .sum();
    Ok(DecompositionResult {
        mask: res.mask,
        approx,
        residual: w - approx,
    })
}

/// Sample count of the rescaled decomposition at base 3/2:
/// `k' = log_{3/2}(3 w_max / (2 eps))`, `m = ⌈k' ln(k'/delta)⌉`.
pub fn grd_sample_count(eps: f64, w_max: f64, delta: f64) -> Result<u64> {
    if !(eps > 0.0 && w_max > 0.0) {
        return param_err("eps", "eps and w_max must be positive");
    }
    if !(delta > 0.0 && delta < 1.0) {
        return param_err("delta", "must lie in (0, 1)");
    }
    let k_prime = log_base(1.5, 3.0 * w_max / (2.0 * eps));
    if k_prime <= 0.0 {
        return param_err("eps", "degenerate: 3 w_max / (2 eps) <= 1 gives k' <= 0");
    }
    Ok(ceil_guarded_u64(k_prime * (k_prime / delta).ln()))
}

/// Samples needed so that, with probability at least 1 − delta, each of k
/// categories of probability at least c (and at most 1/2) receives at least
/// n draws: `M = ⌈(2/c)(n + ln(k/delta))⌉`.
pub fn fillcat_sample_count(c: f64, k: usize, n: usize, delta: f64) -> Result<u64> {
    if !(c > 0.0 && c <= 0.5) {
        return param_err("c", "category probability bound must lie in (0, 1/2]");
    }
    if k == 0 {
        return param_err("k", "need at least one category");
    }
    if !(delta > 0.0 && delta < 1.0) {
        return param_err("delta", "must lie in (0, 1)");
    }
    Ok(ceil_guarded_u64(
        (2.0 / c) * (n as f64 + (k as f64 / delta).ln()),
    ))
}
