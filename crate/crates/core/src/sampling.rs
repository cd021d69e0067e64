//! Hyperbolic (log-uniform) weight distributions, and the interval arithmetic
//! that connects individual-weight magnitude ranges to product-weight ranges.
//!
//! The magnitude density is p(v) ∝ 1/v on `[lo, hi]`. It is sampled by inverse
//! CDF: draw u uniform in [0, 1] and return `lo · (hi/lo)^u`, so `ln v` is
//! uniform on `[ln lo, ln hi]`. The density is scale-invariant: scaling
//! `[lo, hi]` by c scales every sample by c.

use crate::error::{param_err, Error, Result};

/// Magnitude distribution with density `norm_const / v` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicDist {
    lo: f64,
    hi: f64,
    norm_const: f64,
}

impl HyperbolicDist {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo.is_finite()) {
            return param_err("lo", "must be positive and finite");
        }
        if !(hi > lo && hi.is_finite()) {
            return param_err("hi", "must exceed lo and be finite");
        }
        Ok(HyperbolicDist {
            lo,
            hi,
            norm_const: 1.0 / (hi / lo).ln(),
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Normalization constant `1 / ln(hi/lo)`.
    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    /// Density at `v` (zero outside `[lo, hi]`).
    pub fn density(&self, v: f64) -> f64 {
        if v < self.lo || v > self.hi {
            0.0
        } else {
            self.norm_const / v
        }
    }

    /// Inverse-CDF sample: `lo · (hi/lo)^u`, monotone increasing in `u`.
    pub fn sample(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::OutOfRange {
                name: "u",
                value: u,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(self.lo * (self.hi / self.lo).powf(u))
    }
}

/// Sign-symmetric version: density `½ p(|w|)` on `[-hi, -lo] ∪ [lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedHyperbolicDist {
    base: HyperbolicDist,
}

impl SignedHyperbolicDist {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        Ok(SignedHyperbolicDist {
            base: HyperbolicDist::new(lo, hi)?,
        })
    }

    pub fn base(&self) -> &HyperbolicDist {
        &self.base
    }

    pub fn density(&self, w: f64) -> f64 {
        0.5 * self.base.density(w.abs())
    }

    /// Magnitude from `u`, sign from the coin: returns `(−1)^negative · sample(u)`.
    pub fn sample(&self, u: f64, negative: bool) -> Result<f64> {
        let v = self.base.sample(u)?;
        Ok(if negative { -v } else { v })
    }
}

/// Sampling ranges for a per-weight accuracy budget.
///
/// `alpha_prime`/`beta_prime` bound the product of two sampled magnitudes;
/// `alpha`/`beta` bound the individual magnitudes, chosen so that the product
/// range of two draws from `[alpha, beta]` is exactly `[alpha_prime, beta_prime]`:
/// with a = alpha and b = beta, `a·√(ab) = alpha_prime` and `b·√(ab) = beta_prime`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSpec {
    pub alpha_prime: f64,
    pub beta_prime: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Ranges for per-weight accuracy `eps_w` and weight bound `w_max`:
/// `alpha_prime = 2 eps_w / 9`, `beta_prime = 2 w_max / 3`,
/// `q = (alpha_prime · beta_prime)^{1/4}`, `alpha = alpha_prime / q`,
/// `beta = beta_prime / q`.
pub fn ranges_for_accuracy(eps_w: f64, w_max: f64) -> Result<RangeSpec> {
    if !(w_max > 0.0 && w_max.is_finite()) {
        return param_err("w_max", "must be positive and finite");
    }
    if !(eps_w > 0.0 && eps_w < 1.5 * w_max) {
        return param_err(
            "eps_w",
            format!("must lie in (0, 1.5 w_max) = (0, {}), got {eps_w}", 1.5 * w_max),
        );
    }
    let alpha_prime = 2.0 * eps_w / 9.0;
    let beta_prime = 2.0 * w_max / 3.0;
    let q = (alpha_prime * beta_prime).powf(0.25);
    Ok(RangeSpec {
        alpha_prime,
        beta_prime,
        q,
        alpha: alpha_prime / q,
        beta: beta_prime / q,
    })
}
