//! Closed-form evaluation of the sample-complexity and error-propagation
//! formulas: the per-weight accuracy budget, the per-layer neuron counts of
//! the batch and recycling constructions, the weight-count ratio, the
//! prior-work comparison figure, and the positive-sequence bounds behind the
//! accuracy budget. All functions are pure.

use serde::{Deserialize, Serialize};
use std::f64::consts::E;

use crate::decomposition::GrdParams;
use crate::error::{param_err, Result};
use crate::network::Architecture;
use crate::num::{ceil_guarded_u64, log_base};

/// How the per-layer spectral factors entering the accuracy budget are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralMode {
    /// Every factor is `max{1, λ_i · 1}`: spectral norms assumed at most one.
    AssumeUnit,
    /// Every factor is `max{1, λ_i · w_max · n_max}`: the generic worst case.
    WorstCase,
    /// Caller-supplied per-layer norms. Since pruning never increases a
    /// weight's magnitude, the spectral norm of the entrywise-absolute target
    /// matrix is a certified upper bound for the pruned network's norm.
    Explicit(Vec<f64>),
}

/// Inputs shared by the bound formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub arch: Architecture,
    pub eps: f64,
    pub delta: f64,
    pub w_max: f64,
    pub f_max: f64,
    pub spectral_mode: SpectralMode,
}

impl BoundInputs {
    pub fn new(
        arch: Architecture,
        eps: f64,
        delta: f64,
        w_max: f64,
        f_max: f64,
        spectral_mode: SpectralMode,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return param_err("eps", "must be positive and finite");
        }
        if !(delta > 0.0 && delta < 1.0) {
            return param_err("delta", "must lie in (0, 1)");
        }
        if !(w_max > 0.0 && w_max.is_finite()) {
            return param_err("w_max", "must be positive and finite");
        }
        if !(f_max > 0.0 && f_max.is_finite()) {
            return param_err("f_max", "must be positive and finite");
        }
        if let SpectralMode::Explicit(norms) = &spectral_mode {
            if norms.len() != arch.depth() {
                return param_err(
                    "spectral_mode",
                    format!("expected {} per-layer norms, got {}", arch.depth(), norms.len()),
                );
            }
            if norms.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
                return param_err("spectral_mode", "norms must be finite and non-negative");
            }
        }
        Ok(BoundInputs {
            arch,
            eps,
            delta,
            w_max,
            f_max,
            spectral_mode,
        })
    }

    fn spectral_factor(&self, layer: usize) -> f64 {
        let lambda = self.arch.activations()[layer].lipschitz();
        let norm = match &self.spectral_mode {
            SpectralMode::AssumeUnit => 1.0,
            SpectralMode::WorstCase => self.w_max * self.arch.n_max() as f64,
            SpectralMode::Explicit(norms) => norms[layer],
        };
        (lambda * norm).max(1.0)
    }
}

/// Per-weight accuracy budget: if every weight of the approximating network is
/// within this distance of the corresponding target weight, the outputs stay
/// within `eps` in the 2-norm on the inputs of interest:
///
/// `eps_w = eps / (e · ℓ · λ_max · n_max^{3/2} · f_max · Π_i max{1, λ_i ‖Ŵ_i‖₂})`.
pub fn epsilon_w(inputs: &BoundInputs) -> Result<f64> {
    let ell = inputs.arch.depth() as f64;
    let n_max = inputs.arch.n_max() as f64;
    let product: f64 = (0..inputs.arch.depth())
        .map(|i| inputs.spectral_factor(i))
        .product();
    Ok(inputs.eps
        / (E * ell * inputs.arch.lambda_max() * n_max.powf(1.5) * inputs.f_max * product))
}

/// Interval budget of the batch construction: `k' = log_{3/2}(3 w_max / eps_w)`.
pub fn k_prime(inputs: &BoundInputs, eps_w: f64) -> Result<f64> {
    if !(eps_w > 0.0 && eps_w < 3.0 * inputs.w_max) {
        return param_err("eps_w", "must lie in (0, 3 w_max) for a positive k'");
    }
    Ok(log_base(1.5, 3.0 * inputs.w_max / eps_w))
}

/// Per-layer neuron counts of the batch construction:
/// `M_i = ⌈16 k' (n_i n_{i−1} + ln(2 ℓ k' / delta))⌉`.
pub fn layer_samples_thm1(inputs: &BoundInputs, eps_w: f64) -> Result<Vec<u64>> {
    let kp = k_prime(inputs, eps_w)?;
    let ell = inputs.arch.depth() as f64;
    let log_term = (2.0 * ell * kp / inputs.delta).ln();
    Ok(inputs
        .arch
        .widths()
        .windows(2)
        .map(|w| ceil_guarded_u64(16.0 * kp * ((w[0] * w[1]) as f64 + log_term)))
        .collect())
}

/// Per-layer neuron counts of the recycling construction:
/// `M_i = ⌈2 k' (n_i n_{i−1} + 4 max{n_i, n_{i−1}} ln(2 k' N_F / delta))⌉`.
pub fn layer_samples_recycle(inputs: &BoundInputs, eps_w: f64) -> Result<Vec<u64>> {
    let kp = k_prime(inputs, eps_w)?;
    let n_f = inputs.arch.weight_count() as f64;
    let log_term = (2.0 * kp * n_f / inputs.delta).ln();
    Ok(inputs
        .arch
        .widths()
        .windows(2)
        .map(|w| {
            let pairs = (w[0] * w[1]) as f64;
            let wide = w[0].max(w[1]) as f64;
            ceil_guarded_u64(2.0 * kp * (pairs + 4.0 * wide * log_term))
        })
        .collect())
}

/// Weight-count ratio `N_G / N_F` for a given per-layer neuron plan:
/// `N_G = Σ (n_{i−1} + n_i) M_i`, `N_F = Σ n_{i−1} n_i`.
pub fn weight_count_ratio(arch: &Architecture, m: &[u64]) -> Result<f64> {
    if m.len() != arch.depth() {
        return param_err("m", "need one entry per layer");
    }
    let n_g: f64 = arch
        .widths()
        .windows(2)
        .zip(m)
        .map(|(w, &mi)| (w[0] + w[1]) as f64 * mi as f64)
        .sum();
    Ok(n_g / arch.weight_count() as f64)
}

/// Cap on the batch-plan weight-count ratio: `32 n_max k'` plus the slack
/// the additive log term and the per-layer ceiling contribute.
pub fn batch_ratio_cap(arch: &Architecture, kp: f64, delta: f64) -> f64 {
    let n_max = arch.n_max() as f64;
    let ell = arch.depth() as f64;
    let log_term = (2.0 * ell * kp / delta).ln();
    32.0 * n_max * kp
        + 2.0 * n_max * ell * (16.0 * kp * log_term + 1.0) / arch.weight_count() as f64
}

/// Prior-work comparison: neurons per intermediate layer under uniform
/// sampling, `n_max² ⌈64 ℓ² n_max³ ln(2 n_max² ℓ / delta) / eps²⌉`.
/// Natural log throughout. One entry per layer.
pub fn prior_work_layer_samples(inputs: &BoundInputs) -> Result<Vec<u128>> {
    let ell = inputs.arch.depth() as f64;
    let n_max = inputs.arch.n_max() as f64;
    let per_weight = 64.0 * ell * ell * n_max.powi(3)
        * (2.0 * n_max * n_max * ell / inputs.delta).ln()
        / (inputs.eps * inputs.eps);
    let per_weight = (per_weight - 1e-9).ceil().max(0.0) as u128;
    let per_layer = per_weight * (inputs.arch.n_max() as u128).pow(2);
    Ok(vec![per_layer; inputs.arch.depth()])
}

/// Bound on a sequence with `x_t ≤ a_t x_{t−1} + b_t`:
/// for any feasible `tau` (at most `tau` of the `a_t` fall below `1 + 1/tau`),
/// `x_T ≤ e (x_0 + c) Π_{a_t ≥ 1+1/tau} a_t` with
/// `c = max_t b_t / max{1/tau, a_t − 1}`.
pub fn sequence_bound(a: &[f64], b: &[f64], x0: f64, tau: f64) -> Result<f64> {
    if a.len() != b.len() {
        return param_err("b", "a and b must have equal length");
    }
    if a.iter().chain(b).any(|&v| !(v >= 0.0)) {
        return param_err("a", "all a_t and b_t must be non-negative");
    }
    if !(x0 >= 0.0) {
        return param_err("x0", "must be non-negative");
    }
    if !(tau > 0.0) {
        return param_err("tau", "must be positive");
    }
    let threshold = 1.0 + 1.0 / tau;
    let below = a.iter().filter(|&&at| at < threshold).count() as f64;
    if below > tau {
        return param_err(
            "tau",
            format!("infeasible: {below} of the a_t fall below 1 + 1/tau = {threshold}"),
        );
    }
    let c = b
        .iter()
        .zip(a)
        .map(|(&bt, &at)| bt / (1.0 / tau).max(at - 1.0))
        .fold(0.0, f64::max);
    let product: f64 = a.iter().filter(|&&at| at >= threshold).product();
    Ok(E * (x0 + c) * product)
}

/// Simpler form for `x_0 = 0`: `x_T ≤ e T max_t b_t Π_t max{1, a_t}`.
pub fn sequence_bound_simple(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return param_err("b", "a and b must have equal length");
    }
    if a.iter().chain(b).any(|&v| !(v >= 0.0)) {
        return param_err("a", "all a_t and b_t must be non-negative");
    }
    let t = a.len() as f64;
    let max_b = b.iter().fold(0.0, |m: f64, &v| m.max(v));
    let product: f64 = a.iter().map(|&at| at.max(1.0)).product();
    Ok(E * t * max_b * product)
}

/// A feasible `tau` for [`sequence_bound`]: `max{1/(x−1), |{a_t < x}|}` for any x > 1.
pub fn feasible_tau(a: &[f64], x: f64) -> Result<f64> {
    if !(x > 1.0) {
        return param_err("x", "must exceed 1");
    }
    let below = a.iter().filter(|&&at| at < x).count() as f64;
    Ok((1.0 / (x - 1.0)).max(below))
}

/// Everything the closed-form analysis produces for one configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundReport {
    pub eps_w: f64,
    pub k_prime: f64,
    /// Decomposition interval count at per-side accuracy eps_w/2:
    /// `⌈log_{3/2}(2 w_max / eps_w)⌉`.
    pub k: u64,
    #[serde(rename = "M_thm1")]
    pub m_thm1: Vec<u64>,
    #[serde(rename = "M_recycle")]
    pub m_recycle: Vec<u64>,
    #[serde(rename = "M_combined")]
    pub m_combined: Vec<u64>,
    /// `N_G / N_F` for the combined plan.
    pub ratio: f64,
    #[serde(rename = "malach_M")]
    pub prior_work_m: Vec<u128>,
    /// Worst per-layer `M_i / n_max²` of the batch plan.
    pub per_weight_thm1: f64,
}

/// Assemble the full report for one configuration.
pub fn bound_report(inputs: &BoundInputs) -> Result<BoundReport> {
    let eps_w = epsilon_w(inputs)?;
    let kp = k_prime(inputs, eps_w)?;
    let grd = GrdParams::new(2.0 / 3.0, eps_w / 2.0, inputs.w_max)?;
    let m_thm1 = layer_samples_thm1(inputs, eps_w)?;
    let m_recycle = layer_samples_recycle(inputs, eps_w)?;
    // Both constructions hold simultaneously, so the cheaper one suffices.
    let m_combined: Vec<u64> = m_thm1
        .iter()
        .zip(&m_recycle)
        .map(|(&a, &b)| a.min(b))
        .collect();
    let ratio = weight_count_ratio(&inputs.arch, &m_combined)?;
    debug_assert!(
        weight_count_ratio(&inputs.arch, &m_thm1)?
            <= batch_ratio_cap(&inputs.arch, kp, inputs.delta),
        "weight-count ratio exceeds its closed-form cap"
    );
    let n_max_sq = (inputs.arch.n_max() * inputs.arch.n_max()) as f64;
    let per_weight_thm1 = m_thm1
        .iter()
        .map(|&m| m as f64 / n_max_sq)
        .fold(0.0, f64::max);
    Ok(BoundReport {
        eps_w,
        k_prime: kp,
        k: grd.k() as u64,
        m_thm1,
        m_recycle,
        m_combined,
        ratio,
        prior_work_m: prior_work_layer_samples(inputs)?,
        per_weight_thm1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::ActivationKind;
    use crate::rng::CounterRng;
    use proptest::prelude::*;

    fn uniform_arch(n: usize, ell: usize) -> Architecture {
        Architecture::uniform(vec![n; ell + 1], ActivationKind::Relu).unwrap()
    }

    fn headline_inputs(mode: SpectralMode) -> BoundInputs {
        BoundInputs::new(uniform_arch(100, 10), 0.01, 0.01, 1.0, 1.0, mode).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn accuracy_budget_matches_direct_evaluation() {
        let inputs = headline_inputs(SpectralMode::AssumeUnit);
        let eps_w = epsilon_w(&inputs).unwrap();
        assert!(close(eps_w, 0.01 / (E * 10.0 * 1000.0), 1e-12));
        assert!(close(eps_w, 3.679e-7, 1e-3));
    }

    #[test]
    fn accuracy_budget_is_linear_in_eps() {
        let a = headline_inputs(SpectralMode::AssumeUnit);
        let mut b = a.clone();
        b.eps = a.eps / 8.0;
        assert!(close(
            epsilon_w(&b).unwrap(),
            epsilon_w(&a).unwrap() / 8.0,
            1e-12
        ));
    }

    #[test]
    fn worst_case_mode_recovers_exponential_depth_formula() {
        // With w_max = 1 the worst-case product is n_max^ℓ, so
        // eps_w = eps / (e ℓ n_max^{3/2 + ℓ}).
        let inputs = BoundInputs::new(
            uniform_arch(5, 3),
            0.01,
            0.01,
            1.0,
            1.0,
            SpectralMode::WorstCase,
        )
        .unwrap();
        let eps_w = epsilon_w(&inputs).unwrap();
        let direct = 0.01 / (E * 3.0 * 5.0f64.powf(1.5 + 3.0));
        assert!(close(eps_w, direct, 1e-12));
    }

    #[test]
    fn headline_per_weight_counts() {
        // Unit-norm assumption: M_i / n_max² stays at or below 630.
        let inputs = headline_inputs(SpectralMode::AssumeUnit);
        let eps_w = epsilon_w(&inputs).unwrap();
        let m = layer_samples_thm1(&inputs, eps_w).unwrap();
        let per_weight = m[0] as f64 / 1e4;
        assert!(per_weight <= 630.0, "per weight = {per_weight}");
        assert!(per_weight > 620.0, "per weight = {per_weight}");

        // Worst-case norms: at or below 2450.
        let inputs = headline_inputs(SpectralMode::WorstCase);
        let eps_w = epsilon_w(&inputs).unwrap();
        let m = layer_samples_thm1(&inputs, eps_w).unwrap();
        let per_weight = m[0] as f64 / 1e4;
        assert!(per_weight <= 2450.0, "per weight = {per_weight}");
        assert!(per_weight > 2430.0, "per weight = {per_weight}");
    }

    #[test]
    fn headline_recycle_counts() {
        let inputs = headline_inputs(SpectralMode::AssumeUnit);
        let eps_w = epsilon_w(&inputs).unwrap();
        let m = layer_samples_recycle(&inputs, eps_w).unwrap();
        let per_weight = m[0] as f64 / 1e4;
        assert!(per_weight <= 144.0, "per weight = {per_weight}");
        assert!(per_weight > 140.0, "per weight = {per_weight}");

        let inputs = headline_inputs(SpectralMode::WorstCase);
        let eps_w = epsilon_w(&inputs).unwrap();
        let m = layer_samples_recycle(&inputs, eps_w).unwrap();
        let per_weight = m[0] as f64 / 1e4;
        assert!(per_weight <= 574.0, "per weight = {per_weight}");
        assert!(per_weight > 565.0, "per weight = {per_weight}");
    }

    #[test]
    fn accuracy_budget_inverts_the_sequence_bound() {
        // The budget is eps divided by the layerwise error recursion's bound:
        // with a_i = λ_i‖Ŵ_i‖₂ and b = λ_max n_max^{3/2} f_max, the simple
        // sequence bound e·ℓ·max b·Π max{1, a_i} times eps_w must give eps back.
        let norms = vec![0.7, 1.9, 1.3];
        let arch = Architecture::new(
            vec![6, 4, 5, 3],
            vec![
                ActivationKind::Relu,
                ActivationKind::Logistic,
                ActivationKind::Tanh,
            ],
        )
        .unwrap();
        let f_max = 1.7;
        let inputs = BoundInputs::new(
            arch.clone(),
            0.03,
            0.1,
            1.0,
            f_max,
            SpectralMode::Explicit(norms.clone()),
        )
        .unwrap();
        let eps_w = epsilon_w(&inputs).unwrap();

        let lambda_max = arch.lambda_max();
        let n_max = arch.n_max() as f64;
        let a: Vec<f64> = norms
            .iter()
            .zip(arch.activations())
            .map(|(&s, act)| act.lipschitz() * s)
            .collect();
        let b = vec![lambda_max * n_max.powf(1.5) * f_max; a.len()];
        let route_two = eps_w * sequence_bound_simple(&a, &b).unwrap();
        assert!(close(route_two, 0.03, 1e-12), "round trip gave {route_two}");
    }

    #[test]
    fn k_prime_respects_closed_form_cap() {
        // Under the unit-norm setting, k' ≤ log_{3/2}(3 e ℓ n_max^{3/2} / eps).
        let inputs = headline_inputs(SpectralMode::AssumeUnit);
        let eps_w = epsilon_w(&inputs).unwrap();
        let kp = k_prime(&inputs, eps_w).unwrap();
        let cap = log_base(1.5, 3.0 * E * 10.0 * 1000.0 / 0.01);
        assert!(kp <= cap + 1e-9, "k' = {kp}, cap = {cap}");
    }

    #[test]
    fn recycle_count_single_pair_reduction() {
        // ℓ = 1, n = (1, 1): N_F = 1 and the formula collapses.
        let inputs = BoundInputs::new(
            uniform_arch(1, 1),
            0.1,
            0.1,
            1.0,
            1.0,
            SpectralMode::AssumeUnit,
        )
        .unwrap();
        let eps_w = epsilon_w(&inputs).unwrap();
        let kp = k_prime(&inputs, eps_w).unwrap();
        let m = layer_samples_recycle(&inputs, eps_w).unwrap();
        let direct = ceil_guarded_u64(2.0 * kp * (1.0 + 4.0 * (2.0 * kp / 0.1).ln()));
        assert_eq!(m, vec![direct]);
    }

    #[test]
    fn degenerate_k_prime_is_rejected() {
        let inputs = headline_inputs(SpectralMode::AssumeUnit);
        assert!(layer_samples_thm1(&inputs, 3.0).is_err());
    }

    #[test]
    fn category_fill_with_true_interval_count_lower_bounds_batch_plan() {
        // The batch plan is the fill formula at category probability 1/(8k')
        // with 2k categories and per-layer confidence delta/ℓ, after widening
        // k to k' inside the log. The unwidened count never exceeds the plan.
        let inputs = headline_inputs(SpectralMode::AssumeUnit);
        let eps_w = epsilon_w(&inputs).unwrap();
        let kp = k_prime(&inputs, eps_w).unwrap();
        let k = GrdParams::new(2.0 / 3.0, eps_w / 2.0, 1.0).unwrap().k();
        let plan = layer_samples_thm1(&inputs, eps_w).unwrap();
        let delta_i = inputs.delta / inputs.arch.depth() as f64;
        let fill = crate::decomposition::fillcat_sample_count(
            1.0 / (8.0 * kp),
            2 * k,
            100 * 100,
            delta_i,
        )
        .unwrap();
        assert!(fill <= plan[0], "fill {fill} exceeds plan {}", plan[0]);
        // And it stays within the widening slack of a single log step.
        assert!(plan[0] - fill <= (16.0 * kp) as u64 + 1);
    }

    #[test]
    fn ratio_uniform_width_algebra() {
        // M_i = 16 k' n² exactly (k' = 2, n = 3 keeps it integer) gives 32 n k'.
        let arch = uniform_arch(3, 2);
        let m = vec![16 * 2 * 9, 16 * 2 * 9];
        let ratio = weight_count_ratio(&arch, &m).unwrap();
        assert!(close(ratio, 32.0 * 3.0 * 2.0, 1e-12));
    }

    #[test]
    fn ratio_single_pair_is_twice_m() {
        let arch = uniform_arch(1, 1);
        assert!(close(weight_count_ratio(&arch, &[57]).unwrap(), 114.0, 1e-12));
    }

    #[test]
    fn ratio_of_batch_plan_meets_closed_form_cap() {
        let inputs = headline_inputs(SpectralMode::AssumeUnit);
        let eps_w = epsilon_w(&inputs).unwrap();
        let kp = k_prime(&inputs, eps_w).unwrap();
        let m = layer_samples_thm1(&inputs, eps_w).unwrap();
        let ratio = weight_count_ratio(&inputs.arch, &m).unwrap();
        assert!(ratio <= batch_ratio_cap(&inputs.arch, kp, inputs.delta));
        assert!(ratio <= 32.0 * 100.0 * 39.3);
    }

    #[test]
    fn prior_work_figure_and_scalings() {
        let inputs = headline_inputs(SpectralMode::AssumeUnit);
        let per_layer = prior_work_layer_samples(&inputs).unwrap()[0];
        let per_weight = per_layer as f64 / 1e4;
        assert!(per_weight <= 2e15, "per weight = {per_weight:e}");
        assert!(per_weight >= 1e15, "per weight = {per_weight:e}");

        // Halving eps multiplies the count by four (1/eps² scaling).
        let mut halved = inputs.clone();
        halved.eps = inputs.eps / 2.0;
        let ratio = prior_work_layer_samples(&halved).unwrap()[0] as f64 / per_layer as f64;
        assert!(close(ratio, 4.0, 1e-10), "ratio = {ratio}");

        // Doubling depth: ×4 from ℓ² plus the log increase.
        let doubled = BoundInputs::new(
            uniform_arch(100, 20),
            0.01,
            0.01,
            1.0,
            1.0,
            SpectralMode::AssumeUnit,
        )
        .unwrap();
        let got = prior_work_layer_samples(&doubled).unwrap()[0] as f64 / per_layer as f64;
        let expect = 4.0 * (2e4_f64 * 20.0 / 0.01).ln() / (2e4_f64 * 10.0 / 0.01).ln();
        assert!(close(got, expect, 1e-9), "got {got}, expect {expect}");
        assert!(got >= 4.0);
    }

    #[test]
    fn sequence_bound_constant_case() {
        // a_t = 1, b_t = 1, T = 5, tau = T: bound is 5e; the true recursion
        // reaches 5.
        let a = [1.0; 5];
        let b = [1.0; 5];
        let bound = sequence_bound(&a, &b, 0.0, 5.0).unwrap();
        assert!(close(bound, 5.0 * E, 1e-12));
        assert!(close(sequence_bound_simple(&a, &b).unwrap(), 5.0 * E, 1e-12));
        assert!(5.0 <= bound);
    }

    #[test]
    fn sequence_bound_doubling_case() {
        // min a_t ≥ 2 makes tau = 1 feasible; bound is e (x0 + max b) 2^T.
        let a = [2.0; 6];
        let b = [0.5; 6];
        let bound = sequence_bound(&a, &b, 1.0, 1.0).unwrap();
        assert!(close(bound, E * 1.5 * 64.0, 1e-12));
    }

    #[test]
    fn sequence_bound_rejects_infeasible_tau() {
        assert!(sequence_bound(&[0.5, 0.5, 3.0], &[1.0; 3], 0.0, 1.0).is_err());
    }

    #[test]
    fn recursion_never_exceeds_simple_bound() {
        let mut rng = CounterRng::from_parts(31, "test.seq", 0);
        for _ in 0..10_000 {
            let t = 1 + (rng.next_u64() % 8) as usize;
            let a: Vec<f64> = (0..t).map(|_| 3.0 * rng.next_unit()).collect();
            let b: Vec<f64> = (0..t).map(|_| 2.0 * rng.next_unit()).collect();
            let mut x = 0.0;
            for (at, bt) in a.iter().zip(&b) {
                x = at * x + bt;
            }
            let bound = sequence_bound_simple(&a, &b).unwrap();
            assert!(x <= bound + 1e-12, "x = {x}, bound = {bound}");
        }
    }

    #[test]
    fn feasible_tau_examples() {
        assert_eq!(feasible_tau(&[2.0, 3.0, 2.5], 2.0).unwrap(), 1.0);
        assert_eq!(feasible_tau(&[0.5, 0.5, 3.0], 2.0).unwrap(), 2.0);
        assert!(feasible_tau(&[1.0], 1.0).is_err());

        // Golden-ratio choice: tau = max{φ, |{a_t < φ}|}.
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let a = [0.1, 0.2, 1.0, 2.0];
        assert_eq!(feasible_tau(&a, phi).unwrap(), 3.0);
        let a = [2.0, 3.0];
        assert!(close(feasible_tau(&a, phi).unwrap(), 1.0 / (phi - 1.0), 1e-12));
    }

    #[test]
    fn report_combines_and_serializes() {
        let inputs = BoundInputs::new(
            uniform_arch(4, 2),
            0.1,
            0.1,
            1.0,
            1.0,
            SpectralMode::AssumeUnit,
        )
        .unwrap();
        let report = bound_report(&inputs).unwrap();
        for i in 0..2 {
            assert_eq!(
                report.m_combined[i],
                report.m_thm1[i].min(report.m_recycle[i])
            );
            assert!(report.m_combined[i] <= report.m_thm1[i]);
            assert!(report.m_combined[i] <= report.m_recycle[i]);
        }
        let json = serde_json::to_string(&report).unwrap();
        for key in [
            "eps_w",
            "k_prime",
            "\"k\"",
            "M_thm1",
            "M_recycle",
            "M_combined",
            "ratio",
            "malach_M",
            "per_weight_thm1",
        ] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
        let parsed: BoundReport = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, report);
    }

    proptest! {
        #[test]
        fn feasible_tau_output_is_feasible(
            a in prop::collection::vec(0.0f64..4.0, 1..12),
            x in 1.0001f64..5.0,
        ) {
            let tau = feasible_tau(&a, x).unwrap();
            let threshold = 1.0 + 1.0 / tau;
            let below = a.iter().filter(|&&at| at < threshold).count() as f64;
            prop_assert!(below <= tau);
        }

        #[test]
        fn accuracy_budget_is_monotone(
            n in 2usize..30,
            ell in 1usize..6,
            f_max in 0.5f64..4.0,
            norm in 0.5f64..4.0,
        ) {
            let base = BoundInputs::new(
                uniform_arch(n, ell), 0.05, 0.05, 1.0, f_max,
                SpectralMode::Explicit(vec![norm; ell]),
            ).unwrap();
            let e0 = epsilon_w(&base).unwrap();

            let wider = BoundInputs::new(
                uniform_arch(n + 1, ell), 0.05, 0.05, 1.0, f_max,
                SpectralMode::Explicit(vec![norm; ell]),
            ).unwrap();
            prop_assert!(epsilon_w(&wider).unwrap() <= e0);

            let deeper = BoundInputs::new(
                uniform_arch(n, ell + 1), 0.05, 0.05, 1.0, f_max,
                SpectralMode::Explicit(vec![norm; ell + 1]),
            ).unwrap();
            prop_assert!(epsilon_w(&deeper).unwrap() <= e0);

            let mut louder = base.clone();
            louder.f_max = f_max * 1.5;
            prop_assert!(epsilon_w(&louder).unwrap() <= e0);

            let sharper = BoundInputs::new(
                uniform_arch(n, ell), 0.05, 0.05, 1.0, f_max,
                SpectralMode::Explicit(vec![norm * 1.5; ell]),
            ).unwrap();
            prop_assert!(epsilon_w(&sharper).unwrap() <= e0);
        }

        #[test]
        fn batch_count_shrinks_as_budget_loosens(
            eps_w_lo in 1e-8f64..1e-3,
            factor in 1.01f64..100.0,
        ) {
            let inputs = BoundInputs::new(
                uniform_arch(4, 2), 0.1, 0.1, 1.0, 1.0, SpectralMode::AssumeUnit,
            ).unwrap();
            let tight = layer_samples_thm1(&inputs, eps_w_lo).unwrap();
            let loose = layer_samples_thm1(&inputs, eps_w_lo * factor).unwrap();
            for (t, l) in tight.iter().zip(&loose) {
                prop_assert!(l <= t);
            }
        }
    }
}
