//! Build the overparameterized ReLU network G and oracle-prune it down to a
//! subnetwork approximating a given target.
//!
//! G inserts one intermediate ReLU layer between consecutive target layers,
//! doubling the depth. All sampled weights are signed-hyperbolic. A masked
//! two-neuron path through an intermediate layer implements a *virtual*
//! weight: writing p = out·in for the kept connection pair, the path
//! contributes p·y for inputs of one sign and 0 for the other, so one target
//! weight is realized piecewise by a plus-side sum (active for y ≥ 0) and a
//! minus-side sum (active for y < 0). The golden-ratio decomposition picks
//! which sampled products participate in each sum.
//!
//! Two pruning strategies are provided: batch bucketing (`prune_batch`),
//! which shares one layer's neuron pool across all target weights through
//! sign-and-magnitude categories, and sample recycling (`prune_recycle`),
//! which walks target weights in a schedule that lets unexamined neuron
//! entries serve later weights as fresh samples.
//!
//! Building and pruning are deterministic given the seed; layers draw from
//! independent counter streams, results are immutable, and evaluation is pure.

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundInputs, SpectralMode};
use crate::decomposition::{grd_decompose_scaled, interval_index, GrdParams};
use crate::error::{param_err, Error, Result};
use crate::mask::BitMatrix;
use crate::matrix::{l2_distance, Matrix};
use crate::network::{Architecture, InputDomain, TargetNetwork};
use crate::num::ceil_guarded_u64;
use crate::rng::CounterRng;
use crate::sampling::{ranges_for_accuracy, RangeSpec, SignedHyperbolicDist};

/// Decomposition base used throughout the construction.
pub const GRD_GAMMA: f64 = 2.0 / 3.0;

/// Soft cap on total sampled weights, to reject desk-scale-hostile requests
/// before allocating.
pub(crate) const MAX_TOTAL_WEIGHTS: u128 = 50_000_000;

/// Which sizing rule the large network was built with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BuildMode {
    /// Batch bucketing: per-layer count `⌈16k'(n_i n_{i−1} + ln(2ℓk'/δ))⌉`.
    Thm1,
    /// Sample recycling: per-layer budget
    /// `max{n_i, n_{i−1}}·m + 2(k−1)·n_i·n_{i−1}` with `m = ⌈8k' ln(k'/δ_w)⌉`,
    /// `δ_w = δ/(2 N_F)`.
    Recycle,
}

/// Which half of a piecewise virtual weight a neuron serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }
}

/// Everything needed to size and sample a large network.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildParams {
    pub eps: f64,
    pub delta: f64,
    pub w_max: f64,
    pub f_max: f64,
    pub spectral_mode: SpectralMode,
    pub mode: BuildMode,
    pub seed: u64,
}

/// The randomly initialized overparameterized network.
///
/// Layer i of the target is realized by `in_weights[i]` (one intermediate
/// neuron per row) followed by `out_weights[i]`; the realized depth is twice
/// the target depth and every activation is ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeNetwork {
    target_arch: Architecture,
    m_widths: Vec<usize>,
    in_weights: Vec<Matrix>,
    out_weights: Vec<Matrix>,
    range: RangeSpec,
    seed: u64,
    mode: BuildMode,
    eps_w: f64,
    pool_m: usize,
}

impl LargeNetwork {
    pub fn target_arch(&self) -> &Architecture {
        &self.target_arch
    }

    /// Intermediate-layer widths, one per target layer.
    pub fn m_widths(&self) -> &[usize] {
        &self.m_widths
    }

    pub fn in_weights(&self) -> &[Matrix] {
        &self.in_weights
    }

    pub fn out_weights(&self) -> &[Matrix] {
        &self.out_weights
    }

    pub fn range(&self) -> &RangeSpec {
        &self.range
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> BuildMode {
        self.mode
    }

    /// Per-weight accuracy budget the sampling ranges were derived from.
    pub fn eps_w(&self) -> f64 {
        self.eps_w
    }

    /// Working-pool size of the recycling schedule (0 in batch mode).
    pub fn pool_m(&self) -> usize {
        self.pool_m
    }

    /// Width profile of the realized 2ℓ-layer network.
    pub fn realized_widths(&self) -> Vec<usize> {
        let mut widths = vec![self.target_arch.width(0)];
        for (i, &m) in self.m_widths.iter().enumerate() {
            widths.push(m);
            widths.push(self.target_arch.width(i + 1));
        }
        widths
    }

    /// Reassemble from parts; used by the binary container reader.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        target_arch: Architecture,
        m_widths: Vec<usize>,
        in_weights: Vec<Matrix>,
        out_weights: Vec<Matrix>,
        range: RangeSpec,
        seed: u64,
        mode: BuildMode,
        eps_w: f64,
        pool_m: usize,
    ) -> Self {
        LargeNetwork {
            target_arch,
            m_widths,
            in_weights,
            out_weights,
            range,
            seed,
            mode,
            eps_w,
            pool_m,
        }
    }
}

/// Sizing decisions for one build, before any sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildPlan {
    pub eps_w: f64,
    pub range: RangeSpec,
    pub m_widths: Vec<usize>,
    pub pool_m: usize,
}

fn grd_params(eps_w: f64, w_max: f64) -> Result<GrdParams> {
    // Each of the two sides must reach per-weight accuracy eps_w / 2.
    GrdParams::new(GRD_GAMMA, eps_w / 2.0, w_max)
}

/// Compute the per-layer intermediate widths (and, in recycling mode, the
/// working-pool size) that `build_large` will allocate.
pub fn plan_build(arch: &Architecture, params: &BuildParams) -> Result<BuildPlan> {
    if !arch.is_all_relu() {
        return Err(Error::UnsupportedArchitecture(
            "the construction samples ReLU networks only".into(),
        ));
    }
    let inputs = BoundInputs::new(
        arch.clone(),
        params.eps,
        params.delta,
        params.w_max,
        params.f_max,
        params.spectral_mode.clone(),
    )?;
    let eps_w = bounds::epsilon_w(&inputs)?;
    let range = ranges_for_accuracy(eps_w, params.w_max)?;
    let (m_widths, pool_m) = match params.mode {
        BuildMode::Thm1 => {
            let m = bounds::layer_samples_thm1(&inputs, eps_w)?;
            (m.into_iter().map(|v| v as usize).collect::<Vec<_>>(), 0)
        }
        BuildMode::Recycle => {
            let kp = bounds::k_prime(&inputs, eps_w)?;
            let k = grd_params(eps_w, params.w_max)?.k();
            let n_f = arch.weight_count() as f64;
            let delta_w = params.delta / (2.0 * n_f);
            let m = ceil_guarded_u64(8.0 * kp * (kp / delta_w).ln()) as usize;
            let widths = arch
                .widths()
                .windows(2)
                .map(|w| w[0].max(w[1]) * m + 2 * k.saturating_sub(1) * w[0] * w[1])
                .collect();
            (widths, m)
        }
    };
    Ok(BuildPlan {
        eps_w,
        range,
        m_widths,
        pool_m,
    })
}

/// Sample the large network. Deterministic in `(arch, params)`: each layer's
/// in- and out-weights come from their own counter streams keyed by the seed,
/// so contents do not depend on sampling order.
pub fn build_large(arch: &Architecture, params: &BuildParams) -> Result<LargeNetwork> {
    let plan = plan_build(arch, params)?;
    let total: u128 = arch
        .widths()
        .windows(2)
        .zip(&plan.m_widths)
        .map(|(w, &mi)| (w[0] + w[1]) as u128 * mi as u128)
        .sum();
    if total > MAX_TOTAL_WEIGHTS {
        return param_err(
            "eps",
            format!("plan needs {total} sampled weights, over the {MAX_TOTAL_WEIGHTS} cap"),
        );
    }
    let dist = SignedHyperbolicDist::new(plan.range.alpha, plan.range.beta)?;
    let sample_block = |tag: &str, layer: usize, rows: usize, cols: usize| -> Matrix {
        let mut rng = CounterRng::from_parts(params.seed, tag, layer as u64);
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| {
                let u = rng.next_unit();
                let neg = rng.next_bool();
                dist.sample(u, neg).expect("u in [0, 1)")
            })
            .collect();
        Matrix::from_vec(rows, cols, data).expect("sized buffer")
    };
    let mut in_weights = Vec::with_capacity(arch.depth());
    let mut out_weights = Vec::with_capacity(arch.depth());
    for (i, &mi) in plan.m_widths.iter().enumerate() {
        in_weights.push(sample_block("large.in", i, mi, arch.width(i)));
        out_weights.push(sample_block("large.out", i, arch.width(i + 1), mi));
    }
    Ok(LargeNetwork {
        target_arch: arch.clone(),
        m_widths: plan.m_widths,
        in_weights,
        out_weights,
        range: plan.range,
        seed: params.seed,
        mode: params.mode,
        eps_w: plan.eps_w,
        pool_m: plan.pool_m,
    })
}

/// Classify one intermediate neuron's connection pair against a target weight
/// of sign `w_star_sign`.
///
/// Plus side: positive out-weight and in-weight matching the target sign;
/// minus side: negative out-weight and in-weight opposing the target sign.
/// The magnitude interval is `interval_index(|out·in| / w_max)` over the
/// product range, `None` when the product falls outside the bucketed range.
pub fn categorize_product(
    out_w: f64,
    in_w: f64,
    w_star_sign: f64,
    range: &RangeSpec,
    gamma: f64,
    k: usize,
) -> (Option<Side>, Option<usize>) {
    if out_w == 0.0 || in_w == 0.0 || w_star_sign == 0.0 {
        return (None, None);
    }
    let side = if out_w > 0.0 && in_w.signum() == w_star_sign.signum() {
        Some(Side::Plus)
    } else if out_w < 0.0 && in_w.signum() == -w_star_sign.signum() {
        Some(Side::Minus)
    } else {
        None
    };
    let w_max = 1.5 * range.beta_prime;
    let interval = interval_index((out_w * in_w).abs() / w_max, gamma, k)
        .ok()
        .flatten();
    (side, interval)
}

/// One surviving intermediate neuron: which target weight it serves, on which
/// side, in which magnitude interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub layer: usize,
    /// Target-weight row (output neuron index).
    pub row: usize,
    /// Target-weight column (input neuron index).
    pub col: usize,
    pub side: Side,
    pub interval: usize,
    pub neuron: usize,
}

/// Masks over the large network plus the extracted virtual weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneResult {
    /// Per layer, congruent to `in_weights[i]`.
    pub in_masks: Vec<BitMatrix>,
    /// Per layer, congruent to `out_weights[i]`.
    pub out_masks: Vec<BitMatrix>,
    /// Surviving neurons only; each keeps exactly one in- and one out-connection.
    pub assignments: Vec<Assignment>,
    /// ŵ⁺ per target weight (piecewise weight active for non-negative inputs).
    pub virtual_plus: Vec<Matrix>,
    /// ŵ⁻ per target weight (active for negative inputs).
    pub virtual_minus: Vec<Matrix>,
    /// Neurons drawn from the build per layer (batch mode consumes them all).
    pub neurons_consumed: Vec<usize>,
}

impl PruneResult {
    /// Unmasked intermediate neurons across all layers.
    pub fn surviving_neurons(&self) -> usize {
        self.assignments.len()
    }
}

fn validate_prune_inputs(
    g: &LargeNetwork,
    f: &TargetNetwork,
    eps: f64,
    delta: f64,
    expected_mode: BuildMode,
) -> Result<()> {
    if g.mode != expected_mode {
        return param_err("mode", "large network was built for the other prune strategy");
    }
    if f.arch() != &g.target_arch {
        return param_err("arch", "target architecture differs from the build");
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return param_err("eps", "must be positive and finite");
    }
    if !(delta > 0.0 && delta < 1.0) {
        return param_err("delta", "must lie in (0, 1)");
    }
    let w_max = 1.5 * g.range.beta_prime;
    if (w_max - f.w_max()).abs() > 1e-9 * f.w_max() {
        return param_err(
            "w_max",
            format!(
                "target declares w_max = {}, build sampled for w_max = {w_max}",
                f.w_max()
            ),
        );
    }
    // The sizing must be reproducible from delta; eps and f_max do not enter
    // the per-layer counts, so placeholders suffice here.
    let sizing_inputs = BoundInputs::new(
        g.target_arch.clone(),
        1.0,
        delta,
        w_max,
        1.0,
        SpectralMode::AssumeUnit,
    )?;
    match expected_mode {
        BuildMode::Thm1 => {
            let m = bounds::layer_samples_thm1(&sizing_inputs, g.eps_w)?;
            if m.iter().zip(&g.m_widths).any(|(&a, &b)| a as usize != b) {
                return param_err("delta", "does not reproduce the build's layer sizes");
            }
        }
        BuildMode::Recycle => {
            let kp = bounds::k_prime(&sizing_inputs, g.eps_w)?;
            let delta_w = delta / (2.0 * g.target_arch.weight_count() as f64);
            let m = ceil_guarded_u64(8.0 * kp * (kp / delta_w).ln()) as usize;
            if m != g.pool_m {
                return param_err("delta", "does not reproduce the build's pool size");
            }
        }
    }
    Ok(())
}

/// Oracle-prune a batch-mode network against a target.
///
/// Per layer, every target weight above the accuracy threshold owns one slot
/// per (side, magnitude interval). Neurons are scanned in index order; each is
/// assigned to the first unfilled slot (pairs in lexicographic order) whose
/// category it matches. Once all slots are filled, the decomposition selects
/// which claimed neurons survive; everything else stays masked. Weights with
/// `|w*| ≤ eps_w/2` keep empty masks: the zero approximation is within budget.
///
/// A slot that no neuron fills is the low-probability failure event; it is
/// reported as a recoverable error naming the layer, weight, side, and interval.
pub fn prune_batch(
    g: &LargeNetwork,
    f: &TargetNetwork,
    eps: f64,
    delta: f64,
) -> Result<PruneResult> {
    validate_prune_inputs(g, f, eps, delta, BuildMode::Thm1)?;
    let grd = grd_params(g.eps_w, f.w_max())?;
    let k = grd.k();
    let threshold = g.eps_w / 2.0;
    let ell = g.target_arch.depth();

    let mut result = PruneResult {
        in_masks: Vec::with_capacity(ell),
        out_masks: Vec::with_capacity(ell),
        assignments: Vec::new(),
        virtual_plus: Vec::with_capacity(ell),
        virtual_minus: Vec::with_capacity(ell),
        neurons_consumed: Vec::with_capacity(ell),
    };

    for layer in 0..ell {
        let n_in = g.target_arch.width(layer);
        let n_out = g.target_arch.width(layer + 1);
        let mi = g.m_widths[layer];
        let weights = f.layer(layer);
        let in_w = &g.in_weights[layer];
        let out_w = &g.out_weights[layer];

        let active: Vec<bool> = (0..n_out * n_in)
            .map(|p| weights.get(p / n_in, p % n_in).abs() > threshold)
            .collect();
        // Slot layout: (pair lex, side, interval), two sides, k intervals each.
        let slot_of = |j1: usize, j2: usize, side: Side, s: usize| {
            ((j1 * n_in + j2) * 2 + side as usize) * k + (s - 1)
        };
        let mut claims: Vec<Option<usize>> = vec![None; n_out * n_in * 2 * k];
        let mut remaining = active.iter().filter(|&&a| a).count() * 2 * k;

        'neurons: for z in 0..mi {
            if remaining == 0 {
                break;
            }
            for j1 in 0..n_out {
                for j2 in 0..n_in {
                    if !active[j1 * n_in + j2] {
                        continue;
                    }
                    let w_star = weights.get(j1, j2);
                    let (side, s) = categorize_product(
                        out_w.get(j1, z),
                        in_w.get(z, j2),
                        w_star.signum(),
                        &g.range,
                        GRD_GAMMA,
                        k,
                    );
                    if let (Some(side), Some(s)) = (side, s) {
                        let idx = slot_of(j1, j2, side, s);
                        if claims[idx].is_none() {
                            claims[idx] = Some(z);
                            remaining -= 1;
                            continue 'neurons;
                        }
                    }
                }
            }
        }
        if remaining > 0 {
            for j1 in 0..n_out {
                for j2 in 0..n_in {
                    if !active[j1 * n_in + j2] {
                        continue;
                    }
                    for side in [Side::Plus, Side::Minus] {
                        for s in 1..=k {
                            if claims[slot_of(j1, j2, side, s)].is_none() {
                                return Err(Error::PruneFailure {
                                    layer,
                                    row: j1,
                                    col: j2,
                                    side: side.name(),
                                    interval: s,
                                });
                            }
                        }
                    }
                }
            }
        }

        let mut in_mask = BitMatrix::zeros(mi, n_in);
        let mut out_mask = BitMatrix::zeros(n_out, mi);
        let mut v_plus = Matrix::zeros(n_out, n_in);
        let mut v_minus = Matrix::zeros(n_out, n_in);
        for j1 in 0..n_out {
            for j2 in 0..n_in {
                if !active[j1 * n_in + j2] {
                    continue;
                }
                let w_star = weights.get(j1, j2);
                for side in [Side::Plus, Side::Minus] {
                    let neurons: Vec<usize> = (1..=k)
                        .map(|s| claims[slot_of(j1, j2, side, s)].expect("all slots filled"))
                        .collect();
                    let mags: Vec<f64> = neurons
                        .iter()
                        .map(|&z| (out_w.get(j1, z) * in_w.get(z, j2)).abs())
                        .collect();
                    let res = grd_decompose_scaled(w_star.abs(), &mags, &grd)?;
                    let mut selected: Vec<usize> = Vec::new();
                    for (pos, &z) in neurons.iter().enumerate() {
                        if res.mask[pos] {
                            in_mask.set(z, j2, true);
                            out_mask.set(j1, z, true);
                            selected.push(z);
                            result.assignments.push(Assignment {
                                layer,
                                row: j1,
                                col: j2,
                                side,
                                interval: pos + 1,
                                neuron: z,
                            });
                        }
                    }
                    // Canonical accumulation order (neuron index ascending)
                    // keeps the value bit-identical with what the container
                    // reader reconstructs from the masks.
                    selected.sort_unstable();
                    let virt: f64 = selected
                        .iter()
                        .map(|&z| out_w.get(j1, z) * in_w.get(z, j2))
                        .sum();
                    debug_assert!(virt.abs() <= w_star.abs() + 1e-9);
                    debug_assert!((w_star - virt).abs() <= g.eps_w / 2.0 + 1e-9);
                    match side {
                        Side::Plus => v_plus.set(j1, j2, virt),
                        Side::Minus => v_minus.set(j1, j2, virt),
                    }
                }
            }
        }
        result.in_masks.push(in_mask);
        result.out_masks.push(out_mask);
        result.virtual_plus.push(v_plus);
        result.virtual_minus.push(v_minus);
        result.neurons_consumed.push(mi);
    }
    sort_assignments(&mut result.assignments);
    Ok(result)
}

/// Canonical assignment order shared with the container reader.
fn sort_assignments(assignments: &mut [Assignment]) {
    assignments.sort_by_key(|a| (a.layer, a.row, a.col, a.side, a.interval, a.neuron));
}

struct PoolEntry {
    neuron: usize,
    spent_in: Vec<bool>,
    spent_out: Vec<bool>,
}

/// Oracle-prune a recycling-mode network against a target.
///
/// Per layer, the wider side drives the outer loop. For each outer index j a
/// fresh pool of `m` neurons is drawn; the inner loop visits each target
/// weight `(row, col)` once (the index schedule pairs every in-index with
/// every out-index exactly once across the sweep), runs the decomposition for
/// each side over the pool's products at exactly those indices, retires the
/// selected neurons, marks the examined entries of the surviving pool neurons
/// as spent, and tops the pool back up. Entries are never examined twice, so
/// every product the decomposition sees is a fresh sample.
pub fn prune_recycle(
    g: &LargeNetwork,
    f: &TargetNetwork,
    eps: f64,
    delta: f64,
) -> Result<PruneResult> {
    validate_prune_inputs(g, f, eps, delta, BuildMode::Recycle)?;
    let grd = grd_params(g.eps_w, f.w_max())?;
    let k = grd.k();
    let m = g.pool_m;
    let threshold = g.eps_w / 2.0;
    let ell = g.target_arch.depth();
    let w_max = f.w_max();

    let mut result = PruneResult {
        in_masks: Vec::with_capacity(ell),
        out_masks: Vec::with_capacity(ell),
        assignments: Vec::new(),
        virtual_plus: Vec::with_capacity(ell),
        virtual_minus: Vec::with_capacity(ell),
        neurons_consumed: Vec::with_capacity(ell),
    };

    for layer in 0..ell {
        let n_in = g.target_arch.width(layer);
        let n_out = g.target_arch.width(layer + 1);
        let mi = g.m_widths[layer];
        let weights = f.layer(layer);
        let in_w = &g.in_weights[layer];
        let out_w = &g.out_weights[layer];
        let wide_out = n_out >= n_in;
        let (outer_n, inner_n) = if wide_out { (n_out, n_in) } else { (n_in, n_out) };

        let mut in_mask = BitMatrix::zeros(mi, n_in);
        let mut out_mask = BitMatrix::zeros(n_out, mi);
        let mut v_plus = Matrix::zeros(n_out, n_in);
        let mut v_minus = Matrix::zeros(n_out, n_in);
        let mut next_fresh = 0usize;
        let mut consumed = 0usize;
        let mut pool: Vec<PoolEntry> = Vec::with_capacity(m);

        for j in 0..outer_n {
            pool.clear();
            draw_fresh(&mut pool, m, &mut next_fresh, &mut consumed, mi, layer, n_in, n_out)?;
            for d in 0..inner_n {
                // Wrap keeps the index in range; for fixed d the sweep over j
                // covers each opposite index exactly once.
                let (j1, j2) = if wide_out {
                    ((d + j + 1) % n_out, d)
                } else {
                    (d, (d + j + 1) % n_in)
                };
                let w_star = weights.get(j1, j2);
                if w_star.abs() > threshold {
                    let mut retired: Vec<usize> = Vec::new();
                    for side in [Side::Plus, Side::Minus] {
                        let mut cand_pos: Vec<usize> = Vec::new();
                        let mut mags: Vec<f64> = Vec::new();
                        for (p, entry) in pool.iter().enumerate() {
                            if entry.spent_in[j2] || entry.spent_out[j1] {
                                continue;
                            }
                            let ow = out_w.get(j1, entry.neuron);
                            let iw = in_w.get(entry.neuron, j2);
                            let (cside, _) = categorize_product(
                                ow,
                                iw,
                                w_star.signum(),
                                &g.range,
                                GRD_GAMMA,
                                k,
                            );
                            if cside == Some(side) {
                                cand_pos.push(p);
                                mags.push((ow * iw).abs());
                            }
                        }
                        let res = grd_decompose_scaled(w_star.abs(), &mags, &grd).map_err(
                            |e| match e {
                                Error::Coverage { interval, .. } => Error::PruneFailure {
                                    layer,
                                    row: j1,
                                    col: j2,
                                    side: side.name(),
                                    interval,
                                },
                                other => other,
                            },
                        )?;
                        let mut virt = 0.0;
                        for (pos, &p) in cand_pos.iter().enumerate() {
                            if !res.mask[pos] {
                                continue;
                            }
                            let z = pool[p].neuron;
                            in_mask.set(z, j2, true);
                            out_mask.set(j1, z, true);
                            let interval = interval_index(mags[pos] / w_max, GRD_GAMMA, k)?
                                .expect("selected sample lies in a bucket");
                            result.assignments.push(Assignment {
                                layer,
                                row: j1,
                                col: j2,
                                side,
                                interval,
                                neuron: z,
                            });
                            retired.push(p);
                            // Pool order is neuron-ascending, so this matches
                            // the container reader's accumulation order.
                            virt += out_w.get(j1, z) * in_w.get(z, j2);
                        }
                        debug_assert!(virt.abs() <= w_star.abs() + 1e-9);
                        debug_assert!((w_star - virt).abs() <= g.eps_w / 2.0 + 1e-9);
                        match side {
                            Side::Plus => v_plus.set(j1, j2, virt),
                            Side::Minus => v_minus.set(j1, j2, virt),
                        }
                    }
                    // Retire selected neurons; their other entries leave with them.
                    retired.sort_unstable();
                    for &p in retired.iter().rev() {
                        pool.remove(p);
                    }
                    // The survivors' examined entries are no longer fresh samples.
                    for entry in &mut pool {
                        entry.spent_in[j2] = true;
                        entry.spent_out[j1] = true;
                    }
                }
                if d + 1 < inner_n {
                    let need = m - pool.len();
                    draw_fresh(&mut pool, need, &mut next_fresh, &mut consumed, mi, layer, n_in, n_out)?;
                }
            }
        }
        result.in_masks.push(in_mask);
        result.out_masks.push(out_mask);
        result.virtual_plus.push(v_plus);
        result.virtual_minus.push(v_minus);
        result.neurons_consumed.push(consumed);
    }
    sort_assignments(&mut result.assignments);
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn draw_fresh(
    pool: &mut Vec<PoolEntry>,
    count: usize,
    next_fresh: &mut usize,
    consumed: &mut usize,
    mi: usize,
    layer: usize,
    n_in: usize,
    n_out: usize,
) -> Result<()> {
    if *next_fresh + count > mi {
        return Err(Error::PoolExhausted {
            layer,
            needed: count,
            available: mi - *next_fresh,
        });
    }
    for _ in 0..count {
        pool.push(PoolEntry {
            neuron: *next_fresh,
            spent_in: vec![false; n_in],
            spent_out: vec![false; n_out],
        });
        *next_fresh += 1;
    }
    *consumed += count;
    Ok(())
}

/// One surviving two-connection path through an intermediate layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskedPath {
    /// Target-layer output neuron fed by this path.
    pub row: usize,
    /// Previous-layer neuron feeding this path.
    pub col: usize,
    pub in_w: f64,
    pub out_w: f64,
}

/// Sparse view of the masked network: only surviving connections, layer by
/// layer, in intermediate-neuron index order.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedPaths {
    input_dim: usize,
    out_dims: Vec<usize>,
    per_layer: Vec<Vec<MaskedPath>>,
}

/// Extract the surviving paths of a pruned network. Every unmasked neuron
/// must keep exactly one in- and one out-connection.
pub fn masked_paths(g: &LargeNetwork, p: &PruneResult) -> Result<MaskedPaths> {
    let ell = g.target_arch.depth();
    if p.in_masks.len() != ell || p.out_masks.len() != ell {
        return Err(Error::Dimension {
            context: "prune masks",
            expected: ell,
            got: p.in_masks.len(),
        });
    }
    let mut per_layer = Vec::with_capacity(ell);
    for layer in 0..ell {
        let mi = g.m_widths[layer];
        let n_in = g.target_arch.width(layer);
        let n_out = g.target_arch.width(layer + 1);
        let in_mask = &p.in_masks[layer];
        let out_mask = &p.out_masks[layer];
        if in_mask.rows() != mi
            || in_mask.cols() != n_in
            || out_mask.rows() != n_out
            || out_mask.cols() != mi
        {
            return Err(Error::Dimension {
                context: "mask shape",
                expected: mi * n_in,
                got: in_mask.rows() * in_mask.cols(),
            });
        }
        let mut paths = Vec::new();
        for z in 0..mi {
            let ins: Vec<usize> = in_mask.row_ones(z).collect();
            let outs: Vec<usize> = (0..n_out).filter(|&j1| out_mask.get(j1, z)).collect();
            match (ins.len(), outs.len()) {
                (0, 0) => {}
                (1, 1) => paths.push(MaskedPath {
                    row: outs[0],
                    col: ins[0],
                    in_w: g.in_weights[layer].get(z, ins[0]),
                    out_w: g.out_weights[layer].get(outs[0], z),
                }),
                (i, o) => {
                    return Err(Error::Format(format!(
                        "neuron {z} of layer {layer} keeps {i} in- and {o} out-connections; \
                         expected exactly one of each"
                    )))
                }
            }
        }
        per_layer.push(paths);
    }
    Ok(MaskedPaths {
        input_dim: g.target_arch.width(0),
        out_dims: (1..=ell).map(|i| g.target_arch.width(i)).collect(),
        per_layer,
    })
}

impl MaskedPaths {
    pub fn layer_paths(&self, layer: usize) -> &[MaskedPath] {
        &self.per_layer[layer]
    }

    /// Forward pass of the realized 2ℓ-layer masked network (ReLU at both the
    /// intermediate and the target layers).
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension {
                context: "masked network input",
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let mut y = x.to_vec();
        for (paths, &n_out) in self.per_layer.iter().zip(&self.out_dims) {
            let mut acc = vec![0.0; n_out];
            for p in paths {
                let hidden = (p.in_w * y[p.col]).max(0.0);
                acc[p.row] += p.out_w * hidden;
            }
            for v in &mut acc {
                *v = v.max(0.0);
            }
            y = acc;
        }
        Ok(y)
    }

    /// Pre-activations of one target layer given that layer's input vector:
    /// the virtual-weight sums before the target-layer ReLU.
    pub fn layer_pre_activation(&self, layer: usize, y: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.out_dims[layer]];
        for p in &self.per_layer[layer] {
            let hidden = (p.in_w * y[p.col]).max(0.0);
            acc[p.row] += p.out_w * hidden;
        }
        acc
    }
}

/// Forward pass of the masked network (convenience wrapper that extracts the
/// surviving paths on each call; reuse [`masked_paths`] for repeated queries).
pub fn evaluate_pruned(g: &LargeNetwork, p: &PruneResult, x: &[f64]) -> Result<Vec<f64>> {
    masked_paths(g, p)?.forward(x)
}

/// Outcome of checking a pruned network against its target over a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    /// Max over the domain of the output 2-norm gap.
    pub sup_error: f64,
    pub eps_target: f64,
    pub num_inputs: usize,
    /// Spectral norm per layer of the entrywise max of |ŵ⁺| and |ŵ⁻|.
    pub per_layer_spectral: Vec<f64>,
}

/// Largest output gap between a target and any evaluator over a finite domain.
pub fn sup_l2_gap<E>(f: &TargetNetwork, mut eval: E, domain: &InputDomain) -> Result<f64>
where
    E: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if domain.samples().is_empty() {
        return Err(Error::EmptyDomain);
    }
    let mut sup = 0.0f64;
    for x in domain.samples() {
        let want = f.forward(x)?;
        let got = eval(x)?;
        if got.len() != want.len() {
            return Err(Error::Dimension {
                context: "evaluator output",
                expected: want.len(),
                got: got.len(),
            });
        }
        sup = sup.max(l2_distance(&want, &got));
    }
    Ok(sup)
}

/// Evaluate the pruned network against the target over the domain and report
/// the sup gap together with the virtual-weight spectral norms.
pub fn verify_sup_error(
    f: &TargetNetwork,
    g: &LargeNetwork,
    p: &PruneResult,
    domain: &InputDomain,
    eps: f64,
) -> Result<VerifyReport> {
    let paths = masked_paths(g, p)?;
    let sup_error = sup_l2_gap(f, |x| paths.forward(x), domain)?;
    let per_layer_spectral = p
        .virtual_plus
        .iter()
        .zip(&p.virtual_minus)
        .map(|(vp, vm)| {
            vp.abs()
                .entrywise_max(&vm.abs())
                .map(|m| m.spectral_norm(crate::matrix::SPECTRAL_TOL))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(VerifyReport {
        sup_error,
        eps_target: eps,
        num_inputs: domain.samples().len(),
        per_layer_spectral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_categories_follow_the_sign_table() {
        let range = ranges_for_accuracy(0.045, 1.0).unwrap();
        let k = 12;
        // out > 0 with in matching the target sign: plus side.
        let (side, _) = categorize_product(1.0, 0.5, 1.0, &range, GRD_GAMMA, k);
        assert_eq!(side, Some(Side::Plus));
        // out < 0 with in matching (not opposing) the target sign: neither side.
        let (side, _) = categorize_product(-1.0, 0.5, 1.0, &range, GRD_GAMMA, k);
        assert_eq!(side, None);
        // out < 0 with in opposing the target sign: minus side.
        let (side, _) = categorize_product(-1.0, -0.5, 1.0, &range, GRD_GAMMA, k);
        assert_eq!(side, Some(Side::Minus));
        // Mirror for a negative target weight.
        let (side, _) = categorize_product(1.0, -0.5, -1.0, &range, GRD_GAMMA, k);
        assert_eq!(side, Some(Side::Plus));
        // Zeroed (spent) entries never categorize.
        assert_eq!(categorize_product(0.0, 0.5, 1.0, &range, GRD_GAMMA, k), (None, None));
    }

    #[test]
    fn product_interval_uses_the_weight_scale() {
        let range = ranges_for_accuracy(0.045, 1.0).unwrap();
        let k = 12;
        // |out·in| = gamma * w_max sits exactly on the top interval's closed edge.
        let (_, interval) = categorize_product(1.0, GRD_GAMMA, 1.0, &range, GRD_GAMMA, k);
        assert_eq!(interval, Some(1));
        // A product above the bucketed range has no interval.
        let (_, interval) = categorize_product(1.0, 0.9, 1.0, &range, GRD_GAMMA, k);
        assert_eq!(interval, None);
    }
}
