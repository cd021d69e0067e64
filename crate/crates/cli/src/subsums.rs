//! Sub-sum gap analysis: how finely the subset sums of a few samples cover an
//! interval, versus plain sorted samples.
//!
//! With k hyperbolic samples whose magnitude range is tied to an accuracy eps
//! (chosen so the interval budget equals k), the 2^k subset sums tile [0, 1]
//! at roughly eps resolution, while the same budget of plain uniform samples
//! leaves gaps orders of magnitude wider.

use slt_core::error::{param_err, Result};
use slt_core::rng::CounterRng;
use slt_core::HyperbolicDist;

/// Hard cap on subset-sum enumeration (2^count values).
pub const MAX_SUBSUM_COUNT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsumMode {
    /// Sort `count` uniform draws and report their consecutive gaps.
    UniformSorted,
    /// Enumerate all subset sums of `count` hyperbolic draws.
    HyperbolicSubsums,
    /// Enumerate all subset sums of `count` uniform draws.
    UniformSubsums,
}

impl SubsumMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform_sorted_1000" => Ok(SubsumMode::UniformSorted),
            "hyperbolic_subsums_15" => Ok(SubsumMode::HyperbolicSubsums),
            "uniform_subsums_15" => Ok(SubsumMode::UniformSubsums),
            other => param_err("mode", format!("unknown sub-sum mode {other:?}")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SubsumMode::UniformSorted => "uniform_sorted_1000",
            SubsumMode::HyperbolicSubsums => "hyperbolic_subsums_15",
            SubsumMode::UniformSubsums => "uniform_subsums_15",
        }
    }

    pub fn default_count(self) -> usize {
        match self {
            SubsumMode::UniformSorted => 1000,
            SubsumMode::HyperbolicSubsums | SubsumMode::UniformSubsums => 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsumConfig {
    pub mode: SubsumMode,
    pub count: usize,
    pub seed: u64,
    /// Hyperbolic mode only; defaults to the accuracy whose interval budget
    /// equals `count`, namely `1.5 / 1.5^count`.
    pub eps: Option<f64>,
}

impl SubsumConfig {
    pub fn new(mode: SubsumMode, seed: u64) -> Self {
        SubsumConfig {
            mode,
            count: mode.default_count(),
            seed,
            eps: None,
        }
    }

    pub fn effective_eps(&self) -> f64 {
        self.eps
            .unwrap_or_else(|| 1.5f64.powi(1 - self.count as i32))
    }
}

/// Sorted values with their gaps to the next value (last gap is zero).
#[derive(Debug, Clone, PartialEq)]
pub struct GapTable {
    pub values: Vec<f64>,
    pub gaps: Vec<f64>,
}

impl GapTable {
    fn from_sorted(values: Vec<f64>) -> Self {
        let gaps = values
            .windows(2)
            .map(|w| w[1] - w[0])
            .chain(std::iter::once(0.0))
            .collect();
        GapTable { values, gaps }
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().fold(0.0, |m: f64, &g| m.max(g))
    }

    /// CSV: `value,gap` header, one row per value, 17 significant digits,
    /// LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 48 + 16);
        out.push_str("value,gap\n");
        for (v, g) in self.values.iter().zip(&self.gaps) {
            out.push_str(&format!("{v:.16e},{g:.16e}\n"));
        }
        out
    }
}

/// The seeded samples a subset-sum analysis enumerates (one draw stream per
/// mode, so this reproduces exactly what [`subsum_analysis`] saw).
pub fn subsum_samples(cfg: &SubsumConfig) -> Result<Vec<f64>> {
    match cfg.mode {
        SubsumMode::UniformSorted | SubsumMode::UniformSubsums => {
            let mut rng = CounterRng::from_parts(cfg.seed, "subsums.uniform", 0);
            Ok((0..cfg.count).map(|_| rng.next_unit()).collect())
        }
        SubsumMode::HyperbolicSubsums => {
            let eps = cfg.effective_eps();
            let dist = HyperbolicDist::new(4.0 * eps / 9.0, 2.0 / 3.0)?;
            let mut rng = CounterRng::from_parts(cfg.seed, "subsums.hyperbolic", 0);
            Ok((0..cfg.count)
                .map(|_| dist.sample(rng.next_unit()).expect("u in [0, 1)"))
                .collect())
        }
    }
}

/// Start of the densely covered sub-sum range: the sum of the smallest half
/// of the samples. Below it, part of the fine samples is consumed as the base
/// of a representation, so full resolution is not available; above it every
/// small sample remains free for fine adjustment.
pub fn covered_range_offset(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    sorted[..sorted.len().div_ceil(2)].iter().sum()
}

/// All `2^n` subset sums, in binary-counter order (the empty sum first).
pub fn subset_sums(samples: &[f64]) -> Vec<f64> {
    let mut sums = vec![0.0];
    for &v in samples {
        let half = sums.len();
        for i in 0..half {
            sums.push(sums[i] + v);
        }
    }
    sums
}

/// Largest gap between consecutive sorted values, clipped to `[lo, hi]`.
pub fn max_gap_in_range(sorted: &[f64], lo: f64, hi: f64) -> f64 {
    let mut best = 0.0f64;
    for w in sorted.windows(2) {
        let (a, b) = (w[0].max(lo), w[1].min(hi));
        if b > a {
            best = best.max(b - a);
        }
    }
    best
}

/// Run one analysis: draw the seeded samples, enumerate (for subset modes),
/// sort, and tabulate gaps.
pub fn subsum_analysis(cfg: &SubsumConfig) -> Result<GapTable> {
    if cfg.count == 0 {
        return param_err("count", "need at least one sample");
    }
    let samples = subsum_samples(cfg)?;
    let mut values = match cfg.mode {
        SubsumMode::UniformSorted => samples,
        SubsumMode::HyperbolicSubsums | SubsumMode::UniformSubsums => {
            check_enumerable(cfg.count)?;
            subset_sums(&samples)
        }
    };
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    Ok(GapTable::from_sorted(values))
}

fn check_enumerable(count: usize) -> Result<()> {
    if count > MAX_SUBSUM_COUNT {
        return param_err(
            "count",
            format!("2^{count} sub-sums exceed the enumeration cap (count <= {MAX_SUBSUM_COUNT})"),
        );
    }
    Ok(())
}
