//! End-to-end orchestration: sample the inputs of interest, size and build
//! the large network, prune it against the target, and measure the sup gap.

use slt_core::bounds::SpectralMode;
use slt_core::construction::{
    build_large, prune_batch, prune_recycle, verify_sup_error, BuildMode, BuildParams,
    LargeNetwork, PruneResult, VerifyReport,
};
use slt_core::error::{param_err, Result};
use slt_core::matrix::SPECTRAL_TOL;
use slt_core::{InputDomain, TargetNetwork};

/// How the spectral factors of the accuracy budget are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralChoice {
    /// Assume unit spectral norms.
    Unit,
    /// Generic worst case `w_max · n_max` per layer.
    Worst,
    /// Certified upper bounds: spectral norms of the entrywise-absolute
    /// target matrices (pruning never increases a weight's magnitude).
    Explicit,
}

impl SpectralChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(SpectralChoice::Unit),
            "worst" => Ok(SpectralChoice::Worst),
            "explicit" => Ok(SpectralChoice::Explicit),
            other => param_err(
                "spectral",
                format!("unknown spectral mode {other:?} (expected unit|worst|explicit)"),
            ),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpectralChoice::Unit => "unit",
            SpectralChoice::Worst => "worst",
            SpectralChoice::Explicit => "explicit",
        }
    }

    pub fn mode_for(self, net: &TargetNetwork) -> SpectralMode {
        match self {
            SpectralChoice::Unit => SpectralMode::AssumeUnit,
            SpectralChoice::Worst => SpectralMode::WorstCase,
            SpectralChoice::Explicit => SpectralMode::Explicit(
                net.weights()
                    .iter()
                    .map(|w| w.abs().spectral_norm(SPECTRAL_TOL))
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub mode: BuildMode,
    pub spectral: SpectralChoice,
    pub num_inputs: usize,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: VerifyReport,
    pub large: LargeNetwork,
    pub prune: PruneResult,
    pub domain: InputDomain,
    pub f_max: f64,
}

/// Derive the build parameters a run would use (inputs sampled from the run
/// seed, activation bound measured on them).
pub fn build_params_for(
    net: &TargetNetwork,
    cfg: &RunConfig,
) -> Result<(BuildParams, InputDomain)> {
    if cfg.num_inputs == 0 {
        return param_err("inputs", "need at least one evaluation input");
    }
    let domain = InputDomain::sample_uniform(net.arch().width(0), cfg.num_inputs, cfg.seed);
    let f_max = net.f_max(&domain)?;
    let params = BuildParams {
        eps: cfg.eps,
        delta: cfg.delta,
        w_max: net.w_max(),
        f_max,
        spectral_mode: cfg.spectral.mode_for(net),
        mode: cfg.mode,
        seed: cfg.seed,
    };
    Ok((params, domain))
}

/// Build, prune, verify. Pruning failure (the probability-delta event)
/// surfaces as a recoverable error.
pub fn run_end_to_end(net: &TargetNetwork, cfg: &RunConfig) -> Result<RunOutcome> {
    let (params, domain) = build_params_for(net, cfg)?;
    let large = build_large(net.arch(), &params)?;
    let prune = match cfg.mode {
        BuildMode::Thm1 => prune_batch(&large, net, cfg.eps, cfg.delta)?,
        BuildMode::Recycle => prune_recycle(&large, net, cfg.eps, cfg.delta)?,
    };
    let report = verify_sup_error(net, &large, &prune, &domain, cfg.eps)?;
    Ok(RunOutcome {
        report,
        large,
        prune,
        domain,
        f_max: params.f_max,
    })
}

pub fn parse_build_mode(s: &str) -> Result<BuildMode> {
    match s {
        "thm1" => Ok(BuildMode::Thm1),
        "recycle" => Ok(BuildMode::Recycle),
        other => param_err(
            "mode",
            format!("unknown build mode {other:?} (expected thm1|recycle)"),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use slt_core::rng::CounterRng;
    use slt_core::{ActivationKind, Architecture, Matrix};

    fn small_target(seed: u64) -> TargetNetwork {
        let widths = [2usize, 3, 1];
        let arch = Architecture::uniform(widths.to_vec(), ActivationKind::Relu).unwrap();
        let mut rng = CounterRng::from_parts(seed, "target", 0);
        let weights: Vec<Matrix> = widths
            .windows(2)
            .map(|w| {
                let data = (0..w[0] * w[1]).map(|_| 2.0 * rng.next_unit() - 1.0).collect();
                Matrix::from_vec(w[1], w[0], data).unwrap()
            })
            .collect();
        TargetNetwork::new(arch, weights, 1.0).unwrap()
    }

    #[test]
    fn run_meets_its_accuracy_target() {
        let net = small_target(123);
        let cfg = RunConfig {
            eps: 0.3,
            delta: 0.1,
            seed: 5,
            mode: BuildMode::Thm1,
            spectral: SpectralChoice::Explicit,
            num_inputs: 200,
        };
        let outcome = run_end_to_end(&net, &cfg).unwrap();
        assert!(outcome.report.sup_error <= cfg.eps);
        assert_eq!(outcome.report.num_inputs, 200);
    }

    #[test]
    fn identical_configs_reproduce_identical_outcomes() {
        let net = small_target(9);
        let cfg = RunConfig {
            eps: 0.35,
            delta: 0.1,
            seed: 11,
            mode: BuildMode::Recycle,
            spectral: SpectralChoice::Explicit,
            num_inputs: 100,
        };
        let a = run_end_to_end(&net, &cfg).unwrap();
        let b = run_end_to_end(&net, &cfg).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.prune, b.prune);
        assert_eq!(a.large, b.large);
    }
}
