//! Reproduction of the headline per-weight sample counts at the reference
//! setting: uniform width 100, depth 10, eps = delta = 0.01, w_max = 1,
//! activation bound 1.

use serde::Serialize;

use slt_core::bounds::{
    epsilon_w, layer_samples_recycle, layer_samples_thm1, prior_work_layer_samples, BoundInputs,
    SpectralMode,
};
use slt_core::error::Result;
use slt_core::{ActivationKind, Architecture};

/// Relative tolerance against the rounded reference values.
pub const REPRO_TOL: f64 = 0.02;

#[derive(Debug, Clone, Serialize)]
pub struct ReproRow {
    pub name: String,
    /// Neurons per target weight (M_i / n_max²) computed here.
    pub computed: f64,
    /// Published reference value (an upper bound for the prior-work row).
    pub reference: f64,
    pub pass: bool,
}

fn reference_inputs(spectral: SpectralMode) -> Result<BoundInputs> {
    let arch = Architecture::uniform(vec![100; 11], ActivationKind::Relu)?;
    BoundInputs::new(arch, 0.01, 0.01, 1.0, 1.0, spectral)
}

/// Evaluate the four headline per-weight counts plus the prior-work figure.
pub fn repro_examples() -> Result<Vec<ReproRow>> {
    let n_max_sq = 1e4;
    let mut rows = Vec::new();

    let mut bound_row = |name: &str, reference: f64, per_weight: f64| {
        let pass = (per_weight - reference).abs() <= REPRO_TOL * reference;
        rows.push(ReproRow {
            name: name.to_string(),
            computed: per_weight,
            reference,
            pass,
        });
    };

    for (name, reference, spectral) in [
        ("thm1-unit", 630.0, SpectralMode::AssumeUnit),
        ("thm1-worst", 2450.0, SpectralMode::WorstCase),
    ] {
        let inputs = reference_inputs(spectral)?;
        let eps_w = epsilon_w(&inputs)?;
        let m = layer_samples_thm1(&inputs, eps_w)?;
        bound_row(name, reference, m[0] as f64 / n_max_sq);
    }

    for (name, reference, spectral) in [
        ("recycle-unit", 144.0, SpectralMode::AssumeUnit),
        ("recycle-worst", 574.0, SpectralMode::WorstCase),
    ] {
        let inputs = reference_inputs(spectral)?;
        let eps_w = epsilon_w(&inputs)?;
        let m = layer_samples_recycle(&inputs, eps_w)?;
        bound_row(name, reference, m[0] as f64 / n_max_sq);
    }

    let inputs = reference_inputs(SpectralMode::AssumeUnit)?;
    let per_weight = prior_work_layer_samples(&inputs)?[0] as f64 / n_max_sq;
    rows.push(ReproRow {
        name: "prior-work".to_string(),
        computed: per_weight,
        reference: 2e15,
        pass: per_weight <= 2e15,
    });

    Ok(rows)
}

/// Fixed-width text table, one line per row plus a header.
pub fn render_table(rows: &[ReproRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>16} {:>12} {:>6}\n",
        "row", "computed", "reference", "pass"
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<14} {:>16.4e} {:>12.4e} {:>6}\n",
            row.name,
            row.computed,
            row.reference,
            if row.pass { "ok" } else { "FAIL" }
        ));
    }
    out
}
