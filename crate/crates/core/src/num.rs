//! Small numeric helpers shared by the bound and decomposition formulas.

/// Ceiling with a 1e-9 downward nudge first, so a value that is an exact
/// integer mathematically but lands epsilon above it in floating point does
/// not get rounded one unit too high.
pub(crate) fn ceil_guarded(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

pub(crate) fn ceil_guarded_u64(x: f64) -> u64 {
    ceil_guarded(x).max(0.0) as u64
}

/// 1/φ where φ = (1+√5)/2 is the golden ratio.
pub(crate) const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// log base `base` of `x`.
pub(crate) fn log_base(base: f64, x: f64) -> f64 {
    x.ln() / base.ln()
}
