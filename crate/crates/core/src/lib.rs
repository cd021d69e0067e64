//! Constructive strong-lottery-ticket toolkit.
//!
//! Builds a randomly initialized, overparameterized ReLU network whose
//! weights are drawn from a signed hyperbolic (log-uniform) distribution,
//! oracle-prunes it so that the surviving subnetwork approximates an
//! arbitrary given fully-connected target network within a requested
//! accuracy, and evaluates the closed-form sample-complexity and
//! error-propagation bounds that size the whole construction.
//!
//! Networks are bias-free throughout: every layer computes an activation of
//! `W · y` and nothing else. All randomness flows through counter-based
//! streams ([`rng`]), so identical parameters and seeds reproduce identical
//! networks, masks, and reports, bit for bit.

#![forbid(unsafe_code)]
// Validation uses `!(x > 0.0)`-style comparisons on purpose: they reject NaN,
// which the suggested non-negated forms silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod construction;
pub mod container;
pub mod decomposition;
pub mod error;
pub mod mask;
pub mod matrix;
pub mod network;
mod num;
pub mod rng;
pub mod sampling;

pub use bounds::{BoundInputs, BoundReport, SpectralMode};
pub use construction::{
    BuildMode, BuildParams, LargeNetwork, MaskedPaths, PruneResult, Side, VerifyReport,
};
pub use container::Container;
pub use decomposition::{DecompositionResult, GrdParams};
pub use error::{Error, Result};
pub use mask::BitMatrix;
pub use matrix::Matrix;
pub use network::{ActivationKind, Architecture, InputDomain, TargetNetwork};
pub use sampling::{HyperbolicDist, RangeSpec, SignedHyperbolicDist};
