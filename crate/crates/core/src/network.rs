//! Fully-connected feed-forward networks and the norm quantities the bound
//! formulas consume.
//!
//! Networks here are bias-free by design: every layer computes an activation
//! applied entrywise to `W · y`. All types are immutable after construction
//! and all operations are pure, so concurrent use needs no synchronization.

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::matrix::Matrix;

/// Activation function of one layer, with its Lipschitz factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Relu,
    Tanh,
    Logistic,
    Identity,
}

impl ActivationKind {
    /// Smallest λ with |σ(x) − σ(y)| ≤ λ|x − y|.
    pub fn lipschitz(self) -> f64 {
        match self {
            ActivationKind::Relu | ActivationKind::Tanh | ActivationKind::Identity => 1.0,
            ActivationKind::Logistic => 0.25,
        }
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Logistic => 1.0 / (1.0 + (-x).exp()),
            ActivationKind::Identity => x,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Logistic => "logistic",
            ActivationKind::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(ActivationKind::Relu),
            "tanh" => Ok(ActivationKind::Tanh),
            "logistic" => Ok(ActivationKind::Logistic),
            "identity" => Ok(ActivationKind::Identity),
            other => Err(Error::Format(format!(
                "unknown activation {other:?} (expected relu|tanh|logistic|identity)"
            ))),
        }
    }
}

/// Shape of a network: width profile `n_0..n_ℓ` plus one activation per layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    widths: Vec<usize>,
    activations: Vec<ActivationKind>,
}

impl Architecture {
    pub fn new(widths: Vec<usize>, activations: Vec<ActivationKind>) -> Result<Self> {
        if widths.len() < 2 {
            return param_err("widths", "need at least an input and an output width");
        }
        if widths.contains(&0) {
            return param_err("widths", "all widths must be at least 1");
        }
        if activations.len() != widths.len() - 1 {
            return Err(Error::Dimension {
                context: "activations",
                expected: widths.len() - 1,
                got: activations.len(),
            });
        }
        Ok(Architecture {
            widths,
            activations,
        })
    }

    /// Uniform-activation convenience constructor.
    pub fn uniform(widths: Vec<usize>, activation: ActivationKind) -> Result<Self> {
        let depth = widths.len().saturating_sub(1);
        Self::new(widths, vec![activation; depth])
    }

    /// Number of layers ℓ.
    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    /// Width profile `n_0..n_ℓ`.
    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn width(&self, i: usize) -> usize {
        self.widths[i]
    }

    pub fn activations(&self) -> &[ActivationKind] {
        &self.activations
    }

    pub fn n_max(&self) -> usize {
        *self.widths.iter().max().expect("non-empty widths")
    }

    /// Total connection count `Σ n_{i−1} n_i`.
    pub fn weight_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1]).sum()
    }

    pub fn lambda_max(&self) -> f64 {
        self.activations
            .iter()
            .map(|a| a.lipschitz())
            .fold(0.0, f64::max)
    }

    pub fn is_all_relu(&self) -> bool {
        self.activations
            .iter()
            .all(|&a| a == ActivationKind::Relu)
    }
}

/// A concrete network: architecture plus per-layer weight matrices, with a
/// declared entrywise bound `w_max` on the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetNetwork {
    arch: Architecture,
    weights: Vec<Matrix>,
    w_max: f64,
}

impl TargetNetwork {
    pub fn new(arch: Architecture, weights: Vec<Matrix>, w_max: f64) -> Result<Self> {
        if !(w_max > 0.0) {
            return param_err("w_max", "must be positive");
        }
        if weights.len() != arch.depth() {
            return Err(Error::Dimension {
                context: "weight matrices",
                expected: arch.depth(),
                got: weights.len(),
            });
        }
        for (i, w) in weights.iter().enumerate() {
            if w.rows() != arch.width(i + 1) || w.cols() != arch.width(i) {
                return Err(Error::Dimension {
                    context: "weight matrix shape",
                    expected: arch.width(i + 1) * arch.width(i),
                    got: w.rows() * w.cols(),
                });
            }
            if w.max_norm() > w_max {
                return param_err(
                    "weights",
                    format!("layer {i} has an entry exceeding w_max = {w_max}"),
                );
            }
        }
        Ok(TargetNetwork {
            arch,
            weights,
            w_max,
        })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn layer(&self, i: usize) -> &Matrix {
        &self.weights[i]
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    /// Forward pass: returns the output vector `F_ℓ(x)`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.check_input(x)?.to_vec();
        for (w, act) in self.weights.iter().zip(&self.arch.activations) {
            let mut z = w.matvec(&y)?;
            for v in &mut z {
                *v = act.apply(*v);
            }
            y = z;
        }
        Ok(y)
    }

    /// All intermediate activations `F_0(x)..F_ℓ(x)`, with `F_0(x) = x`.
    pub fn forward_trace(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut trace = Vec::with_capacity(self.arch.depth() + 1);
        trace.push(self.check_input(x)?.to_vec());
        for (w, act) in self.weights.iter().zip(&self.arch.activations) {
            let mut z = w.matvec(trace.last().expect("non-empty trace"))?;
            for v in &mut z {
                *v = act.apply(*v);
            }
            trace.push(z);
        }
        Ok(trace)
    }

    /// Maximum absolute activation over the domain, network inputs included,
    /// network outputs excluded.
    pub fn f_max(&self, domain: &InputDomain) -> Result<f64> {
        if domain.samples().is_empty() {
            return Err(Error::EmptyDomain);
        }
        let mut best = 0.0f64;
        for x in domain.samples() {
            let trace = self.forward_trace(x)?;
            for layer in &trace[..trace.len() - 1] {
                for &v in layer {
                    best = best.max(v.abs());
                }
            }
        }
        Ok(best)
    }

    fn check_input<'a>(&self, x: &'a [f64]) -> Result<&'a [f64]> {
        if x.len() != self.arch.width(0) {
            return Err(Error::Dimension {
                context: "network input",
                expected: self.arch.width(0),
                got: x.len(),
            });
        }
        Ok(x)
    }

    /// Serialize to the project-wide network JSON format.
    pub fn to_json(&self) -> String {
        let file = NetworkFile {
            w_max: self.w_max,
            layers: self
                .weights
                .iter()
                .zip(&self.arch.activations)
                .map(|(w, act)| LayerFile {
                    rows: w.rows(),
                    cols: w.cols(),
                    activation: act.name().to_string(),
                    weights: w.data().to_vec(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable") + "\n"
    }

    /// Parse the project-wide network JSON format. Validation is strict:
    /// unknown keys, shape mismatches, and out-of-bound weights are rejected.
    pub fn from_json(s: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(s)?;
        if file.layers.is_empty() {
            return Err(Error::Format("network needs at least one layer".into()));
        }
        let mut widths = vec![file.layers[0].cols];
        let mut activations = Vec::with_capacity(file.layers.len());
        let mut weights = Vec::with_capacity(file.layers.len());
        for (i, layer) in file.layers.iter().enumerate() {
            if layer.rows == 0 || layer.cols == 0 {
                return Err(Error::Format(format!("layer {i}: zero dimension")));
            }
            if layer.cols != *widths.last().expect("non-empty") {
                return Err(Error::Format(format!(
                    "layer {i}: cols = {} does not match previous layer rows = {}",
                    layer.cols,
                    widths.last().expect("non-empty")
                )));
            }
            if layer.weights.len() != layer.rows * layer.cols {
                return Err(Error::Format(format!(
                    "layer {i}: expected {} weights, got {}",
                    layer.rows * layer.cols,
                    layer.weights.len()
                )));
            }
            widths.push(layer.rows);
            activations.push(ActivationKind::parse(&layer.activation)?);
            weights.push(Matrix::from_vec(
                layer.rows,
                layer.cols,
                layer.weights.clone(),
            )?);
        }
        let arch = Architecture::new(widths, activations)?;
        TargetNetwork::new(arch, weights, file.w_max)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    w_max: f64,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    rows: usize,
    cols: usize,
    activation: String,
    weights: Vec<f64>,
}

/// A finite set of inputs of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDomain {
    dimension: usize,
    samples: Vec<Vec<f64>>,
}

impl InputDomain {
    pub fn new(dimension: usize, samples: Vec<Vec<f64>>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if s.len() != dimension {
                return Err(Error::Dimension {
                    context: "input domain sample",
                    expected: dimension,
                    got: samples[i].len(),
                });
            }
        }
        Ok(InputDomain { dimension, samples })
    }

    /// `n` seeded draws, uniform on `[-1, 1]^dimension`.
    pub fn sample_uniform(dimension: usize, n: usize, seed: u64) -> Self {
        let mut rng = crate::rng::CounterRng::from_parts(seed, "inputs", 0);
        let samples = (0..n)
            .map(|_| (0..dimension).map(|_| 2.0 * rng.next_unit() - 1.0).collect())
            .collect();
        InputDomain { dimension, samples }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }
}
