//! Seeded random-weight models on fixed architectures.
//!
//! The three named architectures mirror published credit-scoring, diabetes
//! and temperature-regression networks layer for layer; weights are drawn
//! fresh from a seed since the trained parameters are not available. Inputs
//! are assumed normalized to `[0, 1]` per feature.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activation::Activation;
use crate::model_io::{LayerSpec, ModelSpec, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerPlan {
    Dense(usize, Activation),
    Dropout(f64),
    BatchNorm,
    Softmax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub name: String,
    pub input_dim: usize,
    pub layers: Vec<LayerPlan>,
}

use LayerPlan::{Dense, Dropout};

impl Architecture {
    /// 20 inputs → 300 relu → dropout 0.2 → 300 relu → dropout 0.2 → 20 relu → 1 sigmoid.
    pub fn credit() -> Self {
        Architecture {
            name: "credit".into(),
            input_dim: 20,
            layers: vec![
                Dense(300, Activation::Relu),
                Dropout(0.2),
                Dense(300, Activation::Relu),
                Dropout(0.2),
                Dense(20, Activation::Relu),
                Dense(1, Activation::Sigmoid),
            ],
        }
    }

    /// 8 inputs → 64 gelu → dropout 0.1 → 128 tanh → 1 sigmoid.
    pub fn diabetes() -> Self {
        Architecture {
            name: "diabetes".into(),
            input_dim: 8,
            layers: vec![
                Dense(64, Activation::Gelu),
                Dropout(0.1),
                Dense(128, Activation::Tanh),
                Dense(1, Activation::Sigmoid),
            ],
        }
    }

    /// 22 inputs → 300 relu → dropout 0.2 → 300 selu → 20 swish → 2 sigmoid.
    pub fn temperature() -> Self {
        Architecture {
            name: "temperature".into(),
            input_dim: 22,
            layers: vec![
                Dense(300, Activation::Relu),
                Dropout(0.2),
                Dense(300, Activation::Selu),
                Dense(20, Activation::Swish),
                Dense(2, Activation::Sigmoid),
            ],
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "credit" => Some(Self::credit()),
            "diabetes" => Some(Self::diabetes()),
            "temperature" => Some(Self::temperature()),
            _ => None,
        }
    }

    /// True when no layer uses an activation with a kink.
    pub fn is_smooth(&self) -> bool {
        self.layers.iter().all(|l| match l {
            Dense(_, a) => a.kinks().is_empty(),
            _ => true,
        })
    }

    /// Glorot-uniform weights, small uniform biases, unit feature ranges.
    pub fn instantiate(&self, seed: u64) -> ModelSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut width = self.input_dim;
        let mut layers = Vec::with_capacity(self.layers.len());
        for plan in &self.layers {
            let layer = match *plan {
                Dense(units, activation) => {
                    let limit = (6.0 / (width + units) as f64).sqrt();
                    let weights = (0..units)
                        .map(|_| {
                            (0..width)
                                .map(|_| rng.random_range(-limit..limit))
                                .collect()
                        })
                        .collect();
                    let bias = (0..units).map(|_| rng.random_range(-0.1..0.1)).collect();
                    width = units;
                    LayerSpec::Dense {
                        weights,
                        bias,
                        activation,
                    }
                }
                Dropout(rate) => LayerSpec::Dropout { rate },
                LayerPlan::BatchNorm => LayerSpec::BatchNorm {
                    gamma: (0..width).map(|_| rng.random_range(0.5..1.5)).collect(),
                    beta: (0..width).map(|_| rng.random_range(-0.2..0.2)).collect(),
                    moving_mean: (0..width).map(|_| rng.random_range(-0.2..0.2)).collect(),
                    moving_var: (0..width).map(|_| rng.random_range(0.5..2.0)).collect(),
                    epsilon: 1e-3,
                },
                LayerPlan::Softmax => LayerSpec::Softmax,
            };
            layers.push(layer);
        }
        ModelSpec {
            schema_version: SCHEMA_VERSION,
            name: Some(format!("{}-seed-{seed}", self.name)),
            input_dim: self.input_dim,
            feature_ranges: Some(vec![(0.0, 1.0); self.input_dim]),
            layers,
        }
    }
}

/// Bounds for [`random_architecture`].
#[derive(Debug, Clone)]
pub struct RandomArchitecture<'a> {
    pub max_input_dim: usize,
    pub max_dense_layers: usize,
    pub max_units: usize,
    pub activations: &'a [Activation],
    pub dropout: bool,
    pub batch_norm: bool,
    pub softmax_head: bool,
}

impl RandomArchitecture<'_> {
    pub fn smooth() -> RandomArchitecture<'static> {
        RandomArchitecture {
            max_input_dim: 12,
            max_dense_layers: 4,
            max_units: 64,
            activations: &[
                Activation::Sigmoid,
                Activation::Tanh,
                Activation::Softplus,
                Activation::Gelu,
                Activation::Swish,
                Activation::Elu,
                Activation::Selu,
            ],
            dropout: false,
            batch_norm: false,
            softmax_head: false,
        }
    }

    pub fn everything() -> RandomArchitecture<'static> {
        RandomArchitecture {
            max_input_dim: 12,
            max_dense_layers: 4,
            max_units: 48,
            activations: &Activation::ALL,
            dropout: true,
            batch_norm: true,
            softmax_head: true,
        }
    }
}

/// Draws an architecture within `bounds`. Dropout and batch norm, when
/// allowed, follow a dense layer with probability 1/3 each; a softmax head
/// closes the network with probability 1/3.
pub fn random_architecture(bounds: &RandomArchitecture<'_>, seed: u64) -> Architecture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input_dim = rng.random_range(1..=bounds.max_input_dim);
    let dense = rng.random_range(1..=bounds.max_dense_layers);
    let mut layers = Vec::new();
    for i in 0..dense {
        let last = i + 1 == dense;
        let units = if last {
            rng.random_range(1..=4)
        } else {
            rng.random_range(1..=bounds.max_units)
        };
        let activation = *bounds.activations.choose(&mut rng).expect("activations");
        layers.push(Dense(units, activation));
        if !last && bounds.batch_norm && rng.random_bool(1.0 / 3.0) {
            layers.push(LayerPlan::BatchNorm);
        }
        if !last && bounds.dropout && rng.random_bool(1.0 / 3.0) {
            layers.push(Dropout(rng.random_range(0.0..0.5)));
        }
    }
    if bounds.softmax_head && rng.random_bool(1.0 / 3.0) {
        layers.push(LayerPlan::Softmax);
    }
    Architecture {
        name: format!("random-{seed}"),
        input_dim,
        layers,
    }
}

/// A point drawn uniformly from `[0, 1]^dim`.
pub fn random_instance(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.random::<f64>()).collect()
}
