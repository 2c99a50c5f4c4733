//! Inference-mode evaluation of a validated model, recording the
//! per-layer values the linearizer needs.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::activation::Activation;
use crate::model_io::{self, LayerSpec, ModelError, ModelSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("input has {got} entries, model expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("input entry {0} is not finite")]
    NonFinite(usize),
}

#[derive(Debug, Clone)]
pub enum Layer {
    Dense {
        weights: DMatrix<f64>,
        bias: DVector<f64>,
        activation: Activation,
    },
    Dropout {
        rate: f64,
    },
    BatchNorm {
        gamma: DVector<f64>,
        beta: DVector<f64>,
        mean: DVector<f64>,
        var: DVector<f64>,
        epsilon: f64,
    },
    Softmax,
}

impl Layer {
    fn from_spec(spec: &LayerSpec) -> Layer {
        match spec {
            LayerSpec::Dense {
                weights,
                bias,
                activation,
            } => {
                let rows = weights.len();
                let cols = weights.first().map_or(0, Vec::len);
                Layer::Dense {
                    weights: DMatrix::from_fn(rows, cols, |j, k| weights[j][k]),
                    bias: DVector::from_column_slice(bias),
                    activation: *activation,
                }
            }
            LayerSpec::Dropout { rate } => Layer::Dropout { rate: *rate },
            LayerSpec::BatchNorm {
                gamma,
                beta,
                moving_mean,
                moving_var,
                epsilon,
            } => Layer::BatchNorm {
                gamma: DVector::from_column_slice(gamma),
                beta: DVector::from_column_slice(beta),
                mean: DVector::from_column_slice(moving_mean),
                var: DVector::from_column_slice(moving_var),
                epsilon: *epsilon,
            },
            LayerSpec::Softmax => Layer::Softmax,
        }
    }
}

/// A validated, immutable network ready for evaluation.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    layers: Vec<Layer>,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Model, ModelError> {
        let spec = model_io::check(spec)?;
        let layers = spec.layers.iter().map(Layer::from_spec).collect();
        Ok(Model { spec, layers })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace, EvalError> {
        if x.len() != self.input_dim() {
            return Err(EvalError::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(EvalError::NonFinite(j));
        }
        let mut current = DVector::from_column_slice(x);
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (pre_activation, output) = match layer {
                Layer::Dense {
                    weights,
                    bias,
                    activation,
                } => {
                    let s = weights * &current + bias;
                    let t = s.map(|v| activation.eval(v));
                    (Some(s), t)
                }
                Layer::Dropout { .. } => (None, current),
                Layer::BatchNorm {
                    gamma,
                    beta,
                    mean,
                    var,
                    epsilon,
                } => {
                    let t = DVector::from_fn(current.len(), |j, _| {
                        gamma[j] * (current[j] - mean[j]) / (var[j] + epsilon).sqrt() + beta[j]
                    });
                    (None, t)
                }
                Layer::Softmax => {
                    let p = softmax(&current);
                    (Some(current), p)
                }
            };
            current = output.clone();
            layers.push(LayerTrace {
                pre_activation,
                output,
            });
        }
        Ok(ForwardTrace {
            input: DVector::from_column_slice(x),
            layers,
        })
    }
}

/// Normalized exponential with max-subtraction.
pub fn softmax(z: &DVector<f64>) -> DVector<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = z.map(|v| (v - max).exp());
    let sum = e.sum();
    e / sum
}

/// Values recorded for one layer during a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    /// Input to the layer's nonlinearity: the dense pre-activation `Wx + b`,
    /// or the logits entering a softmax. `None` for dropout and batch norm.
    pub pre_activation: Option<DVector<f64>>,
    pub output: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: DVector<f64>,
    pub layers: Vec<LayerTrace>,
}

impl ForwardTrace {
    /// The network's prediction.
    pub fn output(&self) -> &DVector<f64> {
        &self
            .layers
            .last()
            .expect("validated models have layers")
            .output
    }

    /// The vector that entered layer `i`.
    pub fn layer_input(&self, i: usize) -> &DVector<f64> {
        match i {
            0 => &self.input,
            _ => &self.layers[i - 1].output,
        }
    }
}

/// Anything that can run a full forward pass of a [`Model`].
pub trait Network: Sync {
    fn model(&self) -> &Model;

    fn forward(&self, x: &[f64]) -> Result<ForwardTrace, EvalError>;

    fn predict(&self, x: &[f64]) -> Result<DVector<f64>, EvalError> {
        Ok(self.forward(x)?.output().clone())
    }
}

impl Network for Model {
    fn model(&self) -> &Model {
        self
    }

    fn forward(&self, x: &[f64]) -> Result<ForwardTrace, EvalError> {
        Model::forward(self, x)
    }
}

/// Wraps a network and counts full forward passes.
#[derive(Debug)]
pub struct Counted<'a, N: ?Sized> {
    inner: &'a N,
    passes: AtomicUsize,
}

impl<'a, N: Network + ?Sized> Counted<'a, N> {
    pub fn new(inner: &'a N) -> Self {
        Counted {
            inner,
            passes: AtomicUsize::new(0),
        }
    }

    pub fn passes(&self) -> usize {
        self.passes.load(Ordering::SeqCst)
    }

    pub fn reset(&self) {
        self.passes.store(0, Ordering::SeqCst);
    }
}

impl<N: Network + ?Sized> Network for Counted<'_, N> {
    fn model(&self) -> &Model {
        self.inner.model()
    }

    fn forward(&self, x: &[f64]) -> Result<ForwardTrace, EvalError> {
        self.passes.fetch_add(1, Ordering::SeqCst);
        self.inner.forward(x)
    }
}
