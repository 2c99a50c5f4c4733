//! Affine maps over the model input and the per-layer folding rules that
//! carry them through a network.
//!
//! An [`AffineMap`] with `r` rows represents `r` functions
//! `x ↦ coefficients · x + intercept` of the network input. Propagation starts
//! from the identity map (each row is one input coordinate kept symbolic) and
//! each layer replaces the map with the composition of that layer, or of its
//! tangent at the traced base values, with the incoming map.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::Activation;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{what}: expected {expected}, got {got}")]
pub struct ShapeError {
    pub what: &'static str,
    pub expected: usize,
    pub got: usize,
}

fn ensure(what: &'static str, expected: usize, got: usize) -> Result<(), ShapeError> {
    if expected == got {
        Ok(())
    } else {
        Err(ShapeError {
            what,
            expected,
            got,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    /// One row per represented function, one column per input dimension.
    pub coefficients: DMatrix<f64>,
    pub intercept: DVector<f64>,
}

impl AffineMap {
    pub fn new(coefficients: DMatrix<f64>, intercept: DVector<f64>) -> Result<Self, ShapeError> {
        ensure("intercept length", coefficients.nrows(), intercept.len())?;
        Ok(AffineMap {
            coefficients,
            intercept,
        })
    }

    /// The map `x ↦ x` on `dim` inputs.
    pub fn identity(dim: usize) -> Self {
        AffineMap {
            coefficients: DMatrix::identity(dim, dim),
            intercept: DVector::zeros(dim),
        }
    }

    pub fn rows(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.coefficients.ncols()
    }

    /// Panics if `x` does not have [`Self::input_dim`] entries.
    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        assert_eq!(x.len(), self.input_dim(), "affine map input width");
        &self.coefficients * DVector::from_column_slice(x) + &self.intercept
    }
}

/// Tangent line `q(s) = slope · s + intercept` of an activation at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    pub slope: f64,
    pub intercept: f64,
}

impl Linearization {
    pub const IDENTITY: Linearization = Linearization {
        slope: 1.0,
        intercept: 0.0,
    };

    pub fn apply(&self, s: f64) -> f64 {
        self.slope * s + self.intercept
    }
}

/// Tangent of `kind` at `s_base`. Reproduces `kind.eval(s_base)` at `s_base`
/// up to one rounding.
pub fn linearize_activation(kind: Activation, s_base: f64) -> Linearization {
    let slope = kind.derivative(s_base);
    Linearization {
        slope,
        intercept: kind.eval(s_base) - slope * s_base,
    }
}

/// Pre-activation map `W · incoming + b`.
pub fn compose_dense(
    weights: &DMatrix<f64>,
    bias: &DVector<f64>,
    incoming: &AffineMap,
) -> Result<AffineMap, ShapeError> {
    ensure("dense fan_in", weights.ncols(), incoming.rows())?;
    ensure("dense bias length", weights.nrows(), bias.len())?;
    // Rows zeroed by flat activations (dead ReLUs, saturated hard sigmoids)
    // contribute nothing; drop them when they are a sizeable share.
    let live: Vec<usize> = (0..incoming.rows())
        .filter(|&r| incoming.coefficients.row(r).iter().any(|&v| v != 0.0))
        .collect();
    let coefficients = if live.len() * 4 <= incoming.rows() * 3 {
        weights.select_columns(&live) * incoming.coefficients.select_rows(&live)
    } else {
        weights * &incoming.coefficients
    };
    Ok(AffineMap {
        coefficients,
        intercept: weights * &incoming.intercept + bias,
    })
}

/// Composes each row with its unit's tangent line.
pub fn apply_linearization(
    lin: &[Linearization],
    pre: &AffineMap,
) -> Result<AffineMap, ShapeError> {
    ensure("linearization count", pre.rows(), lin.len())?;
    let mut out = pre.clone();
    for (row, l) in lin.iter().enumerate() {
        out.coefficients.row_mut(row).scale_mut(l.slope);
        out.intercept[row] = l.slope * pre.intercept[row] + l.intercept;
    }
    Ok(out)
}

/// Inference-mode batch norm, which is exactly affine per unit.
pub fn linearize_batch_norm(
    gamma: &DVector<f64>,
    beta: &DVector<f64>,
    mean: &DVector<f64>,
    var: &DVector<f64>,
    epsilon: f64,
    incoming: &AffineMap,
) -> Result<AffineMap, ShapeError> {
    for (what, v) in [
        ("batch_norm gamma", gamma),
        ("batch_norm beta", beta),
        ("batch_norm mean", mean),
        ("batch_norm var", var),
    ] {
        ensure(what, incoming.rows(), v.len())?;
    }
    let lin: Vec<Linearization> = (0..incoming.rows())
        .map(|j| {
            let scale = gamma[j] / (var[j] + epsilon).sqrt();
            Linearization {
                slope: scale,
                intercept: beta[j] - scale * mean[j],
            }
        })
        .collect();
    apply_linearization(&lin, incoming)
}

/// Softmax Jacobian `diag(p) − p·pᵀ` at the base probabilities.
pub fn softmax_jacobian(p: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(p) - p * p.transpose()
}

/// Tangent of softmax at the base instance, composed with the incoming map.
///
/// `logits_base` is the incoming value at the base instance and `p_base` the
/// softmax of it, both taken from the trace. The result reproduces `p_base`
/// at the base instance.
pub fn linearize_softmax(
    p_base: &DVector<f64>,
    logits_base: &DVector<f64>,
    incoming: &AffineMap,
) -> Result<AffineMap, ShapeError> {
    ensure("softmax width", incoming.rows(), p_base.len())?;
    ensure("softmax logits width", incoming.rows(), logits_base.len())?;
    let jacobian = softmax_jacobian(p_base);
    let offset = p_base - &jacobian * logits_base;
    Ok(AffineMap {
        coefficients: &jacobian * &incoming.coefficients,
        intercept: &jacobian * &incoming.intercept + offset,
    })
}
