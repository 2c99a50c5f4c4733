//! Front-propagation: one forward pass, then a forward sweep that carries an
//! affine map of the input through every layer, replacing each nonlinearity
//! by its tangent at the traced base value.
//!
//! Layers are indexed forward, `0` being the layer that reads the input.
//! After layer `h` the carried map has one row per unit of layer `h`; row `u`
//! holds the coefficients and constant of the local linear function for that
//! unit's output. After the last layer it is the surrogate of the whole
//! network.
//!
//! Cost: exactly one network evaluation. The coefficient sweep adds
//! `O(Σ width_h · width_{h-1} · input_dim)` arithmetic on top of it.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::affine::{self, AffineMap, Linearization};
use crate::network::{EvalError, ForwardTrace, Layer, Network};

/// Absolute per-component tolerance for surrogate-vs-network agreement at the
/// base instance.
pub const BASE_EXACTNESS_TOL: f64 = 1e-9;

/// A unit whose activation has a kink, with how far the traced
/// pre-activation sits from it.
#[derive(Debug, Clone, PartialEq)]
pub struct KinkMargin {
    pub layer: usize,
    pub unit: usize,
    pub activation: Activation,
    /// `|s_base − nearest kink|`.
    pub gap: f64,
    /// Largest absolute coefficient of the unit's pre-activation map: the
    /// first-order change in `s` per unit step along one input axis.
    pub sensitivity: f64,
}

impl KinkMargin {
    pub fn flag(&self) -> String {
        format!(
            "{}_kink_at_layer_{}_unit_{}",
            self.activation, self.layer, self.unit
        )
    }

    /// Whether an axis-aligned input step of size `step` can reach the kink
    /// to first order.
    pub fn within(&self, step: f64) -> bool {
        self.gap <= step * self.sensitivity
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub base_instance: DVector<f64>,
    pub base_output: DVector<f64>,
    pub affine: AffineMap,
    /// `contributions[(k, j)] = coefficients[(k, j)] · x_base[j]`.
    pub contributions: DMatrix<f64>,
    /// Units whose traced pre-activation sits exactly on a kink.
    pub flags: Vec<String>,
    /// Every unit with a kinked activation, whether or not it is on the kink.
    pub kink_margins: Vec<KinkMargin>,
}

impl Explanation {
    /// Largest `|affine(x_base) − f(x_base)|` over output components.
    pub fn base_residual(&self) -> f64 {
        let at_base = self.affine.eval(self.base_instance.as_slice());
        (at_base - &self.base_output).amax()
    }

    pub fn is_exact_at_base(&self) -> bool {
        self.base_residual() <= BASE_EXACTNESS_TOL
    }

    pub fn near_kinks(&self, step: f64) -> impl Iterator<Item = &KinkMargin> {
        self.kink_margins.iter().filter(move |k| k.within(step))
    }

    pub fn to_record(&self) -> ExplanationRecord {
        ExplanationRecord {
            base_instance: self.base_instance.iter().copied().collect(),
            base_output: self.base_output.iter().copied().collect(),
            coefficients: rows(&self.affine.coefficients),
            intercept: self.affine.intercept.iter().copied().collect(),
            contributions: rows(&self.contributions),
            flags: self.flags.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("explanation serializes")
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Explanation JSON layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub base_instance: Vec<f64>,
    pub base_output: Vec<f64>,
    pub coefficients: Vec<Vec<f64>>,
    pub intercept: Vec<f64>,
    pub contributions: Vec<Vec<f64>>,
    pub flags: Vec<String>,
}

/// Extracts the local affine surrogate of `net` at `x_base`.
///
/// Calls `net.forward` exactly once.
pub fn frontprop<N: Network + ?Sized>(net: &N, x_base: &[f64]) -> Result<Explanation, EvalError> {
    let trace = net.forward(x_base)?;
    Ok(propagate(net, trace))
}

fn propagate<N: Network + ?Sized>(net: &N, trace: ForwardTrace) -> Explanation {
    let model = net.model();
    let mut carried = AffineMap::identity(model.input_dim());
    let mut kink_margins = Vec::new();

    // Shape errors below are unreachable: Model::new validated every width.
    for (h, (layer, record)) in model.layers().iter().zip(&trace.layers).enumerate() {
        carried = match layer {
            Layer::Dense {
                weights,
                bias,
                activation,
            } => {
                let pre = affine::compose_dense(weights, bias, &carried).expect("validated widths");
                let s = record
                    .pre_activation
                    .as_ref()
                    .expect("dense layers record s");
                if !activation.kinks().is_empty() {
                    for (unit, &s_u) in s.iter().enumerate() {
                        let gap = activation.kink_gap(s_u).expect("kinked activation");
                        let sensitivity = pre.coefficients.row(unit).amax();
                        kink_margins.push(KinkMargin {
                            layer: h,
                            unit,
                            activation: *activation,
                            gap,
                            sensitivity,
                        });
                    }
                }
                if *activation == Activation::Identity {
                    pre
                } else {
                    let lin: Vec<Linearization> = s
                        .iter()
                        .map(|&s_u| affine::linearize_activation(*activation, s_u))
                        .collect();
                    affine::apply_linearization(&lin, &pre).expect("validated widths")
                }
            }
            Layer::Dropout { .. } => carried,
            Layer::BatchNorm {
                gamma,
                beta,
                mean,
                var,
                epsilon,
            } => affine::linearize_batch_norm(gamma, beta, mean, var, *epsilon, &carried)
                .expect("validated widths"),
            Layer::Softmax => {
                let logits = record
                    .pre_activation
                    .as_ref()
                    .expect("softmax records logits");
                affine::linearize_softmax(&record.output, logits, &carried)
                    .expect("validated widths")
            }
        };
    }

    let base_instance = trace.input.clone();
    let base_output = trace.output().clone();
    let mut contributions = carried.coefficients.clone();
    for (j, &x) in base_instance.iter().enumerate() {
        contributions.column_mut(j).scale_mut(x);
    }
    let flags = kink_margins
        .iter()
        .filter(|k| k.gap == 0.0)
        .map(KinkMargin::flag)
        .collect();

    Explanation {
        base_instance,
        base_output,
        affine: carried,
        contributions,
        flags,
        kink_margins,
    }
}
