//! JSON interchange format for sequential feed-forward models.
//!
//! Dense weights are stored one row per output unit: `weights[j][k]` is the
//! weight from input `k` of the layer to unit `j`. All numbers are read as
//! `f64` regardless of the precision the exporter trained in.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::Activation;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub input_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_ranges: Option<Vec<(f64, f64)>>,
    pub layers: Vec<LayerSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    Dense {
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
        activation: Activation,
    },
    Dropout {
        rate: f64,
    },
    BatchNorm {
        gamma: Vec<f64>,
        beta: Vec<f64>,
        moving_mean: Vec<f64>,
        moving_var: Vec<f64>,
        epsilon: f64,
    },
    Softmax,
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::BatchNorm { .. } => "batch_norm",
            LayerSpec::Softmax => "softmax",
        }
    }

    /// Width of the layer's output given the width of its input.
    pub fn output_width(&self, incoming: usize) -> usize {
        match self {
            LayerSpec::Dense { weights, .. } => weights.len(),
            _ => incoming,
        }
    }
}

impl ModelSpec {
    pub fn output_dim(&self) -> usize {
        self.layers
            .iter()
            .fold(self.input_dim, |width, layer| layer.output_width(width))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model spec serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    /// Dimension mismatch between or within layers.
    Shape,
    /// A parameter outside its allowed range.
    Value,
    /// Schema-level problem such as an unsupported version.
    Schema,
}

/// One validation failure. `layer` is `None` for model-level problems.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub layer: Option<usize>,
    pub kind: DiagnosticKind,
    pub reason: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.layer {
            Some(i) => write!(f, "layer {i}: {}", self.reason),
            None => write!(f, "model: {}", self.reason),
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Parse(serde_json::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("shape error: {}", join(.0))]
    Shape(Vec<Diagnostic>),
    #[error("invalid model: {}", join(.0))]
    Invalid(Vec<Diagnostic>),
}

fn join(diagnostics: &[Diagnostic]) -> String {
    diagnostics
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelSpec, ModelError> {
    let text = fs::read_to_string(path)?;
    parse_model(&text)
}

/// Parses and validates a model from JSON text.
pub fn parse_model(text: &str) -> Result<ModelSpec, ModelError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(ModelError::Parse)?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(ModelError::Schema(format!(
                "unsupported schema_version {v}; expected {SCHEMA_VERSION}"
            )))
        }
        None => {
            return Err(ModelError::Schema(
                "missing or non-integer schema_version".to_owned(),
            ))
        }
    }
    let spec: ModelSpec =
        serde_json::from_value(value).map_err(|e| ModelError::Schema(e.to_string()))?;
    check(spec)
}

/// Runs [`validate_model`] and turns any diagnostics into an error.
pub fn check(spec: ModelSpec) -> Result<ModelSpec, ModelError> {
    let diagnostics = validate_model(&spec);
    if diagnostics.is_empty() {
        return Ok(spec);
    }
    if let Some(d) = diagnostics
        .iter()
        .find(|d| d.kind == DiagnosticKind::Schema)
    {
        return Err(ModelError::Schema(d.reason.clone()));
    }
    if diagnostics.iter().any(|d| d.kind == DiagnosticKind::Shape) {
        Err(ModelError::Shape(diagnostics))
    } else {
        Err(ModelError::Invalid(diagnostics))
    }
}

/// Checks every structural and value invariant. Returns an empty list for a
/// valid model.
pub fn validate_model(spec: &ModelSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let model = |kind, reason: String| Diagnostic {
        layer: None,
        kind,
        reason,
    };

    if spec.schema_version != SCHEMA_VERSION {
        out.push(model(
            DiagnosticKind::Schema,
            format!(
                "unsupported schema_version {}; expected {SCHEMA_VERSION}",
                spec.schema_version
            ),
        ));
    }
    if spec.input_dim == 0 {
        out.push(model(
            DiagnosticKind::Shape,
            "input_dim must be at least 1".into(),
        ));
    }
    if spec.layers.is_empty() {
        out.push(model(DiagnosticKind::Shape, "model has no layers".into()));
    }
    if let Some(ranges) = &spec.feature_ranges {
        if ranges.len() != spec.input_dim {
            out.push(model(
                DiagnosticKind::Shape,
                format!(
                    "feature_ranges has {} entries, input_dim is {}",
                    ranges.len(),
                    spec.input_dim
                ),
            ));
        }
        for (j, &(lo, hi)) in ranges.iter().enumerate() {
            // also rejects NaN
            if !(lo < hi) {
                out.push(model(
                    DiagnosticKind::Value,
                    format!("feature_ranges[{j}] has min {lo} not below max {hi}"),
                ));
            }
        }
    }

    let mut width = spec.input_dim;
    for (i, layer) in spec.layers.iter().enumerate() {
        let mut push = |kind, reason: String| {
            out.push(Diagnostic {
                layer: Some(i),
                kind,
                reason,
            })
        };
        match layer {
            LayerSpec::Dense { weights, bias, .. } => {
                if weights.is_empty() {
                    push(DiagnosticKind::Shape, "dense layer has no units".into());
                }
                if let Some(bad) = weights.iter().position(|row| row.len() != width) {
                    push(
                        DiagnosticKind::Shape,
                        format!(
                            "dense weights row {bad} has {} columns, expected fan_in {width}",
                            weights[bad].len()
                        ),
                    );
                }
                if bias.len() != weights.len() {
                    push(
                        DiagnosticKind::Shape,
                        format!(
                            "dense bias has {} entries for {} units",
                            bias.len(),
                            weights.len()
                        ),
                    );
                }
                let finite = weights.iter().flatten().chain(bias).all(|v| v.is_finite());
                if !finite {
                    push(
                        DiagnosticKind::Value,
                        "dense parameters must be finite".into(),
                    );
                }
            }
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(rate) {
                    push(
                        DiagnosticKind::Value,
                        format!("dropout rate {rate} outside [0, 1)"),
                    );
                }
            }
            LayerSpec::BatchNorm {
                gamma,
                beta,
                moving_mean,
                moving_var,
                epsilon,
            } => {
                for (name, v) in [
                    ("gamma", gamma),
                    ("beta", beta),
                    ("moving_mean", moving_mean),
                    ("moving_var", moving_var),
                ] {
                    if v.len() != width {
                        push(
                            DiagnosticKind::Shape,
                            format!(
                                "batch_norm {name} has {} entries, incoming width is {width}",
                                v.len()
                            ),
                        );
                    }
                }
                // also rejects NaN
                if !(*epsilon > 0.0) {
                    push(
                        DiagnosticKind::Value,
                        format!("batch_norm epsilon {epsilon} must be positive"),
                    );
                }
                if let Some(j) = moving_var.iter().position(|v| !(*v >= 0.0)) {
                    push(
                        DiagnosticKind::Value,
                        format!("batch_norm moving_var[{j}] = {} is negative", moving_var[j]),
                    );
                }
            }
            LayerSpec::Softmax => {}
        }
        width = layer.output_width(width);
    }
    out
}
