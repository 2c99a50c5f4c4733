//! Local affine surrogates of feed-forward networks.
//!
//! [`frontprop`] evaluates a network once at a base instance and carries an
//! affine map of the input through every layer, replacing each activation by
//! its tangent at the traced pre-activation. The result is the network's
//! first-order surrogate `x ↦ M·x + n` around the base instance: `M` is the
//! input Jacobian and the surrogate reproduces the network output at the base
//! exactly.
//!
//! ```
//! use frontprop::{frontprop, parse_model, Model};
//!
//! let spec = parse_model(r#"{"schema_version": 1, "input_dim": 1, "layers": [
//!     {"type": "dense", "weights": [[2.0]], "bias": [1.0], "activation": "identity"}]}"#).unwrap();
//! let model = Model::new(spec).unwrap();
//! let explanation = frontprop(&model, &[3.0]).unwrap();
//! assert_eq!(explanation.affine.coefficients[(0, 0)], 2.0);
//! assert_eq!(explanation.affine.intercept[0], 1.0);
//! ```

// `!(a < b)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod affine;
pub mod engine;
pub mod harness;
pub mod model_io;
pub mod network;
pub mod replica;

pub use activation::Activation;
pub use affine::{AffineMap, Linearization};
pub use engine::{frontprop, Explanation, ExplanationRecord};
pub use model_io::{load_model, parse_model, validate_model, LayerSpec, ModelError, ModelSpec};
pub use network::{Counted, EvalError, ForwardTrace, Model, Network};
