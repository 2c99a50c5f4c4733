//! Scalar activation functions and their analytic derivatives.
//!
//! Every kind is total on the reals. At the non-differentiable points of the
//! piecewise kinds the derivative follows a fixed convention:
//!
//! - `relu`: derivative at 0 is 0.
//! - `hard_sigmoid`: derivative at the breakpoints `±2.5` is 0.
//! - `elu` / `selu`: derivative at 0 is taken from the right branch
//!   (1 and λ respectively).

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

/// SELU scale λ.
pub const SELU_SCALE: f64 = 1.050_700_987_355_48;
/// SELU negative-branch α.
pub const SELU_ALPHA: f64 = 1.673_263_242_354_37;
/// ELU negative-branch α (framework default).
pub const ELU_ALPHA: f64 = 1.0;

const HARD_SIGMOID_SLOPE: f64 = 0.2;
const HARD_SIGMOID_BREAK: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Elu,
    Relu,
    Selu,
    Gelu,
    Sigmoid,
    Tanh,
    Swish,
    Softsign,
    Exponential,
    HardSigmoid,
    Softplus,
}

impl Activation {
    pub const ALL: [Activation; 12] = [
        Activation::Identity,
        Activation::Elu,
        Activation::Relu,
        Activation::Selu,
        Activation::Gelu,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Swish,
        Activation::Softsign,
        Activation::Exponential,
        Activation::HardSigmoid,
        Activation::Softplus,
    ];

    /// Name used in the model JSON format.
    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Elu => "elu",
            Activation::Relu => "relu",
            Activation::Selu => "selu",
            Activation::Gelu => "gelu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Swish => "swish",
            Activation::Softsign => "softsign",
            Activation::Exponential => "exponential",
            Activation::HardSigmoid => "hard_sigmoid",
            Activation::Softplus => "softplus",
        }
    }

    pub fn eval(self, s: f64) -> f64 {
        match self {
            Activation::Identity => s,
            Activation::Elu => {
                if s > 0.0 {
                    s
                } else {
                    ELU_ALPHA * s.exp_m1()
                }
            }
            Activation::Relu => {
                if s > 0.0 {
                    s
                } else {
                    0.0
                }
            }
            Activation::Selu => {
                if s > 0.0 {
                    SELU_SCALE * s
                } else {
                    SELU_SCALE * SELU_ALPHA * s.exp_m1()
                }
            }
            Activation::Gelu => s * normal_cdf(s),
            Activation::Sigmoid => sigmoid(s),
            Activation::Tanh => s.tanh(),
            Activation::Swish => s * sigmoid(s),
            Activation::Softsign => s / (1.0 + s.abs()),
            Activation::Exponential => s.exp(),
            Activation::HardSigmoid => (HARD_SIGMOID_SLOPE * s + 0.5).clamp(0.0, 1.0),
            Activation::Softplus => s.max(0.0) + (-s.abs()).exp().ln_1p(),
        }
    }

    pub fn derivative(self, s: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Elu => {
                if s >= 0.0 {
                    1.0
                } else {
                    ELU_ALPHA * s.exp()
                }
            }
            Activation::Relu => {
                if s > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Selu => {
                if s >= 0.0 {
                    SELU_SCALE
                } else {
                    SELU_SCALE * SELU_ALPHA * s.exp()
                }
            }
            Activation::Gelu => normal_cdf(s) + s * normal_pdf(s),
            Activation::Sigmoid => {
                let p = sigmoid(s);
                p * (1.0 - p)
            }
            Activation::Tanh => {
                let t = s.tanh();
                1.0 - t * t
            }
            Activation::Swish => {
                let p = sigmoid(s);
                p + s * p * (1.0 - p)
            }
            Activation::Softsign => {
                let d = 1.0 + s.abs();
                1.0 / (d * d)
            }
            Activation::Exponential => s.exp(),
            Activation::HardSigmoid => {
                if s > -HARD_SIGMOID_BREAK && s < HARD_SIGMOID_BREAK {
                    HARD_SIGMOID_SLOPE
                } else {
                    0.0
                }
            }
            Activation::Softplus => sigmoid(s),
        }
    }

    /// Points where the derivative is discontinuous.
    pub fn kinks(self) -> &'static [f64] {
        match self {
            Activation::Relu | Activation::Selu => &[0.0],
            Activation::HardSigmoid => &[-HARD_SIGMOID_BREAK, HARD_SIGMOID_BREAK],
            _ => &[],
        }
    }

    /// Distance from `s` to the nearest kink, if the kind has any.
    pub fn kink_gap(self, s: f64) -> Option<f64> {
        self.kinks()
            .iter()
            .map(|k| (s - k).abs())
            .min_by(f64::total_cmp)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Standard normal CDF Φ.
fn normal_cdf(s: f64) -> f64 {
    0.5 * libm::erfc(-s * FRAC_1_SQRT_2)
}

/// Standard normal density φ.
fn normal_pdf(s: f64) -> f64 {
    (-0.5 * s * s).exp() / (2.0 * PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn named_values() {
        assert_eq!(Activation::Sigmoid.eval(0.0), 0.5);
        assert_eq!(Activation::Relu.eval(-1.0), 0.0);
        assert_eq!(Activation::Gelu.eval(0.0), 0.0);
        assert_eq!(Activation::Sigmoid.derivative(0.0), 0.25);
        assert_eq!(Activation::Tanh.derivative(0.0), 1.0);
        assert_eq!(Activation::Softplus.derivative(0.0), 0.5);
        assert_eq!(Activation::Softplus.eval(0.0), std::f64::consts::LN_2);
        assert_eq!(Activation::HardSigmoid.eval(10.0), 1.0);
        assert_eq!(Activation::HardSigmoid.eval(-10.0), 0.0);
        assert_eq!(Activation::Softsign.eval(1.0), 0.5);
    }

    #[test]
    fn kink_conventions() {
        assert_eq!(Activation::Relu.derivative(0.0), 0.0);
        assert_eq!(Activation::HardSigmoid.derivative(2.5), 0.0);
        assert_eq!(Activation::HardSigmoid.derivative(-2.5), 0.0);
        assert_eq!(Activation::Elu.derivative(0.0), 1.0);
        assert_eq!(Activation::Selu.derivative(0.0), SELU_SCALE);
        assert_eq!(Activation::Relu.kink_gap(-0.25), Some(0.25));
        assert_eq!(Activation::HardSigmoid.kink_gap(2.0), Some(0.5));
        assert_eq!(Activation::Tanh.kink_gap(0.0), None);
    }

    #[test]
    fn gelu_matches_erf_form() {
        for &s in &[-3.0, -0.7, 0.4, 1.0, 2.5] {
            let reference = 0.5 * s * (1.0 + libm::erf(s / 2f64.sqrt()));
            assert!((Activation::Gelu.eval(s) - reference).abs() < 1e-15);
        }
    }

    #[test]
    fn stable_in_the_tails() {
        assert_eq!(Activation::Sigmoid.eval(-800.0), 0.0);
        assert_eq!(Activation::Sigmoid.eval(800.0), 1.0);
        assert_eq!(Activation::Softplus.eval(800.0), 800.0);
        assert!(Activation::Exponential.eval(800.0).is_infinite());
        for kind in Activation::ALL {
            assert!(!kind.derivative(-800.0).is_nan(), "{kind}");
        }
    }

    #[test]
    fn names_round_trip_through_serde() {
        for kind in Activation::ALL {
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
            let back: Activation = serde_json::from_str(&json).unwrap();
            assert_eq!(back, kind);
        }
        assert!(serde_json::from_str::<Activation>("\"leaky_relu\"").is_err());
    }

    proptest! {
        #[test]
        fn derivative_matches_central_difference(s in -8.0f64..8.0, idx in 0usize..12) {
            let kind = Activation::ALL[idx];
            let h = 1e-6;
            prop_assume!(kind.kink_gap(s).is_none_or(|g| g > 2.0 * h));
            let fd = (kind.eval(s + h) - kind.eval(s - h)) / (2.0 * h);
            let d = kind.derivative(s);
            // cancellation in the difference quotient: a few ulps of g over h
            let rounding = 4.0 * f64::EPSILON * kind.eval(s).abs().max(1.0) / h;
            let err = (fd - d).abs();
            prop_assert!(
                err <= 1e-6 * d.abs() + rounding,
                "{kind} at {s}: analytic {d}, central difference {fd}, error {err}"
            );
        }
    }
}
