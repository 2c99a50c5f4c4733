use nalgebra::{DMatrix, DVector};

use super::HarnessError;
use crate::activation::Activation;
use crate::affine::AffineMap;
use crate::engine::Explanation;
use crate::model_io::{LayerSpec, ModelSpec, SCHEMA_VERSION};
use crate::network::{Model, Network};

/// Central-difference Jacobian, `output_dim × input_dim`. Costs
/// `2 · input_dim` forward passes.
pub fn fd_jacobian<N: Network + ?Sized>(
    net: &N,
    x: &[f64],
    step: f64,
) -> Result<DMatrix<f64>, HarnessError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(HarnessError::Step(step));
    }
    let model = net.model();
    let mut jac = DMatrix::zeros(model.output_dim(), x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        probe[j] = x[j] + step;
        let up = net.predict(&probe)?;
        probe[j] = x[j] - step;
        let down = net.predict(&probe)?;
        probe[j] = x[j];
        jac.set_column(j, &((up - down) / (2.0 * step)));
    }
    Ok(jac)
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_deviation(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(floor);
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Largest entrywise [`relative_deviation`].
pub fn max_relative_deviation(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> f64 {
    assert_eq!(a.shape(), b.shape(), "matrix shapes");
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| relative_deviation(x, y, floor))
        .fold(0.0, f64::max)
}

/// A single identity-activation dense layer computing `affine`.
pub fn surrogate_model(affine: &AffineMap) -> Model {
    let spec = ModelSpec {
        schema_version: SCHEMA_VERSION,
        name: Some("surrogate".into()),
        input_dim: affine.input_dim(),
        feature_ranges: None,
        layers: vec![LayerSpec::Dense {
            weights: affine
                .coefficients
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            bias: affine.intercept.iter().copied().collect(),
            activation: Activation::Identity,
        }],
    };
    Model::new(spec).expect("affine maps are valid single-layer models")
}

/// Worst `|f(x_base + r·d) − L(x_base + r·d)|` over directions and outputs.
pub fn worst_error_at_radius<N: Network + ?Sized>(
    net: &N,
    explanation: &Explanation,
    directions: &[DVector<f64>],
    radius: f64,
) -> Result<f64, HarnessError> {
    let mut worst = 0.0f64;
    for d in directions {
        let x: Vec<f64> = (&explanation.base_instance + d * radius)
            .iter()
            .copied()
            .collect();
        let err = (net.predict(&x)? - explanation.affine.eval(&x)).amax();
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Ratio of the worst surrogate error at radius `r` to that at `r / 2`.
/// Close to 4 when the surrogate is tangent to a smooth network.
pub fn tangency_ratio<N: Network + ?Sized>(
    net: &N,
    explanation: &Explanation,
    directions: &[DVector<f64>],
    radius: f64,
) -> Result<f64, HarnessError> {
    let far = worst_error_at_radius(net, explanation, directions, radius)?;
    let near = worst_error_at_radius(net, explanation, directions, radius / 2.0)?;
    Ok(far / near)
}
