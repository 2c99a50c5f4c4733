use nalgebra::{DMatrix, DVector};

use super::{sample_neighbors, FeatureRanges, HarnessError, PerturbationConfig};
use crate::affine::AffineMap;
use crate::network::Network;

/// Least-squares affine fit over sampled neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineFit {
    pub affine: AffineMap,
    /// Network evaluations consumed by the fit.
    pub forward_passes: usize,
}

/// Fits `f(x) ≈ M·x + n` by ordinary least squares over `config.count`
/// seeded neighbors of `x_base`.
///
/// Regressors are centered on `x_base` and scaled by the feature ranges to
/// keep the design matrix well conditioned; the fit is mapped back to raw
/// input units afterwards.
pub fn baseline_surrogate<N: Network + ?Sized>(
    net: &N,
    x_base: &[f64],
    config: &PerturbationConfig,
    ranges: &FeatureRanges,
) -> Result<BaselineFit, HarnessError> {
    let dim = x_base.len();
    let columns = dim + 1;
    if config.count < columns {
        return Err(HarnessError::TooFewPoints {
            needed: columns,
            got: config.count,
        });
    }
    let neighbors = sample_neighbors(x_base, config, ranges)?;
    let widths: Vec<f64> = ranges.widths().collect();
    let outputs = net.model().output_dim();

    let mut design = DMatrix::zeros(neighbors.len(), columns);
    let mut targets = DMatrix::zeros(neighbors.len(), outputs);
    let mut forward_passes = 0;
    for (i, x) in neighbors.iter().enumerate() {
        design[(i, 0)] = 1.0;
        for j in 0..dim {
            design[(i, j + 1)] = (x[j] - x_base[j]) / widths[j];
        }
        let y = net.predict(x)?;
        forward_passes += 1;
        targets.set_row(i, &y.transpose());
    }

    let svd = design.svd(true, true);
    let largest = svd.singular_values.max();
    let tol = largest * neighbors.len().max(columns) as f64 * f64::EPSILON;
    let rank = svd.rank(tol);
    if rank < columns {
        return Err(HarnessError::RankDeficient {
            rank,
            needed: columns,
        });
    }
    let beta = svd.solve(&targets, tol).expect("svd computed with U and V");

    let coefficients = DMatrix::from_fn(outputs, dim, |k, j| beta[(j + 1, k)] / widths[j]);
    let base = DVector::from_column_slice(x_base);
    let intercept = DVector::from_fn(outputs, |k, _| beta[(0, k)]) - &coefficients * base;
    Ok(BaselineFit {
        affine: AffineMap::new(coefficients, intercept).expect("consistent shapes"),
        forward_passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{max_relative_deviation, surrogate_model};
    use crate::network::Counted;
    use nalgebra::dmatrix;

    #[test]
    fn recovers_affine_model() {
        let w = dmatrix![2.0, -1.0, 0.5; 0.25, 3.0, -4.0];
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let m = surrogate_model(&AffineMap::new(w.clone(), b.clone()).unwrap());
        let config = PerturbationConfig {
            count: 50,
            ..Default::default()
        };
        let counted = Counted::new(&m);
        let fit = baseline_surrogate(&counted, &[0.3, 0.7, 0.2], &config, &FeatureRanges::unit(3))
            .unwrap();
        assert!(max_relative_deviation(&fit.affine.coefficients, &w, 1.0) < 1e-8);
        assert!((fit.affine.intercept - b).amax() < 1e-8);
        assert_eq!(fit.forward_passes, 50);
        assert_eq!(counted.passes(), 50);
    }

    #[test]
    fn too_few_points() {
        let m = surrogate_model(&AffineMap::identity(3));
        let config = PerturbationConfig {
            count: 3,
            ..Default::default()
        };
        let err = baseline_surrogate(&m, &[0.0; 3], &config, &FeatureRanges::unit(3)).unwrap_err();
        assert!(matches!(
            err,
            HarnessError::TooFewPoints { needed: 4, got: 3 }
        ));
    }

    #[test]
    fn zero_threshold_is_rank_deficient() {
        let m = surrogate_model(&AffineMap::identity(2));
        let config = PerturbationConfig {
            proximity_threshold: 0.0,
            count: 20,
            ..Default::default()
        };
        let err = baseline_surrogate(&m, &[0.5; 2], &config, &FeatureRanges::unit(2)).unwrap_err();
        assert!(
            matches!(err, HarnessError::RankDeficient { rank: 1, needed: 3 }),
            "{err}"
        );
    }
}
