use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::HarnessError;
use crate::model_io::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationConfig {
    /// Largest allowed deviation per dimension, as a fraction of that
    /// dimension's range. In `[0, 1]`.
    pub proximity_threshold: f64,
    pub count: usize,
    pub seed: u64,
    /// Gaussian standard deviation as a fraction of the threshold.
    pub sigma_fraction: f64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig {
            proximity_threshold: 0.1,
            count: 1000,
            seed: 42,
            sigma_fraction: 1.0 / 3.0,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(0.0..=1.0).contains(&self.proximity_threshold) {
            return Err(HarnessError::Config(format!(
                "proximity threshold {} outside [0, 1]",
                self.proximity_threshold
            )));
        }
        if self.count == 0 {
            return Err(HarnessError::Config(
                "point count must be at least 1".into(),
            ));
        }
        if !(self.sigma_fraction >= 0.0 && self.sigma_fraction.is_finite()) {
            return Err(HarnessError::Config(format!(
                "sigma fraction {} must be finite and non-negative",
                self.sigma_fraction
            )));
        }
        Ok(())
    }
}

/// Per-dimension `(min, max)` used to scale perturbations and distances.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanges(Vec<(f64, f64)>);

impl FeatureRanges {
    pub fn new(ranges: Vec<(f64, f64)>) -> Result<Self, HarnessError> {
        if let Some(j) = ranges
            .iter()
            .position(|&(lo, hi)| !(lo < hi && (hi - lo).is_finite()))
        {
            return Err(HarnessError::Ranges(format!(
                "dimension {j} has empty or non-finite range {:?}",
                ranges[j]
            )));
        }
        Ok(FeatureRanges(ranges))
    }

    /// `[0, 1]` in every dimension.
    pub fn unit(dim: usize) -> Self {
        FeatureRanges(vec![(0.0, 1.0); dim])
    }

    pub fn from_model(spec: &ModelSpec) -> Option<Self> {
        spec.feature_ranges.clone().map(FeatureRanges)
    }

    /// Per-dimension min and max over a dataset.
    pub fn from_instances(instances: &[Vec<f64>]) -> Result<Self, HarnessError> {
        let first = instances
            .first()
            .ok_or_else(|| HarnessError::Ranges("no instances to derive ranges from".into()))?;
        let mut ranges: Vec<(f64, f64)> = first.iter().map(|&v| (v, v)).collect();
        for row in instances {
            if row.len() != ranges.len() {
                return Err(HarnessError::Ranges(format!(
                    "instance widths differ: {} vs {}",
                    row.len(),
                    ranges.len()
                )));
            }
            for (r, &v) in ranges.iter_mut().zip(row) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        FeatureRanges::new(ranges)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|(lo, hi)| hi - lo)
    }

    pub fn as_slice(&self) -> &[(f64, f64)] {
        &self.0
    }

    /// Euclidean norm of the range-normalized difference `a − b`.
    pub fn normalized_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(self.widths())
            .map(|((x, y), w)| ((x - y) / w).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Draws `config.count` neighbors of `x_base`.
///
/// Each coordinate gets Gaussian noise with standard deviation
/// `sigma_fraction · threshold · width_j`, clipped to `± threshold · width_j`.
/// Draw order is neighbor-major then dimension, from one ChaCha8 stream seeded
/// with `config.seed`.
pub fn sample_neighbors(
    x_base: &[f64],
    config: &PerturbationConfig,
    ranges: &FeatureRanges,
) -> Result<Vec<Vec<f64>>, HarnessError> {
    config.validate()?;
    if ranges.len() != x_base.len() {
        return Err(HarnessError::Ranges(format!(
            "{} ranges for a {}-dimensional instance",
            ranges.len(),
            x_base.len()
        )));
    }
    let limits: Vec<f64> = ranges
        .widths()
        .map(|w| config.proximity_threshold * w)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let neighbors = (0..config.count)
        .map(|_| {
            x_base
                .iter()
                .zip(&limits)
                .map(|(&x, &limit)| {
                    let z: f64 = rng.sample(StandardNormal);
                    x + (z * config.sigma_fraction * limit).clamp(-limit, limit)
                })
                .collect()
        })
        .collect();
    Ok(neighbors)
}
