//! Local-fidelity validation: seeded neighbor sampling, dual evaluation
//! through network and surrogate, finite-difference Jacobians and a
//! least-squares perturbation baseline for comparison.

mod baseline;
mod fidelity;
mod oracle;
mod sampling;
mod scatter;

use thiserror::Error;

use crate::network::EvalError;

pub use baseline::{baseline_surrogate, BaselineFit};
pub use fidelity::{fidelity_metrics, FidelityReport, OutputFidelity};
pub use oracle::{
    fd_jacobian, max_relative_deviation, relative_deviation, surrogate_model, tangency_ratio,
    worst_error_at_radius,
};
pub use sampling::{sample_neighbors, FeatureRanges, PerturbationConfig};
pub use scatter::{evaluate_scatter, evaluate_surrogate, write_scatter_csv, ScatterRecord};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid perturbation config: {0}")]
    Config(String),
    #[error("invalid feature ranges: {0}")]
    Ranges(String),
    #[error("need at least {needed} points for a least-squares fit, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("design matrix is rank deficient: rank {rank} of {needed} columns")]
    RankDeficient { rank: usize, needed: usize },
    #[error("no scatter records to summarize")]
    Empty,
    #[error("finite-difference step must be positive, got {0}")]
    Step(f64),
}
