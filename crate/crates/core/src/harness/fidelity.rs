use super::{HarnessError, ScatterRecord};

/// Agreement between network and surrogate for one output dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputFidelity {
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    /// `1 − SS_res / SS_tot` with the network output as reference. `None`
    /// when the network output is constant over the records.
    pub r_squared: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    pub outputs: Vec<OutputFidelity>,
    pub points: usize,
}

impl FidelityReport {
    pub fn max_abs_error(&self) -> f64 {
        self.outputs
            .iter()
            .map(|o| o.max_abs_error)
            .fold(0.0, f64::max)
    }

    /// Mean absolute error averaged over output dimensions.
    pub fn mean_abs_error(&self) -> f64 {
        self.outputs.iter().map(|o| o.mean_abs_error).sum::<f64>() / self.outputs.len() as f64
    }

    /// Smallest R² over outputs, `None` if any output is undefined.
    pub fn min_r_squared(&self) -> Option<f64> {
        self.outputs
            .iter()
            .map(|o| o.r_squared)
            .try_fold(f64::INFINITY, |acc, r| r.map(|r| acc.min(r)))
    }
}

pub fn fidelity_metrics(records: &[ScatterRecord]) -> Result<FidelityReport, HarnessError> {
    let first = records.first().ok_or(HarnessError::Empty)?;
    let n = records.len() as f64;
    let outputs = (0..first.nn_output.len())
        .map(|k| {
            let mut max_abs_error = 0.0f64;
            let mut sum_abs = 0.0;
            let mut ss_res = 0.0;
            let mean = records.iter().map(|r| r.nn_output[k]).sum::<f64>() / n;
            let mut ss_tot = 0.0;
            for r in records {
                let err = r.surrogate_output[k] - r.nn_output[k];
                max_abs_error = max_abs_error.max(err.abs());
                sum_abs += err.abs();
                ss_res += err * err;
                ss_tot += (r.nn_output[k] - mean).powi(2);
            }
            OutputFidelity {
                max_abs_error,
                mean_abs_error: sum_abs / n,
                r_squared: (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot),
            }
        })
        .collect();
    Ok(FidelityReport {
        outputs,
        points: records.len(),
    })
}
