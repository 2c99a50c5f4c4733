use std::io::{self, Write};

use rayon::prelude::*;

use super::FeatureRanges;
use crate::affine::AffineMap;
use crate::engine::Explanation;
use crate::network::{EvalError, Network};

/// One neighbor evaluated through both the network and the surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRecord {
    pub index: usize,
    pub neighbor: Vec<f64>,
    pub nn_output: Vec<f64>,
    pub surrogate_output: Vec<f64>,
    /// Euclidean distance to the base instance in range-normalized units.
    pub distance: f64,
}

pub fn evaluate_scatter<N: Network + ?Sized>(
    net: &N,
    explanation: &Explanation,
    neighbors: &[Vec<f64>],
    ranges: &FeatureRanges,
) -> Result<Vec<ScatterRecord>, EvalError> {
    evaluate_surrogate(
        net,
        &explanation.affine,
        explanation.base_instance.as_slice(),
        neighbors,
        ranges,
    )
}

/// Evaluates any affine surrogate against the network. Records come back in
/// neighbor order; evaluation runs in parallel.
pub fn evaluate_surrogate<N: Network + ?Sized>(
    net: &N,
    surrogate: &AffineMap,
    base: &[f64],
    neighbors: &[Vec<f64>],
    ranges: &FeatureRanges,
) -> Result<Vec<ScatterRecord>, EvalError> {
    neighbors
        .par_iter()
        .enumerate()
        .map(|(index, neighbor)| {
            let nn_output = net.predict(neighbor)?;
            Ok(ScatterRecord {
                index,
                neighbor: neighbor.clone(),
                nn_output: nn_output.iter().copied().collect(),
                surrogate_output: surrogate.eval(neighbor).iter().copied().collect(),
                distance: ranges.normalized_distance(neighbor, base),
            })
        })
        .collect()
}

/// Writes `index,distance,nn_0..,lin_0..` rows with 17 significant digits.
pub fn write_scatter_csv<W: Write>(records: &[ScatterRecord], mut out: W) -> io::Result<()> {
    let outputs = records.first().map_or(0, |r| r.nn_output.len());
    let mut header = vec!["index".to_owned(), "distance".to_owned()];
    header.extend((0..outputs).map(|k| format!("nn_{k}")));
    header.extend((0..outputs).map(|k| format!("lin_{k}")));
    writeln!(out, "{}", header.join(","))?;
    for r in records {
        write!(out, "{},{:.16e}", r.index, r.distance)?;
        for v in r.nn_output.iter().chain(&r.surrogate_output) {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
