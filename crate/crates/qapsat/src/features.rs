//! Scalar instance features.

use crate::matrix::SquareMatrix;

/// Coefficient of variation of all `n²` entries (diagonal included), in
/// percent, using the population standard deviation. Zero when the mean is
/// zero.
pub fn flow_dominance(m: &SquareMatrix) -> f64 {
    let entries = m.entries();
    let count = entries.len() as f64;
    let mean = entries.iter().map(|&v| v as f64).sum::<f64>() / count;
    if mean == 0.0 {
        return 0.0;
    }
    let var = entries
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / count;
    100.0 * var.sqrt() / mean
}

/// Fraction of the `n²` entries that are zero.
pub fn sparsity(m: &SquareMatrix) -> f64 {
    let zeros = m.entries().iter().filter(|&&v| v == 0).count();
    zeros as f64 / m.entries().len() as f64
}
