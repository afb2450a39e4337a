//! Deterministic reductions.
//!
//! Every aggregate over grid points or index ranges goes through these helpers
//! so that a given input always produces bit-identical output, independent of
//! thread count.

const BLOCK: usize = 8;

/// Pairwise (cascade) summation in index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Maximum of a slice, NaN-propagating (a NaN anywhere yields NaN).
pub fn max_value(values: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for &v in values {
        if v.is_nan() {
            return f64::NAN;
        }
        if v > best {
            best = v;
        }
    }
    if values.is_empty() {
        0.0
    } else {
        best
    }
}

/// Root-mean-square of a slice, using pairwise summation of squares.
pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
    (pairwise_sum(&squares) / values.len() as f64).sqrt()
}
