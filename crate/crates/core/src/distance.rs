//! Euclidean distance restricted to a feature subset.
//!
//! Training and prediction both compare squared distances computed by
//! [`squared_on`] so that the decision made while scoring a candidate is
//! bit-for-bit the decision a saved model makes later.

/// Name recorded in model metadata.
pub const METRIC_NAME: &str = "euclidean";

/// Squared L2 distance between two full-width rows over `features`,
/// summed in ascending feature order.
#[inline]
pub fn squared_on(a: &[f64], b: &[f64], features: &[usize]) -> f64 {
    features
        .iter()
        .map(|&j| {
            let d = a[j] - b[j];
            d * d
        })
        .sum()
}

/// Squared L2 distance between two equal-length dense vectors.
#[inline]
pub fn squared(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}
