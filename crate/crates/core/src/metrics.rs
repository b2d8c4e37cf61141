//! Storage accounting, compression ratio and relative error.

use serde::Serialize;

use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::{Tensor3, Tensor4};

/// Payload size of a compressed representation.
///
/// `floats` counts `f64` values (a complex scalar is two); `integers` is
/// side data such as rank arrays, reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct StorageCount {
    pub scalars: usize,
    pub floats: usize,
    pub integers: usize,
}

impl StorageCount {
    pub fn new(scalars: usize, floats_per_scalar: usize, integers: usize) -> Self {
        Self {
            scalars,
            floats: scalars * floats_per_scalar,
            integers,
        }
    }
}

impl std::ops::Add for StorageCount {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            scalars: self.scalars + o.scalars,
            floats: self.floats + o.floats,
            integers: self.integers + o.integers,
        }
    }
}

/// Original float count over payload float count (infinite for an empty
/// payload).
pub fn compression_ratio(original_floats: usize, payload_floats: usize) -> f64 {
    if payload_floats == 0 {
        f64::INFINITY
    } else {
        original_floats as f64 / payload_floats as f64
    }
}

fn ratio(diff: f64, norm: f64) -> f64 {
    if norm > 0.0 {
        diff / norm
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `‖A − approx‖_F / ‖A‖_F`.
pub fn relative_error<T: Scalar>(a: &Tensor3<T>, approx: &Tensor3<T>) -> Result<f64> {
    Ok(ratio(a.distance(approx)?, a.frobenius_norm()))
}

pub fn relative_error4<T: Scalar>(a: &Tensor4<T>, approx: &Tensor4<T>) -> Result<f64> {
    Ok(ratio(a.distance(approx)?, a.frobenius_norm()))
}

/// Outcome of compressing one tensor with one method and parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionReport {
    pub method: String,
    pub parameter: String,
    pub compression_ratio: f64,
    pub relative_error: f64,
    pub original_floats: usize,
    pub payload: StorageCount,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios() {
        assert_eq!(compression_ratio(24, 14), 24.0 / 14.0);
        assert_eq!(compression_ratio(8, 0), f64::INFINITY);
        let s = StorageCount::new(7, 2, 3) + StorageCount::new(1, 1, 0);
        assert_eq!(s, StorageCount { scalars: 8, floats: 15, integers: 3 });
    }

    #[test]
    fn relative_errors() {
        let a = Tensor3::from_fn([2, 2, 2], |i, j, k| (i + j + k) as f64);
        assert_eq!(relative_error(&a, &a).unwrap(), 0.0);
        let z = Tensor3::zeros(2, 2, 2);
        assert_eq!(relative_error(&a, &z).unwrap(), 1.0);
        assert_eq!(relative_error(&z, &z).unwrap(), 0.0);
    }
}
