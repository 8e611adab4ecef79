//! Observed series, difference operators and trend reconstruction.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// An observed time series with an optional regression design.
///
/// `values` holds `y_1..y_T`. `design`, when present, holds one column per
/// predictor, each of length `T`. `labels` carries the input time axis
/// untouched; all math runs on integer indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub design: Option<Vec<Vec<f64>>>,
    pub labels: Option<Vec<String>>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            design: None,
            labels: None,
        }
    }

    pub fn with_design(values: Vec<f64>, design: Vec<Vec<f64>>) -> Self {
        Self {
            values,
            design: Some(design),
            labels: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of predictors (0 when no design is attached).
    pub fn n_predictors(&self) -> usize {
        self.design.as_ref().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiffError {
    /// The series is too short for the requested difference order.
    TooShort { len: usize, order: usize },
}

impl core::fmt::Display for DiffError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DiffError::TooShort { len, order } => {
                write!(f, "series of length {len} too short for difference order {order}")
            }
        }
    }
}

/// Iterated first differences: `diff(v, d)` has length `v.len() - d`.
pub fn diff(values: &[f64], order: usize) -> Result<Vec<f64>, DiffError> {
    if values.len() <= order {
        return Err(DiffError::TooShort {
            len: values.len(),
            order,
        });
    }
    let mut out = values.to_vec();
    for _ in 0..order {
        for i in 0..out.len() - 1 {
            out[i] = out[i + 1] - out[i];
        }
        out.pop();
    }
    Ok(out)
}

/// In-place d-th difference of `values` into `out` (no allocation).
///
/// `out` must have length `values.len() - order`. Used in the sampler hot
/// path to keep `omega = diff(beta, d)` current after every draw.
pub fn diff_into(values: &[f64], order: usize, scratch: &mut Vec<f64>, out: &mut [f64]) {
    debug_assert!(values.len() > order);
    debug_assert_eq!(out.len(), values.len() - order);
    scratch.clear();
    scratch.extend_from_slice(values);
    let mut len = scratch.len();
    for _ in 0..order {
        for i in 0..len - 1 {
            scratch[i] = scratch[i + 1] - scratch[i];
        }
        len -= 1;
    }
    out.copy_from_slice(&scratch[..len]);
}

/// Reconstructs a series from its first `d` values and its d-th differences.
///
/// Inverse of [`diff`]: `integrate(&beta[..d], &diff(&beta, d), d) == beta`.
pub fn integrate(head: &[f64], increments: &[f64], order: usize) -> Vec<f64> {
    debug_assert_eq!(head.len(), order);
    // First element of each intermediate difference level, from the head.
    let mut level_heads = Vec::with_capacity(order);
    let mut h = head.to_vec();
    for _ in 0..order {
        level_heads.push(h[0]);
        for i in 0..h.len() - 1 {
            h[i] = h[i + 1] - h[i];
        }
        h.pop();
    }
    // Cumulate back out, innermost level first.
    let mut cur = increments.to_vec();
    for &start in level_heads.iter().rev() {
        let mut next = Vec::with_capacity(cur.len() + 1);
        next.push(start);
        let mut acc = start;
        for &inc in &cur {
            acc += inc;
            next.push(acc);
        }
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_first_order() {
        assert_eq!(diff(&[1.0, 2.0, 4.0], 1).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn diff_second_order() {
        assert_eq!(diff(&[1.0, 2.0, 4.0, 7.0], 2).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn diff_of_constant_is_zero() {
        for d in 1..=3 {
            let v = vec![5.5; 12];
            assert!(diff(&v, d).unwrap().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn diff_iterates() {
        let v = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let once_twice = diff(&diff(&v, 1).unwrap(), 1).unwrap();
        assert_eq!(diff(&v, 2).unwrap(), once_twice);
    }

    #[test]
    fn diff_too_short() {
        assert!(matches!(diff(&[1.0, 2.0], 2), Err(DiffError::TooShort { .. })));
    }

    #[test]
    fn integrate_round_trips() {
        let beta = [0.3, -1.2, 2.0, 2.5, 1.9, -0.4, 0.0, 3.3];
        for d in 1..=3usize {
            let inc = diff(&beta, d).unwrap();
            let rec = integrate(&beta[..d], &inc, d);
            for (a, b) in rec.iter().zip(beta.iter()) {
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn diff_into_matches_diff() {
        let v = [1.0, 4.0, 9.0, 16.0, 25.0, 36.0];
        let mut scratch = Vec::new();
        let mut out = vec![0.0; 4];
        diff_into(&v, 2, &mut scratch, &mut out);
        assert_eq!(out, diff(&v, 2).unwrap());
    }
}
