//! Symmetric positive-definite banded matrices: Cholesky factorisation,
//! solves, and joint Gaussian draws from `N(Q^{-1} l, Q^{-1})` by
//! back-substitution. Everything runs in O(n b^2).

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::dist::{randn, ChainRng};

/// Symmetric banded matrix stored by diagonals: `diagonals[k][i]` is entry
/// `(i + k, i)`, for `k = 0..=bandwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBanded {
    dim: usize,
    bandwidth: usize,
    diagonals: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BandedError {
    NotPositiveDefinite { pivot: usize },
    DimensionMismatch { expected: usize, got: usize },
    BadWeights,
    BadShape,
}

impl core::fmt::Display for BandedError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            BandedError::NotPositiveDefinite { pivot } => {
                write!(f, "matrix not positive definite (pivot {pivot})")
            }
            BandedError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            BandedError::BadWeights => f.write_str("weights must be strictly positive"),
            BandedError::BadShape => f.write_str("invalid matrix shape"),
        }
    }
}

impl SymBanded {
    pub fn zeros(dim: usize, bandwidth: usize) -> Self {
        assert!(dim > 0);
        let bandwidth = bandwidth.min(dim - 1);
        let diagonals = (0..=bandwidth).map(|k| vec![0.0; dim - k]).collect();
        Self {
            dim,
            bandwidth,
            diagonals,
        }
    }

    pub fn from_diagonals(diagonals: Vec<Vec<f64>>) -> Result<Self, BandedError> {
        if diagonals.is_empty() || diagonals[0].is_empty() {
            return Err(BandedError::BadShape);
        }
        let dim = diagonals[0].len();
        let bandwidth = diagonals.len() - 1;
        if bandwidth >= dim {
            return Err(BandedError::BadShape);
        }
        for (k, d) in diagonals.iter().enumerate() {
            if d.len() != dim - k {
                return Err(BandedError::BadShape);
            }
        }
        Ok(Self {
            dim,
            bandwidth,
            diagonals,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, 0);
        for v in m.diagonals[0].iter_mut() {
            *v = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Entry (i, j); zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.bandwidth {
            0.0
        } else {
            self.diagonals[k][lo]
        }
    }

    /// Adds `v` to entry (i, j) and its mirror.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        debug_assert!(k <= self.bandwidth, "write outside band");
        self.diagonals[k][lo] += v;
    }

    /// y = Q x.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut acc = self.diagonals[0][i] * x[i];
            for k in 1..=self.bandwidth {
                if i >= k {
                    acc += self.diagonals[k][i - k] * x[i - k];
                }
                if i + k < self.dim {
                    acc += self.diagonals[k][i] * x[i + k];
                }
            }
            y[i] = acc;
        }
        y
    }

    /// Banded Cholesky factor L with L L^T = Q. Fails on a pivot <= 1e-300.
    pub fn cholesky(&self) -> Result<BandedChol, BandedError> {
        let n = self.dim;
        let b = self.bandwidth;
        let mut l: Vec<Vec<f64>> = (0..=b).map(|k| vec![0.0; n - k]).collect();
        for j in 0..n {
            let mut d = self.diagonals[0][j];
            let kmin = j.saturating_sub(b);
            for k in kmin..j {
                let v = l[j - k][k];
                d -= v * v;
            }
            if !(d > 1e-300) || !d.is_finite() {
                return Err(BandedError::NotPositiveDefinite { pivot: j });
            }
            let pivot = d.sqrt();
            l[0][j] = pivot;
            let imax = (j + b).min(n - 1);
            for i in j + 1..=imax {
                let mut s = self.get(i, j);
                let kmin = i.saturating_sub(b).max(kmin);
                for k in kmin..j {
                    s -= l[i - k][k] * l[j - k][k];
                }
                l[i - j][j] = s / pivot;
            }
        }
        Ok(BandedChol {
            dim: n,
            bandwidth: b,
            diagonals: l,
        })
    }
}

/// Lower-banded Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedChol {
    dim: usize,
    bandwidth: usize,
    /// `diagonals[k][i]` is L entry `(i + k, i)`.
    diagonals: Vec<Vec<f64>>,
}

impl BandedChol {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < j || i - j > self.bandwidth {
            0.0
        } else {
            self.diagonals[i - j][j]
        }
    }

    /// Solves L y = rhs in place.
    fn forward(&self, y: &mut [f64]) {
        let b = self.bandwidth;
        for i in 0..self.dim {
            let mut acc = y[i];
            let kmin = i.saturating_sub(b);
            for k in kmin..i {
                acc -= self.diagonals[i - k][k] * y[k];
            }
            y[i] = acc / self.diagonals[0][i];
        }
    }

    /// Solves L^T x = y in place.
    fn backward(&self, x: &mut [f64]) {
        let b = self.bandwidth;
        for i in (0..self.dim).rev() {
            let mut acc = x[i];
            let kmax = (i + b).min(self.dim - 1);
            for k in i + 1..=kmax {
                acc -= self.diagonals[k - i][i] * x[k];
            }
            x[i] = acc / self.diagonals[0][i];
        }
    }

    /// Solves Q x = rhs for the factored Q.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, BandedError> {
        if rhs.len() != self.dim {
            return Err(BandedError::DimensionMismatch {
                expected: self.dim,
                got: rhs.len(),
            });
        }
        let mut x = rhs.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        Ok(x)
    }

    /// One draw from `N(Q^{-1} l, Q^{-1})`: the posterior mean `Q^{-1} l`
    /// plus `L^{-T} z` with z standard normal.
    pub fn sample_gaussian(&self, rng: &mut ChainRng, l: &[f64]) -> Result<Vec<f64>, BandedError> {
        let mut mean = self.solve(l)?;
        let mut z: Vec<f64> = (0..self.dim).map(|_| randn(rng)).collect();
        self.backward(&mut z);
        for (m, zi) in mean.iter_mut().zip(z.iter()) {
            *m += zi;
        }
        Ok(mean)
    }
}

/// Signed binomial coefficients of the d-th difference operator:
/// row t of D maps to `sum_j coeff[j] * x[t + j]`.
pub fn diff_coefficients(d: usize) -> Vec<f64> {
    let mut c = vec![0.0; d + 1];
    let mut binom = 1.0_f64;
    for (j, cj) in c.iter_mut().enumerate() {
        *cj = if (d - j) % 2 == 0 { binom } else { -binom };
        binom = binom * (d - j) as f64 / (j + 1) as f64;
    }
    c
}

/// The prior precision contribution `D^T diag(weights) D` of d-th order
/// trend increments, a banded matrix of bandwidth d.
pub fn build_difference_precision(
    t_len: usize,
    d: usize,
    weights: &[f64],
) -> Result<SymBanded, BandedError> {
    if t_len <= d || weights.len() != t_len - d {
        return Err(BandedError::BadShape);
    }
    if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(BandedError::BadWeights);
    }
    let c = diff_coefficients(d);
    let mut q = SymBanded::zeros(t_len, d);
    for (t, &w) in weights.iter().enumerate() {
        for j1 in 0..=d {
            for j2 in 0..=j1 {
                q.add(t + j1, t + j2, w * c[j1] * c[j2]);
            }
        }
    }
    Ok(q)
}

/// Adds `D^T diag(weights) D` into an existing banded matrix whose rows are
/// laid out with the given `stride` and `offset` (used by the regression
/// sampler where predictor j occupies indices `t * p + j`).
pub fn add_difference_precision_strided(
    q: &mut SymBanded,
    t_len: usize,
    d: usize,
    weights: &[f64],
    stride: usize,
    offset: usize,
) {
    debug_assert_eq!(weights.len(), t_len - d);
    let c = diff_coefficients(d);
    for (t, &w) in weights.iter().enumerate() {
        for j1 in 0..=d {
            for j2 in 0..=j1 {
                q.add(
                    (t + j1) * stride + offset,
                    (t + j2) * stride + offset,
                    w * c[j1] * c[j2],
                );
            }
        }
    }
}
