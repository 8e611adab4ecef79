//! Random-variate machinery for the Gibbs sampler: seeded RNG streams,
//! Polya-Gamma PG(1, z), inverse gamma, truncated normal, a fixed-bracket
//! slice sampler, a griddy inverse-CDF sampler, and the 10-component
//! Gaussian mixture approximation to log chi-squared(1).

use alloc::vec::Vec;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

/// Counter-based generator used everywhere in the crate. Identical seeds
/// give bit-identical integer streams on every platform; independent
/// chains take disjoint streams of the same seed.
pub type ChainRng = ChaCha8Rng;

/// RNG for chain `stream` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChainRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DistError {
    /// Shape/scale parameter out of range.
    BadParam,
    /// Truncation interval is empty.
    EmptyInterval,
    /// Density non-finite over the whole bracket.
    Degenerate,
    /// Griddy grid needs at least two points and lo < hi.
    BadGrid,
}

impl core::fmt::Display for DistError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let msg = match self {
            DistError::BadParam => "parameter out of range",
            DistError::EmptyInterval => "empty truncation interval",
            DistError::Degenerate => "degenerate density",
            DistError::BadGrid => "bad grid specification",
        };
        f.write_str(msg)
    }
}

pub fn randn(rng: &mut ChainRng) -> f64 {
    StandardNormal.sample(rng)
}

fn rand_exp(rng: &mut ChainRng) -> f64 {
    Exp1.sample(rng)
}

// ---------------------------------------------------------------------------
// Polya-Gamma PG(1, z)
// ---------------------------------------------------------------------------

const PG_TRUNC: f64 = 0.64;

fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Piecewise coefficients a_n(x) of the Jacobi density alternating series.
fn pg_coef(n: usize, x: f64) -> f64 {
    let k = (n as f64 + 0.5) * core::f64::consts::PI;
    if x > PG_TRUNC {
        k * (-0.5 * k * k * x).exp()
    } else if x > 0.0 {
        let nph = n as f64 + 0.5;
        let expnt = -1.5 * ((0.5 * core::f64::consts::PI).ln() + x.ln()) + k.ln()
            - 2.0 * nph * nph / x;
        expnt.exp()
    } else {
        0.0
    }
}

/// Probability that the Jacobi proposal comes from the truncated
/// exponential (right) piece rather than the truncated inverse Gaussian.
fn pg_right_mass(z: f64) -> f64 {
    let t = PG_TRUNC;
    let fz = 0.125 * core::f64::consts::PI * core::f64::consts::PI + 0.5 * z * z;
    let b = (1.0 / t).sqrt() * (t * z - 1.0);
    let a = -(1.0 / t).sqrt() * (t * z + 1.0);
    let x0 = fz.ln() + fz * t;
    let xb = x0 - z + norm_cdf(b).ln();
    let xa = x0 + z + norm_cdf(a).ln();
    let qdivp = 4.0 / core::f64::consts::PI * (xb.exp() + xa.exp());
    1.0 / (1.0 + qdivp)
}

/// Inverse Gaussian IG(1/z, 1) truncated to (0, PG_TRUNC).
fn pg_trunc_inv_gauss(rng: &mut ChainRng, z: f64) -> f64 {
    let t = PG_TRUNC;
    let z = z.abs();
    let mut x;
    if z < 1.0 / t {
        // Diffuse regime: rejection from a truncated Levy-type proposal.
        loop {
            let mut e1: f64 = rand_exp(rng);
            let mut e2: f64 = rand_exp(rng);
            while e1 * e1 > 2.0 * e2 / t {
                e1 = rand_exp(rng);
                e2 = rand_exp(rng);
            }
            x = t / ((1.0 + e1 * t) * (1.0 + e1 * t));
            let alpha = (-0.5 * z * z * x).exp();
            if rng.gen::<f64>() <= alpha {
                break;
            }
        }
    } else {
        let mu = 1.0 / z;
        loop {
            let y = {
                let n: f64 = randn(rng);
                n * n
            };
            let mu_y = mu * y;
            x = mu + 0.5 * mu * mu_y - 0.5 * mu * (4.0 * mu_y + mu_y * mu_y).sqrt();
            if rng.gen::<f64>() > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x <= t {
                break;
            }
        }
    }
    x
}

/// Exact draw from PG(1, z) by the alternating-series accept/reject scheme.
///
/// PG(1, z) = PG(1, -z); E[PG(1, z)] = tanh(z/2) / (2 z).
pub fn sample_polya_gamma(rng: &mut ChainRng, z: f64) -> f64 {
    let z = 0.5 * z.abs();
    let fz = 0.125 * core::f64::consts::PI * core::f64::consts::PI + 0.5 * z * z;
    let right_mass = pg_right_mass(z);
    loop {
        let x = if rng.gen::<f64>() < right_mass {
            PG_TRUNC + rand_exp(rng) / fz
        } else {
            pg_trunc_inv_gauss(rng, z)
        };
        let mut s = pg_coef(0, x);
        let y = rng.gen::<f64>() * s;
        let mut n = 0usize;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= pg_coef(n, x);
                if y <= s {
                    return 0.25 * x;
                }
            } else {
                s += pg_coef(n, x);
                if y > s {
                    break;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Inverse gamma
// ---------------------------------------------------------------------------

/// Draw with density proportional to `x^{-shape-1} exp(-scale/x)`.
pub fn sample_inverse_gamma(rng: &mut ChainRng, shape: f64, scale: f64) -> Result<f64, DistError> {
    if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
        return Err(DistError::BadParam);
    }
    // 1/G for G ~ Gamma(shape, rate = scale).
    let gamma = Gamma::new(shape, 1.0 / scale).map_err(|_| DistError::BadParam)?;
    let mut g: f64 = gamma.sample(rng);
    let mut tries = 0;
    while g <= 0.0 && tries < 64 {
        g = gamma.sample(rng);
        tries += 1;
    }
    if g <= 0.0 {
        return Ok(1e300);
    }
    Ok((1.0 / g).min(1e300))
}

// ---------------------------------------------------------------------------
// Truncated normal
// ---------------------------------------------------------------------------

/// One draw from N(mean, sd^2) conditioned to the open interval (lo, hi).
/// Either bound may be infinite.
pub fn sample_trunc_normal(
    rng: &mut ChainRng,
    mean: f64,
    sd: f64,
    lo: f64,
    hi: f64,
) -> Result<f64, DistError> {
    if !(sd > 0.0) || sd.is_nan() {
        return Err(DistError::BadParam);
    }
    if !(lo < hi) {
        return Err(DistError::EmptyInterval);
    }
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    for _ in 0..10_000 {
        let z = trunc_std_normal(rng, a, b);
        let x = mean + sd * z;
        if x > lo && x < hi {
            return Ok(x);
        }
    }
    // Interval thinner than float resolution around the draws.
    Err(DistError::EmptyInterval)
}

fn trunc_std_normal(rng: &mut ChainRng, a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::INFINITY {
        return randn(rng);
    }
    if a == f64::NEG_INFINITY {
        return -lower_tail_std_normal(rng, -b);
    }
    if b == f64::INFINITY {
        return lower_tail_std_normal(rng, a);
    }
    // Two-sided. Wide intervals straddling the mode: plain rejection.
    if a < 0.45 && b > -0.45 && b - a > 0.9 {
        loop {
            let z = randn(rng);
            if z > a && z < b {
                return z;
            }
        }
    }
    // Narrow or off-centre: uniform rejection under the restricted mode.
    let m = a.max(0.0_f64.min(b));
    loop {
        let z = a + rng.gen::<f64>() * (b - a);
        let log_accept = 0.5 * (m * m - z * z);
        if rng.gen::<f64>().ln() <= log_accept {
            return z;
        }
    }
}

/// Standard normal conditioned to [a, inf).
fn lower_tail_std_normal(rng: &mut ChainRng, a: f64) -> f64 {
    if a <= 0.0 {
        loop {
            let z = randn(rng);
            if z >= a {
                return z;
            }
        }
    }
    // Exponential rejection for the upper tail (Robert 1995).
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let z = a + rand_exp(rng) / alpha;
        let log_accept = -0.5 * (z - alpha) * (z - alpha);
        if rng.gen::<f64>().ln() <= log_accept {
            return z;
        }
    }
}

// ---------------------------------------------------------------------------
// Slice sampler
// ---------------------------------------------------------------------------

/// One slice-sampling transition inside the fixed bracket (lo, hi), using
/// the shrinkage procedure. Leaves `exp(log_density)` invariant.
pub fn slice_sample<F: FnMut(f64) -> f64>(
    rng: &mut ChainRng,
    mut log_density: F,
    current: f64,
    lo: f64,
    hi: f64,
) -> Result<f64, DistError> {
    if !(lo < current && current < hi) {
        return Err(DistError::BadParam);
    }
    let f0 = log_density(current);
    if !f0.is_finite() {
        return Err(DistError::Degenerate);
    }
    let level = f0 + rng.gen::<f64>().ln();
    let mut l = lo;
    let mut r = hi;
    for _ in 0..10_000 {
        let x = l + rng.gen::<f64>() * (r - l);
        if log_density(x) > level {
            return Ok(x);
        }
        if x < current {
            l = x;
        } else {
            r = x;
        }
        if r - l < f64::EPSILON * (1.0 + current.abs()) {
            break;
        }
    }
    // Bracket collapsed onto the current point.
    Ok(current)
}

// ---------------------------------------------------------------------------
// Griddy inverse-CDF sampler
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GriddyDraw {
    pub value: f64,
    /// Every grid density underflowed; the midpoint was returned.
    pub underflowed: bool,
}

/// Evaluates `log_cond` on `n_grid` equally spaced points in [lo, hi],
/// exponentiates with max subtraction, and inverts the discretised CDF
/// with linear interpolation between adjacent grid points.
pub fn griddy_sample<F: FnMut(f64) -> f64>(
    rng: &mut ChainRng,
    mut log_cond: F,
    lo: f64,
    hi: f64,
    n_grid: usize,
) -> Result<GriddyDraw, DistError> {
    if n_grid < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(DistError::BadGrid);
    }
    let step = (hi - lo) / (n_grid - 1) as f64;
    let mut logp: Vec<f64> = Vec::with_capacity(n_grid);
    let mut max = f64::NEG_INFINITY;
    for i in 0..n_grid {
        let x = lo + step * i as f64;
        let v = log_cond(x);
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        if v > max {
            max = v;
        }
        logp.push(v);
    }
    if !max.is_finite() {
        return Ok(GriddyDraw {
            value: 0.5 * (lo + hi),
            underflowed: true,
        });
    }
    let mut total = 0.0;
    let weights: Vec<f64> = logp.iter().map(|&v| (v - max).exp()).collect();
    for &w in &weights {
        total += w;
    }
    if !(total > 0.0) || !total.is_finite() {
        return Ok(GriddyDraw {
            value: 0.5 * (lo + hi),
            underflowed: true,
        });
    }
    // Each grid point's mass is spread over the half-open cell centred on
    // it (half cells at the ends), giving a piecewise-linear inverse CDF.
    let u = rng.gen::<f64>() * total;
    let mut cum = 0.0;
    for i in 0..n_grid {
        let prev = cum;
        cum += weights[i];
        if u <= cum && weights[i] > 0.0 {
            let x = lo + step * i as f64;
            let frac = (u - prev) / weights[i];
            let cell_lo = (x - 0.5 * step).max(lo);
            let cell_hi = (x + 0.5 * step).min(hi);
            return Ok(GriddyDraw {
                value: cell_lo + frac * (cell_hi - cell_lo),
                underflowed: false,
            });
        }
    }
    Ok(GriddyDraw {
        value: hi,
        underflowed: false,
    })
}

// ---------------------------------------------------------------------------
// Log chi-squared(1) mixture
// ---------------------------------------------------------------------------

/// Fixed 10-component Gaussian mixture approximation to the distribution
/// of `log(chi^2_1)` (Omori, Chib, Shephard and Nakajima 2007).
#[derive(Debug, Clone, PartialEq)]
pub struct LogChiSqMixture {
    pub weights: [f64; 10],
    pub means: [f64; 10],
    pub variances: [f64; 10],
}

pub const LOG_CHISQ_WEIGHTS: [f64; 10] = [
    0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115,
];
pub const LOG_CHISQ_MEANS: [f64; 10] = [
    1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384,
    -14.65000,
];
pub const LOG_CHISQ_VARIANCES: [f64; 10] = [
    0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591, 7.33342,
];

pub fn mixture_table() -> LogChiSqMixture {
    LogChiSqMixture {
        weights: LOG_CHISQ_WEIGHTS,
        means: LOG_CHISQ_MEANS,
        variances: LOG_CHISQ_VARIANCES,
    }
}

impl LogChiSqMixture {
    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(self.means.iter())
            .map(|(q, m)| q * m)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let second: f64 = self
            .weights
            .iter()
            .zip(self.means.iter().zip(self.variances.iter()))
            .map(|(q, (m, v))| q * (v + m * m))
            .sum();
        second - mean * mean
    }
}

/// Draws a mixture component index with probability proportional to
/// `q_r * N(z; h + m_r, v_r)`.
pub fn sample_mixture_indicator(
    rng: &mut ChainRng,
    z: f64,
    h: f64,
    table: &LogChiSqMixture,
) -> usize {
    let mut logw = [0.0_f64; 10];
    let mut max = f64::NEG_INFINITY;
    for r in 0..10 {
        let resid = z - h - table.means[r];
        let v = table.variances[r];
        let lw = table.weights[r].ln() - 0.5 * v.ln() - 0.5 * resid * resid / v;
        logw[r] = lw;
        if lw > max {
            max = lw;
        }
    }
    let mut total = 0.0;
    for lw in logw.iter_mut() {
        *lw = (*lw - max).exp();
        total += *lw;
    }
    let u = rng.gen::<f64>() * total;
    let mut cum = 0.0;
    for (r, w) in logw.iter().enumerate() {
        cum += w;
        if u <= cum {
            return r;
        }
    }
    9
}
