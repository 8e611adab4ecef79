//! Reproducible generators for the benchmark scenarios: piecewise linear
//! and quadratic trends, mean changes under stochastic volatility, outlier
//! contamination, and the three-predictor regression setting. Each
//! generator emits the observed series plus its ground truth.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::dist::{chain_rng, randn, ChainRng};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutlierKind {
    /// 5-10 standard deviations from the true mean.
    Small,
    /// 25-30 standard deviations.
    Large,
    /// 5-30 standard deviations.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// One changepoint in the middle half; affine segments, noise sd in
    /// [0.5, 3].
    LinearOneCp,
    /// Changepoints in the 20-40% and 60-80% windows; three affine
    /// segments.
    LinearTwoCp,
    /// 2-4 changepoints at min separation 30; affine segments; log squared
    /// noise follows an AR(1).
    MultiCpSv,
    /// 5-15 changepoints at min separation 10 on a long series.
    LongRandomCp,
    /// One changepoint; integer-coefficient quadratic segments, unit
    /// noise.
    QuadraticOneCp,
    /// 2-4 mean shifts at min separation 30 with AR(1) log squared noise.
    MeanCpSv,
    /// One mean shift near 3T/4, t5 noise, random large outliers.
    MeanOutliers,
    /// Continuous (meet-up) linear segments with per-segment outliers.
    LinearMeetupOutliers,
    /// Intercept predictor with a two-changepoint square pulse in its
    /// coefficient plus two noise predictors.
    RegressionThreePred,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::LinearOneCp => "linear-one-cp",
            ScenarioKind::LinearTwoCp => "linear-two-cp",
            ScenarioKind::MultiCpSv => "multi-cp-sv",
            ScenarioKind::LongRandomCp => "long-random-cp",
            ScenarioKind::QuadraticOneCp => "quadratic-one-cp",
            ScenarioKind::MeanCpSv => "mean-cp-sv",
            ScenarioKind::MeanOutliers => "mean-outliers",
            ScenarioKind::LinearMeetupOutliers => "linear-meetup-outliers",
            ScenarioKind::RegressionThreePred => "regression-three-pred",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "linear-one-cp" => ScenarioKind::LinearOneCp,
            "linear-two-cp" => ScenarioKind::LinearTwoCp,
            "multi-cp-sv" => ScenarioKind::MultiCpSv,
            "long-random-cp" => ScenarioKind::LongRandomCp,
            "quadratic-one-cp" => ScenarioKind::QuadraticOneCp,
            "mean-cp-sv" => ScenarioKind::MeanCpSv,
            "mean-outliers" => ScenarioKind::MeanOutliers,
            "linear-meetup-outliers" => ScenarioKind::LinearMeetupOutliers,
            "regression-three-pred" => ScenarioKind::RegressionThreePred,
            _ => return None,
        })
    }

    pub fn all() -> [ScenarioKind; 9] {
        [
            ScenarioKind::LinearOneCp,
            ScenarioKind::LinearTwoCp,
            ScenarioKind::MultiCpSv,
            ScenarioKind::LongRandomCp,
            ScenarioKind::QuadraticOneCp,
            ScenarioKind::MeanCpSv,
            ScenarioKind::MeanOutliers,
            ScenarioKind::LinearMeetupOutliers,
            ScenarioKind::RegressionThreePred,
        ]
    }

    /// Natural series length of the scenario in its source experiment.
    pub fn default_t(&self) -> usize {
        match self {
            ScenarioKind::MultiCpSv | ScenarioKind::MeanCpSv => 1000,
            ScenarioKind::LongRandomCp => 2000,
            ScenarioKind::MeanOutliers => 500,
            _ => 100,
        }
    }

    /// Difference order matched to what the scenario's trend requires.
    pub fn default_d(&self) -> usize {
        match self {
            ScenarioKind::MeanCpSv | ScenarioKind::MeanOutliers => 1,
            ScenarioKind::QuadraticOneCp => 3,
            _ => 2,
        }
    }

    /// Whether mean-change baselines should run on first differences.
    pub fn is_trend(&self) -> bool {
        !matches!(self, ScenarioKind::MeanCpSv | ScenarioKind::MeanOutliers)
    }
}

/// A simulation recipe: scenario kind, length, seed and the tunable
/// parameters that the source experiments leave configurable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub t_len: usize,
    pub seed: u64,
    /// Noise sd bounds for the constant-variance linear scenarios.
    pub noise_lo: f64,
    pub noise_hi: f64,
    /// AR(1) parameters of the log squared noise in the SV scenarios.
    pub phi_eps: f64,
    pub sigma_alpha: f64,
    /// Outlier shape for the contamination scenarios.
    pub outlier_kind: OutlierKind,
    /// Minimum changepoint separation for the multi-changepoint scenarios.
    pub min_cp_sep: usize,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, t_len: usize, seed: u64) -> Self {
        let sigma_alpha = match kind {
            ScenarioKind::MultiCpSv => 0.2,
            _ => 0.6,
        };
        let min_cp_sep = match kind {
            ScenarioKind::LongRandomCp => 10,
            _ => 30,
        };
        Self {
            kind,
            t_len,
            seed,
            noise_lo: 0.5,
            noise_hi: 3.0,
            phi_eps: 0.9,
            sigma_alpha,
            outlier_kind: OutlierKind::Large,
            min_cp_sep,
        }
    }

    /// Applies a `key=value` override; unknown keys are rejected.
    pub fn set_param(&mut self, key: &str, value: &str) -> Result<(), String> {
        let parse_f = |v: &str| v.parse::<f64>().map_err(|e| format!("bad value {v}: {e}"));
        match key {
            "noise_lo" => self.noise_lo = parse_f(value)?,
            "noise_hi" => self.noise_hi = parse_f(value)?,
            "phi_eps" => self.phi_eps = parse_f(value)?,
            "sigma_alpha" => self.sigma_alpha = parse_f(value)?,
            "min_cp_sep" => {
                self.min_cp_sep = value
                    .parse::<usize>()
                    .map_err(|e| format!("bad value {v}: {e}", v = value))?
            }
            "outlier_kind" => {
                self.outlier_kind = match value {
                    "small" => OutlierKind::Small,
                    "large" => OutlierKind::Large,
                    "mixed" => OutlierKind::Mixed,
                    _ => return Err(format!("unknown outlier kind {value}")),
                }
            }
            _ => return Err(format!("unknown parameter {key}")),
        }
        Ok(())
    }
}

/// True segmentation and trend behind a generated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Observation indices starting a new segment, sorted ascending.
    pub changepoints: Vec<usize>,
    pub segment_labels: Vec<u32>,
    pub true_trend: Vec<f64>,
    pub outliers: Vec<usize>,
    /// Regression scenario only: per-predictor true changepoints.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub predictor_changepoints: Option<Vec<Vec<usize>>>,
}

impl GroundTruth {
    fn from_cps(changepoints: Vec<usize>, true_trend: Vec<f64>, outliers: Vec<usize>) -> Self {
        let t_len = true_trend.len();
        let mut labels = vec![0u32; t_len];
        let mut label = 0u32;
        let mut next = changepoints.iter().copied().peekable();
        for (t, lab) in labels.iter_mut().enumerate() {
            if next.peek() == Some(&t) {
                label += 1;
                next.next();
            }
            *lab = label;
        }
        Self {
            changepoints,
            segment_labels: labels,
            true_trend,
            outliers,
            predictor_changepoints: None,
        }
    }
}

fn uniform(rng: &mut ChainRng, lo: f64, hi: f64) -> f64 {
    lo + rng.gen::<f64>() * (hi - lo)
}

fn uniform_idx(rng: &mut ChainRng, lo: usize, hi: usize) -> usize {
    debug_assert!(hi > lo);
    lo + (rng.gen::<u64>() % (hi - lo) as u64) as usize
}

/// Changepoint locations with pairwise separation >= `sep`, also kept
/// `sep` away from both ends.
fn random_cps(rng: &mut ChainRng, t_len: usize, count: usize, sep: usize) -> Vec<usize> {
    loop {
        let mut cps: Vec<usize> = (0..count)
            .map(|_| uniform_idx(rng, sep, t_len - sep))
            .collect();
        cps.sort_unstable();
        let ok = cps.windows(2).all(|w| w[1] - w[0] >= sep);
        if ok {
            return cps;
        }
    }
}

/// AR(1) log squared noise: eps_t = sign * exp(u_t / 2) with
/// u_t = phi u_{t-1} + alpha_t, initialised from the stationary law.
fn sv_noise(rng: &mut ChainRng, t_len: usize, phi: f64, sigma_alpha: f64) -> Vec<f64> {
    let mut u = sigma_alpha / (1.0 - phi * phi).sqrt() * randn(rng);
    let mut out = Vec::with_capacity(t_len);
    for _ in 0..t_len {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        out.push(sign * (u / 2.0).exp());
        u = phi * u + sigma_alpha * randn(rng);
    }
    out
}

fn piecewise_linear_trend(rng: &mut ChainRng, t_len: usize, cps: &[usize]) -> Vec<f64> {
    let t_f = t_len as f64;
    let mut trend = vec![0.0; t_len];
    let mut start_idx = 0usize;
    let bounds: Vec<usize> = cps.iter().copied().chain(core::iter::once(t_len)).collect();
    for &end in &bounds {
        let intercept = uniform(rng, -20.0, 20.0);
        let slope = uniform(rng, -160.0 / t_f, 160.0 / t_f);
        for (offset, v) in trend[start_idx..end].iter_mut().enumerate() {
            *v = intercept + slope * offset as f64;
        }
        start_idx = end;
    }
    trend
}

fn gen_linear(sc: &Scenario, rng: &mut ChainRng, n_cp: usize) -> (TimeSeries, GroundTruth) {
    let t_len = sc.t_len;
    let cps = match n_cp {
        1 => vec![uniform_idx(rng, t_len / 4, 3 * t_len / 4)],
        2 => {
            let c1 = uniform_idx(rng, t_len / 5, 2 * t_len / 5);
            let c2 = uniform_idx(rng, 3 * t_len / 5, 4 * t_len / 5);
            vec![c1, c2]
        }
        _ => unreachable!(),
    };
    let trend = piecewise_linear_trend(rng, t_len, &cps);
    let sd = uniform(rng, sc.noise_lo, sc.noise_hi);
    let values: Vec<f64> = trend.iter().map(|m| m + sd * randn(rng)).collect();
    (
        TimeSeries::new(values),
        GroundTruth::from_cps(cps, trend, Vec::new()),
    )
}

fn gen_multi_cp_sv(sc: &Scenario, rng: &mut ChainRng, mean_only: bool) -> (TimeSeries, GroundTruth) {
    let t_len = sc.t_len;
    let count = 2 + (rng.gen::<u64>() % 3) as usize;
    let cps = random_cps(rng, t_len, count, sc.min_cp_sep);
    let trend = if mean_only {
        let mut trend = vec![0.0; t_len];
        let bounds: Vec<usize> = cps.iter().copied().chain(core::iter::once(t_len)).collect();
        let mut start = 0usize;
        for &end in &bounds {
            let level = uniform(rng, -100.0, 100.0);
            for v in trend[start..end].iter_mut() {
                *v = level;
            }
            start = end;
        }
        trend
    } else {
        piecewise_linear_trend(rng, t_len, &cps)
    };
    let noise = sv_noise(rng, t_len, sc.phi_eps, sc.sigma_alpha);
    let values: Vec<f64> = trend.iter().zip(noise.iter()).map(|(m, e)| m + e).collect();
    (
        TimeSeries::new(values),
        GroundTruth::from_cps(cps, trend, Vec::new()),
    )
}

fn gen_long_random(sc: &Scenario, rng: &mut ChainRng) -> (TimeSeries, GroundTruth) {
    let t_len = sc.t_len;
    let count = 5 + (rng.gen::<u64>() % 11) as usize;
    let cps = random_cps(rng, t_len, count, sc.min_cp_sep);
    let trend = piecewise_linear_trend(rng, t_len, &cps);
    let sd = uniform(rng, sc.noise_lo, sc.noise_hi);
    let values: Vec<f64> = trend.iter().map(|m| m + sd * randn(rng)).collect();
    (
        TimeSeries::new(values),
        GroundTruth::from_cps(cps, trend, Vec::new()),
    )
}

fn gen_quadratic(sc: &Scenario, rng: &mut ChainRng) -> (TimeSeries, GroundTruth) {
    let t_len = sc.t_len;
    let cp = uniform_idx(rng, t_len / 4, 3 * t_len / 4);
    let mut trend = vec![0.0; t_len];
    let mut start = 0usize;
    for &end in &[cp, t_len] {
        // Integer coefficients in [-20, 20]; the segment is traced on a
        // unit interval so the values stay on the data scale.
        let a = (rng.gen::<u64>() % 41) as f64 - 20.0;
        let b = (rng.gen::<u64>() % 41) as f64 - 20.0;
        let c = (rng.gen::<u64>() % 41) as f64 - 20.0;
        let len = (end - start).max(1);
        for (offset, v) in trend[start..end].iter_mut().enumerate() {
            let x = offset as f64 / len as f64;
            *v = a * x * x + b * x + c;
        }
        start = end;
    }
    let values: Vec<f64> = trend.iter().map(|m| m + randn(rng)).collect();
    (
        TimeSeries::new(values),
        GroundTruth::from_cps(vec![cp], trend, Vec::new()),
    )
}

fn gen_mean_outliers(sc: &Scenario, rng: &mut ChainRng) -> (TimeSeries, GroundTruth) {
    let t_len = sc.t_len;
    let jitter = t_len / 20;
    let base = 3 * t_len / 4;
    let cp = (base + uniform_idx(rng, 0, 2 * jitter + 1)).saturating_sub(jitter);
    let m1 = uniform(rng, 0.0, 5.0);
    let m2 = uniform(rng, 10.0, 15.0);
    let trend: Vec<f64> = (0..t_len).map(|t| if t < cp { m1 } else { m2 }).collect();
    let student = StudentT::new(5.0).expect("valid dof");
    let mut values: Vec<f64> = trend
        .iter()
        .map(|m| m + student.sample(rng) as f64)
        .collect();
    // 3-8 contaminated points at 10-30 noise scales, random sign.
    let n_out = 3 + (rng.gen::<u64>() % 6) as usize;
    let mut outliers = Vec::new();
    while outliers.len() < n_out {
        let pos = uniform_idx(rng, 0, t_len);
        if !outliers.contains(&pos) && pos.abs_diff(cp) > 2 {
            outliers.push(pos);
        }
    }
    outliers.sort_unstable();
    for &pos in &outliers {
        let mag = uniform(rng, 10.0, 30.0);
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        values[pos] = trend[pos] + sign * mag;
    }
    (
        TimeSeries::new(values),
        GroundTruth::from_cps(vec![cp], trend, outliers),
    )
}

fn gen_linear_meetup(sc: &Scenario, rng: &mut ChainRng) -> (TimeSeries, GroundTruth) {
    let t_len = sc.t_len;
    let t_f = t_len as f64;
    // Changepoint in the middle fifth; continuous segments with slope gap
    // of at least 1.5.
    let cp = uniform_idx(rng, 2 * t_len / 5, 3 * t_len / 5);
    let (start_v, meet_v, end_v) = loop {
        let s = uniform(rng, -100.0, 100.0);
        let m = uniform(rng, -100.0, 100.0);
        let e = uniform(rng, -100.0, 100.0);
        let slope1 = (m - s) / cp as f64;
        let slope2 = (e - m) / (t_f - cp as f64);
        if (slope1 - slope2).abs() >= 1.5 {
            break (s, m, e);
        }
    };
    let mut trend = vec![0.0; t_len];
    for (t, v) in trend.iter_mut().enumerate() {
        *v = if t < cp {
            start_v + (meet_v - start_v) * t as f64 / cp as f64
        } else {
            meet_v + (end_v - meet_v) * (t - cp) as f64 / (t_f - cp as f64)
        };
    }
    let sd = 1.0;
    let mut values: Vec<f64> = trend.iter().map(|m| m + sd * randn(rng)).collect();
    // 5-10 outliers per segment at the configured magnitude.
    let (mag_lo, mag_hi) = match sc.outlier_kind {
        OutlierKind::Small => (5.0, 10.0),
        OutlierKind::Large => (25.0, 30.0),
        OutlierKind::Mixed => (5.0, 30.0),
    };
    let mut outliers = Vec::new();
    for (seg_lo, seg_hi) in [(0usize, cp), (cp, t_len)] {
        let n_out = 5 + (rng.gen::<u64>() % 6) as usize;
        let mut placed = 0;
        while placed < n_out {
            let pos = uniform_idx(rng, seg_lo, seg_hi);
            if !outliers.contains(&pos) && pos.abs_diff(cp) > 2 {
                outliers.push(pos);
                placed += 1;
            }
        }
    }
    outliers.sort_unstable();
    for &pos in &outliers {
        let mag = uniform(rng, mag_lo, mag_hi) * sd;
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        values[pos] = trend[pos] + sign * mag;
    }
    (
        TimeSeries::new(values),
        GroundTruth::from_cps(vec![cp], trend, outliers),
    )
}

fn gen_regression(sc: &Scenario, rng: &mut ChainRng) -> (TimeSeries, GroundTruth) {
    let t_len = sc.t_len;
    // Square pulse in the intercept coefficient: two changepoints in the
    // middle half, low-high-low levels with gaps of at least 5.
    let c1 = uniform_idx(rng, t_len / 4, t_len / 2);
    let c2 = uniform_idx(rng, t_len / 2 + t_len / 20, 3 * t_len / 4);
    let l1 = uniform(rng, 0.0, 5.0);
    let l2 = uniform(rng, 10.0, 15.0);
    let l3 = uniform(rng, 0.0, 5.0);
    let beta1: Vec<f64> = (0..t_len)
        .map(|t| {
            if t < c1 {
                l1
            } else if t < c2 {
                l2
            } else {
                l3
            }
        })
        .collect();
    let x1 = vec![1.0; t_len];
    let x2: Vec<f64> = (0..t_len).map(|_| randn(rng)).collect();
    let x3: Vec<f64> = (0..t_len).map(|_| randn(rng)).collect();
    let beta2: Vec<f64> = (0..t_len).map(|_| randn(rng)).collect();
    let beta3: Vec<f64> = (0..t_len).map(|_| randn(rng)).collect();
    let noise: Vec<f64> = (0..t_len).map(|_| StandardNormal.sample(rng)).collect();
    let values: Vec<f64> = (0..t_len)
        .map(|t| x1[t] * beta1[t] + x2[t] * beta2[t] + x3[t] * beta3[t] + noise[t])
        .collect();
    let mut truth = GroundTruth::from_cps(vec![c1, c2], beta1, Vec::new());
    truth.predictor_changepoints = Some(vec![vec![c1, c2], Vec::new(), Vec::new()]);
    (
        TimeSeries::with_design(values, vec![x1, x2, x3]),
        truth,
    )
}

/// Generates one series and its ground truth from a scenario recipe; the
/// same `(scenario, seed)` pair always yields identical output.
pub fn generate(scenario: &Scenario) -> (TimeSeries, GroundTruth) {
    let mut rng = chain_rng(scenario.seed, 1);
    generate_with(scenario, &mut rng)
}

pub fn generate_with(scenario: &Scenario, rng: &mut ChainRng) -> (TimeSeries, GroundTruth) {
    match scenario.kind {
        ScenarioKind::LinearOneCp => gen_linear(scenario, rng, 1),
        ScenarioKind::LinearTwoCp => gen_linear(scenario, rng, 2),
        ScenarioKind::MultiCpSv => gen_multi_cp_sv(scenario, rng, false),
        ScenarioKind::MeanCpSv => gen_multi_cp_sv(scenario, rng, true),
        ScenarioKind::LongRandomCp => gen_long_random(scenario, rng),
        ScenarioKind::QuadraticOneCp => gen_quadratic(scenario, rng),
        ScenarioKind::MeanOutliers => gen_mean_outliers(scenario, rng),
        ScenarioKind::LinearMeetupOutliers => gen_linear_meetup(scenario, rng),
        ScenarioKind::RegressionThreePred => gen_regression(scenario, rng),
    }
}
