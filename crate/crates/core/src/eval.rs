//! Scoring predicted segmentations and outlier flags against ground truth,
//! a minimal PELT mean-change baseline, and the replicated benchmark
//! harness that aggregates the comparison tables.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::detect::{cp_probability, declare_changepoints};
use crate::gibbs::{sample_var, SamplerError};
use crate::regression::fit_regression;
use crate::series::diff;
use crate::simgen::{generate, Scenario, ScenarioKind};
use crate::TimeSeries;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    /// Changepoint index outside [1, T).
    BadCps { index: usize, t_len: usize },
    TooShort { t_len: usize, min: usize },
    UnsupportedScenario,
}

impl core::fmt::Display for EvalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EvalError::BadCps { index, t_len } => {
                write!(f, "changepoint index {index} outside [1, {t_len})")
            }
            EvalError::TooShort { t_len, min } => {
                write!(f, "series of length {t_len} shorter than {min}")
            }
            EvalError::UnsupportedScenario => f.write_str("scenario unsupported in this mode"),
        }
    }
}

fn check_cps(cps: &[usize], t_len: usize) -> Result<(), EvalError> {
    for w in cps.windows(2) {
        if w[1] <= w[0] {
            return Err(EvalError::BadCps {
                index: w[1],
                t_len,
            });
        }
    }
    for &c in cps {
        if c == 0 || c >= t_len {
            return Err(EvalError::BadCps { index: c, t_len });
        }
    }
    Ok(())
}

/// Segment lengths induced by a changepoint list on 0..t_len.
fn segment_sizes(cps: &[usize], t_len: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(cps.len() + 1);
    let mut prev = 0usize;
    for &c in cps {
        sizes.push(c - prev);
        prev = c;
    }
    sizes.push(t_len - prev);
    sizes
}

/// Contingency table of the two segmentations: overlap lengths between
/// every predicted and true segment (O(k1 k2), not O(T^2)).
fn contingency(pred: &[usize], truth: &[usize], t_len: usize) -> (Vec<Vec<usize>>, Vec<usize>, Vec<usize>) {
    let pred_sizes = segment_sizes(pred, t_len);
    let true_sizes = segment_sizes(truth, t_len);
    let mut table = vec![vec![0usize; true_sizes.len()]; pred_sizes.len()];
    let mut pb: Vec<usize> = pred.to_vec();
    pb.push(t_len);
    let mut tb: Vec<usize> = truth.to_vec();
    tb.push(t_len);
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos = 0usize;
    while pos < t_len {
        let end = pb[i].min(tb[j]);
        table[i][j] += end - pos;
        pos = end;
        if pb[i] == pos {
            i += 1;
        }
        if tb[j] == pos {
            j += 1;
        }
    }
    (table, pred_sizes, true_sizes)
}

fn choose2(n: usize) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

/// Rand index (A + D) / C(T, 2): the fraction of point pairs on which the
/// two segmentations agree.
pub fn rand_index(pred: &[usize], truth: &[usize], t_len: usize) -> Result<f64, EvalError> {
    check_cps(pred, t_len)?;
    check_cps(truth, t_len)?;
    if t_len < 2 {
        return Err(EvalError::TooShort { t_len, min: 2 });
    }
    let (table, pred_sizes, true_sizes) = contingency(pred, truth, t_len);
    let a: f64 = table
        .iter()
        .flat_map(|row| row.iter())
        .map(|&n| choose2(n))
        .sum();
    let sum_pred: f64 = pred_sizes.iter().map(|&n| choose2(n)).sum();
    let sum_true: f64 = true_sizes.iter().map(|&n| choose2(n)).sum();
    let total = choose2(t_len);
    let b = sum_pred - a;
    let c = sum_true - a;
    let d = total - a - b - c;
    Ok((a + d) / total)
}

/// Hubert-Arabie adjusted Rand index; 1.0 when both partitions are the
/// single-cluster partition (degenerate denominator).
pub fn adjusted_rand(pred: &[usize], truth: &[usize], t_len: usize) -> Result<f64, EvalError> {
    check_cps(pred, t_len)?;
    check_cps(truth, t_len)?;
    if t_len < 2 {
        return Err(EvalError::TooShort { t_len, min: 2 });
    }
    let (table, pred_sizes, true_sizes) = contingency(pred, truth, t_len);
    let index: f64 = table
        .iter()
        .flat_map(|row| row.iter())
        .map(|&n| choose2(n))
        .sum();
    let sum_pred: f64 = pred_sizes.iter().map(|&n| choose2(n)).sum();
    let sum_true: f64 = true_sizes.iter().map(|&n| choose2(n)).sum();
    let total = choose2(t_len);
    let expected = sum_pred * sum_true / total;
    let max = 0.5 * (sum_pred + sum_true);
    if (max - expected).abs() < 1e-300 {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Distance/count metrics for a predicted changepoint list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpMetrics {
    /// Mean distance from each predicted changepoint to the closest true
    /// one; absent when nothing was predicted or truth is empty.
    pub avg_dist_to_true: Option<f64>,
    /// |#predicted - #true|.
    pub diff_cp_count: usize,
    pub n_pred: usize,
}

pub fn cp_metrics(pred: &[usize], truth: &[usize]) -> CpMetrics {
    let avg = if pred.is_empty() || truth.is_empty() {
        None
    } else {
        let total: f64 = pred
            .iter()
            .map(|&p| {
                truth
                    .iter()
                    .map(|&t| p.abs_diff(t) as f64)
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        Some(total / pred.len() as f64)
    };
    CpMetrics {
        avg_dist_to_true: avg,
        diff_cp_count: pred.len().abs_diff(truth.len()),
        n_pred: pred.len(),
    }
}

/// Outlier detection rates with a +-1 index matching slack; each true
/// outlier is matched at most once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierMetrics {
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

pub fn outlier_metrics(flagged: &[usize], truth: &[usize], t_len: usize) -> OutlierMetrics {
    let mut matched = vec![false; truth.len()];
    let mut hits = 0usize;
    let mut false_pos = 0usize;
    for &f in flagged {
        let mut hit = None;
        for (i, &t) in truth.iter().enumerate() {
            if !matched[i] && f.abs_diff(t) <= 1 {
                hit = Some(i);
                break;
            }
        }
        match hit {
            Some(i) => {
                matched[i] = true;
                hits += 1;
            }
            None => false_pos += 1,
        }
    }
    let tpr = if truth.is_empty() {
        None
    } else {
        Some(hits as f64 / truth.len() as f64)
    };
    let fpr = if t_len > truth.len() {
        Some(false_pos as f64 / (t_len - truth.len()) as f64)
    } else {
        None
    };
    OutlierMetrics { tpr, fpr }
}

// ---------------------------------------------------------------------------
// PELT baseline
// ---------------------------------------------------------------------------

/// Exact penalized optimal partitioning with pruning and the Gaussian
/// mean-change cost (segment residual sum of squares). Returns the sorted
/// changepoint indices (first index of each new segment).
pub fn pelt_baseline(values: &[f64], penalty: f64, min_seg: usize) -> Result<Vec<usize>, EvalError> {
    let n = values.len();
    let min_seg = min_seg.max(1);
    if n < 2 * min_seg {
        return Err(EvalError::TooShort {
            t_len: n,
            min: 2 * min_seg,
        });
    }
    // Prefix sums for O(1) segment cost.
    let mut s = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for (i, &v) in values.iter().enumerate() {
        s[i + 1] = s[i] + v;
        s2[i + 1] = s2[i] + v * v;
    }
    let cost = |a: usize, b: usize| -> f64 {
        // RSS of values[a..b].
        let len = (b - a) as f64;
        let sum = s[b] - s[a];
        (s2[b] - s2[a]) - sum * sum / len
    };

    let mut f = vec![f64::INFINITY; n + 1];
    f[0] = -penalty;
    let mut last_cp = vec![0usize; n + 1];
    let mut candidates: Vec<usize> = vec![0];
    for end in min_seg..=n {
        let mut best = f64::INFINITY;
        let mut best_tau = 0usize;
        for &tau in &candidates {
            if end - tau < min_seg {
                continue;
            }
            let v = f[tau] + cost(tau, end) + penalty;
            if v < best {
                best = v;
                best_tau = tau;
            }
        }
        f[end] = best;
        last_cp[end] = best_tau;
        // Pruning: discard tau that can never win again.
        candidates.retain(|&tau| {
            end - tau < min_seg || f[tau] + cost(tau, end) <= f[end]
        });
        candidates.push(end.saturating_sub(min_seg - 1).max(0));
        candidates.sort_unstable();
        candidates.dedup();
        // Keep only feasible candidates (tau <= end - min_seg + 1 handled
        // by the loop guard above).
    }
    let mut cps = Vec::new();
    let mut at = n;
    while at > 0 {
        let tau = last_cp[at];
        if tau == 0 {
            break;
        }
        cps.push(tau);
        at = tau;
    }
    cps.sort_unstable();
    Ok(cps)
}

/// Default PELT penalty `2 sigma_hat^2 log T` with the noise variance
/// estimated from first differences.
pub fn pelt_default_penalty(values: &[f64]) -> f64 {
    let dy = diff(values, 1).unwrap_or_default();
    let sigma2 = (sample_var(&dy) / 2.0).max(1e-12);
    2.0 * sigma2 * (values.len() as f64).ln()
}

// ---------------------------------------------------------------------------
// Benchmark harness
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Abco,
    Horseshoe,
    Pelt,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Abco => "abco",
            Method::Horseshoe => "horseshoe",
            Method::Pelt => "pelt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "abco" => Method::Abco,
            "horseshoe" => Method::Horseshoe,
            "pelt" => Method::Pelt,
            _ => return None,
        })
    }
}

/// One aggregated row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub method: String,
    pub rand_avg: f64,
    pub adj_rand_avg: f64,
    pub avg_no_cp: f64,
    pub n_zero_cp: usize,
    /// Mean over replicates of the per-replicate average distance to the
    /// closest true changepoint; zero-prediction replicates are excluded.
    pub avg_dist: Option<f64>,
    /// Standard error of the adjusted Rand average.
    pub se: f64,
    pub n_failures: usize,
}

/// Per-replicate scores of one method (kept public for single-run modes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateScore {
    pub rand: f64,
    pub adj_rand: f64,
    pub n_pred: usize,
    pub avg_dist: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

/// Fits one method on a generated series and returns predicted
/// changepoints (plus flagged outliers for the model-based methods).
pub fn fit_method(
    method: Method,
    series: &TimeSeries,
    scenario_kind: ScenarioKind,
    config: &ModelConfig,
) -> Result<(Vec<usize>, Vec<usize>), SamplerError> {
    match method {
        Method::Abco | Method::Horseshoe => {
            let mut cfg = config.clone();
            cfg.horseshoe = method == Method::Horseshoe;
            let draws = crate::gibbs::run(series, &cfg)?;
            let probs = cp_probability(&draws.log_omega2, &draws.gamma);
            let cps: Vec<usize> =
                declare_changepoints(&probs, cfg.cp_prob_cutoff, cfg.min_cp_separation)
                    .into_iter()
                    .map(|i| i + cfg.d)
                    .collect();
            let flagged = match crate::detect::outlier_scores(&draws) {
                Ok(scores) => (0..scores.len())
                    .filter(|&t| scores[t] > cfg.outlier_cutoff)
                    .collect(),
                Err(_) => Vec::new(),
            };
            Ok((cps, flagged))
        }
        Method::Pelt => {
            // Trend scenarios run on first differences; a changepoint at
            // difference index k maps to observation index k + 1.
            let (data, offset) = if scenario_kind.is_trend() {
                (diff(&series.values, 1).expect("validated"), 1usize)
            } else {
                (series.values.clone(), 0usize)
            };
            let pen = pelt_default_penalty(&series.values);
            let cps = pelt_baseline(&data, pen, 5)
                .map(|v| v.into_iter().map(|c| c + offset).collect())
                .unwrap_or_default();
            Ok((cps, Vec::new()))
        }
    }
}

/// Scores a prediction against truth.
pub fn score_replicate(
    pred_cps: &[usize],
    flagged: &[usize],
    truth_cps: &[usize],
    truth_outliers: &[usize],
    t_len: usize,
) -> Result<ReplicateScore, EvalError> {
    let rand = rand_index(pred_cps, truth_cps, t_len)?;
    let adj = adjusted_rand(pred_cps, truth_cps, t_len)?;
    let cpm = cp_metrics(pred_cps, truth_cps);
    let om = outlier_metrics(flagged, truth_outliers, t_len);
    Ok(ReplicateScore {
        rand,
        adj_rand: adj,
        n_pred: pred_cps.len(),
        avg_dist: cpm.avg_dist_to_true,
        tpr: om.tpr,
        fpr: om.fpr,
    })
}

fn aggregate(method: Method, scores: &[ReplicateScore], n_failures: usize) -> BenchmarkRow {
    let n = scores.len().max(1) as f64;
    let rand_avg = scores.iter().map(|s| s.rand).sum::<f64>() / n;
    let adj_avg = scores.iter().map(|s| s.adj_rand).sum::<f64>() / n;
    let avg_no_cp = scores.iter().map(|s| s.n_pred as f64).sum::<f64>() / n;
    let n_zero = scores.iter().filter(|s| s.n_pred == 0).count();
    let dists: Vec<f64> = scores.iter().filter_map(|s| s.avg_dist).collect();
    let avg_dist = if dists.is_empty() {
        None
    } else {
        Some(dists.iter().sum::<f64>() / dists.len() as f64)
    };
    let se = if scores.len() > 1 {
        let var = scores
            .iter()
            .map(|s| (s.adj_rand - adj_avg) * (s.adj_rand - adj_avg))
            .sum::<f64>()
            / (scores.len() - 1) as f64;
        var.sqrt() / (scores.len() as f64).sqrt()
    } else {
        0.0
    };
    BenchmarkRow {
        method: String::from(method.name()),
        rand_avg,
        adj_rand_avg: adj_avg,
        avg_no_cp,
        n_zero_cp: n_zero,
        avg_dist,
        se,
        n_failures,
    }
}

/// Runs `n_reps` seeded replicates of a scenario for each method and
/// aggregates the comparison table. Replicate seeds are `seed0 + rep`.
/// Per-replicate failures are recorded in the row, not fatal.
pub fn run_benchmark(
    scenario: &Scenario,
    n_reps: usize,
    methods: &[Method],
    config: &ModelConfig,
) -> Result<Vec<BenchmarkRow>, EvalError> {
    if scenario.kind == ScenarioKind::RegressionThreePred {
        return Err(EvalError::UnsupportedScenario);
    }
    let mut rows = Vec::with_capacity(methods.len());
    for &method in methods {
        let mut scores = Vec::with_capacity(n_reps);
        let mut failures = 0usize;
        for rep in 0..n_reps {
            let mut sc = scenario.clone();
            sc.seed = scenario.seed + rep as u64;
            let (series, truth) = generate(&sc);
            let mut cfg = config.clone();
            cfg.seed = scenario.seed + rep as u64;
            match fit_method(method, &series, sc.kind, &cfg) {
                Ok((cps, flagged)) => {
                    match score_replicate(
                        &cps,
                        &flagged,
                        &truth.changepoints,
                        &truth.outliers,
                        series.len(),
                    ) {
                        Ok(s) => scores.push(s),
                        Err(_) => failures += 1,
                    }
                }
                Err(_) => failures += 1,
            }
        }
        rows.push(aggregate(method, &scores, failures));
    }
    Ok(rows)
}

/// Per-predictor benchmark of the regression extension: fits the dynamic
/// regression on each replicate and scores each predictor's changepoints
/// against its truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionBenchmark {
    pub rand_avg: Vec<f64>,
    pub adj_rand_avg: Vec<f64>,
    pub avg_no_cp: Vec<f64>,
    pub n_failures: usize,
}

pub fn run_regression_benchmark(
    scenario: &Scenario,
    n_reps: usize,
    config: &ModelConfig,
) -> Result<RegressionBenchmark, EvalError> {
    if scenario.kind != ScenarioKind::RegressionThreePred {
        return Err(EvalError::UnsupportedScenario);
    }
    let p = 3usize;
    let mut rand_sum = vec![0.0; p];
    let mut adj_sum = vec![0.0; p];
    let mut count_sum = vec![0.0; p];
    let mut n_ok = 0usize;
    let mut failures = 0usize;
    for rep in 0..n_reps {
        let mut sc = scenario.clone();
        sc.seed = scenario.seed + rep as u64;
        let (series, truth) = generate(&sc);
        let mut cfg = config.clone();
        cfg.seed = scenario.seed + rep as u64;
        let fit = match fit_regression(&series, &cfg) {
            Ok(f) => f,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let truth_cps = truth.predictor_changepoints.as_ref().expect("regression truth");
        n_ok += 1;
        for j in 0..p {
            let cps = &fit.changepoints[j];
            rand_sum[j] += rand_index(cps, &truth_cps[j], series.len()).unwrap_or(0.0);
            adj_sum[j] += adjusted_rand(cps, &truth_cps[j], series.len()).unwrap_or(0.0);
            count_sum[j] += cps.len() as f64;
        }
    }
    let n = n_ok.max(1) as f64;
    Ok(RegressionBenchmark {
        rand_avg: rand_sum.iter().map(|v| v / n).collect(),
        adj_rand_avg: adj_sum.iter().map(|v| v / n).collect(),
        avg_no_cp: count_sum.iter().map(|v| v / n).collect(),
        n_failures: failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rand_identical_partitions() {
        assert_eq!(rand_index(&[10, 20], &[10, 20], 50).unwrap(), 1.0);
        assert_eq!(adjusted_rand(&[10, 20], &[10, 20], 50).unwrap(), 1.0);
    }

    #[test]
    fn rand_t4_worked_example() {
        // pred = {}: all 6 pairs together; true = {2}: 2+2 split.
        // A = 2, B = 4, C = 0, D = 0 -> (A + D)/6 = 1/3.
        let r = rand_index(&[], &[2], 4).unwrap();
        assert!((r - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rand_symmetric() {
        let p = [7usize, 23];
        let q = [11usize, 30, 31];
        let a = rand_index(&p, &q, 40).unwrap();
        let b = rand_index(&q, &p, 40).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ari_alternating_labels() {
        // Labels (1,1,2,2) vs (1,2,1,2): contiguous encoding of the first
        // is cps {2}; the second alternates and is not contiguous, so
        // check via the brute-force pair formula on explicit labels.
        let ari = ari_from_labels(&[0, 0, 1, 1], &[0, 1, 0, 1]);
        assert!((ari - (-0.5)).abs() < 1e-12, "ari {ari}");
    }

    // Brute-force pair-counting oracle over arbitrary label vectors.
    fn ari_from_labels(a: &[u32], b: &[u32]) -> f64 {
        let n = a.len();
        let (mut n11, mut n00, mut n10, mut n01) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                let same_a = a[i] == a[j];
                let same_b = b[i] == b[j];
                match (same_a, same_b) {
                    (true, true) => n11 += 1.0,
                    (false, false) => n00 += 1.0,
                    (true, false) => n10 += 1.0,
                    (false, true) => n01 += 1.0,
                }
            }
        }
        let total = n11 + n00 + n10 + n01;
        let sum_a = n11 + n10;
        let sum_b = n11 + n01;
        let expected = sum_a * sum_b / total;
        let max = 0.5 * (sum_a + sum_b);
        if (max - expected).abs() < 1e-300 {
            return 1.0;
        }
        (n11 - expected) / (max - expected)
    }

    fn rand_from_labels(a: &[u32], b: &[u32]) -> f64 {
        let n = a.len();
        let mut agree = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                total += 1.0;
                if (a[i] == a[j]) == (b[i] == b[j]) {
                    agree += 1.0;
                }
            }
        }
        agree / total
    }

    fn labels_from_cps(cps: &[usize], t_len: usize) -> Vec<u32> {
        let mut labels = vec![0u32; t_len];
        let mut lab = 0u32;
        let mut it = cps.iter().peekable();
        for (t, l) in labels.iter_mut().enumerate() {
            if it.peek() == Some(&&t) {
                lab += 1;
                it.next();
            }
            *l = lab;
        }
        labels
    }

    #[test]
    fn rand_and_ari_match_bruteforce_random_partitions() {
        use rand::Rng as _;
        let mut rng = crate::dist::chain_rng(1, 0);
        for case in 0..300 {
            let t_len = 2 + (rng.gen::<u64>() % 29) as usize;
            let mut make = |max_cp: usize| -> Vec<usize> {
                let k = (rng.gen::<u64>() % (max_cp as u64 + 1)) as usize;
                let mut v: Vec<usize> = (0..k)
                    .map(|_| 1 + (rng.gen::<u64>() % (t_len as u64 - 1)) as usize)
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            let p = make(5);
            let q = make(5);
            let la = labels_from_cps(&p, t_len);
            let lb = labels_from_cps(&q, t_len);
            let r_fast = rand_index(&p, &q, t_len).unwrap();
            let r_slow = rand_from_labels(&la, &lb);
            assert!((r_fast - r_slow).abs() < 1e-10, "case {case}");
            let a_fast = adjusted_rand(&p, &q, t_len).unwrap();
            let a_slow = ari_from_labels(&la, &lb);
            assert!((a_fast - a_slow).abs() < 1e-10, "case {case}");
        }
    }

    #[test]
    fn ari_one_iff_identical() {
        use rand::Rng as _;
        let mut rng = crate::dist::chain_rng(2, 0);
        for _ in 0..200 {
            let t_len = 4 + (rng.gen::<u64>() % 27) as usize;
            let mut make = || -> Vec<usize> {
                let k = (rng.gen::<u64>() % 4) as usize;
                let mut v: Vec<usize> = (0..k)
                    .map(|_| 1 + (rng.gen::<u64>() % (t_len as u64 - 1)) as usize)
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            let p = make();
            let q = make();
            let ari = adjusted_rand(&p, &q, t_len).unwrap();
            if p == q {
                assert!((ari - 1.0).abs() < 1e-12);
            } else {
                assert!(ari < 1.0 - 1e-12, "p {p:?} q {q:?} ari {ari}");
            }
        }
    }

    #[test]
    fn bad_cps_rejected() {
        assert!(matches!(
            rand_index(&[0], &[], 10),
            Err(EvalError::BadCps { .. })
        ));
        assert!(matches!(
            rand_index(&[10], &[], 10),
            Err(EvalError::BadCps { .. })
        ));
    }

    #[test]
    fn cp_metrics_cases() {
        let m = cp_metrics(&[10, 40], &[10, 40]);
        assert_eq!(m.avg_dist_to_true, Some(0.0));
        assert_eq!(m.diff_cp_count, 0);

        let m = cp_metrics(&[10], &[13, 40]);
        assert_eq!(m.avg_dist_to_true, Some(3.0));

        let m = cp_metrics(&[], &[13, 40]);
        assert_eq!(m.avg_dist_to_true, None);
        assert_eq!(m.diff_cp_count, 2);
    }

    #[test]
    fn outlier_metrics_cases() {
        let m = outlier_metrics(&[5, 20], &[5, 20], 100);
        assert_eq!(m.tpr, Some(1.0));
        assert_eq!(m.fpr, Some(0.0));

        let m = outlier_metrics(&[], &[5], 100);
        assert_eq!(m.tpr, Some(0.0));
        assert_eq!(m.fpr, Some(0.0));

        // +-1 slack.
        let m = outlier_metrics(&[5], &[6], 100);
        assert_eq!(m.tpr, Some(1.0));
        assert_eq!(m.fpr, Some(0.0));

        // Each true outlier matched once.
        let m = outlier_metrics(&[5, 6], &[6], 100);
        assert_eq!(m.tpr, Some(1.0));
        assert_eq!(m.fpr, Some(1.0 / 99.0));
    }

    #[test]
    fn pelt_constant_series_no_cps() {
        let cps = pelt_baseline(&[2.5; 60], 1.0, 2).unwrap();
        assert!(cps.is_empty());
    }

    #[test]
    fn pelt_single_step_detected() {
        let mut rng = crate::dist::chain_rng(3, 0);
        let y: Vec<f64> = (0..100)
            .map(|i| {
                let m = if i < 50 { 0.0 } else { 10.0 };
                m + crate::dist::randn(&mut rng)
            })
            .collect();
        let pen = 2.0 * (100.0_f64).ln();
        let cps = pelt_baseline(&y, pen, 2).unwrap();
        assert_eq!(cps.len(), 1, "cps {cps:?}");
        assert!(cps[0].abs_diff(50) <= 2, "cp {}", cps[0]);
    }

    #[test]
    fn pelt_shift_invariant() {
        let mut rng = crate::dist::chain_rng(4, 0);
        let y: Vec<f64> = (0..80)
            .map(|i| {
                let m = if i < 30 { 1.0 } else { 5.0 };
                m + crate::dist::randn(&mut rng)
            })
            .collect();
        let shifted: Vec<f64> = y.iter().map(|v| v + 123.0).collect();
        let pen = 3.0;
        assert_eq!(
            pelt_baseline(&y, pen, 3).unwrap(),
            pelt_baseline(&shifted, pen, 3).unwrap()
        );
    }

    // Exhaustive optimal partitioning (no pruning) for small T.
    fn brute_force_partition(values: &[f64], penalty: f64, min_seg: usize) -> Vec<usize> {
        let n = values.len();
        let mut s = vec![0.0; n + 1];
        let mut s2 = vec![0.0; n + 1];
        for (i, &v) in values.iter().enumerate() {
            s[i + 1] = s[i] + v;
            s2[i + 1] = s2[i] + v * v;
        }
        let cost = |a: usize, b: usize| -> f64 {
            let len = (b - a) as f64;
            let sum = s[b] - s[a];
            (s2[b] - s2[a]) - sum * sum / len
        };
        let mut f = vec![f64::INFINITY; n + 1];
        f[0] = -penalty;
        let mut back = vec![0usize; n + 1];
        for end in min_seg..=n {
            for tau in 0..=end.saturating_sub(min_seg) {
                if tau != 0 && (tau < min_seg || !f[tau].is_finite()) {
                    continue;
                }
                let v = f[tau] + cost(tau, end) + penalty;
                if v < f[end] {
                    f[end] = v;
                    back[end] = tau;
                }
            }
        }
        let mut cps = Vec::new();
        let mut at = n;
        while at > 0 {
            let tau = back[at];
            if tau == 0 {
                break;
            }
            cps.push(tau);
            at = tau;
        }
        cps.sort_unstable();
        cps
    }

    #[test]
    fn pelt_equals_bruteforce_small_series() {
        use rand::Rng as _;
        let mut rng = crate::dist::chain_rng(5, 0);
        for case in 0..200 {
            let t_len = 8 + (rng.gen::<u64>() % 33) as usize;
            let y: Vec<f64> = (0..t_len)
                .map(|i| {
                    let m = if i < t_len / 2 { 0.0 } else { (rng.gen::<u64>() % 12) as f64 };
                    m + crate::dist::randn(&mut rng)
                })
                .collect();
            let penalty = 0.5 + (rng.gen::<u64>() % 30) as f64;
            let min_seg = 1 + (rng.gen::<u64>() % 3) as usize;
            if t_len < 2 * min_seg {
                continue;
            }
            let fast = pelt_baseline(&y, penalty, min_seg).unwrap();
            let slow = brute_force_partition(&y, penalty, min_seg);
            // Objectives must match; segmentations can differ only on ties.
            let objective = |cps: &[usize]| -> f64 {
                let mut prev = 0usize;
                let mut total = 0.0;
                for &c in cps.iter().chain(core::iter::once(&t_len)) {
                    let seg = &y[prev..c];
                    let mean = seg.iter().sum::<f64>() / seg.len() as f64;
                    total += seg.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
                    prev = c;
                }
                total + penalty * cps.len() as f64
            };
            let fo = objective(&fast);
            let so = objective(&slow);
            assert!(
                (fo - so).abs() < 1e-9,
                "case {case}: pelt {fast:?} ({fo}) vs brute {slow:?} ({so})"
            );
        }
    }

    #[test]
    fn benchmark_aggregation_arithmetic() {
        let scores = [
            ReplicateScore {
                rand: 0.9,
                adj_rand: 0.8,
                n_pred: 1,
                avg_dist: Some(2.0),
                tpr: None,
                fpr: None,
            },
            ReplicateScore {
                rand: 1.0,
                adj_rand: 1.0,
                n_pred: 2,
                avg_dist: Some(0.0),
                tpr: None,
                fpr: None,
            },
        ];
        let row = aggregate(Method::Abco, &scores, 0);
        assert!((row.adj_rand_avg - 0.9).abs() < 1e-12);
        assert!((row.se - 0.1).abs() < 1e-12);
        assert_eq!(row.n_zero_cp, 0);
        assert!((row.avg_no_cp - 1.5).abs() < 1e-12);
        assert_eq!(row.avg_dist, Some(1.0));
    }

    #[test]
    fn benchmark_row_per_method() {
        let sc = Scenario::new(ScenarioKind::LinearOneCp, 40, 5);
        let cfg = ModelConfig {
            iters: 50,
            burn: 20,
            use_sv_noise: false,
            use_outliers: false,
            ..ModelConfig::default()
        };
        let rows = run_benchmark(&sc, 1, &[Method::Abco, Method::Pelt], &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].method, "abco");
        assert_eq!(rows[1].method, "pelt");
    }

    #[test]
    fn perfect_method_scores_one() {
        // Injecting the truth as prediction: rand 1, se 0.
        let s = score_replicate(&[30], &[], &[30], &[], 100).unwrap();
        assert_eq!(s.rand, 1.0);
        assert_eq!(s.adj_rand, 1.0);
    }
}
