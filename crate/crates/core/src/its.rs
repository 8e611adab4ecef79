//! Interrupted time series: a known intervention at index `pi` enters the
//! second-difference state equation through two diffuse increment terms,
//! leaving the rest of the model untouched.

use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::gibbs::{sample_var, GibbsChain, ItsState, SamplerError};
use crate::series::{diff, TimeSeries};
use crate::state::PosteriorDraws;

/// Intervention configuration. `pi` is the 0-based observation index at
/// which the intervention takes effect; `upsilon_var` defaults to
/// `100 * var(diff(y, 2))` when unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItsConfig {
    pub pi: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub upsilon_var: Option<f64>,
}

/// Posterior summary of one scalar intervention effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSummary {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    /// Histogram over [lo, hi] in `counts.len()` equal bins.
    pub hist_lo: f64,
    pub hist_hi: f64,
    pub counts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionSummary {
    pub pi: usize,
    pub upsilon_var: f64,
    /// Level shift at the intervention: beta_pi - beta_{pi-1}.
    pub level_change: EffectSummary,
    /// Slope change across the intervention:
    /// (beta_{pi+1} - beta_pi) - (beta_{pi-1} - beta_{pi-2}).
    pub slope_change: EffectSummary,
}

fn summarize(values: &[f64]) -> EffectSummary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n.max(2) - 1) as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| -> f64 {
        let pos = p * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    };
    let hist_lo = sorted[0];
    let hist_hi = sorted[n - 1];
    let bins = 30usize;
    let mut counts = alloc::vec![0u32; bins];
    let width = ((hist_hi - hist_lo) / bins as f64).max(1e-300);
    for &v in values {
        let b = (((v - hist_lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    EffectSummary {
        mean,
        sd: var.sqrt(),
        q025: q(0.025),
        q50: q(0.5),
        q975: q(0.975),
        hist_lo,
        hist_hi,
        counts,
    }
}

/// Fits the intervention model (d = 2 enforced) and summarises the level
/// and slope changes at `pi` from the retained trend draws.
pub fn fit_interrupted(
    series: &TimeSeries,
    config: &ModelConfig,
    its: &ItsConfig,
) -> Result<(PosteriorDraws, InterventionSummary), SamplerError> {
    let d = 2usize;
    if config.d != d {
        return Err(SamplerError::BadPi {
            pi: its.pi,
            t_len: series.len(),
            d: config.d,
        });
    }
    let t_len = series.len();
    // Need increments at pi and pi+1 plus the slope window [pi-2, pi+1].
    if its.pi < d || its.pi + 1 > t_len.saturating_sub(2) {
        return Err(SamplerError::BadPi {
            pi: its.pi,
            t_len,
            d,
        });
    }
    let sigma_ups2 = its.upsilon_var.unwrap_or_else(|| {
        let d2 = diff(&series.values, 2).expect("length checked");
        (100.0 * sample_var(&d2)).max(1e-8)
    });
    let its_state = ItsState {
        k: [its.pi - d, its.pi + 1 - d],
        sigma_ups2,
        ups: [0.0, 0.0],
    };
    let mut merged: Option<PosteriorDraws> = None;
    for c in 0..config.chains.max(1) {
        let chain = GibbsChain::build(series, config, Some(its_state.clone()), c as u64)?;
        let draws = chain.run()?;
        merged = Some(match merged.take() {
            None => draws,
            Some(mut acc) => {
                acc.merge(draws);
                acc
            }
        });
    }
    let draws = merged.expect("at least one chain");

    let pi = its.pi;
    let level: Vec<f64> = draws
        .beta
        .iter()
        .map(|b| b[pi] - b[pi - 1])
        .collect();
    let slope: Vec<f64> = draws
        .beta
        .iter()
        .map(|b| (b[pi + 1] - b[pi]) - (b[pi - 1] - b[pi - 2]))
        .collect();
    let summary = InterventionSummary {
        pi,
        upsilon_var: sigma_ups2,
        level_change: summarize(&level),
        slope_change: summarize(&slope),
    };
    Ok((draws, summary))
}
