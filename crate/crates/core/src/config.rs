//! Model configuration, prior hyperparameters and input validation.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::series::TimeSeries;

/// Prior hyperparameters for the sampler.
///
/// Defaults follow the model's reference parameterisation: Z(1/2, 1/2)
/// innovations, `(phi1+1)/2 ~ Beta(10, 2)`, `phi2 ~ N(-2, 0.5) 1{phi2<=0}`,
/// a half-Cauchy global scale anchored at `sd(y)/sqrt(T)`, unit half-Cauchy
/// scales on the outlier chain, and a diffuse SV(1) noise prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorHyper {
    pub z_alpha: f64,
    pub z_beta: f64,
    pub phi1_beta_a: f64,
    pub phi1_beta_b: f64,
    pub phi2_mean: f64,
    pub phi2_sd: f64,
    /// Multiplier on the `sd(y)/sqrt(T)` half-Cauchy scale rule for tau.
    pub tau_scale_factor: f64,
    pub outlier_global_scale: f64,
    pub outlier_local_scale: f64,
    pub sv_mu_prior_sd: f64,
    pub sv_phi_beta_a: f64,
    pub sv_phi_beta_b: f64,
    pub sv_sigma_ig_shape: f64,
    pub sv_sigma_ig_scale: f64,
}

impl Default for PriorHyper {
    fn default() -> Self {
        Self {
            z_alpha: 0.5,
            z_beta: 0.5,
            phi1_beta_a: 10.0,
            phi1_beta_b: 2.0,
            phi2_mean: -2.0,
            phi2_sd: 0.5,
            tau_scale_factor: 1.0,
            outlier_global_scale: 1.0,
            outlier_local_scale: 1.0,
            sv_mu_prior_sd: 10.0,
            sv_phi_beta_a: 20.0,
            sv_phi_beta_b: 1.5,
            sv_sigma_ig_shape: 2.5,
            sv_sigma_ig_scale: 0.25,
        }
    }
}

/// Sampler and decision-rule configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Difference order of the trend prior; 1 detects mean shifts, 2 linear
    /// trend changes, 3 quadratic trend changes.
    pub d: usize,
    pub iters: usize,
    pub burn: usize,
    pub thin: usize,
    pub seed: u64,
    /// Independent chains merged into one set of retained draws; each
    /// chain owns a disjoint RNG stream of the same seed.
    pub chains: usize,
    pub use_sv_noise: bool,
    pub use_outliers: bool,
    /// Freeze `phi1 = phi2 = 0`, reducing the shrinkage process to a static
    /// horseshoe prior on the increments.
    pub horseshoe: bool,
    pub cp_prob_cutoff: f64,
    pub outlier_cutoff: f64,
    pub min_cp_separation: usize,
    pub grid_size: usize,
    pub priors: PriorHyper,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: 2,
            iters: 5000,
            burn: 2000,
            thin: 1,
            seed: 0,
            chains: 1,
            use_sv_noise: true,
            use_outliers: true,
            horseshoe: false,
            cp_prob_cutoff: 0.5,
            outlier_cutoff: 0.95,
            min_cp_separation: 5,
            grid_size: 150,
            priors: PriorHyper::default(),
        }
    }
}

impl ModelConfig {
    /// Number of retained posterior draws.
    pub fn n_draws(&self) -> usize {
        (self.iters.saturating_sub(self.burn)) / self.thin.max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ValidationError {
    /// `T < 2d + 2` for the configured difference order.
    SeriesTooShort { t_len: usize, required: usize },
    /// A value, design entry, or derived quantity is NaN/Inf.
    NonFinite { what: String },
    /// A bound constraint was violated (burn >= iters, bad cutoff, ...).
    BadBounds { what: String },
}

impl core::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ValidationError::SeriesTooShort { t_len, required } => {
                write!(f, "series too short: T={t_len}, need at least {required}")
            }
            ValidationError::NonFinite { what } => write!(f, "non-finite input: {what}"),
            ValidationError::BadBounds { what } => write!(f, "bad bounds: {what}"),
        }
    }
}

/// Checks every config/series invariant; collects all violations instead of
/// stopping at the first.
pub fn validate_config(config: &ModelConfig, series: &TimeSeries) -> Result<(), Vec<ValidationError>> {
    use alloc::format;
    let mut errs = Vec::new();

    if !(1..=3).contains(&config.d) {
        errs.push(ValidationError::BadBounds {
            what: format!("difference order d={} outside 1..=3", config.d),
        });
    }
    let required = 2 * config.d + 2;
    if series.len() < required {
        errs.push(ValidationError::SeriesTooShort {
            t_len: series.len(),
            required,
        });
    }
    if series.values.iter().any(|v| !v.is_finite()) {
        errs.push(ValidationError::NonFinite {
            what: String::from("series values"),
        });
    }
    if let Some(design) = &series.design {
        if design.is_empty() {
            errs.push(ValidationError::BadBounds {
                what: String::from("design present but has zero predictors"),
            });
        }
        for (j, col) in design.iter().enumerate() {
            if col.len() != series.len() {
                errs.push(ValidationError::BadBounds {
                    what: format!(
                        "design column {} has {} rows, series has {}",
                        j + 1,
                        col.len(),
                        series.len()
                    ),
                });
            }
            if col.iter().any(|v| !v.is_finite()) {
                errs.push(ValidationError::NonFinite {
                    what: format!("design column {}", j + 1),
                });
            }
        }
    }
    if config.burn >= config.iters {
        errs.push(ValidationError::BadBounds {
            what: format!("burn {} >= iters {}", config.burn, config.iters),
        });
    }
    if config.thin < 1 {
        errs.push(ValidationError::BadBounds {
            what: String::from("thin < 1"),
        });
    }
    if config.chains < 1 {
        errs.push(ValidationError::BadBounds {
            what: String::from("chains < 1"),
        });
    }
    if config.grid_size < 2 {
        errs.push(ValidationError::BadBounds {
            what: format!("grid_size {} < 2", config.grid_size),
        });
    }
    if !(config.cp_prob_cutoff > 0.0 && config.cp_prob_cutoff < 1.0) {
        errs.push(ValidationError::BadBounds {
            what: String::from("cp_prob_cutoff outside (0,1)"),
        });
    }
    if !(config.outlier_cutoff > 0.0 && config.outlier_cutoff < 1.0) {
        errs.push(ValidationError::BadBounds {
            what: String::from("outlier_cutoff outside (0,1)"),
        });
    }
    if config.min_cp_separation < 1 {
        errs.push(ValidationError::BadBounds {
            what: String::from("min_cp_separation < 1"),
        });
    }
    let p = &config.priors;
    let scales = [
        ("phi2_sd", p.phi2_sd),
        ("tau_scale_factor", p.tau_scale_factor),
        ("outlier_global_scale", p.outlier_global_scale),
        ("outlier_local_scale", p.outlier_local_scale),
        ("sv_mu_prior_sd", p.sv_mu_prior_sd),
        ("sv_sigma_ig_shape", p.sv_sigma_ig_shape),
        ("sv_sigma_ig_scale", p.sv_sigma_ig_scale),
        ("z_alpha", p.z_alpha),
        ("z_beta", p.z_beta),
        ("phi1_beta_a", p.phi1_beta_a),
        ("phi1_beta_b", p.phi1_beta_b),
        ("sv_phi_beta_a", p.sv_phi_beta_a),
        ("sv_phi_beta_b", p.sv_phi_beta_b),
    ];
    for (name, v) in scales {
        if !(v > 0.0 && v.is_finite()) {
            errs.push(ValidationError::BadBounds {
                what: format!("prior scale/shape {name} must be strictly positive"),
            });
        }
    }

    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn too_short_series_rejected() {
        let cfg = ModelConfig {
            d: 2,
            ..ModelConfig::default()
        };
        let s = TimeSeries::new(vec![1.0, 2.0, 3.0]);
        let errs = validate_config(&cfg, &s).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ValidationError::SeriesTooShort { .. })));
    }

    #[test]
    fn default_config_valid_on_clean_series() {
        let s = TimeSeries::new((0..100).map(|i| i as f64).collect());
        assert!(validate_config(&ModelConfig::default(), &s).is_ok());
    }

    #[test]
    fn nan_rejected() {
        let mut v = vec![0.0; 50];
        v[7] = f64::NAN;
        let errs = validate_config(&ModelConfig::default(), &TimeSeries::new(v)).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ValidationError::NonFinite { .. })));
    }

    #[test]
    fn burn_ge_iters_rejected() {
        let cfg = ModelConfig {
            iters: 100,
            burn: 100,
            ..ModelConfig::default()
        };
        let s = TimeSeries::new((0..50).map(|i| i as f64).collect());
        let errs = validate_config(&cfg, &s).unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, ValidationError::BadBounds { .. })));
    }

    #[test]
    fn all_violations_collected() {
        let cfg = ModelConfig {
            d: 4,
            iters: 10,
            burn: 20,
            grid_size: 1,
            ..ModelConfig::default()
        };
        let s = TimeSeries::new(vec![f64::NAN; 3]);
        let errs = validate_config(&cfg, &s).unwrap_err();
        assert!(errs.len() >= 4);
    }

    #[test]
    fn n_draws_arithmetic() {
        let cfg = ModelConfig {
            iters: 100,
            burn: 50,
            thin: 5,
            ..ModelConfig::default()
        };
        assert_eq!(cfg.n_draws(), 10);
        let cfg = ModelConfig {
            iters: 101,
            burn: 50,
            thin: 5,
            ..ModelConfig::default()
        };
        assert_eq!(cfg.n_draws(), 10);
    }
}
