//! Latent sampler state and retained posterior draws.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Outlier-component hyperparameter chain (horseshoe+ augmentation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierState {
    /// Conditional outlier variances lambda_zeta_t^2.
    pub lambda2: Vec<f64>,
    /// Inverse-gamma auxiliaries under each lambda_zeta_t^2.
    pub nu: Vec<f64>,
    /// Global outlier scale tau_zeta^2.
    pub tau2: f64,
    /// Auxiliary under tau_zeta^2.
    pub xi_aux: f64,
    /// Extra local half-Cauchy layer eta_zeta_t^2.
    pub eta2: Vec<f64>,
    /// Auxiliaries under eta_zeta_t^2.
    pub iota: Vec<f64>,
}

impl OutlierState {
    pub fn ones(t_len: usize) -> Self {
        Self {
            lambda2: vec![1.0; t_len],
            nu: vec![1.0; t_len],
            tau2: 1.0,
            xi_aux: 1.0,
            eta2: vec![1.0; t_len],
            iota: vec![1.0; t_len],
        }
    }
}

/// Observation-noise SV(1) chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsSvState {
    /// Log observation variances g_t = log(sigma_eps_t^2).
    pub log_var: Vec<f64>,
    pub mu_eps: f64,
    pub phi_eps: f64,
    /// Innovation variance sigma_xi^2 of the log-volatility AR(1).
    pub sigma_xi2: f64,
    /// Mixture indicators for log(e_t^2 + c).
    pub indicators: Vec<usize>,
}

/// Full latent state of one Gibbs chain (univariate model).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    /// Trend beta_1..beta_T.
    pub beta: Vec<f64>,
    /// Increments omega = diff(beta, d), length T - d.
    pub omega: Vec<f64>,
    /// z_t = log(omega_t^2 + c).
    pub z: Vec<f64>,
    /// Log increment variances h_t = log(tau^2 lambda_t^2).
    pub h: Vec<f64>,
    /// Threshold indicators s_t = 1{z_t > gamma}.
    pub s: Vec<bool>,
    /// Unconditional level mu = log(tau^2).
    pub mu: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// Changepoint threshold.
    pub gamma: f64,
    /// Z-innovation residuals eta_t (deterministic given h, phi, s).
    pub eta: Vec<f64>,
    /// Polya-Gamma precisions xi_t of the innovations.
    pub xi: Vec<f64>,
    /// PG auxiliary anchoring the prior of mu.
    pub xi_mu: f64,
    /// Mixture indicators r_t for z_t.
    pub r: Vec<usize>,
    /// Additive outliers zeta_1..zeta_T.
    pub zeta: Vec<f64>,
    pub outlier: OutlierState,
    /// Observation variances sigma_eps_t^2.
    pub sigma_eps2: Vec<f64>,
    pub obs_sv: ObsSvState,
}

/// Retained posterior draws of one univariate chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub t_len: usize,
    pub d: usize,
    pub outliers_enabled: bool,
    pub sv_enabled: bool,
    /// M x T trend draws.
    pub beta: Vec<Vec<f64>>,
    /// M x T outlier draws.
    pub zeta: Vec<Vec<f64>>,
    /// M x (T - d) draws of log(omega_t^2 + c).
    pub log_omega2: Vec<Vec<f64>>,
    /// M threshold draws.
    pub gamma: Vec<f64>,
    /// M x T outlier variance draws lambda_zeta_t^2.
    pub lambda_zeta2: Vec<Vec<f64>>,
    /// M x T observation variance draws.
    pub sigma_eps2: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub tau2: Vec<f64>,
    /// Conditional deviance -2 log p(y | beta, zeta, sigma_eps) per draw.
    pub deviance: Vec<f64>,
}

impl PosteriorDraws {
    pub fn with_capacity(t_len: usize, d: usize, m: usize, outliers: bool, sv: bool) -> Self {
        Self {
            t_len,
            d,
            outliers_enabled: outliers,
            sv_enabled: sv,
            beta: Vec::with_capacity(m),
            zeta: Vec::with_capacity(m),
            log_omega2: Vec::with_capacity(m),
            gamma: Vec::with_capacity(m),
            lambda_zeta2: Vec::with_capacity(m),
            sigma_eps2: Vec::with_capacity(m),
            mu: Vec::with_capacity(m),
            phi1: Vec::with_capacity(m),
            phi2: Vec::with_capacity(m),
            tau2: Vec::with_capacity(m),
            deviance: Vec::with_capacity(m),
        }
    }

    /// Number of retained draws.
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// Appends another chain's retained draws (same data and config).
    pub fn merge(&mut self, other: PosteriorDraws) {
        debug_assert_eq!(self.t_len, other.t_len);
        debug_assert_eq!(self.d, other.d);
        self.beta.extend(other.beta);
        self.zeta.extend(other.zeta);
        self.log_omega2.extend(other.log_omega2);
        self.gamma.extend(other.gamma);
        self.lambda_zeta2.extend(other.lambda_zeta2);
        self.sigma_eps2.extend(other.sigma_eps2);
        self.mu.extend(other.mu);
        self.phi1.extend(other.phi1);
        self.phi2.extend(other.phi2);
        self.tau2.extend(other.tau2);
        self.deviance.extend(other.deviance);
    }

    /// Column means of an M x n draw matrix.
    pub fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
        if rows.is_empty() {
            return Vec::new();
        }
        let n = rows[0].len();
        let mut out = vec![0.0; n];
        for row in rows {
            for (o, v) in out.iter_mut().zip(row.iter()) {
                *o += v;
            }
        }
        let m = rows.len() as f64;
        for o in out.iter_mut() {
            *o /= m;
        }
        out
    }
}
