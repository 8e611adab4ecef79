//! Bayesian changepoint detection and robust trend filtering.
//!
//! The model decomposes a series `y_t = beta_t + zeta_t + eps_t` into a
//! locally varying trend, a sparse additive outlier component, and
//! heteroskedastic SV(1) noise. The D-th difference of the trend carries a
//! global-local shrinkage prior whose log variance follows a threshold
//! stochastic volatility process: the autoregressive coefficient switches
//! from `phi1` to `phi1 + phi2` (with `phi2 <= 0`) right after a large
//! increment, which suppresses runs of consecutive changepoint calls.
//! Inference is by Gibbs sampling with Polya-Gamma augmentation, a
//! 10-component log-chi-squared mixture, and joint banded-precision
//! Gaussian draws.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the CLI
//! live in the companion `abco-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod banded;
pub mod config;
pub mod detect;
pub mod dist;
pub mod eval;
pub mod gibbs;
pub mod its;
pub mod regression;
pub mod series;
pub mod simgen;
pub mod state;

pub use config::{ModelConfig, PriorHyper, ValidationError};
pub use detect::ChangepointReport;
pub use gibbs::GibbsChain;
pub use series::TimeSeries;
pub use simgen::{GroundTruth, Scenario, ScenarioKind};
pub use state::{LatentState, PosteriorDraws};

/// Stabilising offset added inside `log(w^2 + C_OFFSET)` transforms.
pub const C_OFFSET: f64 = 1e-8;
