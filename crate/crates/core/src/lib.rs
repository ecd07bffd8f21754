//! Deconvolution least squares estimation for linear regression on
//! unmatched data.
//!
//! Responses `{Y_j}` and covariates `{X_i}` are observed as separate samples
//! with `Y =ᵈ β₀ᵀX + ε` and a known noise law. The estimator minimises the
//! squared distance between the empirical CDF of `Y` and the empirical law of
//! `βᵀX` convolved with the noise CDF. See the README for the command line
//! workflows built on top of the library.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataio;
pub mod dlse;
pub mod empirical;
pub mod error;
pub mod inference;
pub mod noise;
pub mod objective;
pub mod optim;
pub mod report;
pub mod rng;
pub mod semisup;
pub mod special;

pub use dlse::{fit_dlse, norm_estimate, ordered_estimate, FitConfig, FitResult, InitRadius};
pub use empirical::{ecdf_at_sample, empirical_covariance, sigma_norm, MatchedSample, SigmaEstimate, UnmatchedSample};
pub use error::{Error, Result};
pub use noise::{fit_kde_noise, BandwidthRule, NoiseKind, NoiseModel};
pub use objective::{objective_value, population_objective, profile_noise, EvalGrid, NoiseFamily, Objective, ObjectiveSpec};
pub use semisup::{beta_dagger, beta_tilde, ols, semi_supervised, variance_norm_estimate, SemiOptions, SemiResult};
