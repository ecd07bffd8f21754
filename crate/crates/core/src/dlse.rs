//! The deconvolution least squares estimator: multi-start Nelder–Mead on
//! the empirical criterion, plus the derived functionals (ordered
//! coefficients and Σ̂-norm).
//!
//! Each restart starts on a sphere whose radius is guessed from the variance
//! identity `Var(Y) = ‖β‖²_{2,Σ} + Var(ε)`, runs the simplex search on the
//! quantile-subsampled criterion, then polishes on the full criterion. The
//! reported minimiser is the best polished point over all restarts.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical::{
    empirical_covariance, sample_variance, sigma_norm, SigmaEstimate, Standardization, UnmatchedSample,
};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::objective::{EvalGrid, Objective, ObjectiveSpec, DEFAULT_QUANTILE_POINTS};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::rng;

/// Objective values within this distance are treated as ties between restarts.
pub const TIE_TOLERANCE: f64 = 1e-10;
const MIN_INIT_RADIUS: f64 = 0.1;
const INIT_STEP_FRACTION: f64 = 0.25;
const POLISH_STEP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitRadius {
    VarianceInformed,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub restarts: usize,
    pub init_radius: InitRadius,
    /// Spread of objective values across the simplex at which a search stops.
    pub simplex_tolerance: f64,
    pub max_iterations: usize,
    /// Simplex iterations on the full criterion after each restart.
    pub polish_iterations: usize,
    pub seed: u64,
    /// Criterion used during the search; the reported value is always the
    /// full-grid criterion with the same exponent.
    pub objective: ObjectiveSpec,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            restarts: 12,
            init_radius: InitRadius::VarianceInformed,
            simplex_tolerance: 1e-8,
            max_iterations: 2000,
            polish_iterations: 200,
            seed: 0,
            objective: ObjectiveSpec::subsampled(2, DEFAULT_QUANTILE_POINTS),
        }
    }
}

impl FitConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        if !(self.simplex_tolerance.is_finite() && self.simplex_tolerance > 0.0) {
            return Err(Error::InvalidParameter("simplex tolerance must be > 0".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if let InitRadius::Fixed(r) = self.init_radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidParameter(format!("fixed init radius must be > 0, got {r}")));
            }
        }
        self.objective.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartRecord {
    pub index: usize,
    pub init: Vec<f64>,
    /// Search criterion at the end of the subsampled phase.
    pub search_objective: f64,
    pub beta: Vec<f64>,
    /// Full-grid criterion after polishing.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    /// Full-grid criterion at `beta_hat`.
    pub objective: f64,
    pub ordered_beta: Vec<f64>,
    pub sigma_norm_hat: f64,
    pub sigma_hat: SigmaEstimate,
    pub restart_table: Vec<RestartRecord>,
    pub converged: bool,
    pub warnings: Vec<String>,
    pub seed: u64,
    pub config: FitConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform: Option<Standardization>,
}

impl FitResult {
    /// Running minimum of the restart objectives, in restart order.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.restart_table
            .iter()
            .scan(f64::INFINITY, |best, r| {
                *best = best.min(r.objective);
                Some(*best)
            })
            .collect()
    }

    /// Whether several restarts ended at well-separated points with nearly
    /// optimal objective, as happens when the regression vector is only
    /// identified up to a norm or a permutation.
    pub fn is_multimodal(&self) -> bool {
        let slack = (0.05 * self.objective).max(1e-6);
        let scale = 0.05 * (1.0 + euclidean(&self.beta_hat));
        self.restart_table
            .iter()
            .filter(|r| r.objective <= self.objective + slack)
            .any(|r| distance(&r.beta, &self.beta_hat) > scale)
    }
}

fn euclidean(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Ascending copy of a coefficient vector.
pub fn ordered(beta: &[f64]) -> Vec<f64> {
    let mut v = beta.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn ordered_estimate(result: &FitResult) -> Vec<f64> {
    ordered(&result.beta_hat)
}

pub fn norm_estimate(result: &FitResult, sigma: &SigmaEstimate) -> Result<f64> {
    sigma_norm(&result.beta_hat, sigma)
}

/// Radius of the starting sphere, `r̂² = max(Var(Y) − Var(ε), floor) / (tr Σ̂ / d)`.
pub fn initial_radius(data: &UnmatchedSample, noise: &NoiseModel, sigma: &SigmaEstimate) -> f64 {
    let var_y = if data.n_y() >= 2 {
        sample_variance(data.ys())
    } else {
        0.0
    };
    let excess = (var_y - noise.variance()).max(1e-12);
    let mean_var = sigma.trace() / sigma.dim() as f64;
    let r = if mean_var > 0.0 {
        (excess / mean_var).sqrt()
    } else {
        1.0
    };
    r.max(MIN_INIT_RADIUS)
}

fn random_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = euclidean(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

/// Fit the estimator.
///
/// Restarts run in parallel on the current rayon pool with streams derived
/// from `(seed, restart index)`; the result does not depend on the pool size.
pub fn fit_dlse(data: &UnmatchedSample, noise: &NoiseModel, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let d = data.dim();
    if data.n_x() < 2 {
        return Err(Error::InsufficientRows {
            needed: 2,
            found: data.n_x(),
        });
    }
    let mut warnings = Vec::new();
    if data.n_x() < 8 * d {
        warnings.push(format!(
            "n_X = {} is below 8d = {}; a minimiser may fail to exist",
            data.n_x(),
            8 * d
        ));
    }
    warnings.extend(data.discreteness_warnings());

    let sigma_hat = empirical_covariance(data.xs())?;
    let radius = match config.init_radius {
        InitRadius::VarianceInformed => initial_radius(data, noise, &sigma_hat),
        InitRadius::Fixed(r) => r,
    };

    let search = Objective::new(data, noise, config.objective)?;
    let full_spec = ObjectiveSpec {
        p: config.objective.p,
        eval_grid: EvalGrid::Full,
    };
    let full = Objective::new(data, noise, full_spec)?;

    let search_opts = NelderMeadOptions {
        ftol: config.simplex_tolerance,
        max_iterations: config.max_iterations,
    };
    let polish_opts = NelderMeadOptions {
        ftol: config.simplex_tolerance,
        max_iterations: config.polish_iterations,
    };

    let restart_table: Vec<RestartRecord> = (0..config.restarts)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(config.seed, "restart", k as u64);
            let init: Vec<f64> = random_direction(d, &mut r)
                .into_iter()
                .map(|u| radius * u)
                .collect();
            let coarse = nelder_mead(|b| search.value(b), &init, INIT_STEP_FRACTION * radius, search_opts);
            let fine = nelder_mead(|b| full.value(b), &coarse.x, POLISH_STEP_FRACTION * radius, polish_opts);
            RestartRecord {
                index: k,
                init,
                search_objective: coarse.f,
                beta: fine.x,
                objective: fine.f,
                iterations: coarse.iterations + fine.iterations,
                converged: coarse.converged && fine.converged,
            }
        })
        .collect();

    let best_f = restart_table
        .iter()
        .map(|r| r.objective)
        .fold(f64::INFINITY, f64::min);
    if !best_f.is_finite() {
        return Err(Error::Numerical("criterion was not finite at any restart".into()));
    }
    let best = restart_table
        .iter()
        .filter(|r| r.objective <= best_f + TIE_TOLERANCE)
        .reduce(|a, b| if lex_less(&b.beta, &a.beta) { b } else { a })
        .expect("at least one restart attains the minimum");

    let beta_hat = best.beta.clone();
    let objective = best.objective;
    let converged = restart_table.iter().any(|r| r.converged);
    if !converged {
        warnings.push("no restart met the simplex tolerance".into());
    }
    Ok(FitResult {
        ordered_beta: ordered(&beta_hat),
        sigma_norm_hat: sigma_norm(&beta_hat, &sigma_hat)?,
        beta_hat,
        objective,
        sigma_hat,
        restart_table,
        converged,
        warnings,
        seed: config.seed,
        config: config.clone(),
        transform: None,
    })
}
